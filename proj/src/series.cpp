#include "she/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "she/dalang.hpp"

namespace she {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (1 - e^{-x}) / x
double phi1(double x) {
    if (x < 1e-8) return 1 - x / 2;
    return -std::expm1(-x) / x;
}

// (1 - e^{-x}(1 + x)) / x^2
double phi2(double x) {
    if (x < 1e-4) return 0.5 - x / 3 + x * x / 8;
    return (-std::expm1(-x) - x * std::exp(-x)) / (x * x);
}

// Leading order of the product-trapezoid error in dt. With k_{1,0}(t) ~ t^{-theta}
// near 0 the error behaves like dt^{2 - theta}; a bounded kernel gives dt^2.
double richardson_order(const SeriesParams& params) {
    if (params.a == 0) return 2;
    const auto& k = params.kernel;
    if (k.kind() != KernelKind::White && k.kind() != KernelKind::Riesz) return 2;
    const double theta = 0.5 * (k.dimension() + k.spectral_tail_exponent());
    return 2 - theta;
}

}  // namespace

void SeriesParams::validate() const {
    if (!(a >= 0) || !(b >= 0) || !(gamma >= 0))
        throw HypothesisError("series parameters a, b, gamma must be nonnegative");
}

double k10(const CorrelationKernel& kernel, double t) {
    if (!(t > 0)) throw HypothesisError("k_{1,0}(t) requires t > 0");
    const RadialWeight w{[t](double rho) { return std::exp(-0.5 * t * rho * rho); }, -kInf, 0.0,
                         std::sqrt(184.4 / t)};
    const auto r = spectral_integral(kernel, w, 0.0, kInf, 1e-11);
    if (r.divergent) throw HypothesisError("k_{1,0}(t) diverges; the spectral density is not integrable");
    return r.value;
}

double k_ab(const SeriesParams& params, double t) {
    params.validate();
    if (!(t > 0)) throw HypothesisError("k_{a,b}(t) requires t > 0");
    const double singular = params.a > 0 ? params.a * k10(params.kernel, t) : 0.0;
    return singular + params.b * t;
}

CellMoments kernel_cell_moments(const SeriesParams& params, double dt, Eigen::Index cells) {
    params.validate();
    if (!(dt > 0) || cells < 1) throw HypothesisError("cell moments need dt > 0 and at least one cell");
    CellMoments out{Eigen::ArrayXd::Zero(cells), Eigen::ArrayXd::Zero(cells)};
    for (Eigen::Index m = 0; m < cells; ++m) {
        const double start = m * dt;
        if (params.a > 0) {
            const double cutoff = m == 0 ? kInf : std::sqrt(184.4 / start);
            const RadialWeight w0{[=](double rho) {
                                      const double c = 0.5 * rho * rho;
                                      return std::exp(-c * start) * dt * phi1(c * dt);
                                  },
                                  -2.0, 0.0, cutoff};
            const RadialWeight w1{[=](double rho) {
                                      const double c = 0.5 * rho * rho;
                                      return std::exp(-c * start) * dt * phi2(c * dt);
                                  },
                                  -4.0, 0.0, cutoff};
            const auto z = spectral_integral(params.kernel, w0, 0.0, kInf, 1e-11);
            const auto f = spectral_integral(params.kernel, w1, 0.0, kInf, 1e-11);
            if (z.divergent || f.divergent)
                throw HypothesisError("kernel violates Dalang's condition; k_{1,0} is not locally integrable");
            out.zeroth[m] += params.a * z.value;
            out.first[m] += params.a * f.value;
        }
        if (params.b > 0) {
            out.zeroth[m] += params.b * dt * (start + dt / 2);
            out.first[m] += params.b * dt * (start / 2 + dt / 3);
        }
    }
    return out;
}

Eigen::ArrayXd convolve_step(const CellMoments& moments, const Eigen::ArrayXd& previous) {
    const Eigen::Index cells = moments.zeroth.size();
    if (previous.size() != cells + 1) throw HypothesisError("convolve_step: grid and moments disagree");
    const Eigen::ArrayXd upper = moments.zeroth - moments.first;
    const Eigen::ArrayXd& lower = moments.first;
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(cells + 1);
    const double* prev = previous.data();
    for (Eigen::Index i = 1; i <= cells; ++i) {
        double acc = 0;
        for (Eigen::Index m = 0; m < i; ++m) acc += upper[m] * prev[i - m] + lower[m] * prev[i - m - 1];
        out[i] = acc;
    }
    return out;
}

Eigen::ArrayXd h_n(const SeriesParams& params, int n, const Eigen::Ref<const Eigen::VectorXd>& time_grid) {
    params.validate();
    if (n < 0) throw HypothesisError("h_n: n must be nonnegative");
    const Eigen::Index size = time_grid.size();
    if (size < 2 || time_grid[0] != 0) throw HypothesisError("h_n: time grid must start at 0 with at least 2 points");
    const double dt = time_grid[1] - time_grid[0];
    for (Eigen::Index i = 1; i < size; ++i) {
        if (std::abs((time_grid[i] - time_grid[i - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(time_grid[i])))
            throw HypothesisError("h_n: time grid must be uniform");
    }
    if (!(dt > 0)) throw HypothesisError("h_n: time grid must be increasing");
    Eigen::ArrayXd h = Eigen::ArrayXd::Ones(size);
    if (n == 0) return h;
    const auto moments = kernel_cell_moments(params, dt, size - 1);
    for (int k = 0; k < n; ++k) h = convolve_step(moments, h);
    return h;
}

SeriesValue H_series(const SeriesParams& params, double t, double tol, const SeriesOptions& options) {
    params.validate();
    if (!(tol > 0)) throw HypothesisError("H_series: tol must be positive");
    if (!(t > 0)) throw HypothesisError("H_series: t must be positive");
    SeriesValue out;
    if (params.gamma == 0 || (params.a == 0 && params.b == 0)) return out;

    const Eigen::Index cells = std::max<Eigen::Index>(2, options.cells + options.cells % 2);
    const double dt = t / cells;
    const auto fine = kernel_cell_moments(params, dt, cells);

    const double factor = std::pow(2.0, richardson_order(params));
    CellMoments coarse;
    {
        const Eigen::Index half = cells / 2;
        coarse.zeroth.resize(half);
        coarse.first.resize(half);
        for (Eigen::Index m = 0; m < half; ++m) {
            coarse.zeroth[m] = fine.zeroth[2 * m] + fine.zeroth[2 * m + 1];
            coarse.first[m] = 0.5 * (fine.first[2 * m] + fine.first[2 * m + 1] + fine.zeroth[2 * m + 1]);
        }
    }

    // g_n = gamma^n h_n on each grid.
    Eigen::ArrayXd g_fine = Eigen::ArrayXd::Ones(cells + 1);
    Eigen::ArrayXd g_coarse = Eigen::ArrayXd::Ones(cells / 2 + 1);
    double sum = 1;
    double prev_term = 1;
    double prev_ratio = kInf;
    out.converged = false;
    bool geometric = false;
    const int hard_limit = 10 * options.max_terms;
    for (int n = 1; n < hard_limit; ++n) {
        if (n >= options.max_terms && !geometric) break;
        g_fine = params.gamma * convolve_step(fine, g_fine);
        double term = g_fine[cells];
        g_coarse = params.gamma * convolve_step(coarse, g_coarse);
        term = (factor * term - g_coarse[cells / 2]) / (factor - 1);
        sum += term;
        out.terms_used = n + 1;
        if (term <= 0) {
            out.converged = true;
            break;
        }
        const double ratio = term / prev_term;
        geometric = ratio < 1;
        if (ratio < 1 && ratio <= prev_ratio && term * ratio / (1 - ratio) < tol * std::max(1.0, sum)) {
            out.converged = true;
            break;
        }
        prev_term = term;
        prev_ratio = ratio;
    }
    out.value = sum;
    return out;
}

GrowthRate growth_rate_laplace(const SeriesParams& params) {
    params.validate();
    if (!(params.gamma > 0)) throw HypothesisError("growth_rate_laplace requires gamma > 0");
    auto lhs = [&](double beta) {
        double v = params.b / (beta * beta);
        if (params.a > 0) {
            const auto u = upsilon(params.kernel, 2 * beta);
            if (u.divergent()) throw HypothesisError("growth_rate_laplace: kernel violates Dalang's condition");
            v += 2 * params.a * *u.value;
        }
        return v;
    };
    const double target = 1 / params.gamma;
    auto holds = [&](double beta) { return lhs(beta) < target; };

    GrowthRate out;
    double hi = 1.0;
    while (!holds(hi)) {
        hi *= 2;
        if (hi > 1e12) {
            out.unbounded = true;
            out.value = kInf;
            return out;
        }
    }
    double lo = hi / 2;
    // Rates below 1e-100 are reported as 0.
    while (holds(lo)) {
        lo /= 2;
        if (lo < 1e-100) return out;
    }
    // The left side is strictly decreasing in beta; bisect geometrically.
    while (hi / lo > 1 + 1e-13) {
        const double mid = std::sqrt(lo * hi);
        (holds(mid) ? hi : lo) = mid;
    }
    out.value = hi;
    return out;
}

double growth_rate_closed(double a, double b, double gamma, double C, double alpha) {
    if (!(C > 0)) throw HypothesisError("growth_rate_closed: C must be positive");
    if (!(alpha > 0 && alpha < 1)) throw HypothesisError("growth_rate_closed: alpha must lie in (0, 1)");
    if (a < 0 || b < 0 || gamma < 0) throw HypothesisError("growth_rate_closed: a, b, gamma must be nonnegative");
    const double singular = std::pow(2.0, 3 / alpha) * std::pow(a * C * gamma, 1 / alpha);
    return std::max(singular, std::sqrt(2 * b * gamma));
}

BdgConstant BdgConstant::of(double p) {
    if (!(p >= 2)) throw HypothesisError("BDG constant requires p >= 2");
    return {p, 2 * std::sqrt(p)};
}

double compute_tau(double b0_abs, double L_b, double sigma0_abs, double L_sigma) {
    double tau = 0;
    auto ratio = [&](double num, double den, const char* name) {
        if (den == 0) {
            if (num > 0)
                throw HypothesisError(std::string("tau: ") + name +
                                      "(0) is nonzero while its growth rate is 0 (constant coefficient)");
            return;
        }
        tau = std::max(tau, num / den);
    };
    ratio(b0_abs, L_b, "b");
    ratio(sigma0_abs, L_sigma, "sigma");
    return tau;
}

double bounded_data_constant(double alpha, double upsilon_alpha) {
    return std::max(4.0, std::pow(2.0, 6 / alpha - 1) * std::pow(upsilon_alpha, 1 / alpha));
}

double moment_rate(const MomentBoundInputs& in) {
    return std::max(std::pow(in.p, 1 / in.alpha) * std::pow(in.L_sigma, 2 / in.alpha), in.L_b);
}

namespace {

void check_common(const MomentBoundInputs& in) {
    if (!(in.alpha > 0 && in.alpha < 1)) throw HypothesisError("moment bound: alpha must lie in (0, 1)");
    if (!(in.p >= 2)) throw HypothesisError("moment bound: p must be at least 2");
    if (!(in.upsilon_alpha > 0)) throw HypothesisError("moment bound: Upsilon_alpha must be positive");
    if (in.L_b < 0 || in.L_sigma < 0 || in.u0_sup < 0 || in.u0_Lp < 0 || in.J_plus < 0 || in.tau < 0)
        throw HypothesisError("moment bound: norms and rates must be nonnegative");
    if (!(in.t >= 0)) throw HypothesisError("moment bound: t must be nonnegative");
}

double constant_or_default(const MomentBoundInputs& in) {
    if (in.constant) {
        if (!(*in.constant > 0)) throw HypothesisError("moment bound: constant C must be positive");
        return *in.constant;
    }
    return bounded_data_constant(in.alpha, in.upsilon_alpha);
}

}  // namespace

double moment_bound_a(const MomentBoundInputs& in) {
    check_common(in);
    if (in.L_b > 0 || in.L_sigma > 0) {
        const double threshold =
            in.L_b > 0 ? std::pow(2.0, -6) / (in.L_b * in.L_b * in.upsilon_alpha) : kInf;
        if (!(in.p >= std::max(2.0, threshold)))
            throw HypothesisError("bound (a): p=" + std::to_string(in.p) + " below max(2, 2^-6 L_b^-2 Upsilon_alpha^-1)=" +
                                  std::to_string(threshold));
    }
    const double C = bounded_data_constant(in.alpha, in.upsilon_alpha);
    return (in.tau / 2 + 2 * in.u0_sup) * std::exp(C * in.t * moment_rate(in));
}

double moment_bound_b(const MomentBoundInputs& in) {
    check_common(in);
    const double C = constant_or_default(in);
    return std::sqrt(3.0) * (in.tau + in.J_plus) * std::exp(C * in.t * moment_rate(in));
}

double moment_bound_c(const MomentBoundInputs& in) {
    check_common(in);
    const double threshold = (2.0 + in.dim) / in.alpha;
    if (!(in.p >= threshold))
        throw HypothesisError("bound (c): p=" + std::to_string(in.p) + " below (2+d)/alpha=" + std::to_string(threshold));
    const double C = constant_or_default(in);
    return in.u0_sup + C * in.u0_Lp * (in.L_b + in.L_sigma) * std::exp(C * in.t * moment_rate(in));
}

}  // namespace she
