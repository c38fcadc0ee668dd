#include "she/dalang.hpp"

#include <algorithm>
#include <cmath>

#include "she/quadrature.hpp"

namespace she {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Radius past which exp(-scale^2 rho^2 / 2) drops below 1e-40.
double gaussian_cutoff(double scale) { return std::sqrt(2.0 * 92.2) / scale; }

}  // namespace

SpectralIntegral spectral_integral(const CorrelationKernel& kernel, const RadialWeight& weight, double lo,
                                   double hi, double rel_tol) {
    const int d = kernel.dimension();
    const double prefactor = sphere_area(d) / std::pow(2 * kPi, d);
    SpectralIntegral out;
    if (!(hi > lo)) return out;

    auto integrand = [&](double rho) {
        return kernel.spectral_radial(rho) * std::pow(rho, d - 1) * weight.w(rho);
    };

    double cutoff = weight.cutoff;
    if (kernel.kind() == KernelKind::Gaussian) cutoff = std::min(cutoff, gaussian_cutoff(kernel.scale()));
    hi = std::min(hi, cutoff);
    if (!(hi > lo)) return out;

    const double origin_exp = (d - 1) + kernel.spectral_origin_exponent() + weight.origin_exponent;
    const double tail_exp = (d - 1) + kernel.spectral_tail_exponent() + weight.tail_exponent;
    if (lo == 0 && origin_exp <= -1) {
        out.divergent = true;
        return out;
    }
    if (std::isinf(hi) && tail_exp >= -1) {
        out.divergent = true;
        return out;
    }

    const double split = std::clamp(1.0, lo, hi);

    // Inner piece [lo, split]; near a singular origin rho = u^{1/(e+1)} flattens the integrand.
    if (split > lo) {
        quad::Result<double> r;
        if (lo == 0 && origin_exp < 0) {
            const double power = 1.0 / (origin_exp + 1.0);
            auto mapped = [&](double u) {
                const double rho = std::pow(u, power);
                return integrand(rho) * power * std::pow(u, power - 1.0);
            };
            r = quad::integrate<double>(mapped, 0.0, std::pow(split, origin_exp + 1.0), rel_tol, 0.0, 4000);
        } else {
            r = quad::integrate<double>(integrand, lo, split, rel_tol, 0.0, 4000);
        }
        out.value += r.value;
        out.error += r.error;
    }

    // Outer piece [split, hi]; an infinite range is mapped onto (0, 1] by
    // rho = split * u^{-1/m}, m = -tail_exp - 1, which leaves a bounded integrand.
    if (hi > split) {
        quad::Result<double> r;
        if (std::isinf(hi)) {
            const double m = -tail_exp - 1.0;
            auto mapped = [&](double u) {
                const double rho = split * std::pow(u, -1.0 / m);
                return integrand(rho) * split / m * std::pow(u, -1.0 / m - 1.0);
            };
            r = quad::integrate<double>(mapped, 0.0, 1.0, rel_tol, 0.0, 4000);
        } else {
            r = quad::integrate<double>(integrand, split, hi, rel_tol, 0.0, 4000);
        }
        out.value += r.value;
        out.error += r.error;
    }

    out.value *= prefactor;
    out.error *= prefactor;
    return out;
}

DalangReport upsilon(const CorrelationKernel& kernel, double beta) {
    if (!(beta > 0)) throw HypothesisError("upsilon: beta must be positive");
    RadialWeight w{[beta](double rho) { return 1.0 / (beta + rho * rho); }, -2.0, 0.0, kInf};
    const auto r = spectral_integral(kernel, w);
    DalangReport rep{kernel, 0.0, beta, std::nullopt, 0.0};
    if (!r.divergent) {
        rep.value = r.value;
        rep.quadrature_error = r.error;
    }
    return rep;
}

DalangReport upsilon_alpha(const CorrelationKernel& kernel, double alpha) {
    if (!(alpha > 0 && alpha < 1)) throw HypothesisError("upsilon_alpha: alpha must lie in (0, 1)");
    const double power = -(1.0 - alpha);
    RadialWeight w{[power](double rho) { return std::pow(1.0 + rho * rho, power); }, 2 * power, 0.0, kInf};
    const auto r = spectral_integral(kernel, w);
    DalangReport rep{kernel, alpha, 1.0, std::nullopt, 0.0};
    if (!r.divergent) {
        rep.value = r.value;
        rep.quadrature_error = r.error;
    }
    return rep;
}

double admissible_alpha_sup(double spectral_tail_exponent, int dim) {
    // Upsilon_alpha is finite iff (d-1) + e - 2(1-alpha) < -1.
    auto converges = [&](double alpha) { return (dim - 1) + spectral_tail_exponent - 2 * (1 - alpha) < -1; };
    if (converges(1.0 - 1e-12)) return 1.0;
    if (!converges(1e-12)) return 0.0;
    double lo = 1e-12, hi = 1.0 - 1e-12;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (converges(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double admissible_alpha_sup(const CorrelationKernel& kernel) {
    return admissible_alpha_sup(kernel.spectral_tail_exponent(), kernel.dimension());
}

double constant_C(const CorrelationKernel& kernel, double alpha) {
    if (!(alpha > 0 && alpha < 1)) throw HypothesisError("constant_C: alpha must lie in (0, 1)");
    if (upsilon_alpha(kernel, alpha).divergent())
        throw HypothesisError("constant_C: improved Dalang condition fails at alpha=" + std::to_string(alpha));
    const RadialWeight one{[](double) { return 1.0; }, 0.0, 0.0, kInf};
    const double power = -2.0 * (1.0 - alpha);
    const RadialWeight outer_w{[power](double rho) { return std::pow(rho, power); }, power, power, kInf};
    const auto inner = spectral_integral(kernel, one, 0.0, 1.0);
    const auto outer = spectral_integral(kernel, outer_w, 1.0, kInf);
    return std::pow(2.0, -alpha) * std::max(inner.value, outer.value);
}

}  // namespace she
