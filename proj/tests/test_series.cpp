#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "she/dalang.hpp"
#include "she/series.hpp"

using namespace she;

namespace {

constexpr double kPi = std::numbers::pi;

SeriesParams params(double a, double b, double gamma, CorrelationKernel k = CorrelationKernel::white(1)) {
    SeriesParams p;
    p.a = a;
    p.b = b;
    p.gamma = gamma;
    p.kernel = k;
    return p;
}

Eigen::VectorXd grid(double t_max, int cells) { return Eigen::VectorXd::LinSpaced(cells + 1, 0.0, t_max); }

// For a=1, b=0 and white noise in d=1, k(t) = (2 pi t)^{-1/2} and the recursion
// closes by the Beta integral: h_n(t) = (t/2)^{n/2} / Gamma(n/2 + 1).
double white_h(int n, double t) { return std::pow(t / 2, n / 2.0) / std::tgamma(n / 2.0 + 1); }

double white_H_by_terms(double gamma, double t) {
    double sum = 0;
    for (int n = 0; n < 400; ++n) sum += std::exp(n * std::log(gamma) + std::log(white_h(n, t)) * (n > 0));
    return sum;
}

MomentBoundInputs base_inputs() {
    MomentBoundInputs in;
    in.L_b = 1;
    in.L_sigma = 1;
    in.p = 4;
    in.alpha = 0.25;
    in.upsilon_alpha = *upsilon_alpha(CorrelationKernel::white(1), 0.25).value;
    in.u0_sup = 1;
    in.u0_Lp = 1;
    in.J_plus = 1;
    // C is about 4e6 here, so t must be tiny for exp(C t 256) to stay finite.
    in.t = 1e-9;
    return in;
}

}  // namespace

TEST_CASE("k_ab") {
    const auto w = CorrelationKernel::white(1);
    for (double t : {0.01, 0.5, 3.0}) {
        CHECK(k_ab(params(1, 0, 1), t) == doctest::Approx(1 / std::sqrt(2 * kPi * t)).epsilon(1e-9));
        Eigen::VectorXd origin = Eigen::VectorXd::Zero(1);
        CHECK(k10(w, t) == doctest::Approx(heat_kernel(t, origin)).epsilon(1e-9));
    }
    CHECK(k_ab(params(0, 3, 1), 2.0) == 6);
    CHECK(k_ab(params(2, 1, 1), 0.7) == doctest::Approx(2 * k10(w, 0.7) + 0.7).epsilon(1e-14));
    // Gaussian kernel in d=1: k_{1,0}(t) = s / sqrt(s^2 + t).
    const auto g = CorrelationKernel::gaussian(0.5, 1);
    CHECK(k10(g, 0.3) == doctest::Approx(0.5 / std::sqrt(0.25 + 0.3)).epsilon(1e-9));
    CHECK(k10(CorrelationKernel::white(2), 0.5) == doctest::Approx(1 / (2 * kPi * 0.5)).epsilon(1e-9));
    CHECK_THROWS_AS(k_ab(params(1, 0, 1), 0.0), HypothesisError);
    CHECK_THROWS_AS(h_n(params(1, 0, 1, CorrelationKernel::white(2)), 1, grid(1.0, 10)), HypothesisError);
}

TEST_CASE("h_n against exact integration") {
    const auto tg = grid(2.0, 1000);
    CHECK((h_n(params(1, 2, 1), 0, tg) == 1.0).all());

    const double b = 1.5;
    const auto h1 = h_n(params(0, b, 1), 1, tg);
    const auto h2 = h_n(params(0, b, 1), 2, tg);
    for (int i = 0; i <= 1000; i += 125) {
        const double t = tg[i];
        CHECK(h1[i] == doctest::Approx(b * t * t / 2).epsilon(1e-12));
        CHECK(h2[i] == doctest::Approx(b * b * std::pow(t, 4) / 24).epsilon(1e-6));
    }

    const auto w1 = h_n(params(1, 0, 1), 1, tg);
    const auto w2 = h_n(params(1, 0, 1), 2, tg);
    const auto w3 = h_n(params(1, 0, 1), 3, tg);
    for (int i = 100; i <= 1000; i += 100) {
        const double t = tg[i];
        CHECK(w1[i] == doctest::Approx(std::sqrt(2 * t / kPi)).epsilon(1e-9));
        CHECK(w2[i] == doctest::Approx(t / 2).epsilon(1e-4));
        CHECK(w3[i] == doctest::Approx(white_h(3, t)).epsilon(1e-4));
    }

    Eigen::VectorXd bad = tg;
    bad[3] += 1e-4;
    CHECK_THROWS_AS(h_n(params(1, 0, 1), 1, bad), HypothesisError);
    Eigen::VectorXd shifted = tg.array() + 0.1;
    CHECK_THROWS_AS(h_n(params(1, 0, 1), 1, shifted), HypothesisError);
}

TEST_CASE("h_n is nonnegative, vanishes at 0 and is nondecreasing") {
    const auto tg = grid(3.0, 600);
    for (const auto& k : {CorrelationKernel::white(1), CorrelationKernel::riesz(0.6, 1),
                          CorrelationKernel::exponential(1.0, 2)}) {
        for (int n = 1; n <= 4; ++n) {
            const auto h = h_n(params(1, 0.5, 1, k), n, tg);
            CHECK(h[0] == 0);
            CHECK((h >= 0).all());
            CHECK((h.tail(600) - h.head(600) >= 0).all());
        }
    }
}

TEST_CASE("H_series trivial and closed forms") {
    for (double t : {0.5, 5.0}) {
        const auto r = H_series(params(1, 1, 0), t, 1e-10);
        CHECK(r.value == 1);
        CHECK(r.converged);
    }

    double worst = 0;
    for (double b : {0.25, 1.0, 2.0}) {
        for (double gamma : {0.5, 1.0, 2.0}) {
            for (double t : {0.5, 1.0, 2.0, 10.0}) {
                if (b * gamma > 4 || b * gamma * t * t > 16) continue;
                const auto r = H_series(params(0, b, gamma), t, 1e-12);
                CHECK(r.converged);
                worst = std::max(worst, std::abs(r.value - std::cosh(t * std::sqrt(b * gamma))));
            }
        }
    }
    CHECK(worst < 1e-8);

    for (double gamma : {0.5, 1.0, 1.5}) {
        for (double t : {0.5, 2.0}) {
            const auto r = H_series(params(1, 0, gamma), t, 1e-12);
            const double by_terms = white_H_by_terms(gamma, t);
            const double closed = std::exp(gamma * gamma * t / 2) * std::erfc(-gamma * std::sqrt(t / 2));
            CHECK(by_terms == doctest::Approx(closed).epsilon(1e-12));
            CHECK(r.value == doctest::Approx(by_terms).epsilon(1e-6));
        }
    }
}

TEST_CASE("H_series reports non-convergence at the term cap") {
    SeriesOptions opts;
    opts.cells = 64;
    opts.max_terms = 5;
    const auto r = H_series(params(1, 0, 5), 4.0, 1e-12, opts);
    CHECK_FALSE(r.converged);
    CHECK(r.terms_used == 5);
    CHECK_THROWS_AS(H_series(params(1, 0, 1), 1.0, 0.0), HypothesisError);
    CHECK_THROWS_AS(H_series(params(-1, 0, 1), 1.0, 1e-8), HypothesisError);
}

TEST_CASE("H_series is nondecreasing in t, gamma, a, b") {
    SeriesOptions opts;
    opts.cells = 256;
    const auto k = CorrelationKernel::gaussian(1.0, 1);
    const double values[5] = {0.1, 0.4, 0.8, 1.5, 3.0};
    for (double a : values) {
        double prev = 0;
        for (double b : values) {
            const double v = H_series(params(a, b, 1, k), 2.0, 1e-12, opts).value;
            CHECK(v >= prev);
            prev = v;
        }
    }
    for (double b : values) {
        double prev = 0;
        for (double a : values) {
            const double v = H_series(params(a, b, 1, k), 2.0, 1e-12, opts).value;
            CHECK(v >= prev);
            prev = v;
        }
    }
    for (double gamma : values) {
        double prev = 0;
        for (double t : values) {
            const double v = H_series(params(1, 0.5, gamma), t, 1e-12, opts).value;
            CHECK(v >= prev);
            prev = v;
        }
    }
    for (double t : values) {
        double prev = 0;
        for (double gamma : values) {
            const double v = H_series(params(1, 0.5, gamma), t, 1e-12, opts).value;
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("growth_rate_laplace") {
    for (double b : {0.5, 2.0}) {
        for (double gamma : {0.3, 4.0}) {
            const auto r = growth_rate_laplace(params(0, b, gamma));
            CHECK_FALSE(r.unbounded);
            CHECK(r.value == doctest::Approx(std::sqrt(b * gamma)).epsilon(1e-10));
        }
    }
    for (double gamma : {0.5, 1.0, 3.0})
        CHECK(growth_rate_laplace(params(1, 0, gamma)).value == doctest::Approx(gamma * gamma / 2).epsilon(1e-8));
    double prev = 1;
    for (double gamma : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const double v = growth_rate_laplace(params(1, 1, gamma)).value;
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 2e-2);
    CHECK_THROWS_AS(growth_rate_laplace(params(1, 0, 0)), HypothesisError);
    CHECK_THROWS_AS(growth_rate_laplace(params(1, 0, 1, CorrelationKernel::white(2))), HypothesisError);
}

TEST_CASE("finite-horizon rate stays below the Laplace rate") {
    const SeriesParams sets[] = {
        params(0, 1, 1),
        params(1, 0, 2.5),
        params(1, 1, 3),
        params(1, 0, 3, CorrelationKernel::gaussian(1.0, 1)),
        params(0.5, 0.5, 4, CorrelationKernel::riesz(0.5, 1)),
    };
    for (const auto& p : sets) {
        const double rate = growth_rate_laplace(p).value;
        for (double t : {5.0, 10.0, 20.0}) {
            const auto H = H_series(p, t, 1e-10);
            REQUIRE(H.converged);
            CHECK(std::log(H.value) / t <= rate * 1.05);
        }
    }
}

TEST_CASE("growth_rate_closed") {
    CHECK(growth_rate_closed(0, 2, 3, 0.5, 0.25) == doctest::Approx(std::sqrt(12.0)));
    CHECK(growth_rate_closed(1, 0, 2, 0.5, 0.5) == doctest::Approx(std::pow(2.0, 6) * std::pow(1.0, 2)));
    CHECK_THROWS_AS(growth_rate_closed(1, 0, 2, 0.0, 0.5), HypothesisError);
    CHECK_THROWS_AS(growth_rate_closed(1, 0, 2, 1.0, 1.0), HypothesisError);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.1, 2.0);
    const double alpha = 0.25;
    const auto k = CorrelationKernel::riesz(0.5, 1);
    const double C = constant_C(k, alpha);
    for (int i = 0; i < 10; ++i) {
        const double a = unit(rng), b = unit(rng), gamma = 20 * unit(rng);
        const double laplace = growth_rate_laplace(params(a, b, gamma, k)).value;
        CHECK(growth_rate_closed(a, b, gamma, C, alpha) >= laplace);
    }
}

TEST_CASE("tau convention") {
    CHECK(compute_tau(0, 0, 0, 0) == 0);
    CHECK(compute_tau(2, 1, 1, 4) == 2);
    CHECK(compute_tau(0, 0, 3, 2) == 1.5);
    CHECK_THROWS_AS(compute_tau(1, 0, 0, 1), HypothesisError);
    CHECK(BdgConstant::of(9).z_p_bound == 6);
    CHECK_THROWS_AS(BdgConstant::of(1.5), HypothesisError);
}

TEST_CASE("moment bound (a)") {
    auto in = base_inputs();
    const double C = std::max(4.0, std::pow(2.0, 6 / 0.25 - 1) * std::pow(in.upsilon_alpha, 4.0));
    const double rate = std::max(std::pow(4.0, 4.0), 1.0);
    CHECK(moment_bound_a(in) == doctest::Approx(2 * std::exp(C * 1e-9 * rate)).epsilon(1e-12));

    in.t = 0;
    in.tau = 3;
    CHECK(moment_bound_a(in) == doctest::Approx(1.5 + 2));
    in.u0_sup = 2;
    CHECK(moment_bound_a(in) == doctest::Approx(1.5 + 4));

    in = base_inputs();
    in.L_b = 1e-3;
    in.p = 2;
    CHECK_THROWS_AS(moment_bound_a(in), HypothesisError);
    in.p = 1.5;
    CHECK_THROWS_AS(moment_bound_a(in), HypothesisError);
}

TEST_CASE("moment bounds (b) and (c)") {
    auto in = base_inputs();
    in.t = 0;
    in.tau = 0.5;
    in.J_plus = 2;
    CHECK(moment_bound_b(in) == doctest::Approx(std::sqrt(3.0) * 2.5));

    // J_+ for u0 = exp(-x^2/2): (p_t * u0)(x) = (1+t)^{-1/2} exp(-x^2 / (2(1+t))).
    in = base_inputs();
    in.t = 0.1;
    in.J_plus = std::exp(-0.25 / (2 * 1.1)) / std::sqrt(1.1);
    in.constant = 1.0;
    CHECK(moment_bound_b(in) == doctest::Approx(std::sqrt(3.0) * in.J_plus * std::exp(0.1 * 256)).epsilon(1e-12));
    // With J_+ = ||u0||_inf and tau = 0 the two bounds share the exponential class.
    in = base_inputs();
    in.J_plus = in.u0_sup;
    CHECK(moment_bound_b(in) / moment_bound_a(in) == doctest::Approx(std::sqrt(3.0) / 2));

    in = base_inputs();
    in.p = 12;
    in.L_b = in.L_sigma = 0;
    CHECK(moment_bound_c(in) == in.u0_sup);
    in.L_b = 0.5;
    in.L_sigma = 0.5;
    in.constant = 0.1;
    const double v = moment_bound_c(in);
    in.u0_sup *= 3;
    in.u0_Lp *= 3;
    CHECK(moment_bound_c(in) == doctest::Approx(3 * v));
    in.p = 11.9;
    CHECK_THROWS_AS(moment_bound_c(in), HypothesisError);
}

TEST_CASE("moment bounds are nondecreasing in t, p, L_b, L_sigma") {
    auto check = [](auto bound, MomentBoundInputs in) {
        for (int field = 0; field < 4; ++field) {
            double prev = 0;
            for (double x : {0.1, 0.3, 0.6, 1.0, 1.4}) {
                auto cur = in;
                if (field == 0) cur.t = x * 1e-9;
                if (field == 1) cur.p = in.p + 4 * x;
                if (field == 2) cur.L_b = in.L_b * (1 + x);
                if (field == 3) cur.L_sigma = x;
                const double v = bound(cur);
                CHECK(v >= prev);
                prev = v;
            }
        }
    };
    auto in = base_inputs();
    in.t = 1e-10;
    in.tau = 0.2;
    in.L_b = 0.5;
    check(moment_bound_a, in);
    check(moment_bound_b, in);
    in.p = 12;
    in.constant = 0.5;
    check(moment_bound_c, in);
}
