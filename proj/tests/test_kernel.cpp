#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "she/kernel.hpp"
#include "she/quadrature.hpp"

using namespace she;

namespace {

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

// Oracle for the d=1 Riesz transform: 2 \int_0^inf x^{-beta} cos(x) e^{-eps x} dx,
// summed period by period, then Richardson-extrapolated to eps -> 0.
double damped_riesz_transform(double beta, double eps) {
    // First half-period with x = u^{1/(1-beta)} removes the x^{-beta} singularity.
    const double p = 1.0 / (1.0 - beta);
    auto head = [&](double u) {
        const double x = std::pow(u, p);
        return std::cos(x) * std::exp(-eps * x) * p;
    };
    double total = quad::integrate<double>(head, 0.0, std::pow(std::numbers::pi, 1.0 - beta), 1e-12, 1e-16).value;
    auto body = [&](double x) { return std::pow(x, -beta) * std::cos(x) * std::exp(-eps * x); };
    for (int k = 1;; ++k) {
        const double a = k * std::numbers::pi, b = a + std::numbers::pi;
        total += quad::integrate<double>(body, a, b, 1e-12, 1e-16).value;
        if (eps * a > 40) break;
    }
    return 2 * total;
}

double riesz_transform_oracle(double beta) {
    // The damped transform is analytic in eps, so a Romberg table in eps applies.
    double e = 0.02;
    double row[4];
    for (int i = 0; i < 4; ++i, e /= 2) row[i] = damped_riesz_transform(beta, e);
    for (int level = 1; level < 4; ++level) {
        const double f = std::pow(2.0, level);
        for (int i = 3; i >= level; --i) row[i] = (f * row[i] - row[i - 1]) / (f - 1);
    }
    return row[3];
}

}  // namespace

TEST_CASE("eval_correlation pointwise values") {
    CHECK(eval_correlation(CorrelationKernel::gaussian(1.0, 1), vec1(0.0)).value() == doctest::Approx(1.0));
    CHECK_FALSE(eval_correlation(CorrelationKernel::white(1), vec1(2.3)).has_value());
    CHECK(eval_correlation(CorrelationKernel::riesz(0.5, 1), vec1(4.0)).value() ==
          doctest::Approx(std::pow(4.0, -0.5)).epsilon(1e-15));
    CHECK(std::isinf(eval_correlation(CorrelationKernel::riesz(0.5, 1), vec1(0.0)).value()));
    CHECK_THROWS_AS(eval_correlation(CorrelationKernel::gaussian(1.0, 2), vec1(0.0)), HypothesisError);
}

TEST_CASE("correlation is symmetric") {
    for (const auto& k : {CorrelationKernel::gaussian(0.7, 2), CorrelationKernel::exponential(2.0, 2),
                          CorrelationKernel::matern(1.5, 0.8, 2), CorrelationKernel::riesz(1.2, 2)}) {
        Eigen::Vector2d x(0.3, -1.7);
        CHECK(eval_correlation(k, x).value() == eval_correlation(k, Eigen::Vector2d(-x)).value());
    }
}

TEST_CASE("eval_spectral_density") {
    CHECK(eval_spectral_density(CorrelationKernel::white(1), vec1(3.7)) == 1.0);

    // Total mass of the unit Gaussian equals f^(0).
    const auto g = CorrelationKernel::gaussian(1.0, 1);
    auto f = [&](double x) { return g.correlation_radial(x).value(); };
    const double mass = quad::integrate<double>(f, -40.0, 40.0, 1e-13).value;
    CHECK(eval_spectral_density(g, vec1(0.0)) == doctest::Approx(mass).epsilon(1e-12));

    CHECK_THROWS_AS(eval_spectral_density(g, Eigen::Vector2d(0, 0)), HypothesisError);
}

TEST_CASE("spectral density matches a numeric cosine transform in d=1") {
    const double xi = 1.3;
    for (const auto& k : {CorrelationKernel::gaussian(0.6, 1), CorrelationKernel::exponential(1.4, 1),
                          CorrelationKernel::matern(1.5, 0.9, 1), CorrelationKernel::matern(0.8, 1.1, 1)}) {
        auto f = [&](double x) { return k.correlation_radial(x).value() * std::cos(xi * x); };
        // Split at 1 so the Matern log-type cusp at 0 sits on an endpoint.
        double numeric = 2 * quad::integrate<double>(f, 0.0, 1.0, 1e-13, 0.0, 10000).value;
        for (int j = 1; j < 400; ++j) numeric += 2 * quad::integrate<double>(f, j, j + 1.0, 1e-13).value;
        CHECK(k.spectral_radial(xi) == doctest::Approx(numeric).epsilon(1e-8));
    }
}

TEST_CASE("Matern with nu = 1/2 is the exponential kernel") {
    const auto m = CorrelationKernel::matern(0.5, 1.7, 2);
    const auto e = CorrelationKernel::exponential(1.7, 2);
    for (double r : {0.0, 0.4, 1.0, 3.5}) {
        CHECK(m.correlation_radial(r).value() == doctest::Approx(e.correlation_radial(r).value()).epsilon(1e-12));
        CHECK(m.spectral_radial(r) == doctest::Approx(e.spectral_radial(r)).epsilon(1e-12));
    }
}

TEST_CASE("Riesz spectral constant") {
    // Oracle: damped oscillatory transform with Richardson extrapolation.
    const double oracle = riesz_transform_oracle(0.5);
    const auto k = CorrelationKernel::riesz(0.5, 1);
    CHECK(eval_spectral_density(k, vec1(1.0)) == doctest::Approx(oracle).epsilon(1e-7));
    CHECK(riesz_transform_oracle(0.3) == doctest::Approx(riesz_spectral_constant(0.3, 1)).epsilon(1e-7));

    // Closed form pi^{d/2} 2^{d-beta} Gamma((d-beta)/2) / Gamma(beta/2) as a second check.
    for (int d : {1, 2}) {
        for (double beta : {0.25, 0.5, 0.9}) {
            const double b = beta * d;
            const double closed = std::pow(std::numbers::pi, d / 2.0) * std::pow(2.0, d - b) *
                                  std::tgamma((d - b) / 2) / std::tgamma(b / 2);
            CHECK(riesz_spectral_constant(b, d) == doctest::Approx(closed).epsilon(1e-11));
        }
    }
    CHECK_THROWS_AS(CorrelationKernel::riesz(1.0, 1), HypothesisError);
}

TEST_CASE("spectral density is even") {
    for (const auto& k : {CorrelationKernel::white(2), CorrelationKernel::gaussian(0.7, 2),
                          CorrelationKernel::riesz(0.5, 2), CorrelationKernel::matern(2.5, 0.3, 2)}) {
        Eigen::Vector2d xi(0.9, -2.2);
        CHECK(eval_spectral_density(k, xi) == eval_spectral_density(k, Eigen::Vector2d(-xi)));
    }
}

TEST_CASE("Gram matrices are positive semidefinite") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    for (const auto& k : {CorrelationKernel::gaussian(0.8, 2), CorrelationKernel::exponential(1.5, 2),
                          CorrelationKernel::matern(1.2, 0.6, 2), CorrelationKernel::gaussian(2.0, 1)}) {
        const int n = 40;
        Eigen::MatrixXd pts(k.dimension(), n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < k.dimension(); ++i) pts(i, j) = unif(rng);
        Eigen::MatrixXd gram(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) gram(i, j) = eval_correlation(k, pts.col(i) - pts.col(j)).value();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * gram.trace());
    }
}

TEST_CASE("heat kernel values") {
    CHECK(heat_kernel(1.0, Eigen::VectorXd::Zero(1)) == doctest::Approx(0.3989422804).epsilon(1e-10));
    CHECK(heat_kernel(1.0, Eigen::VectorXd::Zero(2)) == doctest::Approx(1 / (2 * std::numbers::pi)));
    double prev = heat_kernel(0.7, vec1(0.0));
    for (double r = 0.5; r < 20; r += 0.5) {
        const double v = heat_kernel(0.7, vec1(r));
        CHECK(v < prev);
        prev = v;
    }
    CHECK_THROWS_AS(heat_kernel(0.0, vec1(0.0)), HypothesisError);
}

TEST_CASE("heat kernel has unit mass") {
    for (double t : {0.1, 1.0, 3.0}) {
        const double half = 8 * std::sqrt(t);
        const int n = 801;
        const double h = 2 * half / (n - 1);
        double s1 = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            const double xi = -half + i * h;
            s1 += wi * heat_kernel(t, vec1(xi));
            for (int j = 0; j < n; ++j) {
                const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
                s2 += wi * wj * heat_kernel(t, Eigen::Vector2d(xi, -half + j * h));
            }
        }
        CHECK(std::abs(s1 * h - 1) < 1e-8);
        CHECK(std::abs(s2 * h * h - 1) < 1e-8);
    }
}

TEST_CASE("heat kernel semigroup property") {
    const double s = 0.3, t = 0.5;
    const double h = 0.005;
    for (double x : {0.0, 0.4, 1.3}) {
        double conv = 0;
        for (double y = -12; y <= 12; y += h) conv += heat_kernel(s, vec1(x - y)) * heat_kernel(t, vec1(y)) * h;
        CHECK(std::abs(conv - heat_kernel(s + t, vec1(x))) < 1e-6);
    }
}

TEST_CASE("parse_kernel") {
    CHECK(parse_kernel("white,dim=1").kind() == KernelKind::White);
    const auto r = parse_kernel("riesz:beta=0.5,dim=1");
    CHECK(r.kind() == KernelKind::Riesz);
    CHECK(r.beta() == 0.5);
    const auto m = parse_kernel("matern:nu=1.5,scale=2,dim=2");
    CHECK(m.dimension() == 2);
    CHECK(parse_kernel(m.spec()).smoothness() == 1.5);
    CHECK(parse_kernel("gaussian:scale=0.25").dimension() == 1);
    CHECK_THROWS_AS(parse_kernel("gaussian:scael=1"), SpecError);
    CHECK_THROWS_AS(parse_kernel("pink,dim=1"), SpecError);
    CHECK_THROWS_AS(parse_kernel("exp:scale=abc"), SpecError);
    CHECK_THROWS_AS(parse_kernel("riesz:beta=1,dim=1"), SpecError);
}
