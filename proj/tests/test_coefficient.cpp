#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "she/coefficient.hpp"
#include "she/quadrature.hpp"

using namespace she;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kE = std::numbers::e;

}  // namespace

TEST_CASE("evaluate") {
    CHECK(evaluate(truncate(Coefficient::power(2), 2), 3.0) == 4);
    CHECK(evaluate(truncate(Coefficient::power(2), 2), -3.0) == 4);
    CHECK(evaluate(Coefficient::zsinz(), kPi / 2) == doctest::Approx(kPi / 2).epsilon(1e-15));
    CHECK(evaluate(Coefficient::linear(-2), 1.5) == -3);
    CHECK(evaluate(Coefficient::powerlog(1, 1), -2.0) == doctest::Approx(2 * std::log(3.0)));
    CHECK(evaluate(Coefficient::constant(0.1), 123.0) == 0.1);
    for (const auto& g : {Coefficient::linear(2), Coefficient::power(3), Coefficient::zsinz(),
                          Coefficient::powerlog(0.5, 1), Coefficient::constant(0.3)}) {
        CHECK(evaluate(truncate(g, 1.5), 0.0) == g(0.0));
    }
    Eigen::VectorXd z(3), v(3);
    z << -1, 0, 2;
    v << 1, 0, 4;
    const auto table = Coefficient::tabulated(z, v);
    CHECK(table(1.0) == 2);
    CHECK(table(-2.0) == 2);
    CHECK(table(3.0) == 6);
    CHECK_THROWS_AS(Coefficient::power(0.5), HypothesisError);
    CHECK_THROWS_AS(truncate(Coefficient::zsinz(), 0.0), HypothesisError);
}

TEST_CASE("array evaluation agrees with pointwise evaluation") {
    Eigen::ArrayXd z = Eigen::ArrayXd::LinSpaced(101, -7, 7);
    for (const auto& g : {Coefficient::linear(0.5), Coefficient::power(2), Coefficient::power(1.5),
                          Coefficient::zsinz(), Coefficient::powerlog(0.3, 1.2), Coefficient::constant(-1),
                          Coefficient::custom([](double x) { return x * x * x; })}) {
        Eigen::ArrayXd out;
        g.apply(z, out);
        for (Eigen::Index i = 0; i < z.size(); ++i) CHECK(out[i] == g(z[i]));
        const auto t = truncate(g, 3);
        t.apply(z, out);
        for (Eigen::Index i = 0; i < z.size(); ++i) CHECK(out[i] == t(z[i]));
    }
}

TEST_CASE("truncation consistency") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-40, 40);
    for (const auto& g : {Coefficient::power(2), Coefficient::zsinz(), Coefficient::powerlog(1, 1)}) {
        for (double N : {1.0, 4.0, 16.0}) {
            const auto gN = truncate(g, N);
            const auto gM = truncate(g, 2 * N);
            for (int i = 0; i < 200; ++i) {
                const double x = u(rng);
                if (std::abs(x) <= N) {
                    CHECK(gN(x) == g(x));
                    CHECK(gM(x) == gN(x));
                } else {
                    CHECK(gN(x) == g(x > 0 ? N : -N));
                }
            }
        }
    }
}

TEST_CASE("growth_rate_constant") {
    CHECK(growth_rate_constant(Coefficient::linear(3), 10.0, 1000) == doctest::Approx(3).epsilon(1e-15));
    CHECK(growth_rate_constant(truncate(Coefficient::power(2), 2), 1e6, 1000) == doctest::Approx(2).epsilon(1e-12));
    const double s = growth_rate_constant(Coefficient::zsinz(), 100.0, 4000);
    CHECK(s <= 1);
    CHECK(s > 1 - 1e-10);
    CHECK_THROWS_AS(growth_rate_constant(Coefficient::linear(1), 1.0, 10), HypothesisError);

    for (const auto& g : {Coefficient::powerlog(1, 1), Coefficient::powerlog(0.5, 1.5), Coefficient::powerlog(2, 0)}) {
        double prev = 0;
        for (double N : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
            const double v = growth_rate_constant(truncate(g, N), N, 2000);
            CHECK(std::isfinite(v));
            CHECK(v >= prev * (1 - 1e-12));
            prev = v;
        }
    }
}

TEST_CASE("truncated coefficients are globally Lipschitz") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-30, 30);
    for (const auto& g : {Coefficient::power(2), Coefficient::zsinz(), Coefficient::powerlog(1, 1)}) {
        for (double N : {2.0, 8.0}) {
            const auto gN = truncate(g, N);
            const double L = lipschitz_estimate(g, N + 1, 20000) * (1 + 1e-3);
            for (int i = 0; i < 500; ++i) {
                const double x = u(rng), y = u(rng);
                CHECK(std::abs(gN(x) - gN(y)) <= L * std::abs(x - y) + 1e-12);
            }
        }
    }
}

TEST_CASE("classify_growth") {
    const double alpha = 0.5;
    CHECK(classify_growth(Coefficient::zsinz(), Coefficient::zsinz(), alpha) == GrowthClass::SubCritical);
    CHECK(classify_growth(Coefficient::linear(2), Coefficient::linear(1), alpha) == GrowthClass::SubCritical);
    CHECK(classify_growth(Coefficient::powerlog(1, 1), Coefficient::powerlog(alpha / 2, 1), alpha) ==
          GrowthClass::Critical);
    CHECK(classify_growth(Coefficient::powerlog(1.5, 1), Coefficient::linear(1), alpha) == GrowthClass::Supercritical);
    CHECK(classify_growth(Coefficient::linear(1), Coefficient::powerlog(0.5, 1), alpha) == GrowthClass::Supercritical);
    CHECK(classify_growth(Coefficient::power(2), Coefficient::linear(1), alpha) == GrowthClass::Supercritical);
    CHECK_THROWS_AS(classify_growth(Coefficient::constant(1), Coefficient::linear(1), alpha), HypothesisError);

    // The same functions given as opaque callables go through the sampler.
    auto critical_b = Coefficient::custom([](double z) { return std::abs(z) * std::log1p(std::abs(z)); });
    auto critical_s = Coefficient::custom([=](double z) { return std::abs(z) * std::pow(std::log1p(std::abs(z)), alpha / 2); });
    auto super_b = Coefficient::custom([](double z) { return std::abs(z) * std::pow(std::log1p(std::abs(z)), 1.5); });
    auto sub_b = Coefficient::custom([](double z) { return std::sqrt(std::abs(z)); });
    auto zero = Coefficient::constant(0);
    CHECK(classify_growth(critical_b, critical_s, alpha) == GrowthClass::Critical);
    CHECK(classify_growth(super_b, zero, alpha) == GrowthClass::Supercritical);
    CHECK(classify_growth(sub_b, sub_b, alpha) == GrowthClass::SubCritical);

    // Positive multiples keep sub-critical and supercritical classes.
    for (double c : {0.1, 5.0, 50.0}) {
        auto scaled_sub = Coefficient::custom([=](double z) { return c * std::sqrt(std::abs(z)); });
        auto scaled_super = Coefficient::custom([=](double z) { return c * std::abs(z) * std::pow(std::log1p(std::abs(z)), 1.5); });
        CHECK(classify_growth(scaled_sub, zero, alpha) == GrowthClass::SubCritical);
        CHECK(classify_growth(scaled_super, zero, alpha) == GrowthClass::Supercritical);
        CHECK(classify_growth(Coefficient::linear(c), Coefficient::linear(c), alpha) == GrowthClass::SubCritical);
    }
}

TEST_CASE("osgood_check") {
    const auto sq = osgood_check(Coefficient::power(2), 1.0);
    CHECK(sq.verdict == OsgoodVerdict::BlowUpExpected);
    CHECK(*sq.integral == doctest::Approx(1).epsilon(1e-14));
    CHECK(*osgood_check(Coefficient::power(3), 2.0).integral == doctest::Approx(0.125));
    CHECK(osgood_check(Coefficient::linear(1), 1.0).verdict == OsgoodVerdict::GlobalExpected);
    CHECK(osgood_check(Coefficient::powerlog(1, 1), 1.0).verdict == OsgoodVerdict::GlobalExpected);
    CHECK(osgood_check(Coefficient::constant(0.1), 1.0).verdict == OsgoodVerdict::GlobalExpected);

    // \int_c^infty du / (u log^2(1+u)) against a direct quadrature in s = 1/u.
    const auto pl = osgood_check(Coefficient::powerlog(2, 1), 1.0);
    REQUIRE(pl.integral);
    auto g = [](double s) {
        if (s == 0) return 0.0;
        const double u = 1 / s;
        return 1 / (s * s * u * std::pow(std::log1p(u), 2));
    };
    // The integrand behaves like 1/(s log^2 s) near 0; split off a tiny interval analytically.
    const double eps = 1e-30;
    const double oracle = quad::integrate<double>(g, eps, 1.0, 1e-12, 0.0, 20000).value + 1 / std::log(1 / eps);
    CHECK(*pl.integral == doctest::Approx(oracle).epsilon(1e-6));

    auto u2 = Coefficient::custom([](double u) { return u * u; });
    const auto c2 = osgood_check(u2, 1.0);
    CHECK(c2.verdict == OsgoodVerdict::BlowUpExpected);
    CHECK(*c2.integral == doctest::Approx(1).epsilon(1e-8));
    auto ulog = Coefficient::custom([](double u) { return u * std::log1p(u); });
    CHECK(osgood_check(ulog, 1.0).verdict == OsgoodVerdict::GlobalExpected);
    auto ulog2 = Coefficient::custom([](double u) { return u * std::pow(std::log1p(u), 2); });
    CHECK(osgood_check(ulog2, 1.0).verdict == OsgoodVerdict::BlowUpExpected);

    CHECK_THROWS_AS(osgood_check(Coefficient::zsinz(), 1.0), HypothesisError);
    CHECK_THROWS_AS(osgood_check(Coefficient::linear(-1), 1.0), HypothesisError);
    CHECK_THROWS_AS(osgood_check(Coefficient::custom([](double u) { return 5 - u; }), 1.0), HypothesisError);
}

TEST_CASE("salins_check") {
    auto h = Coefficient::custom([](double u) { return 2 * u * std::log(kE + u); });
    auto b = Coefficient::custom([](double z) { return z * std::log(kE + std::abs(z)); });
    auto sigma = Coefficient::custom([](double z) {
        const double a = std::abs(z);
        return std::pow(a, 0.75) * std::pow(2 * a * std::log(kE + a), 0.25);
    });
    CHECK(salins_check(b, sigma, h, 0.25));
    CHECK(salins_check(b, Coefficient::constant(0), h, 0.25));

    auto h1 = Coefficient::custom([](double u) { return u * std::log(kE + u); });
    CHECK_FALSE(salins_check(Coefficient::power(2), Coefficient::constant(0), h1, 0.25));
    // sigma exceeding the bound by a slowly growing factor.
    auto sigma_big = Coefficient::custom([](double z) {
        const double a = std::abs(z);
        return std::pow(a, 0.75) * std::pow(2 * a * std::log(kE + a), 0.25) * std::log(kE + a);
    });
    CHECK_FALSE(salins_check(b, sigma_big, h, 0.25));

    CHECK_THROWS_AS(salins_check(b, sigma, h, 0.5), HypothesisError);
    CHECK_THROWS_AS(salins_check(b, sigma, Coefficient::power(2), 0.25), HypothesisError);
    CHECK_THROWS_AS(salins_check(b, sigma, Coefficient::custom([](double u) { return 1 / (1 + u); }), 0.25),
                    HypothesisError);
}

TEST_CASE("parse_coefficient") {
    CHECK(parse_coefficient("linear:lambda=3")(2.0) == 6);
    CHECK(parse_coefficient("power:p=2")(-3.0) == 9);
    CHECK(parse_coefficient("zsinz").family() == CoefficientFamily::SinProduct);
    CHECK(parse_coefficient("powerlog:a=1,b=1").exponent() == 1);
    CHECK(parse_coefficient("const:c=0.1")(7.0) == 0.1);
    for (const char* s : {"linear:lambda=0.5", "power:p=1.5", "zsinz", "powerlog:a=0.25,b=1", "const:c=-2"})
        CHECK(parse_coefficient(s).spec() == s);

    CHECK_THROWS_AS(parse_coefficient("cubic"), SpecError);
    CHECK_THROWS_AS(parse_coefficient("power:p=0.5"), SpecError);
    CHECK_THROWS_AS(parse_coefficient("linear:lambda=x"), SpecError);
    try {
        parse_coefficient("linear:lambda=1,mu=2");
        FAIL("expected SpecError");
    } catch (const SpecError& e) {
        CHECK(e.position() == 16);
    }

    const std::string path = "coefficient_table_test.txt";
    {
        std::ofstream out(path);
        out << "# z g\n-2 4\n0 0\n1 1\n3 9\n";
    }
    const auto t = parse_coefficient("custom:file=" + path);
    CHECK(t(2.0) == 5);
    CHECK(t.spec() == "custom:file=" + path);
    {
        std::ofstream out(path);
        out << "0 0\n-1 1\n";
    }
    CHECK_THROWS_AS(parse_coefficient("custom:file=" + path), SpecError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(parse_coefficient("custom:file=/nonexistent/table.txt"), IoError);
}
