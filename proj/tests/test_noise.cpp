#include <cmath>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "doctest.h"
#include "she/noise.hpp"
#include "she/quadrature.hpp"

using namespace she;

namespace {

constexpr double kPi = std::numbers::pi;

// Periodized correlation by direct image summation.
double image_sum(const CorrelationKernel& k, double r, double period) {
    double sum = 0;
    for (int m = -50; m <= 50; ++m) sum += *k.correlation_radial(std::abs(r + m * period));
    return sum;
}

std::vector<Eigen::ArrayXd> draws(const SpectralSynthesizer& s, double dt, int count, std::uint64_t seed) {
    NoiseSampler sampler(s);
    std::vector<Eigen::ArrayXd> out(count);
    const RandomStream stream(seed, 0);
    for (int i = 0; i < count; ++i) sampler.sample(dt, stream, i, out[i]);
    return out;
}

}  // namespace

TEST_CASE("lattice basics") {
    const auto l = Lattice::line(16, 8);
    CHECK(l.spacing() == 2);
    CHECK(l.sites() == 8);
    CHECK(l.modes() == 5);
    CHECK(l.axis_coordinates(0)[0] == -8);
    CHECK(l.axis_coordinates(0)[4] == 0);
    CHECK(l.mode_norm2()[1] == doctest::Approx(std::pow(2 * kPi / 16, 2)));
    const auto sq = Lattice::square(4, 4);
    CHECK(sq.sites() == 16);
    CHECK(sq.modes() == 12);
    CHECK(sq.mode_norm2()[3 * 3 + 2] == doctest::Approx(std::pow(2 * kPi / 4, 2) * (1 + 4)));
    CHECK(sq.mode_weight().sum() == 16);
    CHECK_THROWS_AS(Lattice::line(1, 12), HypothesisError);
    CHECK_THROWS_AS(Lattice::line(0, 16), HypothesisError);
    CHECK_THROWS_AS(Lattice::square(1, 8192), HypothesisError);

    CHECK(parse_lattice("dim=1,extent=16,points=512") == Lattice::line(16, 512));
    CHECK(parse_lattice("lattice:dim=2,extent=8,points=64") == Lattice::square(8, 64));
    CHECK(parse_lattice(Lattice::line(2.5, 64).spec()) == Lattice::line(2.5, 64));
    CHECK_THROWS_AS(parse_lattice("dim=3,extent=1,points=8"), SpecError);
    CHECK_THROWS_AS(parse_lattice("dim=1,extent=1,points=12"), SpecError);
    CHECK_THROWS_AS(parse_lattice("dim=1,extent=1,points=8,spacing=2"), SpecError);
}

TEST_CASE("spectral transform round trip and heat multiplier") {
    for (const auto& l : {Lattice::line(10, 64), Lattice::square(10, 32)}) {
        SpectralTransform t(l);
        Eigen::ArrayXd x = Eigen::ArrayXd::Random(l.sites());
        Eigen::ArrayXcd m;
        t.forward(x, m);
        CHECK(m[0].real() == doctest::Approx(x.sum()));
        Eigen::ArrayXd y;
        t.inverse(m, y);
        CHECK((x - y).abs().maxCoeff() < 1e-13);
        // Parseval with half-spectrum multiplicities.
        const double energy = (l.mode_weight() * m.abs2()).sum() / l.sites();
        CHECK(energy == doctest::Approx(x.square().sum()).epsilon(1e-12));
    }
    // A single Fourier mode is an eigenfunction of the multiplier.
    const auto l = Lattice::line(2 * kPi, 32);
    SpectralTransform t(l);
    Eigen::ArrayXd x = (3 * l.axis_coordinates(0)).cos();
    const Eigen::ArrayXd mult = (-0.5 * l.mode_norm2()).exp();
    Eigen::ArrayXd y = x;
    t.apply_multiplier(y, mult);
    CHECK((y - std::exp(-4.5) * x).abs().maxCoeff() < 1e-14);
}

TEST_CASE("plan") {
    const auto l = Lattice::line(32, 256);
    const auto white = plan(CorrelationKernel::white(1), l);
    CHECK(white.flat);
    CHECK((white.amplitudes == white.amplitudes[0]).all());
    CHECK(white.amplitudes[0] == doctest::Approx(1 / std::sqrt(32.0)));
    CHECK(white.clipped_mass == 0);

    const auto g = plan(CorrelationKernel::gaussian(1.0, 1), l);
    CHECK_FALSE(g.flat);
    for (Eigen::Index k = 1; k + 1 < g.amplitudes.size(); ++k) CHECK(g.amplitudes[k + 1] <= g.amplitudes[k]);
    // Super-exponential decay: the log-amplitude decrement grows linearly in k.
    const double d1 = std::log(g.amplitudes[10] / g.amplitudes[11]);
    const double d2 = std::log(g.amplitudes[20] / g.amplitudes[21]);
    CHECK(d2 > 1.8 * d1);

    const auto rz = CorrelationKernel::riesz(0.5, 1);
    const auto r = plan(rz, l);
    CHECK(r.amplitudes.allFinite());
    const double a = kPi / 32;
    CHECK(r.amplitudes[0] * r.amplitudes[0] * 32 == doctest::Approx(rz.riesz_constant() * std::pow(a, -0.5) / 0.5));
    CHECK(r.amplitudes[1] * r.amplitudes[1] * 32 == doctest::Approx(rz.spectral_radial(2 * kPi / 32)));

    CHECK_THROWS_AS(plan(CorrelationKernel::white(2), l), HypothesisError);
}

TEST_CASE("Riesz zero mode in d=2") {
    const auto k = CorrelationKernel::riesz(0.8, 2);
    const auto l = Lattice::square(8, 16);
    const double a = kPi / 8;
    // Cartesian nested quadrature; the inner integrable singularity sits at an endpoint.
    auto inner = [&](double x) {
        auto g = [&](double y) { return k.spectral_radial(std::hypot(x, y)); };
        return quad::integrate<double>(g, 0.0, a, 1e-11, 0.0, 5000).value;
    };
    const double oracle = 4 * quad::integrate<double>(inner, 0.0, a, 1e-10, 0.0, 5000).value / (4 * a * a);
    CHECK(zero_mode_average(k, l) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("lattice covariance equals the periodized correlation") {
    const auto k = CorrelationKernel::gaussian(1.0, 1);
    const auto s = plan(k, Lattice::line(32, 256));
    for (int lag : {0, 1, 5, 16, 100, 128}) {
        Eigen::ArrayXd off(1);
        off << lag * 0.125;
        CHECK(lattice_covariance(s, off) == doctest::Approx(image_sum(k, lag * 0.125, 32)).epsilon(1e-10));
    }
    const auto w = plan(CorrelationKernel::white(1), Lattice::line(32, 256));
    Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(1), one = Eigen::ArrayXd::Constant(1, 0.125);
    CHECK(lattice_covariance(w, zero) == doctest::Approx(8));
    CHECK(std::abs(lattice_covariance(w, one)) < 1e-12);
}

TEST_CASE("synthesized fields are real") {
    // Full complex route: a Hermitian-symmetric product transforms back to a real field.
    const auto l = Lattice::line(32, 256);
    const auto s = plan(CorrelationKernel::gaussian(0.5, 1), l);
    Eigen::ArrayXd xi(256);
    RandomStream(11, 0).gaussians(0, 0, xi);
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec, back;
    std::vector<double> src(xi.data(), xi.data() + 256);
    fft.fwd(spec, src);
    for (int k = 0; k < 256; ++k) {
        const int half = k <= 128 ? k : 256 - k;
        spec[k] *= s.amplitudes[half] * std::sqrt(256.0);
    }
    fft.inv(back, spec);
    double imag = 0, norm = 0;
    for (const auto& c : back) {
        imag = std::max(imag, std::abs(c.imag()));
        norm += std::norm(c);
    }
    CHECK(imag < 1e-12 * std::sqrt(norm));
    Eigen::ArrayXd ours;
    NoiseSampler(s).sample(1.0, RandomStream(11, 0), 0, ours);
    for (int i = 0; i < 256; ++i) CHECK(ours[i] == doctest::Approx(back[i].real()).epsilon(1e-10));
}

TEST_CASE("white noise statistics") {
    const auto l = Lattice::line(32, 256);
    const auto s = plan(CorrelationKernel::white(1), l);
    const double dt = 0.01;
    const auto samples = draws(s, dt, 10000, 1);
    const auto cov = empirical_covariance(samples, l, {0, 1, 2, 7});
    CHECK(std::abs(cov.value[0] - dt / l.spacing()) < 3 * cov.standard_error[0]);
    for (int i = 1; i < 4; ++i) CHECK(std::abs(cov.value[i]) < 3 * cov.standard_error[i]);

    Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(256), sq = Eigen::ArrayXd::Zero(256);
    for (const auto& x : samples) {
        mean += x;
        sq += x.square();
    }
    mean /= 10000.0;
    const Eigen::ArrayXd se = ((sq / 10000.0 - mean.square()) / 9999.0).sqrt();
    CHECK((mean.abs() < 4 * se).all());
}

TEST_CASE("Gaussian kernel covariance and stationarity") {
    const auto l = Lattice::line(32, 256);
    const auto k = CorrelationKernel::gaussian(1.0, 1);
    const auto s = plan(k, l);
    const double dt = 0.02;
    const auto samples = draws(s, dt, 10000, 2);
    std::vector<int> lags;
    for (int i = 0; i <= 16; ++i) lags.push_back(i);
    const auto cov = empirical_covariance(samples, l, lags);
    for (int i = 0; i <= 16; ++i) {
        const double expected = image_sum(k, i * l.spacing(), 32);
        CHECK(std::abs(cov.value[i] / dt - expected) < 3 * cov.standard_error[i] / dt);
    }
    // Anchored estimates at two far-apart sites agree within sampling error.
    double c0 = 0, c1 = 0;
    for (const auto& x : samples) {
        c0 += x[10] * x[13];
        c1 += x[150] * x[153];
    }
    c0 /= 10000;
    c1 /= 10000;
    const double se = std::sqrt(2.0) * cov.value[0] * std::sqrt(2.0 / 10000);
    CHECK(std::abs(c0 - c1) < 4 * se);
}

TEST_CASE("increments from distinct substreams are uncorrelated") {
    const auto l = Lattice::line(16, 128);
    const auto s = plan(CorrelationKernel::exponential(0.5, 1), l);
    NoiseSampler sampler(s);
    const RandomStream a(5, 0), b(5, 1);
    Eigen::ArrayXd x, y;
    const int count = 4000;
    Eigen::ArrayXd prod(count);
    double vx = 0, vy = 0;
    for (int i = 0; i < count; ++i) {
        sampler.sample(1.0, a, i, x);
        sampler.sample(1.0, b, i, y);
        prod[i] = x[20] * y[20];
        vx += x[20] * x[20];
        vy += y[20] * y[20];
    }
    const double corr = prod.mean() / std::sqrt(vx / count * vy / count);
    CHECK(std::abs(corr) < 3 / std::sqrt(double(count)));
}

TEST_CASE("determinism and time scaling") {
    const auto l = Lattice::square(8, 16);
    const auto s = plan(CorrelationKernel::matern(1.5, 0.5, 2), l);
    const auto a = sample_increment(s, 0.1, RandomStream(3, 4), 9);
    const auto b = sample_increment(s, 0.1, RandomStream(3, 4), 9);
    CHECK((a.values == b.values).all());
    CHECK(a.dt == 0.1);

    // One step of dt against two summed steps of dt/2.
    const auto line = Lattice::line(16, 64);
    const auto g = plan(CorrelationKernel::gaussian(0.7, 1), line);
    NoiseSampler sampler(g);
    const int count = 5000;
    Eigen::ArrayXd whole(count), halves(count), x, y;
    for (int i = 0; i < count; ++i) {
        sampler.sample(0.2, RandomStream(8, i), 0, x);
        whole[i] = x[3];
        sampler.sample(0.1, RandomStream(9, i), 0, x);
        sampler.sample(0.1, RandomStream(9, i), 1, y);
        halves[i] = x[3] + y[3];
    }
    const double v1 = whole.square().mean(), v2 = halves.square().mean();
    const double ratio = v1 / v2;
    CHECK(std::abs(ratio - 1) < 3 * 2 / std::sqrt(double(count)));
}

TEST_CASE("empirical_covariance edge cases") {
    const auto l = Lattice::line(4, 16);
    std::vector<Eigen::ArrayXd> zeros(100, Eigen::ArrayXd::Zero(16));
    const auto c = empirical_covariance(zeros, l, {0, 3});
    CHECK(c.value[0] == 0);
    CHECK(c.value[1] == 0);
    CHECK(c.standard_error[0] == 0);
    std::vector<Eigen::ArrayXd> few(99, Eigen::ArrayXd::Zero(16));
    CHECK_THROWS_AS(empirical_covariance(few, l, {0}), HypothesisError);
}
