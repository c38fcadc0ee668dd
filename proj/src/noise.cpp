#include "she/noise.hpp"

#include <cmath>
#include <numbers>

#include "she/quadrature.hpp"

namespace she {

namespace {

constexpr double kPi = std::numbers::pi;

// Frequency of index k along an axis, FFT order.
double frequency(const Lattice& l, int axis, Eigen::Index k) {
    const Eigen::Index n = l.points[axis];
    const Eigen::Index s = k <= n / 2 ? k : k - n;
    return 2 * kPi * static_cast<double>(s) / l.extent[axis];
}

}  // namespace

double zero_mode_average(const CorrelationKernel& kernel, const Lattice& lattice) {
    const double a = kPi / lattice.extent[0];
    if (kernel.kind() != KernelKind::Riesz) {
        // Bounded densities: plain cell average by radial-free quadrature.
        if (lattice.dim == 1) {
            auto f = [&](double x) { return kernel.spectral_radial(x); };
            return quad::integrate<double>(f, 0.0, a, 1e-12).value / a;
        }
        auto inner = [&](double x) {
            auto g = [&](double y) { return kernel.spectral_radial(std::hypot(x, y)); };
            return quad::integrate<double>(g, 0.0, a, 1e-12).value;
        };
        return quad::integrate<double>(inner, 0.0, a, 1e-11).value / (a * a);
    }
    const double c = kernel.riesz_constant();
    const double beta = kernel.beta();
    if (lattice.dim == 1) return c * std::pow(a, beta - 1) / beta;
    // Polar form over the square: 8 sectors of angle pi/4, radius a / cos(theta).
    auto sector = [&](double theta) { return std::pow(a / std::cos(theta), beta) / beta; };
    const double integral = 8 * c * quad::integrate<double>(sector, 0.0, kPi / 4, 1e-13).value;
    return integral / (4 * a * a);
}

SpectralSynthesizer plan(const CorrelationKernel& kernel, const Lattice& lattice) {
    lattice.validate();
    if (kernel.dimension() != lattice.dim)
        throw HypothesisError("kernel dimension " + std::to_string(kernel.dimension()) +
                              " does not match lattice dimension " + std::to_string(lattice.dim));
    SpectralSynthesizer s{lattice, kernel, Eigen::ArrayXd(lattice.modes()), 0.0, false};
    const Eigen::ArrayXd norm2 = lattice.mode_norm2();
    const Eigen::ArrayXd weight = lattice.mode_weight();
    const double volume = lattice.dim == 1 ? lattice.extent[0] : lattice.extent[0] * lattice.extent[1];
    double total = 0;
    for (Eigen::Index m = 0; m < norm2.size(); ++m) {
        double density = m == 0 && kernel.spectral_origin_exponent() < 0 ? zero_mode_average(kernel, lattice)
                                                                          : kernel.spectral_radial(std::sqrt(norm2[m]));
        if (!std::isfinite(density))
            throw HypothesisError("spectral density of " + kernel.spec() + " is not finite at a lattice mode");
        if (density < 0) {
            s.clipped_mass += -density * weight[m] / volume;
            density = 0;
        }
        total += density * weight[m] / volume;
        s.amplitudes[m] = std::sqrt(density / volume);
    }
    if (s.clipped_mass > 1e-6 * total) throw HypothesisError("clipped spectral mass exceeds 1e-6 of the total");
    s.flat = (s.amplitudes == s.amplitudes[0]).all();
    return s;
}

double lattice_covariance(const SpectralSynthesizer& synth, const Eigen::Ref<const Eigen::ArrayXd>& offset) {
    const Lattice& l = synth.lattice;
    if (offset.size() != l.dim) throw HypothesisError("offset dimension does not match the lattice");
    const Eigen::ArrayXd weight = l.mode_weight();
    double sum = 0;
    if (l.dim == 1) {
        for (Eigen::Index k = 0; k < synth.amplitudes.size(); ++k)
            sum += weight[k] * synth.amplitudes[k] * synth.amplitudes[k] * std::cos(frequency(l, 0, k) * offset[0]);
        return sum;
    }
    const Eigen::Index h = l.points[1] / 2 + 1;
    for (Eigen::Index i = 0; i < l.points[0]; ++i)
        for (Eigen::Index j = 0; j < h; ++j) {
            const Eigen::Index m = i * h + j;
            const double phase = frequency(l, 0, i) * offset[0] + frequency(l, 1, j) * offset[1];
            sum += weight[m] * synth.amplitudes[m] * synth.amplitudes[m] * std::cos(phase);
        }
    return sum;
}

NoiseSampler::NoiseSampler(const SpectralSynthesizer& synth)
    : synth_(&synth), transform_(synth.lattice), multiplier_(synth.amplitudes * std::sqrt(double(synth.lattice.sites()))) {}

void NoiseSampler::sample(double dt, const RandomStream& stream, std::uint64_t step, Eigen::ArrayXd& out) {
    if (!(dt > 0)) throw HypothesisError("noise increment needs dt > 0");
    out.resize(synth_->lattice.sites());
    stream.gaussians(step, 0, out);
    if (synth_->flat) {
        out *= multiplier_[0] * std::sqrt(dt);
        return;
    }
    transform_.forward(out, modes_);
    modes_ *= multiplier_ * std::sqrt(dt);
    transform_.inverse(modes_, out);
}

NoiseIncrement sample_increment(const SpectralSynthesizer& synth, double dt, const RandomStream& stream,
                                std::uint64_t step) {
    NoiseSampler sampler(synth);
    NoiseIncrement inc{dt, {}};
    sampler.sample(dt, stream, step, inc.values);
    return inc;
}

CovarianceEstimate empirical_covariance(const std::vector<Eigen::ArrayXd>& samples, const Lattice& lattice,
                                        const std::vector<int>& lags) {
    const Eigen::Index S = static_cast<Eigen::Index>(samples.size());
    if (S < 100) throw HypothesisError("empirical_covariance needs at least 100 samples");
    const Eigen::Index n = lattice.sites();
    for (const auto& s : samples)
        if (s.size() != n) throw HypothesisError("sample size does not match the lattice");

    Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(n);
    for (const auto& s : samples) mean += s;
    mean /= double(S);

    const Eigen::Index stride = lattice.dim == 1 ? 1 : lattice.points[1];
    auto shifted = [&](const Eigen::ArrayXd& x, int lag) {
        const Eigen::Index shift = ((lag % lattice.points[0]) + lattice.points[0]) % lattice.points[0] * stride;
        Eigen::ArrayXd y(n);
        y.head(n - shift) = x.tail(n - shift);
        y.tail(shift) = x.head(shift);
        return y;
    };

    CovarianceEstimate out{lags, Eigen::ArrayXd(lags.size()), Eigen::ArrayXd(lags.size())};
    for (std::size_t l = 0; l < lags.size(); ++l) {
        const Eigen::ArrayXd mean_shift = shifted(mean, lags[l]);
        const double M = (mean * mean_shift).mean();
        Eigen::ArrayXd z(S), a(S), b(S);
        for (Eigen::Index s = 0; s < S; ++s) {
            const Eigen::ArrayXd ys = shifted(samples[s], lags[l]);
            z[s] = (samples[s] * ys).mean();
            a[s] = (mean * ys).mean();
            b[s] = (samples[s] * mean_shift).mean();
        }
        const double Z = z.sum();
        const double full = (Z - S * M) / (S - 1);
        // Leave-one-out: the mean without sample s is (S m - y_s) / (S - 1).
        const double Sd = double(S);
        const Eigen::ArrayXd M_loo = (Sd * Sd * M - Sd * (a + b) + z) / ((Sd - 1) * (Sd - 1));
        const Eigen::ArrayXd loo = (Z - z - (Sd - 1) * M_loo) / (Sd - 2);
        out.value[l] = full;
        out.standard_error[l] = std::sqrt((Sd - 1) / Sd * (loo - loo.mean()).square().sum());
    }
    return out;
}

}  // namespace she
