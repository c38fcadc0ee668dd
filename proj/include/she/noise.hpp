#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "she/kernel.hpp"
#include "she/lattice.hpp"
#include "she/random.hpp"

namespace she {

// Spectral factorization of the periodized covariance on a lattice.
// amplitudes[m] = sqrt(l^{-d} f^(xi_m)) per half-spectrum mode, i.e. the root
// of the spectral mass (2 pi)^{-d} f^(xi_m) (2 pi / l)^d of the dual cell.
struct SpectralSynthesizer {
    Lattice lattice;
    CorrelationKernel kernel;
    Eigen::ArrayXd amplitudes;
    // Total spectral mass clipped from negative discretized values.
    double clipped_mass = 0;
    // True when every amplitude is equal (white noise); sampling then skips
    // the transforms, which would be the identity.
    bool flat = false;
};

SpectralSynthesizer plan(const CorrelationKernel& kernel, const Lattice& lattice);

// Average of f^ over the dual cell [-pi/l, pi/l]^d, the zero-mode value used
// for kernels whose spectral density diverges at the origin.
double zero_mode_average(const CorrelationKernel& kernel, const Lattice& lattice);

// Covariance of the synthesized field per unit time at a lattice offset:
// l^{-d} sum_k f^(xi_k) cos(xi_k . r), summed over all lattice modes.
double lattice_covariance(const SpectralSynthesizer& synth, const Eigen::Ref<const Eigen::ArrayXd>& offset);

// Increment of W over one time step, as a field of per-site values.
struct NoiseIncrement {
    double dt = 0;
    Eigen::ArrayXd values;
};

// Reusable sampler; one instance per thread.
class NoiseSampler {
public:
    explicit NoiseSampler(const SpectralSynthesizer& synth);

    // Increment for time step `step` of `stream`: i.i.d. normals per site
    // (tag 0), filtered by the amplitudes, scaled by sqrt(dt n^d).
    void sample(double dt, const RandomStream& stream, std::uint64_t step, Eigen::ArrayXd& out);

    const SpectralSynthesizer& synthesizer() const noexcept { return *synth_; }

private:
    const SpectralSynthesizer* synth_;
    SpectralTransform transform_;
    Eigen::ArrayXd multiplier_;
    Eigen::ArrayXcd modes_;
};

NoiseIncrement sample_increment(const SpectralSynthesizer& synth, double dt, const RandomStream& stream,
                                std::uint64_t step = 0);

struct CovarianceEstimate {
    std::vector<int> lags;
    Eigen::ArrayXd value;
    Eigen::ArrayXd standard_error;
};

// Translation-averaged sample covariance at offsets `lags` along axis 0, with
// the per-site ensemble mean removed and jackknife standard errors over
// samples.
CovarianceEstimate empirical_covariance(const std::vector<Eigen::ArrayXd>& samples, const Lattice& lattice,
                                        const std::vector<int>& lags);

}  // namespace she
