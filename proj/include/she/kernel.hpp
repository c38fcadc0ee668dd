#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "she/errors.hpp"

namespace she {

enum class KernelKind { White, Riesz, Gaussian, Exponential, Matern };

// Isotropic spatial correlation f of the noise together with its spectral
// density f^(xi) = \int f(x) exp(-i x.xi) dx. Immutable once built.
class CorrelationKernel {
public:
    static CorrelationKernel white(int dim);
    static CorrelationKernel riesz(double beta, int dim);
    static CorrelationKernel gaussian(double scale, int dim);
    static CorrelationKernel exponential(double scale, int dim);
    static CorrelationKernel matern(double nu, double scale, int dim);

    KernelKind kind() const noexcept { return kind_; }
    int dimension() const noexcept { return dim_; }
    double beta() const noexcept { return beta_; }
    double scale() const noexcept { return scale_; }
    double smoothness() const noexcept { return nu_; }

    // f as a function of |x|; nullopt when f has no pointwise value (white).
    std::optional<double> correlation_radial(double r) const;
    // f^ as a function of |xi|.
    double spectral_radial(double rho) const;

    // f^(rho) ~ rho^e as rho -> infinity (-infinity for super-polynomial decay).
    double spectral_tail_exponent() const noexcept;
    // f^(rho) ~ rho^e as rho -> 0.
    double spectral_origin_exponent() const noexcept;

    // c_{d,beta} in f^(xi) = c |xi|^{beta-d}; only meaningful for Riesz.
    double riesz_constant() const noexcept { return riesz_c_; }

    // Canonical text form, parseable by parse_kernel.
    std::string spec() const;

private:
    CorrelationKernel(KernelKind kind, int dim) : kind_(kind), dim_(dim) {}

    KernelKind kind_;
    int dim_;
    double beta_ = 0;
    double scale_ = 1;
    double nu_ = 0;
    double riesz_c_ = 0;
    double spectral_prefactor_ = 1;
};

// Numerically evaluates c_{d,beta} through the Gaussian-mixture
// representation |x|^{-beta} = Gamma(beta/2)^{-1} \int s^{beta/2-1} e^{-s|x|^2} ds.
double riesz_spectral_constant(double beta, int dim);

// |S^{d-1}|, the surface measure of the unit sphere in R^d.
double sphere_area(int dim);

std::optional<double> eval_correlation(const CorrelationKernel& kernel,
                                       const Eigen::Ref<const Eigen::VectorXd>& x);
double eval_spectral_density(const CorrelationKernel& kernel,
                             const Eigen::Ref<const Eigen::VectorXd>& xi);

// p_t(x) = (2 pi t)^{-d/2} exp(-|x|^2 / 2t).
template <typename Derived>
typename Derived::Scalar heat_kernel(typename Derived::Scalar t, const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    if (!(t > Scalar(0))) throw HypothesisError("heat_kernel: time must be positive");
    const auto d = static_cast<Scalar>(x.size());
    return std::pow(Scalar(2) * std::numbers::pi_v<Scalar> * t, -d / 2) *
           std::exp(-x.squaredNorm() / (Scalar(2) * t));
}

// Grammar: `white`, `riesz:beta=<r>`, `gaussian:scale=<r>`, `exp:scale=<r>`,
// `matern:nu=<r>,scale=<r>`, each optionally followed by `,dim=<d>` (default 1).
CorrelationKernel parse_kernel(std::string_view text);

}  // namespace she
