#pragma once

#include <functional>
#include <limits>
#include <optional>

#include "she/kernel.hpp"

namespace she {

// (2 pi)^{-d} \int_{lo <= |xi| <= hi} f^(xi) w(|xi|) dxi, reduced to a radial
// integral. Convergence at the origin and at infinity is decided from the
// power-law exponents of f^ and w, never from the quadrature itself.
struct SpectralIntegral {
    double value = 0;
    double error = 0;
    bool divergent = false;
};

struct RadialWeight {
    std::function<double(double)> w;
    // w(rho) ~ rho^tail_exponent as rho -> inf.
    double tail_exponent = 0;
    // w(rho) ~ rho^origin_exponent as rho -> 0.
    double origin_exponent = 0;
    // Radius beyond which w is negligible (< 1e-40 relative), or +inf.
    double cutoff = std::numeric_limits<double>::infinity();
};

SpectralIntegral spectral_integral(const CorrelationKernel& kernel, const RadialWeight& weight,
                                   double lo = 0.0, double hi = std::numeric_limits<double>::infinity(),
                                   double rel_tol = 1e-10);

struct DalangReport {
    CorrelationKernel kernel;
    double alpha = 0;   // 0 for the plain condition at a given beta
    double beta = 1;    // shift in beta + |xi|^2; 1 for the improved condition
    std::optional<double> value;  // nullopt when divergent
    double quadrature_error = 0;

    bool divergent() const noexcept { return !value.has_value(); }
};

// Upsilon(beta) = (2 pi)^{-d} \int f^(xi) / (beta + |xi|^2) dxi.
DalangReport upsilon(const CorrelationKernel& kernel, double beta);

// Upsilon_alpha = (2 pi)^{-d} \int f^(xi) / (1 + |xi|^2)^{1-alpha} dxi.
DalangReport upsilon_alpha(const CorrelationKernel& kernel, double alpha);

// sup{alpha in (0,1) : Upsilon_alpha < inf}, 0 if the set is empty. Decided by
// bisection on the tail-exponent convergence predicate.
double admissible_alpha_sup(const CorrelationKernel& kernel);

// Same, from the spectral tail exponent alone: f^(rho) ~ rho^tail_exponent.
double admissible_alpha_sup(double spectral_tail_exponent, int dim);

// C = (2 pi)^{-d} 2^{-alpha} max( \int_{|xi|<=1} f^, \int_{|xi|>1} f^ |xi|^{-2(1-alpha)} ).
double constant_C(const CorrelationKernel& kernel, double alpha);

}  // namespace she
