#pragma once

#include <Eigen/Core>
#include <optional>

#include "she/kernel.hpp"

namespace she {

// Parameters (a, b, gamma) of the convolution series built on
// k_{a,b}(t) = a k_{1,0}(t) + b t.
struct SeriesParams {
    double a = 0;
    double b = 0;
    double gamma = 0;
    CorrelationKernel kernel = CorrelationKernel::white(1);

    void validate() const;
};

// k_{1,0}(t) = (2 pi)^{-d} \int f^(xi) exp(-t |xi|^2 / 2) dxi.
double k10(const CorrelationKernel& kernel, double t);
double k_ab(const SeriesParams& params, double t);

// Exact cell integrals of k_{a,b} on a uniform grid of spacing dt:
//   zeroth[m] = \int_{m dt}^{(m+1) dt} k(s) ds,
//   first[m]  = \int_{m dt}^{(m+1) dt} k(s) (s - m dt) / dt ds.
// Integrating per cell removes the t^{-theta} singularity of k_{1,0} at 0.
struct CellMoments {
    Eigen::ArrayXd zeroth;
    Eigen::ArrayXd first;
};
CellMoments kernel_cell_moments(const SeriesParams& params, double dt, Eigen::Index cells);

// One step of h_n(t) = \int_0^t h_{n-1}(s) k(t-s) ds on the uniform grid, with
// h_{n-1} interpolated linearly on each cell (product trapezoid rule).
Eigen::ArrayXd convolve_step(const CellMoments& moments, const Eigen::ArrayXd& previous);

// h_n^{a,b} on `time_grid`, which must start at 0 and be uniform.
Eigen::ArrayXd h_n(const SeriesParams& params, int n, const Eigen::Ref<const Eigen::VectorXd>& time_grid);

struct SeriesValue {
    double value = 1;
    int terms_used = 1;
    bool converged = true;
};

struct SeriesOptions {
    // Cells of the fine grid on [0, t]; a half-resolution pass is combined
    // with it by Richardson extrapolation.
    Eigen::Index cells = 2048;
    // Terms allowed before the term ratio must have dropped below 1. Once the
    // ratio is below 1 summation continues, up to 10 * max_terms, until the
    // tail bound meets the tolerance.
    int max_terms = 200;
};

// H_{a,b}(t; gamma) = sum_n gamma^n h_n(t), truncated once the geometric tail
// bound of the remaining terms drops below tol * max(1, partial sum).
SeriesValue H_series(const SeriesParams& params, double t, double tol, const SeriesOptions& options = {});

struct GrowthRate {
    double value = 0;
    bool unbounded = false;
};

// inf{beta > 0 : 2 a Upsilon(2 beta) + b / beta^2 < 1 / gamma}.
GrowthRate growth_rate_laplace(const SeriesParams& params);

// max(2^{3/alpha} (a C gamma)^{1/alpha}, sqrt(2 b gamma)).
double growth_rate_closed(double a, double b, double gamma, double C, double alpha);

// z_p <= 2 sqrt(p), used for every p >= 2.
struct BdgConstant {
    double p;
    double z_p_bound;
    static BdgConstant of(double p);
};

struct MomentBoundInputs {
    double L_b = 0;
    double L_sigma = 0;
    double b0_abs = 0;
    double sigma0_abs = 0;
    double tau = 0;
    double p = 2;
    double alpha = 0.25;
    double upsilon_alpha = 1;
    double u0_sup = 0;
    double u0_Lp = 0;
    double J_plus = 0;
    double t = 1;
    int dim = 1;
    // Constant of the rough-data and uniform bounds; defaults to the explicit
    // constant of the bounded-data bound.
    std::optional<double> constant;
};

// tau = |b(0)|/L_b v |sigma(0)|/L_sigma; a 0/0 ratio is dropped and a
// nonzero numerator over a zero rate is rejected.
double compute_tau(double b0_abs, double L_b, double sigma0_abs, double L_sigma);

// max(4, 2^{6/alpha - 1} Upsilon_alpha^{1/alpha}).
double bounded_data_constant(double alpha, double upsilon_alpha);

// max(p^{1/alpha} L_sigma^{2/alpha}, L_b).
double moment_rate(const MomentBoundInputs& in);

double moment_bound_a(const MomentBoundInputs& in);
double moment_bound_b(const MomentBoundInputs& in);
double moment_bound_c(const MomentBoundInputs& in);

}  // namespace she
