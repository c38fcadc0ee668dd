#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "she/coefficient.hpp"
#include "she/lattice.hpp"
#include "she/noise.hpp"
#include "she/random.hpp"

namespace she {

struct SolverConfig {
    Lattice lattice;
    double dt = 1e-3;
    double horizon = 1;
    std::optional<double> truncation_level;
    double blowup_threshold = 1e12;
    // Truncated runs end at tau_N unless this is false.
    bool stop_at_truncation = true;

    void validate() const;
    std::int64_t steps() const;
};

enum class InitialKind { Zero, GaussianBump, CompactBump, PointMass };

// u0 on R^d, centred at the origin.
//   GaussianBump  amplitude exp(-|x|^2 / (2 width^2))
//   CompactBump   amplitude (1 - |x|^2 / width^2)_+^2
//   PointMass     amplitude * delta_0, outside L^infty (rough data only)
struct InitialData {
    InitialKind kind = InitialKind::Zero;
    double amplitude = 0;
    double width = 1;

    static InitialData zero() { return {}; }
    static InitialData gaussian_bump(double amplitude, double width);
    static InitialData compact_bump(double amplitude, double radius);
    static InitialData point_mass(double mass);

    Eigen::ArrayXd sample(const Lattice& lattice) const;
    double sup_norm() const;
    double lp_norm(double p, int dim) const;
    // (p_t * |u0|)(x); exact for every kind.
    double heat_smoothed(double t, double r, int dim) const;
    // Radius outside which u0 is negligible (below 1e-12 of its peak).
    double support_radius() const;
    bool bounded() const noexcept { return kind != InitialKind::PointMass; }

    std::string spec() const;
};

// `zero`, `gaussian:amp=<r>,width=<r>`, `bump:amp=<r>,radius=<r>`, `point:mass=<r>`.
InitialData parse_initial_data(std::string_view text);

// Advisory checks: dt <= dx^2/2 and box extent > 8 sqrt(T) + support radius.
std::vector<std::string> solver_warnings(const SolverConfig& cfg, const InitialData& init);

enum class PathStatus { Running, HitTruncation, Exploded, Completed };

std::string_view to_string(PathStatus s);

struct SupSample {
    double t;
    double sup;
};

struct PathState {
    Eigen::ArrayXd u;
    double t = 0;
    std::int64_t step = 0;
    std::vector<SupSample> sup_history;
    PathStatus status = PathStatus::Running;
    // tau_N for HitTruncation, the explosion time for Exploded.
    double event_time = std::numeric_limits<double>::quiet_NaN();
};

// e^{(dt/2) Delta} u through the spectral multiplier exp(-dt |xi|^2 / 2).
Eigen::ArrayXd heat_semigroup_step(const Eigen::ArrayXd& u, double dt, const Lattice& lattice);
// exp(-dt |xi|^2 / 2) per half-spectrum mode.
Eigen::ArrayXd heat_multiplier(const Lattice& lattice, double dt);

// Drift and diffusion as applied on the lattice, truncated at N when set.
class FieldCoefficients {
public:
    FieldCoefficients(Coefficient b, Coefficient sigma, std::optional<double> N = std::nullopt);

    void drift(const Eigen::ArrayXd& u, Eigen::ArrayXd& out) const;
    void diffusion(const Eigen::ArrayXd& u, Eigen::ArrayXd& out) const;
    bool drift_is_zero() const noexcept { return b_zero_; }
    bool diffusion_is_zero() const noexcept { return s_zero_; }
    const Coefficient& b() const noexcept { return b_; }
    const Coefficient& sigma() const noexcept { return sigma_; }
    std::optional<double> truncation() const noexcept { return N_; }

private:
    Coefficient b_;
    Coefficient sigma_;
    std::optional<double> N_;
    bool b_zero_;
    bool s_zero_;
};

// Per-thread scratch for stepping one lattice.
class SolverWorkspace {
public:
    SolverWorkspace(const SolverConfig& cfg, const SpectralSynthesizer& synth);

    NoiseSampler& sampler() noexcept { return sampler_; }
    SpectralTransform& transform() noexcept { return transform_; }
    const Eigen::ArrayXd& multiplier() const noexcept { return multiplier_; }

    Eigen::ArrayXd noise;
    Eigen::ArrayXd drift;
    Eigen::ArrayXd diffusion;

private:
    SpectralTransform transform_;
    NoiseSampler sampler_;
    Eigen::ArrayXd multiplier_;
};

PathState initial_state(const SolverConfig& cfg, const InitialData& init);

// Checks the stopping rules at the current time; returns true when the path stops.
bool check_stopping(PathState& state, const SolverConfig& cfg);

// One exponential-Euler step u <- S_dt[u + dt b(u) + sigma(u) dW] with the
// Ito (left-point) coupling; dW must have been drawn for dt.
void step(PathState& state, const FieldCoefficients& coef, const Eigen::ArrayXd& dW, const SolverConfig& cfg,
          SolverWorkspace& ws);

using StepObserver = std::function<void(const PathState&)>;

// Runs one path to the horizon or its stopping time. The observer, if set,
// sees the initial state and the state after every step.
PathState solve_path(const SolverConfig& cfg, const InitialData& init, const Coefficient& b, const Coefficient& sigma,
                     const SpectralSynthesizer& synth, const RandomStream& stream, const StepObserver& observer = {});
PathState solve_path(const SolverConfig& cfg, const InitialData& init, const FieldCoefficients& coef,
                     SolverWorkspace& ws, const RandomStream& stream, const StepObserver& observer = {});

struct TruncationAgreement {
    double N = 0;
    double M = 0;
    // max |u_N - u_M| over grid times t < tau_N.
    double max_discrepancy = 0;
    std::int64_t steps_compared = 0;
    PathStatus status_N = PathStatus::Running;
    PathStatus status_M = PathStatus::Running;
    // Stopping times; +infinity when the level was not reached before the horizon.
    double tau_N = std::numeric_limits<double>::infinity();
    double tau_M = std::numeric_limits<double>::infinity();
};

// Runs u_N and u_M on the same noise realization in lockstep.
TruncationAgreement solve_truncated_pair(const SolverConfig& cfg, const InitialData& init, const Coefficient& b,
                                         const Coefficient& sigma, double N, double M, const SpectralSynthesizer& synth,
                                         const RandomStream& stream);

struct TruncationLevel {
    double N;
    PathStatus status;
    // +infinity when the level was not reached before the horizon.
    double tau;
};

struct TruncationLadder {
    std::vector<TruncationLevel> levels;
    // Between levels i and i+1, over grid times t < tau of level i.
    std::vector<double> max_discrepancy;
    std::vector<std::int64_t> steps_compared;
};

// Runs one truncated solution per level (nondecreasing) in lockstep on a
// shared noise realization.
TruncationLadder solve_truncation_ladder(const SolverConfig& cfg, const InitialData& init, const Coefficient& b,
                                         const Coefficient& sigma, const std::vector<double>& levels,
                                         SolverWorkspace& ws, const RandomStream& stream);

// FNV-1a 64 over the bytes of the field.
std::uint64_t field_checksum(const Eigen::ArrayXd& u);

// Binary snapshot: 32-byte header (magic "SHEFIELD", u32 d, u32 n0, u32 n1,
// u32 reserved, f64 t) followed by the row-major float64 field.
void write_snapshot(const std::string& path, const Lattice& lattice, const Eigen::ArrayXd& u, double t);
struct Snapshot {
    Lattice lattice;
    Eigen::ArrayXd u;
    double t;
};
Snapshot read_snapshot(const std::string& path);

}  // namespace she
