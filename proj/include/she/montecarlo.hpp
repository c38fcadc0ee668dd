#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "she/coefficient.hpp"
#include "she/kernel.hpp"
#include "she/series.hpp"
#include "she/solver.hpp"

namespace she {

struct PathModel {
    SolverConfig cfg;
    InitialData init;
    Coefficient b = Coefficient::constant(0);
    Coefficient sigma = Coefficient::constant(0);
    CorrelationKernel kernel = CorrelationKernel::white(1);
};

// Worker count: the explicit request, else SHE_WORKERS, else 1.
int resolve_workers(std::optional<int> requested = std::nullopt);

// Calls body(state, index) for every index in [0, n) over `workers` threads,
// each owning one state from make(). Results must be written by index; the
// first exception (lowest index) is rethrown after all workers stop.
template <class Make, class Body>
void for_each_path(std::int64_t n, int workers, Make make, Body body) {
    if (workers < 1) workers = 1;
    if (workers > n) workers = static_cast<int>(std::max<std::int64_t>(n, 1));
    std::atomic<std::int64_t> next{0};
    std::mutex m;
    std::int64_t failed_at = n;
    std::exception_ptr failure;
    auto run = [&] {
        try {
            auto state = make();
            for (std::int64_t i = next++; i < n; i = next++) {
                try {
                    body(state, i);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (i < failed_at) {
                        failed_at = i;
                        failure = std::current_exception();
                    }
                }
            }
        } catch (...) {
            std::lock_guard lock(m);
            if (!failure) failure = std::current_exception();
        }
    };
    if (workers == 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

struct ProbePlan {
    std::vector<double> times;
    std::vector<Eigen::Index> sites;
};

// Probe values of an ensemble; path j uses RandomStream(seed, j).
struct Ensemble {
    ProbePlan probes;
    Lattice lattice;
    // paths x (times * sites); NaN once the path has stopped early.
    Eigen::MatrixXd values;
    // paths x times; sup of |u| over [0, t] x box, NaN once stopped early.
    Eigen::MatrixXd running_sup;
    std::vector<PathStatus> status;
    std::vector<double> event_time;
    std::vector<std::uint64_t> checksum;

    Eigen::Index paths() const noexcept { return values.rows(); }
    Eigen::Index column(std::size_t time, std::size_t site) const noexcept {
        return static_cast<Eigen::Index>(time * probes.sites.size() + site);
    }
};

Ensemble run_ensemble(const PathModel& model, const ProbePlan& probes, std::int64_t n_paths, std::uint64_t seed,
                      int workers);

struct Interval {
    double estimate = 0;
    double standard_error = 0;
    double lo = 0;
    double hi = 0;
};

// Jackknife interval for the mean, normal quantile at `level`.
Interval jackknife_mean(const Eigen::Ref<const Eigen::ArrayXd>& y, double level = 0.95);
// Wilson score interval for k successes out of n.
Interval wilson_interval(std::int64_t k, std::int64_t n, double level = 0.95);

struct MomentEstimate {
    double t = 0;
    Eigen::Index site = 0;
    double x = 0;
    double y = 0;
    double p = 2;
    // (mean |u|^p)^{1/p}
    double value = 0;
    // CI of the p-th power mean mapped through ^{1/p}; NaN below 100 paths.
    double ci_lo = 0;
    double ci_hi = 0;
    std::int64_t used = 0;
    std::int64_t excluded = 0;
    // True for the sup over [0, t] x box instead of a point value.
    bool sup_statistic = false;

    bool has_ci() const noexcept { return used >= 100; }
    double upper() const noexcept { return has_ci() ? ci_hi : value; }
};

std::vector<MomentEstimate> estimate_moments(const Ensemble& e, double p);
std::vector<MomentEstimate> estimate_sup_moments(const Ensemble& e, double p);

enum class BoundPart { A, B, C };

std::string_view to_string(BoundPart part);

struct BoundVerdict {
    MomentEstimate estimate;
    // Moment order used in the bound (part C raises it to (2+d)/alpha).
    double bound_p = 2;
    double bound = 0;
    // bound / upper CI end.
    double margin = 0;
    bool pass = false;
};

struct BoundReport {
    BoundPart part = BoundPart::A;
    std::vector<BoundVerdict> verdicts;
    int violations = 0;
    std::string note;
};

// L_b, L_sigma (growth-rate constants over `radius`), tau, Upsilon_alpha and
// u0 data for a model.
MomentBoundInputs bound_inputs(const PathModel& model, double alpha, std::optional<double> constant = std::nullopt,
                               double radius = 1e6);

// Per-estimate verdict upper CI <= bound, with t, p, ||u0||_{L^p} and J_+ set
// per probe. Part C needs sup estimates and uses p' = max(p, (2+d)/alpha),
// since the p-norm is dominated by the p'-norm.
BoundReport check_bound(const std::vector<MomentEstimate>& estimates, const MomentBoundInputs& inputs, BoundPart part,
                        const InitialData& init);

// Smallest part-C constant (bisection on log C over [1e-8, 1e8]) for which
// every sup estimate passes; returns the lower end when all pass there.
double calibrate_constant(const std::vector<MomentEstimate>& sup_estimates, MomentBoundInputs inputs,
                          const InitialData& init);

struct SurvivalRow {
    double N = 0;
    std::int64_t hits = 0;
    double p_hat = 0;
    double standard_error = 0;
    double ci_lo = 0;
    double ci_hi = 0;
    // min(1, (bound_c / N)^p) with truncated growth constants; NaN when b(0) or sigma(0) is nonzero.
    double chebyshev_ref = 0;
    // p_hat <= ref + 3 stderr.
    bool consistent = true;
};

struct SurvivalReport {
    std::int64_t n_paths = 0;
    std::vector<SurvivalRow> rows;
    // tau_N <= tau_M on every path for consecutive levels.
    bool pathwise_monotone = true;
    // Largest |u_N - u_M| before tau_N over all paths and consecutive levels.
    double max_discrepancy = 0;
    std::int64_t steps_compared = 0;
};

struct ChebyshevPolicy {
    double alpha = 0.4;
    std::optional<double> constant;
};

SurvivalReport stopping_time_stats(const PathModel& model, const std::vector<double>& N_list, std::int64_t n_paths,
                                   std::uint64_t seed, int workers, const ChebyshevPolicy& policy = {});

struct BlowupRow {
    double horizon = 0;
    std::int64_t count = 0;
    double fraction = 0;
    double ci_lo = 0;
    double ci_hi = 0;
};

struct BlowupReport {
    std::int64_t n_paths = 0;
    std::vector<BlowupRow> rows;
};

// One run to the largest horizon per path; a path counts at horizon h when it
// exploded or hit truncation at a time <= h.
BlowupReport blowup_fraction(const PathModel& model, const std::vector<double>& horizons, std::int64_t n_paths,
                             std::uint64_t seed, int workers);

enum class HolderAxis { Space, Time };

std::string_view to_string(HolderAxis axis);

struct HolderPlan {
    HolderAxis axis = HolderAxis::Space;
    // Snapshot time; time lags are counted forward from it.
    double t0 = 0;
    // In cells (space) or steps (time).
    std::vector<int> lags;
    std::vector<Eigen::Index> anchors;
};

struct HolderEstimate {
    HolderAxis axis = HolderAxis::Space;
    // Median over anchors of the log-log slope.
    double exponent = 0;
    // Median regression standard error.
    double standard_error = 0;
    std::vector<double> lags;
    std::vector<double> slopes;
    // anchors x lags, ensemble mean of |u(. + h) - u(.)|.
    Eigen::MatrixXd structure;
    std::int64_t paths_used = 0;
};

// Slope of log structure vs log lag per anchor (row); needs >= 4 lags.
HolderEstimate holder_exponent(const std::vector<double>& lags, const Eigen::MatrixXd& structure);

// Ensemble mean of |u(x + lag dx) - u(x)| along axis 0 for field snapshots.
Eigen::MatrixXd spatial_structure(const std::vector<Eigen::ArrayXd>& fields, const Lattice& lattice,
                                  const std::vector<int>& lags, const std::vector<Eigen::Index>& anchors);

HolderEstimate holder_study(const PathModel& model, const HolderPlan& plan, std::int64_t n_paths, std::uint64_t seed,
                            int workers);

struct EnsembleReport {
    std::int64_t n_paths = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<MomentEstimate> moment_estimates;
    std::vector<BoundReport> bounds;
    std::optional<SurvivalReport> tau_survival;
    std::optional<BlowupReport> blowup;
    std::vector<HolderEstimate> holder_estimates;
    std::vector<std::string> warnings;
};

}  // namespace she
