#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "she/series.hpp"

namespace she {

enum class ExperimentKind { Dalang, Series, Bounds, Classify, NoiseCheck, Simulate, Moments, Stopping, Blowup, Holder };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment(std::string_view text);

struct SolverParams {
    double dt = 1e-3;
    double horizon = 1;
    std::optional<double> truncation;
    double blowup_threshold = 1e12;
};

struct DalangRun {
    double alpha = 0.25;
    // Plain condition at this beta instead of the improved one.
    std::optional<double> beta;
    bool sweep = false;
};

struct SeriesRun {
    double a = 0;
    double b = 0;
    double gamma = 1;
    double t = 1;
    double tol = 1e-8;
    double alpha = 0.25;
};

struct BoundsRun {
    std::string part = "a";
    MomentBoundInputs inputs;
    // tau from compute_tau when absent.
    bool tau_given = false;
};

struct ClassifyRun {
    double alpha = 0.25;
    double osgood_c = 1;
    std::optional<std::string> h;
    std::optional<double> gamma;
};

struct NoiseCheckRun {
    std::int64_t draws = 10000;
    double dt = 1;
    int max_lag = 16;
};

struct SimulateRun {
    int history_points = 64;
    bool snapshots = false;
};

struct MomentsRun {
    std::vector<double> p{2};
    std::vector<double> times;
    std::vector<double> x{0};
    double alpha = 0.25;
    std::vector<std::string> parts{"a"};
    std::optional<double> constant;
    bool calibrate = false;
};

struct StoppingRun {
    std::vector<double> levels;
    double alpha = 0.4;
    std::optional<double> constant;
};

struct BlowupRun {
    std::vector<double> horizons;
};

struct HolderRun {
    double t0 = 0;
    std::vector<int> space_lags;
    std::vector<int> time_lags;
    std::vector<double> x{0};
};

// One experiment. Spec strings are kept verbatim and parsed by the owning
// modules; only the section of the selected experiment is serialized.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Dalang;
    std::string kernel = "white:dim=1";
    std::optional<std::string> lattice;
    std::optional<std::string> b;
    std::optional<std::string> sigma;
    std::optional<std::string> initial;
    std::optional<SolverParams> solver;
    std::int64_t paths = 1000;
    std::uint64_t seed = 0;

    DalangRun dalang;
    SeriesRun series;
    BoundsRun bounds;
    ClassifyRun classify;
    NoiseCheckRun noise_check;
    SimulateRun simulate;
    MomentsRun moments;
    StoppingRun stopping;
    BlowupRun blowup;
    HolderRun holder;
};

// Strict: unknown keys and wrong types raise SpecError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
MomentBoundInputs parse_bound_inputs(const nlohmann::json& j, bool* tau_given = nullptr);

// Canonical form: every field with defaults filled in, keys sorted.
nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const MomentBoundInputs& in);

// FNV-1a 64 of the canonical dump, 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);
std::uint64_t fnv1a(std::string_view bytes);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace she
