#pragma once

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "she/config.hpp"
#include "she/montecarlo.hpp"

namespace she {

enum class Severity { Error, Warning };

struct Diagnostic {
    Severity severity;
    std::string message;
};

// Cross-module consistency checks without running anything.
std::vector<Diagnostic> validate(const ExperimentConfig& cfg);

// Lattice, solver, initial data, coefficients and kernel of a simulation config.
PathModel make_model(const ExperimentConfig& cfg);

// Site nearest to (x, 0).
Eigen::Index site_at(const Lattice& lattice, double x);

struct RunOptions {
    // Empty selects default_out_dir.
    std::filesystem::path out;
    int workers = 1;
};

struct RunOutput {
    nlohmann::json report;
    std::filesystem::path out;
    // Text for standard output: the report, or CSV for noise-check.
    std::string text;
};

// Writes manifest.json, runs the experiment, then writes its artifacts.
// Throws SpecError / HypothesisError / IoError.
RunOutput run(const ExperimentConfig& cfg, const RunOptions& options);

// 0 success, 2 spec or hypothesis error, 3 I/O error, 1 anything else.
int exit_code(const std::exception& e);

std::filesystem::path default_out_dir(const ExperimentConfig& cfg);
std::string version_string();

nlohmann::json to_json(const EnsembleReport& r);

}  // namespace she
