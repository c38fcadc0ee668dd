#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "she/config.hpp"
#include "she/errors.hpp"
#include "she/montecarlo.hpp"
#include "she/runner.hpp"

using nlohmann::json;

namespace {

// Flag values destined for one config key; unset flags leave the file value.
struct Overrides {
    std::map<std::string, std::optional<double>> numbers;
    std::map<std::string, std::optional<std::string>> strings;
    std::map<std::string, std::vector<double>> lists;
    std::map<std::string, std::vector<int>> int_lists;
    std::map<std::string, std::vector<std::string>> string_lists;
    std::map<std::string, bool> flags;
    std::optional<std::int64_t> paths;
    std::optional<std::uint64_t> seed;
};

struct Command {
    CLI::App* app = nullptr;
    std::string experiment;
    std::string section;
    Overrides ov;
};

struct Common {
    std::string config;
    std::string out;
    std::optional<int> workers;
};

void add_common(CLI::App* app, Common& common, Overrides& ov) {
    app->add_option("--config", common.config, "JSON config file");
    app->add_option("--out", common.out, "output directory");
    app->add_option("--workers", common.workers, "worker threads (default SHE_WORKERS or 1)");
    app->add_option("--paths", ov.paths, "Monte Carlo paths");
    app->add_option("--seed", ov.seed, "random seed");
    app->add_option("--kernel", ov.strings["kernel"], "kernel spec");
}

void add_model(CLI::App* app, Overrides& ov) {
    app->add_option("--lattice", ov.strings["lattice"], "lattice spec");
    app->add_option("--b", ov.strings["b"], "drift coefficient spec");
    app->add_option("--sigma", ov.strings["sigma"], "diffusion coefficient spec");
    app->add_option("--initial", ov.strings["initial"], "initial data spec");
    app->add_option("--dt", ov.numbers["solver.dt"], "time step");
    app->add_option("--horizon", ov.numbers["solver.horizon"], "final time");
    app->add_option("--truncation", ov.numbers["solver.truncation"], "truncation level N");
}

json& at_path(json& root, const std::string& section, const std::string& key, bool spec = false) {
    const auto dot = key.find('.');
    if (dot != std::string::npos) return root[key.substr(0, dot)][key.substr(dot + 1)];
    if (spec && (key == "kernel" || key == "lattice" || key == "b" || key == "sigma" || key == "initial"))
        return root[key];
    return root[section][key];
}

json number(double v) {
    if (v == std::trunc(v) && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
    return v;
}

void apply(const Command& c, json& j) {
    const auto& ov = c.ov;
    for (const auto& [k, v] : ov.numbers)
        if (v) at_path(j, c.section, k) = number(*v);
    for (const auto& [k, v] : ov.strings)
        if (v) at_path(j, c.section, k, true) = *v;
    for (const auto& [k, v] : ov.lists)
        if (!v.empty()) at_path(j, c.section, k) = v;
    for (const auto& [k, v] : ov.int_lists)
        if (!v.empty()) at_path(j, c.section, k) = v;
    for (const auto& [k, v] : ov.string_lists)
        if (!v.empty()) at_path(j, c.section, k) = v;
    for (const auto& [k, v] : ov.flags)
        if (v) at_path(j, c.section, k) = true;
    if (ov.paths) j["paths"] = *ov.paths;
    if (ov.seed) j["seed"] = *ov.seed;
}

json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw she::IoError("cannot open config file '" + path + "'");
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw she::SpecError("config file '" + path + "' is not valid JSON: " + e.what(), e.byte);
    }
}

she::ExperimentConfig build_config(const Command* c, const std::string& config_path,
                                   const std::optional<json>& inputs) {
    json j = config_path.empty() ? json::object() : read_json(config_path);
    if (!j.is_object()) throw she::SpecError("config must be a JSON object");
    if (c) {
        if (j.contains("experiment") && j["experiment"] != c->experiment) {
            throw she::SpecError("config file is for experiment " + j["experiment"].dump() + ", not '" +
                                 c->experiment + "'");
        }
        j["experiment"] = c->experiment;
        if (inputs) j[c->section]["inputs"] = *inputs;
        apply(*c, j);
    }
    return she::parse_config(j);
}

int report_error(const std::exception& e) {
    std::cerr << "she: " << e.what() << "\n";
    return she::exit_code(e);
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty() && args.front() == "run") args.erase(args.begin());
    std::reverse(args.begin(), args.end());

    CLI::App app{"Stochastic heat equation experiments", "she"};
    app.require_subcommand(0, 1);
    Common common;
    app.add_option("--config", common.config, "JSON config file naming its experiment");
    app.add_option("--out", common.out, "output directory");
    app.add_option("--workers", common.workers, "worker threads");

    std::vector<std::unique_ptr<Command>> commands;
    auto command = [&](const std::string& name, const std::string& help) -> Command& {
        auto c = std::make_unique<Command>();
        c->experiment = name;
        c->section = name == "noise-check" ? "noise_check" : name;
        c->app = app.add_subcommand(name, help);
        add_common(c->app, common, c->ov);
        commands.push_back(std::move(c));
        return *commands.back();
    };

    {
        auto& c = command("dalang", "improved Dalang integral Upsilon_alpha");
        c.app->add_option("--alpha", c.ov.numbers["alpha"]);
        c.app->add_option("--beta", c.ov.numbers["beta"], "plain condition Upsilon(beta)");
        c.app->add_flag("--sweep", c.ov.flags["sweep"], "alpha sweep");
    }
    {
        auto& c = command("series", "convolution series H_{a,b}(t; gamma)");
        for (const char* k : {"a", "b", "gamma", "t", "tol", "alpha"})
            c.app->add_option(std::string("--") + k, c.ov.numbers[k]);
    }
    {
        auto& c = command("bounds", "moment bound evaluators");
        c.app->add_option("--part", c.ov.strings["part"], "a, b or c");
        c.app->add_option("--json", c.ov.strings["inputs_json"], "bound inputs as a JSON object");
    }
    {
        auto& c = command("classify", "growth classification and Osgood check");
        c.app->set_help_flag("--help", "print this help and exit");
        c.app->add_option("--b", c.ov.strings["b"]);
        c.app->add_option("--sigma", c.ov.strings["sigma"]);
        c.app->add_option("--alpha", c.ov.numbers["alpha"]);
        c.app->add_option("--osgood-c", c.ov.numbers["osgood_c"]);
        c.app->add_option("--h", c.ov.strings["h"]);
        c.app->add_option("--gamma", c.ov.numbers["gamma"]);
    }
    {
        auto& c = command("noise-check", "empirical noise covariance");
        c.app->add_option("--lattice", c.ov.strings["lattice"]);
        c.app->add_option("--draws", c.ov.numbers["draws"]);
        c.app->add_option("--dt", c.ov.numbers["dt"]);
        c.app->add_option("--max-lag", c.ov.numbers["max_lag"]);
    }
    {
        auto& c = command("simulate", "sample paths");
        add_model(c.app, c.ov);
        c.app->add_option("--history-points", c.ov.numbers["history_points"]);
        c.app->add_flag("--snapshots", c.ov.flags["snapshots"], "write final fields");
    }
    {
        auto& c = command("moments", "moment estimates and bound checks");
        add_model(c.app, c.ov);
        c.app->add_option("--p", c.ov.lists["p"]);
        c.app->add_option("--times", c.ov.lists["times"]);
        c.app->add_option("--x", c.ov.lists["x"]);
        c.app->add_option("--alpha", c.ov.numbers["alpha"]);
        c.app->add_option("--parts", c.ov.string_lists["parts"]);
        c.app->add_option("--constant", c.ov.numbers["constant"]);
        c.app->add_flag("--calibrate", c.ov.flags["calibrate"]);
    }
    {
        auto& c = command("stopping", "truncation stopping times");
        add_model(c.app, c.ov);
        c.app->add_option("--levels", c.ov.lists["levels"]);
        c.app->add_option("--alpha", c.ov.numbers["alpha"]);
        c.app->add_option("--constant", c.ov.numbers["constant"]);
    }
    {
        auto& c = command("blowup", "blow-up fractions");
        add_model(c.app, c.ov);
        c.app->add_option("--horizons", c.ov.lists["horizons"]);
    }
    {
        auto& c = command("holder", "structure-function Hoelder exponents");
        add_model(c.app, c.ov);
        c.app->add_option("--t0", c.ov.numbers["t0"]);
        c.app->add_option("--space-lags", c.ov.int_lists["space_lags"]);
        c.app->add_option("--time-lags", c.ov.int_lists["time_lags"]);
        c.app->add_option("--x", c.ov.lists["x"]);
    }
    auto* validate_cmd = app.add_subcommand("validate", "check a config without running it");
    std::string validate_path;
    validate_cmd->add_option("--config", validate_path, "JSON config file")->required();

    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (validate_cmd->parsed()) {
            const auto cfg = build_config(nullptr, validate_path, std::nullopt);
            int status = 0;
            for (const auto& d : she::validate(cfg)) {
                std::cout << (d.severity == she::Severity::Error ? "error: " : "warning: ") << d.message << "\n";
                if (d.severity == she::Severity::Error) status = 2;
            }
            return status;
        }

        Command* selected = nullptr;
        for (auto& c : commands)
            if (c->app->parsed()) selected = c.get();
        if (!selected && common.config.empty()) {
            std::cerr << app.help();
            return 2;
        }

        // --json carries the whole inputs object of the bounds experiment.
        std::optional<json> inputs;
        if (selected && selected->experiment == "bounds") {
            auto& s = selected->ov.strings["inputs_json"];
            if (s) {
                try {
                    inputs = json::parse(*s);
                } catch (const json::parse_error& e) {
                    throw she::SpecError(std::string("--json is not valid JSON: ") + e.what(), e.byte);
                }
                s.reset();
            }
        }
        const auto cfg = build_config(selected, common.config, inputs);

        she::RunOptions options;
        options.out = common.out;
        options.workers = she::resolve_workers(common.workers);
        const auto result = she::run(cfg, options);
        std::cout << result.text;
        for (const auto& w : result.report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
        return 0;
    } catch (const std::exception& e) {
        return report_error(e);
    }
}
