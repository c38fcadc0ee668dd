#include "she/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "she/coefficient.hpp"
#include "she/dalang.hpp"
#include "she/errors.hpp"
#include "she/kernel.hpp"
#include "she/lattice.hpp"
#include "she/noise.hpp"
#include "she/random.hpp"
#include "she/series.hpp"
#include "she/solver.hpp"

#ifndef SHE_VERSION
#define SHE_VERSION "0.1.0"
#endif

namespace she {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_simulation(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Simulate:
        case ExperimentKind::Moments:
        case ExperimentKind::Stopping:
        case ExperimentKind::Blowup:
        case ExperimentKind::Holder:
            return true;
        default:
            return false;
    }
}

bool on_grid(double t, double dt) {
    const double k = std::round(t / dt);
    return std::abs(k * dt - t) <= 1e-9 * std::max(1.0, std::abs(t));
}

bool vanishes_at_zero(const Coefficient& g) { return g(0.0) == 0.0; }

SolverConfig solver_config(const ExperimentConfig& cfg) {
    SolverConfig s;
    s.lattice = parse_lattice(*cfg.lattice);
    const SolverParams p = cfg.solver.value_or(SolverParams{});
    s.dt = p.dt;
    s.horizon = p.horizon;
    s.truncation_level = p.truncation;
    s.blowup_threshold = p.blowup_threshold;
    return s;
}

json hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

// NaN becomes null; infinities are kept as strings so vacuous bounds stay visible.
json nullable(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json to_json(const MomentEstimate& m) {
    return {{"t", m.t},         {"x", m.x},
            {"y", m.y},         {"p", m.p},
            {"site", m.site},   {"value", nullable(m.value)},
            {"ci_lo", nullable(m.ci_lo)}, {"ci_hi", nullable(m.ci_hi)},
            {"used", m.used},   {"excluded", m.excluded},
            {"statistic", m.sup_statistic ? "sup" : "point"}};
}

json to_json(const BoundReport& r) {
    json verdicts = json::array();
    for (const auto& v : r.verdicts) {
        verdicts.push_back({{"estimate", to_json(v.estimate)},
                            {"bound_p", v.bound_p},
                            {"bound", nullable(v.bound)},
                            {"margin", nullable(v.margin)},
                            {"pass", v.pass}});
    }
    return {{"part", to_string(r.part)}, {"verdicts", verdicts}, {"violations", r.violations}, {"note", r.note}};
}

json to_json(const SurvivalReport& s) {
    json rows = json::array();
    for (const auto& r : s.rows) {
        rows.push_back({{"N", r.N},
                        {"hits", r.hits},
                        {"p_hat", r.p_hat},
                        {"standard_error", r.standard_error},
                        {"ci_lo", r.ci_lo},
                        {"ci_hi", r.ci_hi},
                        {"chebyshev_ref", nullable(r.chebyshev_ref)},
                        {"consistent", r.consistent}});
    }
    return {{"n_paths", s.n_paths},
            {"rows", rows},
            {"pathwise_monotone", s.pathwise_monotone},
            {"max_discrepancy", s.max_discrepancy},
            {"steps_compared", s.steps_compared}};
}

json to_json(const BlowupReport& b) {
    json rows = json::array();
    for (const auto& r : b.rows) {
        rows.push_back({{"horizon", r.horizon},
                        {"count", r.count},
                        {"fraction", r.fraction},
                        {"ci_lo", r.ci_lo},
                        {"ci_hi", r.ci_hi}});
    }
    return {{"n_paths", b.n_paths}, {"rows", rows}};
}

json to_json(const HolderEstimate& h) {
    json structure = json::array();
    for (Eigen::Index i = 0; i < h.structure.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < h.structure.cols(); ++j) row.push_back(nullable(h.structure(i, j)));
        structure.push_back(row);
    }
    return {{"axis", to_string(h.axis)},
            {"exponent", nullable(h.exponent)},
            {"standard_error", nullable(h.standard_error)},
            {"lags", h.lags},
            {"slopes", h.slopes},
            {"structure", structure},
            {"paths_used", h.paths_used}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string csv_number(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::vector<Eigen::Index> sites_for(const Lattice& lattice, const std::vector<double>& xs) {
    std::vector<Eigen::Index> sites;
    for (double x : xs) sites.push_back(site_at(lattice, x));
    return sites;
}

struct Context {
    const ExperimentConfig& cfg;
    const RunOptions& options;
    fs::path out;
    std::string hash;
    std::vector<std::string> warnings;
};

json run_dalang(Context& c) {
    const auto kernel = parse_kernel(c.cfg.kernel);
    const auto& d = c.cfg.dalang;
    const auto report = d.beta ? upsilon(kernel, *d.beta) : upsilon_alpha(kernel, d.alpha);
    json r{{"kernel", kernel.spec()},
           {"admissible_alpha_sup", admissible_alpha_sup(kernel)},
           {"value", report.divergent() ? json("divergent") : json(*report.value)},
           {"error_estimate", report.quadrature_error}};
    if (d.beta) {
        r["condition"] = "plain";
        r["beta"] = *d.beta;
    } else {
        r["condition"] = "improved";
        r["alpha"] = d.alpha;
    }
    if (d.sweep) {
        json sweep = json::array();
        for (int k = 1; k < 20; ++k) {
            const double a = k / 20.0;
            const auto s = upsilon_alpha(kernel, a);
            sweep.push_back({{"alpha", a}, {"value", s.divergent() ? json("divergent") : json(*s.value)}});
        }
        r["sweep"] = sweep;
    }
    return r;
}

json run_series(Context& c) {
    const auto& s = c.cfg.series;
    SeriesParams params{s.a, s.b, s.gamma, parse_kernel(c.cfg.kernel)};
    params.validate();
    const auto h = H_series(params, s.t, s.tol);
    json r{{"a", s.a},         {"b", s.b},
           {"gamma", s.gamma}, {"t", s.t},
           {"kernel", params.kernel.spec()},
           {"value", nullable(h.value)}, {"terms_used", h.terms_used},
           {"converged", h.converged}};
    if (!h.converged) c.warnings.push_back("series did not reach the requested tolerance");
    if (s.gamma > 0) {
        const auto g = growth_rate_laplace(params);
        r["growth_rate_laplace"] = g.unbounded ? json("unbounded") : json(g.value);
    } else {
        r["growth_rate_laplace"] = nullptr;
    }
    if (s.alpha > 0 && s.alpha < admissible_alpha_sup(params.kernel)) {
        const double C = constant_C(params.kernel, s.alpha);
        r["constant_C"] = C;
        r["growth_rate_closed"] = growth_rate_closed(s.a, s.b, s.gamma, C, s.alpha);
    } else {
        r["constant_C"] = nullptr;
        r["growth_rate_closed"] = nullptr;
    }
    r["alpha"] = s.alpha;
    return r;
}

json run_bounds(Context& c) {
    auto in = c.cfg.bounds.inputs;
    if (!c.cfg.bounds.tau_given) in.tau = compute_tau(in.b0_abs, in.L_b, in.sigma0_abs, in.L_sigma);
    const auto& part = c.cfg.bounds.part;
    const double value = part == "a" ? moment_bound_a(in) : part == "b" ? moment_bound_b(in) : moment_bound_c(in);
    return {{"part", part}, {"value", nullable(value)}, {"inputs", to_json(in)}};
}

json run_classify(Context& c) {
    const auto& k = c.cfg.classify;
    const auto b = parse_coefficient(*c.cfg.b);
    const auto sigma = parse_coefficient(*c.cfg.sigma);
    const auto ratios = growth_ratios(b, sigma, k.alpha);
    json r{{"b", b.spec()},
           {"sigma", sigma.spec()},
           {"alpha", k.alpha},
           {"growth_class", to_string(classify_growth(b, sigma, k.alpha))},
           {"ratios",
            {{"z", std::vector<double>(ratios.z.begin(), ratios.z.end())},
             {"drift", std::vector<double>(ratios.drift.begin(), ratios.drift.end())},
             {"diffusion", std::vector<double>(ratios.diffusion.begin(), ratios.diffusion.end())}}}};
    try {
        const auto o = osgood_check(b, k.osgood_c);
        r["osgood"] = {{"verdict", to_string(o.verdict)},
                       {"c", k.osgood_c},
                       {"integral", o.integral ? json(*o.integral) : json(nullptr)}};
    } catch (const HypothesisError& e) {
        r["osgood"] = {{"verdict", nullptr}, {"c", k.osgood_c}, {"reason", e.what()}};
    }
    if (k.h) {
        const auto h = parse_coefficient(*k.h);
        r["salins"] = {{"h", h.spec()}, {"gamma", *k.gamma}, {"holds", salins_check(b, sigma, h, *k.gamma)}};
    }
    return r;
}

json run_noise_check(Context& c, std::string& text) {
    const auto& n = c.cfg.noise_check;
    const auto kernel = parse_kernel(c.cfg.kernel);
    const auto lattice = parse_lattice(*c.cfg.lattice);
    const auto synth = plan(kernel, lattice);
    NoiseSampler sampler(synth);
    const RandomStream stream(c.cfg.seed, 0);
    std::vector<Eigen::ArrayXd> samples(static_cast<std::size_t>(n.draws));
    for (std::int64_t i = 0; i < n.draws; ++i) {
        sampler.sample(n.dt, stream, static_cast<std::uint64_t>(i), samples[static_cast<std::size_t>(i)]);
    }
    std::vector<int> lags;
    for (int l = 0; l <= n.max_lag; ++l) lags.push_back(l);
    const auto est = empirical_covariance(samples, lattice, lags);

    std::string csv = "lag,empirical_cov,expected,stderr\n";
    json rows = json::array();
    double max_z = 0;
    for (std::size_t i = 0; i < lags.size(); ++i) {
        Eigen::ArrayXd offset = Eigen::ArrayXd::Zero(lattice.dim);
        offset(0) = lags[i] * lattice.spacing(0);
        const double expected = lattice_covariance(synth, offset);
        const double value = est.value(static_cast<Eigen::Index>(i)) / n.dt;
        const double se = est.standard_error(static_cast<Eigen::Index>(i)) / n.dt;
        const double z = se > 0 ? std::abs(value - expected) / se : 0.0;
        max_z = std::max(max_z, z);
        csv += std::to_string(lags[i]) + "," + format_double(value) + "," + format_double(expected) + "," +
               format_double(se) + "\n";
        rows.push_back({{"lag", lags[i]}, {"empirical_cov", value}, {"expected", expected}, {"stderr", se}});
    }
    write_text(c.out / "noise.csv", csv);
    text = csv;
    return {{"kernel", kernel.spec()},
            {"lattice", lattice.spec()},
            {"draws", n.draws},
            {"dt", n.dt},
            {"clipped_mass", synth.clipped_mass},
            {"max_abs_z", max_z},
            {"rows", rows}};
}

json run_simulate(Context& c, const PathModel& model) {
    const auto& s = c.cfg.simulate;
    const auto synth = plan(model.kernel, model.cfg.lattice);
    const FieldCoefficients coef(model.b, model.sigma, model.cfg.truncation_level);
    const auto n = c.cfg.paths;
    std::vector<std::string> lines(static_cast<std::size_t>(n));
    std::vector<PathStatus> status(static_cast<std::size_t>(n));
    if (s.snapshots) fs::create_directories(c.out / "snapshots");

    struct Worker {
        SolverWorkspace ws;
    };
    for_each_path(
        n, c.options.workers, [&] { return Worker{SolverWorkspace(model.cfg, synth)}; },
        [&](Worker& w, std::int64_t j) {
            const RandomStream stream(c.cfg.seed, static_cast<std::uint64_t>(j));
            auto state = solve_path(model.cfg, model.init, coef, w.ws, stream, nullptr);
            const auto& hist = state.sup_history;
            json history = json::array();
            const auto m = hist.size();
            const auto k = std::min<std::size_t>(m, static_cast<std::size_t>(std::max(s.history_points, 2)));
            std::size_t last = m;
            for (std::size_t i = 0; i < k && m > 0; ++i) {
                const std::size_t idx = k == 1 ? 0 : static_cast<std::size_t>(std::llround(
                                                          static_cast<double>(i) * (m - 1) / (k - 1)));
                if (idx == last) continue;
                last = idx;
                history.push_back({hist[idx].t, nullable(hist[idx].sup)});
            }
            const double tau = state.event_time;
            json rec{{"path_id", j},
                     {"status", to_string(state.status)},
                     {"tau", std::isfinite(tau) ? json(tau) : json(nullptr)},
                     {"t_final", state.t},
                     {"sup_history", history},
                     {"final_field_checksum", hex(field_checksum(state.u))}};
            lines[static_cast<std::size_t>(j)] = rec.dump();
            status[static_cast<std::size_t>(j)] = state.status;
            if (s.snapshots) {
                write_snapshot((c.out / "snapshots" / ("path_" + std::to_string(j) + ".bin")).string(),
                               model.cfg.lattice, state.u, state.t);
            }
        });

    std::string jsonl;
    for (const auto& l : lines) jsonl += l + "\n";
    write_text(c.out / "paths.jsonl", jsonl);
    json counts = json::object();
    for (auto st : {PathStatus::Completed, PathStatus::HitTruncation, PathStatus::Exploded, PathStatus::Running}) {
        counts[std::string(to_string(st))] = std::count(status.begin(), status.end(), st);
    }
    return {{"n_paths", n}, {"seed", c.cfg.seed}, {"config_hash", c.hash}, {"status_counts", counts}};
}

BoundPart parse_part(const std::string& s) {
    if (s == "a") return BoundPart::A;
    if (s == "b") return BoundPart::B;
    if (s == "c") return BoundPart::C;
    throw SpecError("unknown bound part '" + s + "'");
}

EnsembleReport base_report(const Context& c) {
    EnsembleReport r;
    r.n_paths = c.cfg.paths;
    r.seed = c.cfg.seed;
    r.config_hash = c.hash;
    return r;
}

json run_moments(Context& c, const PathModel& model) {
    const auto& m = c.cfg.moments;
    ProbePlan probes{m.times, sites_for(model.cfg.lattice, m.x)};
    const auto e = run_ensemble(model, probes, c.cfg.paths, c.cfg.seed, c.options.workers);
    auto report = base_report(c);

    std::vector<MomentEstimate> sup_estimates;
    for (double p : m.p) {
        auto est = estimate_moments(e, p);
        report.moment_estimates.insert(report.moment_estimates.end(), est.begin(), est.end());
    }
    const bool needs_sup = std::find(m.parts.begin(), m.parts.end(), "c") != m.parts.end() || m.calibrate;
    if (needs_sup) {
        for (double p : m.p) {
            auto est = estimate_sup_moments(e, p);
            sup_estimates.insert(sup_estimates.end(), est.begin(), est.end());
        }
    }

    std::optional<double> calibrated;
    if (!m.parts.empty() || m.calibrate) {
        auto inputs = bound_inputs(model, m.alpha, m.constant);
        if (m.calibrate) {
            calibrated = calibrate_constant(sup_estimates, inputs, model.init);
            inputs.constant = calibrated;
        }
        for (const auto& part : m.parts) {
            const auto bp = parse_part(part);
            report.bounds.push_back(
                check_bound(bp == BoundPart::C ? sup_estimates : report.moment_estimates, inputs, bp, model.init));
        }
    }
    if (needs_sup) {
        report.moment_estimates.insert(report.moment_estimates.end(), sup_estimates.begin(), sup_estimates.end());
    }

    std::string csv = "t,x,p,statistic,value,ci_lo,ci_hi,used,excluded,bound,margin,pass,part\n";
    auto row = [&](const MomentEstimate& est, const BoundVerdict* v, const std::string& part) {
        csv += format_double(est.t) + "," + format_double(est.x) + "," + format_double(est.p) + "," +
               (est.sup_statistic ? "sup" : "point") + "," + csv_number(est.value) + "," + csv_number(est.ci_lo) +
               "," + csv_number(est.ci_hi) + "," + std::to_string(est.used) + "," + std::to_string(est.excluded) +
               "," + (v ? csv_number(v->bound) : "") + "," + (v ? csv_number(v->margin) : "") + "," +
               (v ? (v->pass ? "true" : "false") : "") + "," + part + "\n";
    };
    if (report.bounds.empty()) {
        for (const auto& est : report.moment_estimates) row(est, nullptr, "");
    } else {
        for (const auto& b : report.bounds) {
            for (const auto& v : b.verdicts) row(v.estimate, &v, std::string(to_string(b.part)));
        }
    }
    write_text(c.out / "moments.csv", csv);
    report.warnings = c.warnings;
    auto j = to_json(report);
    if (calibrated) j["calibrated_constant"] = *calibrated;
    return j;
}

json run_stopping(Context& c, const PathModel& model) {
    const auto& s = c.cfg.stopping;
    auto report = base_report(c);
    report.tau_survival =
        stopping_time_stats(model, s.levels, c.cfg.paths, c.cfg.seed, c.options.workers, {s.alpha, s.constant});
    std::string csv = "N,p_hat,ci_lo,ci_hi,chebyshev_ref\n";
    for (const auto& r : report.tau_survival->rows) {
        csv += format_double(r.N) + "," + format_double(r.p_hat) + "," + format_double(r.ci_lo) + "," +
               format_double(r.ci_hi) + "," + csv_number(r.chebyshev_ref) + "\n";
    }
    write_text(c.out / "survival.csv", csv);
    report.warnings = c.warnings;
    return to_json(report);
}

json run_blowup(Context& c, const PathModel& model) {
    auto report = base_report(c);
    report.blowup = blowup_fraction(model, c.cfg.blowup.horizons, c.cfg.paths, c.cfg.seed, c.options.workers);
    std::string csv = "horizon,count,fraction,ci_lo,ci_hi\n";
    for (const auto& r : report.blowup->rows) {
        csv += format_double(r.horizon) + "," + std::to_string(r.count) + "," + format_double(r.fraction) + "," +
               format_double(r.ci_lo) + "," + format_double(r.ci_hi) + "\n";
    }
    write_text(c.out / "blowup.csv", csv);
    report.warnings = c.warnings;
    return to_json(report);
}

json run_holder(Context& c, const PathModel& model) {
    const auto& h = c.cfg.holder;
    auto report = base_report(c);
    const auto anchors = sites_for(model.cfg.lattice, h.x);
    if (!h.space_lags.empty()) {
        report.holder_estimates.push_back(holder_study(model, {HolderAxis::Space, h.t0, h.space_lags, anchors},
                                                       c.cfg.paths, c.cfg.seed, c.options.workers));
    }
    if (!h.time_lags.empty()) {
        report.holder_estimates.push_back(holder_study(model, {HolderAxis::Time, h.t0, h.time_lags, anchors},
                                                       c.cfg.paths, c.cfg.seed, c.options.workers));
    }
    report.warnings = c.warnings;
    return to_json(report);
}

std::string join_errors(const std::vector<Diagnostic>& diags) {
    std::string s;
    for (const auto& d : diags) {
        if (d.severity != Severity::Error) continue;
        if (!s.empty()) s += "; ";
        s += d.message;
    }
    return s;
}

}  // namespace

Eigen::Index site_at(const Lattice& lattice, double x) {
    const auto n0 = lattice.points[0];
    const auto i = static_cast<Eigen::Index>(std::llround(x / lattice.spacing(0))) + n0 / 2;
    if (i < 0 || i >= n0) throw HypothesisError("probe x=" + format_double(x) + " lies outside the box");
    return lattice.dim == 1 ? i : i * lattice.points[1] + lattice.points[1] / 2;
}

PathModel make_model(const ExperimentConfig& cfg) {
    if (!cfg.lattice) throw SpecError("config needs 'lattice'");
    if (!cfg.b) throw SpecError("config needs 'b'");
    if (!cfg.sigma) throw SpecError("config needs 'sigma'");
    PathModel m;
    m.cfg = solver_config(cfg);
    m.init = cfg.initial ? parse_initial_data(*cfg.initial) : InitialData::zero();
    m.b = parse_coefficient(*cfg.b);
    m.sigma = parse_coefficient(*cfg.sigma);
    m.kernel = parse_kernel(cfg.kernel);
    return m;
}

std::vector<Diagnostic> validate(const ExperimentConfig& cfg) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string m) { out.push_back({Severity::Error, std::move(m)}); };
    auto warn = [&](std::string m) { out.push_back({Severity::Warning, std::move(m)}); };
    const auto kind = cfg.experiment;

    std::optional<CorrelationKernel> kernel;
    std::optional<Lattice> lattice;
    std::optional<Coefficient> b, sigma;
    std::optional<InitialData> init;
    auto attempt = [&](const char* what, auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            error(std::string(what) + ": " + e.what());
        }
    };
    attempt("kernel", [&] { kernel = parse_kernel(cfg.kernel); });
    if (cfg.lattice) attempt("lattice", [&] { lattice = parse_lattice(*cfg.lattice); });
    if (cfg.b) attempt("b", [&] { b = parse_coefficient(*cfg.b); });
    if (cfg.sigma) attempt("sigma", [&] { sigma = parse_coefficient(*cfg.sigma); });
    if (cfg.initial) attempt("initial", [&] { init = parse_initial_data(*cfg.initial); });

    const bool sim = is_simulation(kind);
    if ((sim || kind == ExperimentKind::NoiseCheck) && !cfg.lattice) error("experiment needs 'lattice'");
    if ((sim || kind == ExperimentKind::Classify) && !cfg.b) error("experiment needs 'b'");
    if ((sim || kind == ExperimentKind::Classify) && !cfg.sigma) error("experiment needs 'sigma'");
    if (sim && !cfg.solver) error("experiment needs 'solver'");
    if (sim && cfg.paths < 1) error("paths must be positive");
    if (kernel && lattice && kernel->dimension() != lattice->dim) {
        error("kernel dimension " + std::to_string(kernel->dimension()) + " does not match lattice dimension " +
              std::to_string(lattice->dim));
    }

    std::optional<SolverConfig> solver;
    if (sim && lattice && cfg.solver) {
        attempt("solver", [&] {
            SolverConfig s = solver_config(cfg);
            s.validate();
            solver = s;
        });
        if (solver) {
            for (auto& w : solver_warnings(*solver, init.value_or(InitialData::zero()))) warn(std::move(w));
        }
    }
    const int d = lattice ? lattice->dim : (kernel ? kernel->dimension() : 1);

    auto check_alpha = [&](double alpha, bool fatal) {
        if (!(alpha > 0 && alpha < 1)) {
            error("alpha must lie in (0, 1)");
            return;
        }
        if (!kernel) return;
        const double sup = admissible_alpha_sup(*kernel);
        if (alpha >= sup) {
            std::string msg = "alpha exceeds admissible " + format_double(std::round(sup * 1e6) / 1e6);
            fatal ? error(std::move(msg)) : warn(std::move(msg));
        }
    };
    auto check_time = [&](double t, const char* what) {
        if (!solver) return;
        if (!(t >= 0 && t <= solver->horizon * (1 + 1e-12))) {
            error(std::string(what) + " " + format_double(t) + " beyond the horizon");
        } else if (!on_grid(t, solver->dt)) {
            error(std::string(what) + " " + format_double(t) + " is not a multiple of dt");
        }
    };
    auto check_x = [&](const std::vector<double>& xs) {
        if (!lattice) return;
        for (double x : xs) {
            try {
                site_at(*lattice, x);
            } catch (const Error& e) {
                error(e.what());
            }
        }
    };
    auto bounded_only = [&](const char* what) {
        if (init && !init->bounded()) error(std::string("point-mass initial data is not allowed for ") + what);
    };

    switch (kind) {
        case ExperimentKind::Dalang:
            if (!cfg.dalang.beta) check_alpha(cfg.dalang.alpha, false);
            if (cfg.dalang.beta && !(*cfg.dalang.beta > 0)) error("beta must be positive");
            break;
        case ExperimentKind::Series:
            if (!(cfg.series.t > 0)) error("t must be positive");
            if (!(cfg.series.tol > 0)) error("tol must be positive");
            check_alpha(cfg.series.alpha, false);
            break;
        case ExperimentKind::Bounds: {
            const auto& bi = cfg.bounds;
            if (bi.part != "a" && bi.part != "b" && bi.part != "c") error("part must be a, b or c");
            if (bi.part == "c") {
                const double threshold = (2.0 + bi.inputs.dim) / bi.inputs.alpha;
                if (bi.inputs.p < threshold) error("p below (2+d)/α=" + format_double(threshold));
            }
            if (!bi.tau_given) {
                attempt("tau", [&] {
                    compute_tau(bi.inputs.b0_abs, bi.inputs.L_b, bi.inputs.sigma0_abs, bi.inputs.L_sigma);
                });
            }
            break;
        }
        case ExperimentKind::Classify:
            if (!(cfg.classify.alpha > 0 && cfg.classify.alpha < 1)) error("alpha must lie in (0, 1)");
            if (cfg.classify.h.has_value() != cfg.classify.gamma.has_value()) {
                error("salins check needs both 'h' and 'gamma'");
            }
            if (cfg.classify.h) attempt("h", [&] { parse_coefficient(*cfg.classify.h); });
            break;
        case ExperimentKind::NoiseCheck:
            if (cfg.noise_check.draws < 2) error("draws must be at least 2");
            if (!(cfg.noise_check.dt > 0)) error("dt must be positive");
            if (cfg.noise_check.max_lag < 0) error("max_lag must be nonnegative");
            if (lattice && cfg.noise_check.max_lag >= lattice->points[0]) error("max_lag exceeds the lattice");
            break;
        case ExperimentKind::Simulate:
            if (cfg.simulate.history_points < 2) error("history_points must be at least 2");
            break;
        case ExperimentKind::Moments: {
            const auto& m = cfg.moments;
            if (m.times.empty()) error("moments needs probe times");
            for (double t : m.times) check_time(t, "probe time");
            check_x(m.x);
            for (double p : m.p) {
                if (!(p >= 2)) error("moment order p=" + format_double(p) + " below 2");
            }
            bool part_c = m.calibrate;
            for (const auto& part : m.parts) {
                if (part != "a" && part != "b" && part != "c") {
                    error("unknown bound part '" + part + "'");
                    continue;
                }
                if (part == "c") part_c = true;
                if (part != "b") bounded_only("bound parts a and c");
            }
            if (!m.parts.empty() || m.calibrate) {
                check_alpha(m.alpha, true);
                if (b && sigma) {
                    attempt("tau", [&] {
                        compute_tau(std::abs((*b)(0.0)), growth_rate_constant(*b, 1e6), std::abs((*sigma)(0.0)),
                                    growth_rate_constant(*sigma, 1e6));
                    });
                }
            }
            if (part_c) {
                const double threshold = (2.0 + d) / m.alpha;
                for (double p : m.p) {
                    if (p < threshold) {
                        warn("p below (2+d)/α=" + format_double(threshold) +
                             "; the uniform bound is evaluated at that order");
                    }
                }
                if (b && sigma && !(vanishes_at_zero(*b) && vanishes_at_zero(*sigma))) {
                    error("part c needs b(0) = sigma(0) = 0");
                }
            }
            if (cfg.paths < 100) warn("fewer than 100 paths: no confidence intervals");
            break;
        }
        case ExperimentKind::Stopping: {
            const auto& s = cfg.stopping;
            if (s.levels.empty()) error("stopping needs truncation levels");
            for (std::size_t i = 0; i < s.levels.size(); ++i) {
                if (!(s.levels[i] > 0)) error("truncation levels must be positive");
                if (i > 0 && !(s.levels[i] > s.levels[i - 1])) error("truncation levels must increase");
            }
            if (!(s.alpha > 0 && s.alpha < 1)) error("alpha must lie in (0, 1)");
            bounded_only("stopping");
            break;
        }
        case ExperimentKind::Blowup:
            if (cfg.blowup.horizons.empty()) error("blowup needs horizons");
            for (double h : cfg.blowup.horizons) check_time(h, "horizon");
            if (sigma && sigma->family() != CoefficientFamily::Constant) error("blowup needs constant sigma");
            bounded_only("blowup");
            break;
        case ExperimentKind::Holder: {
            const auto& h = cfg.holder;
            if (h.space_lags.empty() && h.time_lags.empty()) error("holder needs space_lags or time_lags");
            for (const auto* lags : {&h.space_lags, &h.time_lags}) {
                if (!lags->empty() && lags->size() < 4) error("holder needs at least 4 lags per axis");
                for (int l : *lags) {
                    if (l < 1) error("holder lags must be positive");
                }
            }
            check_time(h.t0, "t0");
            if (solver && !h.time_lags.empty()) {
                const int last = *std::max_element(h.time_lags.begin(), h.time_lags.end());
                if (h.t0 + last * solver->dt > solver->horizon * (1 + 1e-12)) {
                    error("t0 plus the largest time lag exceeds the horizon");
                }
            }
            check_x(h.x);
            bounded_only("holder");
            break;
        }
    }
    return out;
}

RunOutput run(const ExperimentConfig& cfg, const RunOptions& options) {
    const auto diags = validate(cfg);
    const auto errors = join_errors(diags);
    if (!errors.empty()) throw HypothesisError(errors);

    Context c{cfg, options, options.out.empty() ? default_out_dir(cfg) : options.out, config_hash(cfg), {}};
    for (const auto& d : diags) c.warnings.push_back(d.message);

    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw IoError("cannot create " + c.out.string() + ": " + ec.message());
    const json manifest{{"experiment", to_string(cfg.experiment)},
                        {"config", to_json(cfg)},
                        {"config_hash", c.hash},
                        {"seed", cfg.seed},
                        {"version", version_string()}};
    write_text(c.out / "manifest.json", dump(manifest));

    RunOutput result;
    result.out = c.out;
    switch (cfg.experiment) {
        case ExperimentKind::Dalang: result.report = run_dalang(c); break;
        case ExperimentKind::Series: result.report = run_series(c); break;
        case ExperimentKind::Bounds: result.report = run_bounds(c); break;
        case ExperimentKind::Classify: result.report = run_classify(c); break;
        case ExperimentKind::NoiseCheck: result.report = run_noise_check(c, result.text); break;
        case ExperimentKind::Simulate: result.report = run_simulate(c, make_model(cfg)); break;
        case ExperimentKind::Moments: result.report = run_moments(c, make_model(cfg)); break;
        case ExperimentKind::Stopping: result.report = run_stopping(c, make_model(cfg)); break;
        case ExperimentKind::Blowup: result.report = run_blowup(c, make_model(cfg)); break;
        case ExperimentKind::Holder: result.report = run_holder(c, make_model(cfg)); break;
    }
    result.report["warnings"] = c.warnings;
    const auto text = dump(result.report);
    write_text(c.out / "report.json", text);
    if (result.text.empty()) result.text = text;
    return result;
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return 3;
    if (dynamic_cast<const SpecError*>(&e) || dynamic_cast<const HypothesisError*>(&e)) return 2;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
    return 1;
}

fs::path default_out_dir(const ExperimentConfig& cfg) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream name;
    name << std::put_time(&tm, "%Y%m%dT%H%M%SZ") << "-" << config_hash(cfg);
    return fs::path("runs") / name.str();
}

std::string version_string() { return SHE_VERSION; }

json to_json(const EnsembleReport& r) {
    json estimates = json::array();
    for (const auto& m : r.moment_estimates) estimates.push_back(to_json(m));
    json bounds = json::array();
    for (const auto& b : r.bounds) bounds.push_back(to_json(b));
    json holder = json::array();
    for (const auto& h : r.holder_estimates) holder.push_back(to_json(h));
    return {{"n_paths", r.n_paths},
            {"seed", r.seed},
            {"config_hash", r.config_hash},
            {"moment_estimates", estimates},
            {"bounds", bounds},
            {"tau_survival", r.tau_survival ? to_json(*r.tau_survival) : json(nullptr)},
            {"blowup_fraction", r.blowup ? to_json(*r.blowup) : json(nullptr)},
            {"holder_estimates", holder},
            {"warnings", r.warnings}};
}

}  // namespace she
