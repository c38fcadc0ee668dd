#include "she/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>

#include "she/errors.hpp"

namespace she {

using nlohmann::json;

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKinds[] = {
    {ExperimentKind::Dalang, "dalang"},     {ExperimentKind::Series, "series"},
    {ExperimentKind::Bounds, "bounds"},     {ExperimentKind::Classify, "classify"},
    {ExperimentKind::NoiseCheck, "noise-check"}, {ExperimentKind::Simulate, "simulate"},
    {ExperimentKind::Moments, "moments"},   {ExperimentKind::Stopping, "stopping"},
    {ExperimentKind::Blowup, "blowup"},     {ExperimentKind::Holder, "holder"},
};

std::string type_name(const json& v) { return v.type_name(); }

template <class T>
T convert(const json& v, const std::string& key) {
    auto fail = [&](const char* want) -> T {
        throw SpecError("config key '" + key + "' must be " + want + ", got " + type_name(v));
    };
    if constexpr (std::is_same_v<T, bool>) {
        return v.is_boolean() ? v.get<bool>() : fail("a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
        return v.is_string() ? v.get<std::string>() : fail("a string");
    } else if constexpr (std::is_same_v<T, double>) {
        return v.is_number() ? v.get<double>() : fail("a number");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        return fail("a nonnegative integer");
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) return fail("an integer");
        const auto x = v.get<std::int64_t>();
        if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()) return fail("an integer in range");
        return static_cast<T>(x);
    } else {
        using E = typename T::value_type;
        if (!v.is_array()) return fail("an array");
        T out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<E>(v[i], key + "[" + std::to_string(i) + "]"));
        return out;
    }
}

class Section {
public:
    Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
        if (!j_.is_object()) throw SpecError("config section '" + prefix_ + "' must be an object");
    }

    const json* find(const char* key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    template <class T>
    std::optional<T> optional(const char* key) {
        const json* v = find(key);
        if (!v) return std::nullopt;
        return convert<T>(*v, name(key));
    }

    template <class T>
    T get(const char* key, T fallback) {
        auto v = optional<T>(key);
        return v ? *v : fallback;
    }

    template <class T>
    T required(const char* key) {
        auto v = optional<T>(key);
        if (!v) throw SpecError("config key '" + name(key) + "' is required");
        return *v;
    }

    Section sub(const char* key) {
        const json* v = find(key);
        static const json empty = json::object();
        return Section(v ? *v : empty, name(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw SpecError("unknown config key '" + name(it.key().c_str()) + "'");
    }

private:
    std::string name(const char* key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    const json& j_;
    std::string prefix_;
    std::set<std::string> used_;
};

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
    for (const auto& [k, name] : kKinds)
        if (k == kind) return name;
    return "unknown";
}

ExperimentKind parse_experiment(std::string_view text) {
    for (const auto& [k, name] : kKinds)
        if (name == text) return k;
    throw SpecError("unknown experiment '" + std::string(text) + "'");
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

MomentBoundInputs parse_bound_inputs(const json& j, bool* tau_given) {
    Section s(j, "inputs");
    MomentBoundInputs in;
    in.L_b = s.get("L_b", in.L_b);
    in.L_sigma = s.get("L_sigma", in.L_sigma);
    in.b0_abs = s.get("b0_abs", in.b0_abs);
    in.sigma0_abs = s.get("sigma0_abs", in.sigma0_abs);
    const auto tau = s.optional<double>("tau");
    in.p = s.get("p", in.p);
    in.alpha = s.get("alpha", in.alpha);
    in.upsilon_alpha = s.get("upsilon_alpha", in.upsilon_alpha);
    in.u0_sup = s.get("u0_sup", in.u0_sup);
    in.u0_Lp = s.get("u0_Lp", in.u0_Lp);
    in.J_plus = s.get("J_plus", in.J_plus);
    in.t = s.get("t", in.t);
    in.dim = s.get("dim", in.dim);
    in.constant = s.optional<double>("constant");
    s.finish();
    if (tau) in.tau = *tau;
    if (tau_given) *tau_given = tau.has_value();
    return in;
}

json to_json(const MomentBoundInputs& in) {
    json j{{"L_b", in.L_b},       {"L_sigma", in.L_sigma}, {"b0_abs", in.b0_abs}, {"sigma0_abs", in.sigma0_abs},
           {"tau", in.tau},       {"p", in.p},             {"alpha", in.alpha},   {"upsilon_alpha", in.upsilon_alpha},
           {"u0_sup", in.u0_sup}, {"u0_Lp", in.u0_Lp},     {"J_plus", in.J_plus}, {"t", in.t},
           {"dim", in.dim}};
    put(j, "constant", in.constant);
    return j;
}

ExperimentConfig parse_config(const json& j) {
    Section root(j, "");
    ExperimentConfig c;
    c.experiment = parse_experiment(root.required<std::string>("experiment"));
    c.kernel = root.get<std::string>("kernel", c.kernel);
    c.lattice = root.optional<std::string>("lattice");
    c.b = root.optional<std::string>("b");
    c.sigma = root.optional<std::string>("sigma");
    c.initial = root.optional<std::string>("initial");
    c.paths = root.get<std::int64_t>("paths", c.paths);
    c.seed = root.get<std::uint64_t>("seed", c.seed);
    if (root.find("solver")) {
        Section s = root.sub("solver");
        SolverParams p;
        p.dt = s.required<double>("dt");
        p.horizon = s.required<double>("horizon");
        p.truncation = s.optional<double>("truncation");
        p.blowup_threshold = s.get("blowup_threshold", p.blowup_threshold);
        s.finish();
        c.solver = p;
    }

    // Only the section of the selected experiment may appear.
    const std::string section =
        c.experiment == ExperimentKind::NoiseCheck ? "noise_check" : std::string(to_string(c.experiment));
    for (const auto& [k, name] : kKinds) {
        const std::string other = k == ExperimentKind::NoiseCheck ? "noise_check" : std::string(name);
        if (other != section && j.contains(other))
            throw SpecError("config section '" + other + "' does not belong to experiment '" +
                            std::string(to_string(c.experiment)) + "'");
    }
    Section s = root.sub(section.c_str());
    switch (c.experiment) {
        case ExperimentKind::Dalang:
            c.dalang.alpha = s.get("alpha", c.dalang.alpha);
            c.dalang.beta = s.optional<double>("beta");
            c.dalang.sweep = s.get("sweep", c.dalang.sweep);
            break;
        case ExperimentKind::Series:
            c.series.a = s.get("a", c.series.a);
            c.series.b = s.get("b", c.series.b);
            c.series.gamma = s.get("gamma", c.series.gamma);
            c.series.t = s.get("t", c.series.t);
            c.series.tol = s.get("tol", c.series.tol);
            c.series.alpha = s.get("alpha", c.series.alpha);
            break;
        case ExperimentKind::Bounds: {
            c.bounds.part = s.get<std::string>("part", c.bounds.part);
            const json* in = s.find("inputs");
            c.bounds.inputs = parse_bound_inputs(in ? *in : json::object(), &c.bounds.tau_given);
            break;
        }
        case ExperimentKind::Classify:
            c.classify.alpha = s.get("alpha", c.classify.alpha);
            c.classify.osgood_c = s.get("osgood_c", c.classify.osgood_c);
            c.classify.h = s.optional<std::string>("h");
            c.classify.gamma = s.optional<double>("gamma");
            break;
        case ExperimentKind::NoiseCheck:
            c.noise_check.draws = s.get("draws", c.noise_check.draws);
            c.noise_check.dt = s.get("dt", c.noise_check.dt);
            c.noise_check.max_lag = s.get("max_lag", c.noise_check.max_lag);
            break;
        case ExperimentKind::Simulate:
            c.simulate.history_points = s.get("history_points", c.simulate.history_points);
            c.simulate.snapshots = s.get("snapshots", c.simulate.snapshots);
            break;
        case ExperimentKind::Moments:
            c.moments.p = s.get("p", c.moments.p);
            c.moments.times = s.required<std::vector<double>>("times");
            c.moments.x = s.get("x", c.moments.x);
            c.moments.alpha = s.get("alpha", c.moments.alpha);
            c.moments.parts = s.get("parts", c.moments.parts);
            c.moments.constant = s.optional<double>("constant");
            c.moments.calibrate = s.get("calibrate", c.moments.calibrate);
            break;
        case ExperimentKind::Stopping:
            c.stopping.levels = s.required<std::vector<double>>("levels");
            c.stopping.alpha = s.get("alpha", c.stopping.alpha);
            c.stopping.constant = s.optional<double>("constant");
            break;
        case ExperimentKind::Blowup:
            c.blowup.horizons = s.required<std::vector<double>>("horizons");
            break;
        case ExperimentKind::Holder:
            c.holder.t0 = s.required<double>("t0");
            c.holder.space_lags = s.get("space_lags", c.holder.space_lags);
            c.holder.time_lags = s.get("time_lags", c.holder.time_lags);
            c.holder.x = s.get("x", c.holder.x);
            break;
    }
    s.finish();
    root.finish();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw SpecError("config file '" + path.string() + "' is not valid JSON: " + e.what(), e.byte);
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = std::string(to_string(c.experiment));
    j["kernel"] = c.kernel;
    put(j, "lattice", c.lattice);
    put(j, "b", c.b);
    put(j, "sigma", c.sigma);
    put(j, "initial", c.initial);
    j["paths"] = c.paths;
    j["seed"] = c.seed;
    if (c.solver) {
        json s{{"dt", c.solver->dt}, {"horizon", c.solver->horizon}, {"blowup_threshold", c.solver->blowup_threshold}};
        put(s, "truncation", c.solver->truncation);
        j["solver"] = s;
    }
    json s = json::object();
    switch (c.experiment) {
        case ExperimentKind::Dalang:
            s = {{"alpha", c.dalang.alpha}, {"sweep", c.dalang.sweep}};
            put(s, "beta", c.dalang.beta);
            break;
        case ExperimentKind::Series:
            s = {{"a", c.series.a},         {"b", c.series.b},     {"gamma", c.series.gamma},
                 {"t", c.series.t},         {"tol", c.series.tol}, {"alpha", c.series.alpha}};
            break;
        case ExperimentKind::Bounds: {
            json in = to_json(c.bounds.inputs);
            if (!c.bounds.tau_given) in.erase("tau");
            s = {{"part", c.bounds.part}, {"inputs", in}};
            break;
        }
        case ExperimentKind::Classify:
            s = {{"alpha", c.classify.alpha}, {"osgood_c", c.classify.osgood_c}};
            put(s, "h", c.classify.h);
            put(s, "gamma", c.classify.gamma);
            break;
        case ExperimentKind::NoiseCheck:
            s = {{"draws", c.noise_check.draws}, {"dt", c.noise_check.dt}, {"max_lag", c.noise_check.max_lag}};
            break;
        case ExperimentKind::Simulate:
            s = {{"history_points", c.simulate.history_points}, {"snapshots", c.simulate.snapshots}};
            break;
        case ExperimentKind::Moments:
            s = {{"p", c.moments.p},         {"times", c.moments.times}, {"x", c.moments.x},
                 {"alpha", c.moments.alpha}, {"parts", c.moments.parts}, {"calibrate", c.moments.calibrate}};
            put(s, "constant", c.moments.constant);
            break;
        case ExperimentKind::Stopping:
            s = {{"levels", c.stopping.levels}, {"alpha", c.stopping.alpha}};
            put(s, "constant", c.stopping.constant);
            break;
        case ExperimentKind::Blowup:
            s = {{"horizons", c.blowup.horizons}};
            break;
        case ExperimentKind::Holder:
            s = {{"t0", c.holder.t0},
                 {"space_lags", c.holder.space_lags},
                 {"time_lags", c.holder.time_lags},
                 {"x", c.holder.x}};
            break;
    }
    j[c.experiment == ExperimentKind::NoiseCheck ? "noise_check" : std::string(to_string(c.experiment))] = s;
    return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(cfg).dump())));
    return buf;
}

}  // namespace she
