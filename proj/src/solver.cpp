#include "she/solver.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "she/quadrature.hpp"
#include "she/spec_text.hpp"

namespace she {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double heat_kernel(double t, double r, int dim) {
    return std::exp(-r * r / (2 * t)) / std::pow(2 * kPi * t, 0.5 * dim);
}

double bump_profile(double amplitude, double R, double r) {
    const double s = 1 - (r * r) / (R * R);
    return s > 0 ? amplitude * s * s : 0.0;
}

bool is_zero_coefficient(const Coefficient& g) {
    return (g.family() == CoefficientFamily::Constant && g.constant_value() == 0) ||
           (g.family() == CoefficientFamily::Linear && g.lambda() == 0);
}

double sup_norm(const Eigen::ArrayXd& u) { return u.size() == 0 ? 0.0 : u.abs().maxCoeff(); }

void record(PathState& state) { state.sup_history.push_back({state.t, sup_norm(state.u)}); }

}  // namespace

void SolverConfig::validate() const {
    lattice.validate();
    if (!(dt > 0) || !std::isfinite(dt)) throw HypothesisError("dt must be positive");
    if (!(horizon > 0) || !std::isfinite(horizon)) throw HypothesisError("horizon must be positive");
    if (truncation_level && !(*truncation_level > 0)) throw HypothesisError("truncation level must be positive");
    if (!(blowup_threshold > 0)) throw HypothesisError("blowup threshold must be positive");
    const double k = horizon / dt;
    if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k))
        throw HypothesisError("horizon must be an integer multiple of dt");
}

std::int64_t SolverConfig::steps() const { return static_cast<std::int64_t>(std::llround(horizon / dt)); }

InitialData InitialData::gaussian_bump(double amplitude, double width) {
    if (!(width > 0)) throw HypothesisError("bump width must be positive");
    if (!std::isfinite(amplitude)) throw HypothesisError("bump amplitude must be finite");
    return {InitialKind::GaussianBump, amplitude, width};
}

InitialData InitialData::compact_bump(double amplitude, double radius) {
    if (!(radius > 0)) throw HypothesisError("bump radius must be positive");
    if (!std::isfinite(amplitude)) throw HypothesisError("bump amplitude must be finite");
    return {InitialKind::CompactBump, amplitude, radius};
}

InitialData InitialData::point_mass(double mass) {
    if (!std::isfinite(mass)) throw HypothesisError("point mass must be finite");
    return {InitialKind::PointMass, mass, 0};
}

Eigen::ArrayXd InitialData::sample(const Lattice& lattice) const {
    lattice.validate();
    Eigen::ArrayXd u = Eigen::ArrayXd::Zero(lattice.sites());
    switch (kind) {
        case InitialKind::Zero:
            break;
        case InitialKind::GaussianBump:
            u = amplitude * (-lattice.radii().square() / (2 * width * width)).exp();
            break;
        case InitialKind::CompactBump: {
            const Eigen::ArrayXd r = lattice.radii();
            for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = bump_profile(amplitude, width, r[i]);
            break;
        }
        case InitialKind::PointMass: {
            // Mass on the origin cell: value mass / dx^d at site (n/2, n/2).
            const Eigen::Index i0 = lattice.points[0] / 2;
            const Eigen::Index idx = lattice.dim == 1 ? i0 : i0 * lattice.points[1] + lattice.points[1] / 2;
            u[idx] = amplitude / lattice.cell_volume();
            break;
        }
    }
    return u;
}

double InitialData::sup_norm() const {
    switch (kind) {
        case InitialKind::Zero:
            return 0;
        case InitialKind::PointMass:
            return amplitude == 0 ? 0 : kInf;
        default:
            return std::abs(amplitude);
    }
}

double InitialData::lp_norm(double p, int dim) const {
    if (!(p >= 1)) throw HypothesisError("L^p norm needs p >= 1");
    if (dim != 1 && dim != 2) throw HypothesisError("dimension must be 1 or 2");
    const double A = std::abs(amplitude);
    switch (kind) {
        case InitialKind::Zero:
            return 0;
        case InitialKind::PointMass:
            return A == 0 ? 0 : kInf;
        case InitialKind::GaussianBump:
            return A * std::pow(2 * kPi * width * width / p, dim / (2 * p));
        case InitialKind::CompactBump: {
            const double q = 2 * p;
            const double integral =
                dim == 1 ? width * std::sqrt(kPi) * std::exp(std::lgamma(q + 1) - std::lgamma(q + 1.5))
                         : kPi * width * width / (q + 1);
            return A * std::pow(integral, 1 / p);
        }
    }
    return 0;
}

double InitialData::heat_smoothed(double t, double r, int dim) const {
    if (!(t > 0)) throw HypothesisError("heat smoothing needs t > 0");
    if (dim != 1 && dim != 2) throw HypothesisError("dimension must be 1 or 2");
    const double A = std::abs(amplitude);
    switch (kind) {
        case InitialKind::Zero:
            return 0;
        case InitialKind::PointMass:
            return A * heat_kernel(t, r, dim);
        case InitialKind::GaussianBump: {
            const double v = width * width + t;
            return A * std::pow(width * width / v, 0.5 * dim) * std::exp(-r * r / (2 * v));
        }
        case InitialKind::CompactBump: {
            const double R = width;
            if (dim == 1) {
                auto f = [&](double y) { return heat_kernel(t, r - y, 1) * bump_profile(A, R, y); };
                return quad::integrate<double>(f, -R, R, 1e-11).value;
            }
            auto radial = [&](double rho) {
                auto g = [&](double theta) {
                    const double d2 = r * r + rho * rho - 2 * r * rho * std::cos(theta);
                    return heat_kernel(t, std::sqrt(std::max(d2, 0.0)), 2);
                };
                return rho * bump_profile(A, R, rho) * 2 * quad::integrate<double>(g, 0.0, kPi, 1e-11).value;
            };
            return quad::integrate<double>(radial, 0.0, R, 1e-10).value;
        }
    }
    return 0;
}

double InitialData::support_radius() const {
    switch (kind) {
        case InitialKind::GaussianBump:
            return width * std::sqrt(2 * std::log(1e12));
        case InitialKind::CompactBump:
            return width;
        default:
            return 0;
    }
}

std::string InitialData::spec() const {
    switch (kind) {
        case InitialKind::Zero:
            return "zero";
        case InitialKind::GaussianBump:
            return "gaussian:amp=" + format_number(amplitude) + ",width=" + format_number(width);
        case InitialKind::CompactBump:
            return "bump:amp=" + format_number(amplitude) + ",radius=" + format_number(width);
        case InitialKind::PointMass:
            return "point:mass=" + format_number(amplitude);
    }
    return {};
}

InitialData parse_initial_data(std::string_view text) {
    auto spec = SpecText::parse(text);
    try {
        if (spec.name == "zero") {
            spec.finish();
            return InitialData::zero();
        }
        if (spec.name == "gaussian") {
            const double amp = spec.number("amp");
            const double width = spec.number("width");
            spec.finish();
            return InitialData::gaussian_bump(amp, width);
        }
        if (spec.name == "bump") {
            const double amp = spec.number("amp");
            const double radius = spec.number("radius");
            spec.finish();
            return InitialData::compact_bump(amp, radius);
        }
        if (spec.name == "point") {
            const double mass = spec.number("mass");
            spec.finish();
            return InitialData::point_mass(mass);
        }
    } catch (const HypothesisError& e) {
        throw SpecError("invalid initial data '" + std::string(text) + "': " + e.what());
    }
    throw SpecError("unknown initial data '" + spec.name + "'", 0);
}

std::vector<std::string> solver_warnings(const SolverConfig& cfg, const InitialData& init) {
    std::vector<std::string> out;
    const double dx = cfg.lattice.spacing(0);
    if (cfg.dt > dx * dx / 2)
        out.push_back("dt = " + format_number(cfg.dt) + " exceeds dx^2/2 = " + format_number(dx * dx / 2));
    const double need = 8 * std::sqrt(cfg.horizon) + init.support_radius();
    if (!(cfg.lattice.extent[0] > need))
        out.push_back("box extent " + format_number(cfg.lattice.extent[0]) + " is below 8 sqrt(T) + support radius = " +
                      format_number(need));
    return out;
}

std::string_view to_string(PathStatus s) {
    switch (s) {
        case PathStatus::Running:
            return "running";
        case PathStatus::HitTruncation:
            return "hit_truncation";
        case PathStatus::Exploded:
            return "exploded";
        case PathStatus::Completed:
            return "completed";
    }
    return "unknown";
}

Eigen::ArrayXd heat_multiplier(const Lattice& lattice, double dt) { return (-0.5 * dt * lattice.mode_norm2()).exp(); }

Eigen::ArrayXd heat_semigroup_step(const Eigen::ArrayXd& u, double dt, const Lattice& lattice) {
    if (u.size() != lattice.sites()) throw HypothesisError("field size does not match the lattice");
    if (!(dt >= 0)) throw HypothesisError("heat step needs dt >= 0");
    SpectralTransform transform(lattice);
    Eigen::ArrayXd out = u;
    transform.apply_multiplier(out, heat_multiplier(lattice, dt));
    return out;
}

FieldCoefficients::FieldCoefficients(Coefficient b, Coefficient sigma, std::optional<double> N)
    : b_(std::move(b)), sigma_(std::move(sigma)), N_(N), b_zero_(is_zero_coefficient(b_)),
      s_zero_(is_zero_coefficient(sigma_)) {
    if (N_ && !(*N_ > 0)) throw HypothesisError("truncation level must be positive");
}

void FieldCoefficients::drift(const Eigen::ArrayXd& u, Eigen::ArrayXd& out) const {
    if (N_)
        TruncatedCoefficient(b_, *N_).apply(u, out);
    else
        b_.apply(u, out);
}

void FieldCoefficients::diffusion(const Eigen::ArrayXd& u, Eigen::ArrayXd& out) const {
    if (N_)
        TruncatedCoefficient(sigma_, *N_).apply(u, out);
    else
        sigma_.apply(u, out);
}

SolverWorkspace::SolverWorkspace(const SolverConfig& cfg, const SpectralSynthesizer& synth)
    : transform_(cfg.lattice), sampler_(synth), multiplier_(heat_multiplier(cfg.lattice, cfg.dt)) {
    if (!(synth.lattice == cfg.lattice)) throw HypothesisError("noise lattice does not match the solver lattice");
}

PathState initial_state(const SolverConfig& cfg, const InitialData& init) {
    cfg.validate();
    PathState state;
    state.u = init.sample(cfg.lattice);
    state.sup_history.reserve(static_cast<std::size_t>(cfg.steps()) + 1);
    record(state);
    return state;
}

bool check_stopping(PathState& state, const SolverConfig& cfg) {
    if (state.status == PathStatus::Exploded || state.status == PathStatus::Completed) return true;
    if (!state.u.allFinite() || state.sup_history.back().sup > cfg.blowup_threshold) {
        state.status = PathStatus::Exploded;
        state.event_time = state.t;
        return true;
    }
    const std::int64_t total = cfg.steps();
    if (state.status == PathStatus::Running && cfg.truncation_level && state.step < total &&
        state.sup_history.back().sup >= *cfg.truncation_level) {
        state.status = PathStatus::HitTruncation;
        state.event_time = state.t;
    }
    if (state.status == PathStatus::HitTruncation && cfg.stop_at_truncation) return true;
    if (state.step >= total) {
        if (state.status == PathStatus::Running) state.status = PathStatus::Completed;
        return true;
    }
    return false;
}

void step(PathState& state, const FieldCoefficients& coef, const Eigen::ArrayXd& dW, const SolverConfig& cfg,
          SolverWorkspace& ws) {
    Eigen::ArrayXd& u = state.u;
    if (u.size() != cfg.lattice.sites()) throw HypothesisError("state does not match the solver lattice");
    const bool drift = !coef.drift_is_zero();
    const bool noise = !coef.diffusion_is_zero();
    if (noise && dW.size() != u.size()) throw HypothesisError("noise increment does not match the solver lattice");
    if (drift) coef.drift(u, ws.drift);
    if (noise) coef.diffusion(u, ws.diffusion);
    if (drift) u += cfg.dt * ws.drift;
    if (noise) u += ws.diffusion * dW;
    ws.transform().apply_multiplier(u, ws.multiplier());
    ++state.step;
    state.t = static_cast<double>(state.step) * cfg.dt;
    record(state);
}

PathState solve_path(const SolverConfig& cfg, const InitialData& init, const FieldCoefficients& coef,
                     SolverWorkspace& ws, const RandomStream& stream, const StepObserver& observer) {
    if (coef.truncation() != cfg.truncation_level)
        throw HypothesisError("coefficient truncation does not match the solver config");
    PathState state = initial_state(cfg, init);
    if (observer) observer(state);
    while (!check_stopping(state, cfg)) {
        if (!coef.diffusion_is_zero())
            ws.sampler().sample(cfg.dt, stream, static_cast<std::uint64_t>(state.step), ws.noise);
        step(state, coef, ws.noise, cfg, ws);
        if (observer) observer(state);
    }
    return state;
}

PathState solve_path(const SolverConfig& cfg, const InitialData& init, const Coefficient& b, const Coefficient& sigma,
                     const SpectralSynthesizer& synth, const RandomStream& stream, const StepObserver& observer) {
    SolverWorkspace ws(cfg, synth);
    return solve_path(cfg, init, FieldCoefficients(b, sigma, cfg.truncation_level), ws, stream, observer);
}

TruncationLadder solve_truncation_ladder(const SolverConfig& cfg, const InitialData& init, const Coefficient& b,
                                         const Coefficient& sigma, const std::vector<double>& levels,
                                         SolverWorkspace& ws, const RandomStream& stream) {
    const std::size_t L = levels.size();
    if (L == 0) throw HypothesisError("truncation ladder needs at least one level");
    for (std::size_t i = 0; i < L; ++i) {
        if (!(levels[i] > 0)) throw HypothesisError("truncation levels must be positive");
        if (i > 0 && levels[i] < levels[i - 1]) throw HypothesisError("truncation levels must be nondecreasing");
    }
    std::vector<SolverConfig> cfgs(L, cfg);
    std::vector<FieldCoefficients> coefs;
    std::vector<PathState> states;
    std::vector<char> done(L);
    coefs.reserve(L);
    states.reserve(L);
    for (std::size_t i = 0; i < L; ++i) {
        cfgs[i].truncation_level = levels[i];
        cfgs[i].stop_at_truncation = true;
        coefs.emplace_back(b, sigma, levels[i]);
        states.push_back(initial_state(cfgs[i], init));
        done[i] = check_stopping(states[i], cfgs[i]);
    }

    TruncationLadder out;
    out.max_discrepancy.assign(L - 1, 0.0);
    out.steps_compared.assign(L - 1, 0);
    const bool noise = !coefs[0].diffusion_is_zero();
    while (true) {
        for (std::size_t i = 0; i + 1 < L; ++i) {
            const PathState& lo = states[i];
            const PathState& hi = states[i + 1];
            if (lo.step != hi.step || (lo.status != PathStatus::Running && lo.status != PathStatus::Completed)) continue;
            out.max_discrepancy[i] = std::max(out.max_discrepancy[i], (lo.u - hi.u).abs().maxCoeff());
            ++out.steps_compared[i];
        }
        std::int64_t k = -1;
        for (std::size_t i = 0; i < L; ++i)
            if (!done[i]) k = states[i].step;
        if (k < 0) break;
        if (noise) ws.sampler().sample(cfg.dt, stream, static_cast<std::uint64_t>(k), ws.noise);
        for (std::size_t i = 0; i < L; ++i) {
            if (done[i]) continue;
            step(states[i], coefs[i], ws.noise, cfgs[i], ws);
            done[i] = check_stopping(states[i], cfgs[i]);
        }
    }
    for (std::size_t i = 0; i < L; ++i)
        out.levels.push_back({levels[i], states[i].status,
                              states[i].status == PathStatus::HitTruncation ? states[i].event_time : kInf});
    return out;
}

TruncationAgreement solve_truncated_pair(const SolverConfig& cfg, const InitialData& init, const Coefficient& b,
                                         const Coefficient& sigma, double N, double M, const SpectralSynthesizer& synth,
                                         const RandomStream& stream) {
    if (!(N > 0) || !(M >= N)) throw HypothesisError("truncated pair needs 0 < N <= M");
    SolverWorkspace ws(cfg, synth);
    const auto ladder = solve_truncation_ladder(cfg, init, b, sigma, {N, M}, ws, stream);
    TruncationAgreement out;
    out.N = N;
    out.M = M;
    out.max_discrepancy = ladder.max_discrepancy[0];
    out.steps_compared = ladder.steps_compared[0];
    out.status_N = ladder.levels[0].status;
    out.status_M = ladder.levels[1].status;
    out.tau_N = ladder.levels[0].tau;
    out.tau_M = ladder.levels[1].tau;
    return out;
}

std::uint64_t field_checksum(const Eigen::ArrayXd& u) {
    std::uint64_t h = 14695981039346656037ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(u.data());
    const std::size_t n = static_cast<std::size_t>(u.size()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

void write_snapshot(const std::string& path, const Lattice& lattice, const Eigen::ArrayXd& u, double t) {
    if (u.size() != lattice.sites()) throw HypothesisError("field size does not match the lattice");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open snapshot file '" + path + "' for writing");
    char header[32] = {'S', 'H', 'E', 'F', 'I', 'E', 'L', 'D'};
    const std::uint32_t words[4] = {static_cast<std::uint32_t>(lattice.dim), static_cast<std::uint32_t>(lattice.points[0]),
                                    static_cast<std::uint32_t>(lattice.dim == 2 ? lattice.points[1] : 1), 0};
    std::memcpy(header + 8, words, sizeof words);
    std::memcpy(header + 24, &t, sizeof t);
    f.write(header, sizeof header);
    f.write(reinterpret_cast<const char*>(u.data()), static_cast<std::streamsize>(u.size() * sizeof(double)));
    if (!f) throw IoError("failed writing snapshot file '" + path + "'");
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open snapshot file '" + path + "'");
    char header[32];
    if (!f.read(header, sizeof header)) throw IoError("snapshot '" + path + "' is truncated");
    if (std::memcmp(header, "SHEFIELD", 8) != 0) throw IoError("snapshot '" + path + "' has a bad magic");
    std::uint32_t words[4];
    std::memcpy(words, header + 8, sizeof words);
    Snapshot s;
    std::memcpy(&s.t, header + 24, sizeof s.t);
    s.lattice.dim = static_cast<int>(words[0]);
    s.lattice.points = {static_cast<Eigen::Index>(words[1]), static_cast<Eigen::Index>(words[2])};
    // Extent is not stored; the unit box keeps the lattice valid.
    s.lattice.extent = {1.0, 1.0};
    try {
        s.lattice.validate();
    } catch (const HypothesisError& e) {
        throw IoError("snapshot '" + path + "' has an invalid header: " + e.what());
    }
    s.u.resize(s.lattice.sites());
    if (!f.read(reinterpret_cast<char*>(s.u.data()), static_cast<std::streamsize>(s.u.size() * sizeof(double))))
        throw IoError("snapshot '" + path + "' is truncated");
    return s;
}

}  // namespace she
