#include "she/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <numeric>
#include <tuple>

#include "she/dalang.hpp"

namespace she {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double normal_quantile(double level) {
    if (!(level > 0 && level < 1)) throw HypothesisError("confidence level must lie in (0, 1)");
    // Two-sided: solve erf(z / sqrt 2) = level by Newton from z = 2.
    double z = 2;
    for (int i = 0; i < 60; ++i) {
        const double f = std::erf(z / std::sqrt(2.0)) - level;
        const double df = std::sqrt(2 / std::numbers::pi) * std::exp(-z * z / 2);
        const double step = f / df;
        z -= step;
        if (std::abs(step) < 1e-15 * z) break;
    }
    return z;
}

std::int64_t grid_step(double t, double dt, const char* what) {
    const double k = t / dt;
    const double r = std::round(k);
    if (!(t >= 0) || std::abs(k - r) > 1e-9 * std::max(1.0, k))
        throw HypothesisError(std::string(what) + " must be a nonnegative multiple of dt");
    return static_cast<std::int64_t>(r);
}

double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::pair<double, double> site_coordinates(const Lattice& l, Eigen::Index site) {
    if (l.dim == 1) return {l.axis_coordinates(0)[site], 0.0};
    const Eigen::Index i = site / l.points[1], j = site % l.points[1];
    return {l.axis_coordinates(0)[i], l.axis_coordinates(1)[j]};
}

// Site shifted by `lag` cells along axis 0, periodic.
Eigen::Index shifted_site(const Lattice& l, Eigen::Index site, int lag) {
    const Eigen::Index stride = l.dim == 1 ? 1 : l.points[1];
    const Eigen::Index i = site / stride, rest = site % stride;
    const Eigen::Index n = l.points[0];
    const Eigen::Index j = ((i + lag) % n + n) % n;
    return j * stride + rest;
}

bool is_zero_at_origin(const Coefficient& g) { return g(0.0) == 0; }

struct PathWorker {
    SolverWorkspace ws;
    FieldCoefficients coef;
};

}  // namespace

int resolve_workers(std::optional<int> requested) {
    if (requested) {
        if (*requested < 1) throw SpecError("worker count must be positive");
        return *requested;
    }
    if (const char* env = std::getenv("SHE_WORKERS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw SpecError("SHE_WORKERS must be a positive integer");
        return static_cast<int>(v);
    }
    return 1;
}

Ensemble run_ensemble(const PathModel& model, const ProbePlan& probes, std::int64_t n_paths, std::uint64_t seed,
                      int workers) {
    model.cfg.validate();
    if (n_paths < 1) throw HypothesisError("ensemble needs at least one path");
    if (probes.times.empty() || probes.sites.empty()) throw HypothesisError("probe plan is empty");
    const Lattice& l = model.cfg.lattice;
    const std::int64_t total = model.cfg.steps();
    std::vector<std::int64_t> probe_steps;
    for (double t : probes.times) {
        const auto k = grid_step(t, model.cfg.dt, "probe time");
        if (k > total) throw HypothesisError("probe time " + std::to_string(t) + " is beyond the horizon");
        probe_steps.push_back(k);
    }
    for (auto s : probes.sites)
        if (s < 0 || s >= l.sites()) throw HypothesisError("probe site outside the lattice");

    // Paths only need to run to the last probe.
    SolverConfig cfg = model.cfg;
    cfg.horizon = static_cast<double>(*std::max_element(probe_steps.begin(), probe_steps.end())) * cfg.dt;
    if (cfg.horizon == 0) cfg.horizon = cfg.dt;

    const auto synth = plan(model.kernel, l);
    const std::size_t T = probes.times.size(), S = probes.sites.size();
    Ensemble e;
    e.probes = probes;
    e.lattice = l;
    e.values = Eigen::MatrixXd::Constant(n_paths, static_cast<Eigen::Index>(T * S), kNaN);
    e.running_sup = Eigen::MatrixXd::Constant(n_paths, static_cast<Eigen::Index>(T), kNaN);
    e.status.assign(n_paths, PathStatus::Running);
    e.event_time.assign(n_paths, kNaN);
    e.checksum.assign(n_paths, 0);

    for_each_path(
        n_paths, workers,
        [&] { return PathWorker{SolverWorkspace(cfg, synth), FieldCoefficients(model.b, model.sigma, cfg.truncation_level)}; },
        [&](PathWorker& w, std::int64_t j) {
            double running = 0;
            auto observer = [&](const PathState& st) {
                running = std::max(running, st.sup_history.back().sup);
                for (std::size_t ti = 0; ti < T; ++ti) {
                    if (probe_steps[ti] != st.step) continue;
                    for (std::size_t si = 0; si < S; ++si) e.values(j, e.column(ti, si)) = st.u[probes.sites[si]];
                    e.running_sup(j, static_cast<Eigen::Index>(ti)) = running;
                }
            };
            const auto st = solve_path(cfg, model.init, w.coef, w.ws, RandomStream(seed, static_cast<std::uint64_t>(j)),
                                       observer);
            e.status[j] = st.status;
            e.event_time[j] = st.event_time;
            e.checksum[j] = field_checksum(st.u);
            if (st.status == PathStatus::HitTruncation || st.status == PathStatus::Exploded) {
                for (std::size_t ti = 0; ti < T; ++ti) {
                    if (probes.times[ti] < st.event_time) continue;
                    for (std::size_t si = 0; si < S; ++si) e.values(j, e.column(ti, si)) = kNaN;
                    e.running_sup(j, static_cast<Eigen::Index>(ti)) = kNaN;
                }
            }
        });
    return e;
}

Interval jackknife_mean(const Eigen::Ref<const Eigen::ArrayXd>& y, double level) {
    const Eigen::Index n = y.size();
    if (n < 2) throw HypothesisError("jackknife needs at least two samples");
    const double z = normal_quantile(level);
    const double sum = y.sum();
    const double nd = static_cast<double>(n);
    const Eigen::ArrayXd loo = (sum - y) / (nd - 1);
    const double se = std::sqrt((nd - 1) / nd * (loo - loo.mean()).square().sum());
    const double mean = sum / nd;
    return {mean, se, mean - z * se, mean + z * se};
}

Interval wilson_interval(std::int64_t k, std::int64_t n, double level) {
    if (n < 1 || k < 0 || k > n) throw HypothesisError("invalid proportion counts");
    const double z = normal_quantile(level);
    const double nd = static_cast<double>(n);
    const double p = static_cast<double>(k) / nd;
    const double denom = 1 + z * z / nd;
    const double centre = (p + z * z / (2 * nd)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / nd + z * z / (4 * nd * nd)) / denom;
    const double lo = k == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = k == n ? 1.0 : std::min(1.0, centre + half);
    return {p, std::sqrt(p * (1 - p) / nd), lo, hi};
}

namespace {

MomentEstimate moment_of(const Eigen::Ref<const Eigen::VectorXd>& column, double p) {
    MomentEstimate m;
    m.p = p;
    std::vector<double> y;
    y.reserve(static_cast<std::size_t>(column.size()));
    for (Eigen::Index i = 0; i < column.size(); ++i)
        if (std::isfinite(column[i])) y.push_back(std::pow(std::abs(column[i]), p));
    m.used = static_cast<std::int64_t>(y.size());
    m.excluded = column.size() - m.used;
    if (y.empty()) {
        m.value = m.ci_lo = m.ci_hi = kNaN;
        return m;
    }
    const Eigen::Map<const Eigen::ArrayXd> ys(y.data(), static_cast<Eigen::Index>(y.size()));
    m.value = std::pow(ys.mean(), 1 / p);
    if (m.has_ci()) {
        const auto ci = jackknife_mean(ys);
        m.ci_lo = std::pow(std::max(ci.lo, 0.0), 1 / p);
        m.ci_hi = std::pow(ci.hi, 1 / p);
    } else {
        m.ci_lo = m.ci_hi = kNaN;
    }
    return m;
}

}  // namespace

std::vector<MomentEstimate> estimate_moments(const Ensemble& e, double p) {
    if (!(p >= 2)) throw HypothesisError("moment order must be >= 2");
    std::vector<MomentEstimate> out;
    for (std::size_t ti = 0; ti < e.probes.times.size(); ++ti)
        for (std::size_t si = 0; si < e.probes.sites.size(); ++si) {
            auto m = moment_of(e.values.col(e.column(ti, si)), p);
            m.t = e.probes.times[ti];
            m.site = e.probes.sites[si];
            std::tie(m.x, m.y) = site_coordinates(e.lattice, m.site);
            out.push_back(m);
        }
    return out;
}

std::vector<MomentEstimate> estimate_sup_moments(const Ensemble& e, double p) {
    if (!(p >= 2)) throw HypothesisError("moment order must be >= 2");
    std::vector<MomentEstimate> out;
    for (std::size_t ti = 0; ti < e.probes.times.size(); ++ti) {
        auto m = moment_of(e.running_sup.col(static_cast<Eigen::Index>(ti)), p);
        m.t = e.probes.times[ti];
        m.site = -1;
        m.sup_statistic = true;
        out.push_back(m);
    }
    return out;
}

std::string_view to_string(BoundPart part) {
    switch (part) {
        case BoundPart::A:
            return "a";
        case BoundPart::B:
            return "b";
        case BoundPart::C:
            return "c";
    }
    return "?";
}

MomentBoundInputs bound_inputs(const PathModel& model, double alpha, std::optional<double> constant, double radius) {
    MomentBoundInputs in;
    in.alpha = alpha;
    in.dim = model.cfg.lattice.dim;
    in.L_b = growth_rate_constant(model.b, radius);
    in.L_sigma = growth_rate_constant(model.sigma, radius);
    in.b0_abs = std::abs(model.b(0.0));
    in.sigma0_abs = std::abs(model.sigma(0.0));
    in.tau = compute_tau(in.b0_abs, in.L_b, in.sigma0_abs, in.L_sigma);
    const auto ups = upsilon_alpha(model.kernel, alpha);
    if (ups.divergent()) throw HypothesisError("Upsilon_alpha diverges for " + model.kernel.spec());
    in.upsilon_alpha = *ups.value;
    in.u0_sup = model.init.sup_norm();
    in.constant = constant;
    return in;
}

BoundReport check_bound(const std::vector<MomentEstimate>& estimates, const MomentBoundInputs& inputs, BoundPart part,
                        const InitialData& init) {
    BoundReport r;
    r.part = part;
    r.note = inputs.constant ? "constant calibrated on a base case; a violation falsifies the calibration policy"
                             : "explicit constant";
    if (part == BoundPart::A) r.note = "explicit constant";
    for (const auto& est : estimates) {
        if (part == BoundPart::C && !est.sup_statistic)
            throw HypothesisError("the uniform bound needs sup-over-space estimates");
        MomentBoundInputs in = inputs;
        in.t = est.t;
        in.p = est.p;
        if (part == BoundPart::C) in.p = std::max(est.p, (2.0 + in.dim) / in.alpha);
        in.u0_sup = init.sup_norm();
        in.u0_Lp = init.lp_norm(in.p, in.dim);
        if (part == BoundPart::B) in.J_plus = init.heat_smoothed(est.t, std::hypot(est.x, est.y), in.dim);
        BoundVerdict v;
        v.estimate = est;
        v.bound_p = in.p;
        v.bound = part == BoundPart::A ? moment_bound_a(in) : part == BoundPart::B ? moment_bound_b(in) : moment_bound_c(in);
        const double upper = est.upper();
        v.margin = upper > 0 ? v.bound / upper : kInf;
        v.pass = upper <= v.bound;
        if (!v.pass) ++r.violations;
        r.verdicts.push_back(v);
    }
    return r;
}

double calibrate_constant(const std::vector<MomentEstimate>& sup_estimates, MomentBoundInputs inputs,
                          const InitialData& init) {
    auto passes = [&](double C) {
        inputs.constant = C;
        return check_bound(sup_estimates, inputs, BoundPart::C, init).violations == 0;
    };
    double lo = std::log(1e-8), hi = std::log(1e8);
    if (passes(std::exp(lo))) return std::exp(lo);
    if (!passes(std::exp(hi))) throw HypothesisError("no constant in [1e-8, 1e8] satisfies the uniform bound");
    for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        (passes(std::exp(mid)) ? hi : lo) = mid;
    }
    return std::exp(hi);
}

SurvivalReport stopping_time_stats(const PathModel& model, const std::vector<double>& N_list, std::int64_t n_paths,
                                   std::uint64_t seed, int workers, const ChebyshevPolicy& policy) {
    model.cfg.validate();
    if (N_list.empty()) throw HypothesisError("N list is empty");
    for (std::size_t i = 1; i < N_list.size(); ++i)
        if (!(N_list[i] > N_list[i - 1])) throw HypothesisError("N list must be increasing");
    if (n_paths < 1) throw HypothesisError("ensemble needs at least one path");

    const auto synth = plan(model.kernel, model.cfg.lattice);
    const std::size_t L = N_list.size();
    Eigen::MatrixXd tau(n_paths, static_cast<Eigen::Index>(L));
    Eigen::VectorXd discrepancy(n_paths);
    std::vector<std::int64_t> compared(n_paths);
    for_each_path(
        n_paths, workers, [&] { return SolverWorkspace(model.cfg, synth); },
        [&](SolverWorkspace& ws, std::int64_t j) {
            const auto ladder = solve_truncation_ladder(model.cfg, model.init, model.b, model.sigma, N_list, ws,
                                                        RandomStream(seed, static_cast<std::uint64_t>(j)));
            for (std::size_t i = 0; i < L; ++i) tau(j, static_cast<Eigen::Index>(i)) = ladder.levels[i].tau;
            discrepancy[j] = ladder.max_discrepancy.empty()
                                 ? 0.0
                                 : *std::max_element(ladder.max_discrepancy.begin(), ladder.max_discrepancy.end());
            compared[j] = std::accumulate(ladder.steps_compared.begin(), ladder.steps_compared.end(), std::int64_t{0});
        });

    SurvivalReport r;
    r.n_paths = n_paths;
    r.max_discrepancy = discrepancy.maxCoeff();
    r.steps_compared = std::accumulate(compared.begin(), compared.end(), std::int64_t{0});
    for (std::int64_t j = 0; j < n_paths; ++j)
        for (std::size_t i = 1; i < L; ++i)
            if (tau(j, static_cast<Eigen::Index>(i - 1)) > tau(j, static_cast<Eigen::Index>(i))) r.pathwise_monotone = false;

    const bool chebyshev = is_zero_at_origin(model.b) && is_zero_at_origin(model.sigma);
    const int d = model.cfg.lattice.dim;
    std::optional<double> ups;
    if (chebyshev) {
        const auto u = upsilon_alpha(model.kernel, policy.alpha);
        if (u.divergent()) throw HypothesisError("Upsilon_alpha diverges for " + model.kernel.spec());
        ups = *u.value;
    }
    for (std::size_t i = 0; i < L; ++i) {
        SurvivalRow row;
        row.N = N_list[i];
        for (std::int64_t j = 0; j < n_paths; ++j)
            if (std::isfinite(tau(j, static_cast<Eigen::Index>(i)))) ++row.hits;
        const auto ci = wilson_interval(row.hits, n_paths);
        row.p_hat = ci.estimate;
        row.standard_error = ci.standard_error;
        row.ci_lo = ci.lo;
        row.ci_hi = ci.hi;
        if (chebyshev) {
            MomentBoundInputs in;
            in.alpha = policy.alpha;
            in.dim = d;
            in.p = (2.0 + d) / policy.alpha;
            in.upsilon_alpha = *ups;
            in.L_b = growth_rate_constant(truncate(model.b, row.N), row.N);
            in.L_sigma = growth_rate_constant(truncate(model.sigma, row.N), row.N);
            in.u0_sup = model.init.sup_norm();
            in.u0_Lp = model.init.lp_norm(in.p, d);
            in.t = model.cfg.horizon;
            in.constant = policy.constant;
            const double bound = moment_bound_c(in);
            const double ref = std::pow(bound / row.N, in.p);
            row.chebyshev_ref = std::isfinite(ref) ? std::min(1.0, ref) : 1.0;
            row.consistent = row.p_hat <= row.chebyshev_ref + 3 * row.standard_error;
        } else {
            row.chebyshev_ref = kNaN;
        }
        r.rows.push_back(row);
    }
    return r;
}

BlowupReport blowup_fraction(const PathModel& model, const std::vector<double>& horizons, std::int64_t n_paths,
                             std::uint64_t seed, int workers) {
    if (model.sigma.family() != CoefficientFamily::Constant)
        throw HypothesisError("blow-up study needs additive (constant) noise");
    if (horizons.empty()) throw HypothesisError("horizon list is empty");
    if (n_paths < 1) throw HypothesisError("ensemble needs at least one path");
    for (double h : horizons)
        if (!(h > 0)) throw HypothesisError("horizons must be positive");
    SolverConfig cfg = model.cfg;
    cfg.horizon = *std::max_element(horizons.begin(), horizons.end());
    cfg.validate();
    for (double h : horizons) grid_step(h, cfg.dt, "horizon");

    const auto synth = plan(model.kernel, cfg.lattice);
    std::vector<double> event(n_paths, kInf);
    for_each_path(
        n_paths, workers,
        [&] { return PathWorker{SolverWorkspace(cfg, synth), FieldCoefficients(model.b, model.sigma, cfg.truncation_level)}; },
        [&](PathWorker& w, std::int64_t j) {
            const auto st =
                solve_path(cfg, model.init, w.coef, w.ws, RandomStream(seed, static_cast<std::uint64_t>(j)));
            if (st.status == PathStatus::Exploded || st.status == PathStatus::HitTruncation) event[j] = st.event_time;
        });

    BlowupReport r;
    r.n_paths = n_paths;
    for (double h : horizons) {
        BlowupRow row;
        row.horizon = h;
        row.count = std::count_if(event.begin(), event.end(), [&](double e) { return e <= h + 1e-12 * h; });
        const auto ci = wilson_interval(row.count, n_paths);
        row.fraction = ci.estimate;
        row.ci_lo = ci.lo;
        row.ci_hi = ci.hi;
        r.rows.push_back(row);
    }
    return r;
}

std::string_view to_string(HolderAxis axis) { return axis == HolderAxis::Space ? "space" : "time"; }

HolderEstimate holder_exponent(const std::vector<double>& lags, const Eigen::MatrixXd& structure) {
    const auto L = static_cast<Eigen::Index>(lags.size());
    if (L < 4) throw HypothesisError("Holder estimation needs at least 4 lags");
    if (structure.cols() != L || structure.rows() < 1) throw HypothesisError("structure matrix does not match the lags");
    Eigen::ArrayXd x(L);
    for (Eigen::Index k = 0; k < L; ++k) {
        if (!(lags[k] > 0)) throw HypothesisError("lags must be positive");
        x[k] = std::log(lags[k]);
    }
    const double xm = x.mean();
    const double sxx = (x - xm).square().sum();
    if (!(sxx > 0)) throw HypothesisError("lags must be distinct");

    HolderEstimate h;
    h.lags = lags;
    h.structure = structure;
    std::vector<double> errors;
    for (Eigen::Index a = 0; a < structure.rows(); ++a) {
        const Eigen::ArrayXd s = structure.row(a).transpose().array();
        if (!(s > 0).all() || !s.allFinite()) throw HypothesisError("structure values must be positive and finite");
        const Eigen::ArrayXd y = s.log();
        const double ym = y.mean();
        const double slope = ((x - xm) * (y - ym)).sum() / sxx;
        const Eigen::ArrayXd resid = y - ym - slope * (x - xm);
        h.slopes.push_back(slope);
        errors.push_back(std::sqrt(resid.square().sum() / static_cast<double>(L - 2) / sxx));
    }
    h.exponent = median(h.slopes);
    h.standard_error = median(errors);
    return h;
}

Eigen::MatrixXd spatial_structure(const std::vector<Eigen::ArrayXd>& fields, const Lattice& lattice,
                                  const std::vector<int>& lags, const std::vector<Eigen::Index>& anchors) {
    const auto A = static_cast<Eigen::Index>(anchors.size()), L = static_cast<Eigen::Index>(lags.size());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(A, L);
    std::int64_t used = 0;
    for (const auto& u : fields) {
        if (u.size() != lattice.sites()) throw HypothesisError("field size does not match the lattice");
        if (!u.allFinite()) continue;
        ++used;
        for (Eigen::Index a = 0; a < A; ++a)
            for (Eigen::Index k = 0; k < L; ++k)
                sum(a, k) += std::abs(u[shifted_site(lattice, anchors[a], lags[k])] - u[anchors[a]]);
    }
    if (used == 0) throw HypothesisError("no finite fields");
    return sum / static_cast<double>(used);
}

HolderEstimate holder_study(const PathModel& model, const HolderPlan& hp, std::int64_t n_paths, std::uint64_t seed,
                            int workers) {
    model.cfg.validate();
    if (hp.lags.size() < 4) throw HypothesisError("Holder estimation needs at least 4 lags");
    if (hp.anchors.empty()) throw HypothesisError("Holder estimation needs anchors");
    if (n_paths < 1) throw HypothesisError("ensemble needs at least one path");
    const Lattice& l = model.cfg.lattice;
    for (auto a : hp.anchors)
        if (a < 0 || a >= l.sites()) throw HypothesisError("anchor outside the lattice");
    for (int lag : hp.lags)
        if (lag < 1) throw HypothesisError("lags must be positive");
    const std::int64_t k0 = grid_step(hp.t0, model.cfg.dt, "snapshot time");
    const int max_lag = *std::max_element(hp.lags.begin(), hp.lags.end());
    const std::int64_t last = hp.axis == HolderAxis::Space ? k0 : k0 + max_lag;
    if (last > model.cfg.steps()) throw HypothesisError("snapshot times extend beyond the horizon");
    if (hp.axis == HolderAxis::Space && max_lag >= l.points[0]) throw HypothesisError("spatial lag exceeds the lattice");

    SolverConfig cfg = model.cfg;
    cfg.horizon = static_cast<double>(std::max<std::int64_t>(last, 1)) * cfg.dt;
    const auto synth = plan(model.kernel, l);
    const auto A = static_cast<Eigen::Index>(hp.anchors.size()), L = static_cast<Eigen::Index>(hp.lags.size());
    Eigen::MatrixXd rows = Eigen::MatrixXd::Constant(n_paths, A * L, kNaN);

    for_each_path(
        n_paths, workers,
        [&] { return PathWorker{SolverWorkspace(cfg, synth), FieldCoefficients(model.b, model.sigma, cfg.truncation_level)}; },
        [&](PathWorker& w, std::int64_t j) {
            Eigen::ArrayXd base(A);
            Eigen::ArrayXd diffs = Eigen::ArrayXd::Constant(A * L, kNaN);
            auto observer = [&](const PathState& st) {
                if (hp.axis == HolderAxis::Space) {
                    if (st.step != k0) return;
                    for (Eigen::Index a = 0; a < A; ++a)
                        for (Eigen::Index k = 0; k < L; ++k)
                            diffs[a * L + k] =
                                std::abs(st.u[shifted_site(l, hp.anchors[a], hp.lags[k])] - st.u[hp.anchors[a]]);
                    return;
                }
                if (st.step == k0)
                    for (Eigen::Index a = 0; a < A; ++a) base[a] = st.u[hp.anchors[a]];
                for (Eigen::Index k = 0; k < L; ++k)
                    if (st.step == k0 + hp.lags[k])
                        for (Eigen::Index a = 0; a < A; ++a) diffs[a * L + k] = std::abs(st.u[hp.anchors[a]] - base[a]);
            };
            const auto st = solve_path(cfg, model.init, w.coef, w.ws, RandomStream(seed, static_cast<std::uint64_t>(j)),
                                       observer);
            if (st.status == PathStatus::Completed && diffs.allFinite()) rows.row(j) = diffs.matrix().transpose();
        });

    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(A, L);
    std::int64_t used = 0;
    for (std::int64_t j = 0; j < n_paths; ++j) {
        if (!rows.row(j).allFinite()) continue;
        ++used;
        for (Eigen::Index a = 0; a < A; ++a) sum.row(a) += rows.row(j).segment(a * L, L);
    }
    if (used == 0) throw HypothesisError("no path completed the Holder snapshots");
    std::vector<double> lags;
    for (int lag : hp.lags)
        lags.push_back(hp.axis == HolderAxis::Space ? lag * l.spacing(0) : lag * model.cfg.dt);
    auto h = holder_exponent(lags, sum / static_cast<double>(used));
    h.axis = hp.axis;
    h.paths_used = used;
    return h;
}

}  // namespace she
