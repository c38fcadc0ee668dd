#include "she/coefficient.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "she/quadrature.hpp"
#include "she/spec_text.hpp"

namespace she {

namespace {

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double interpolate(const Eigen::VectorXd& z, const Eigen::VectorXd& g, double x) {
    const Eigen::Index n = z.size();
    if (n == 1) return g[0];
    const double* begin = z.data();
    Eigen::Index hi = std::upper_bound(begin, begin + n, x) - begin;
    hi = std::clamp<Eigen::Index>(hi, 1, n - 1);
    const Eigen::Index lo = hi - 1;
    const double w = (x - z[lo]) / (z[hi] - z[lo]);
    return g[lo] + w * (g[hi] - g[lo]);
}

constexpr double kSlack = 1e-12;

}  // namespace

Coefficient Coefficient::linear(double lambda) {
    if (!std::isfinite(lambda)) throw HypothesisError("linear coefficient needs a finite lambda");
    Coefficient c(CoefficientFamily::Linear);
    c.p0_ = lambda;
    return c;
}

Coefficient Coefficient::power(double exponent) {
    if (!(exponent >= 1) || !std::isfinite(exponent)) throw HypothesisError("power coefficient needs p >= 1");
    Coefficient c(CoefficientFamily::Power);
    c.p0_ = exponent;
    return c;
}

Coefficient Coefficient::zsinz() { return Coefficient(CoefficientFamily::SinProduct); }

Coefficient Coefficient::powerlog(double a, double b) {
    if (!std::isfinite(a) || !(b >= 0) || !std::isfinite(b))
        throw HypothesisError("powerlog coefficient needs finite a and b >= 0");
    if (b == 0 && a < 0) throw HypothesisError("powerlog coefficient with b = 0 needs a >= 0");
    Coefficient c(CoefficientFamily::PowerLog);
    c.p0_ = a;
    c.p1_ = b;
    return c;
}

Coefficient Coefficient::constant(double value) {
    if (!std::isfinite(value)) throw HypothesisError("constant coefficient needs a finite value");
    Coefficient c(CoefficientFamily::Constant);
    c.p0_ = value;
    return c;
}

Coefficient Coefficient::tabulated(Eigen::VectorXd z, Eigen::VectorXd values, std::string source) {
    if (z.size() == 0 || z.size() != values.size())
        throw HypothesisError("tabulated coefficient needs matching, nonempty columns");
    for (Eigen::Index i = 1; i < z.size(); ++i)
        if (!(z[i] > z[i - 1])) throw HypothesisError("tabulated coefficient needs strictly increasing z");
    if (!z.allFinite() || !values.allFinite()) throw HypothesisError("tabulated coefficient has non-finite samples");
    Coefficient c(CoefficientFamily::Custom);
    c.table_ = std::make_shared<const Table>(Table{std::move(z), std::move(values), std::move(source)});
    return c;
}

Coefficient Coefficient::custom(std::function<double(double)> g, std::string name) {
    if (!g) throw HypothesisError("custom coefficient needs a callable");
    Coefficient c(CoefficientFamily::Custom);
    c.fn_ = std::make_shared<const std::function<double(double)>>(std::move(g));
    c.name_ = std::move(name);
    return c;
}

double Coefficient::operator()(double z) const {
    switch (family_) {
        case CoefficientFamily::Linear:
            return p0_ * z;
        case CoefficientFamily::Power:
            return std::pow(std::abs(z), p0_);
        case CoefficientFamily::SinProduct:
            return z * std::sin(z);
        case CoefficientFamily::PowerLog: {
            const double a = std::abs(z);
            const double l = std::log1p(a);
            if (l == 0) return p1_ == 0 && p0_ == 0 ? 1.0 : 0.0;
            return std::pow(a, p1_) * std::pow(l, p0_);
        }
        case CoefficientFamily::Constant:
            return p0_;
        case CoefficientFamily::Custom:
            return table_ ? interpolate(table_->z, table_->g, z) : (*fn_)(z);
    }
    return 0;
}

void Coefficient::apply(const Eigen::ArrayXd& z, Eigen::ArrayXd& out) const {
    out.resize(z.size());
    switch (family_) {
        case CoefficientFamily::Linear:
            out = p0_ * z;
            return;
        case CoefficientFamily::Power:
            if (p0_ == 1)
                out = z.abs();
            else if (p0_ == 2)
                out = z.square();
            else
                out = z.abs().pow(p0_);
            return;
        case CoefficientFamily::SinProduct:
            out = z * z.sin();
            return;
        case CoefficientFamily::Constant:
            out.setConstant(p0_);
            return;
        default:
            for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = (*this)(z[i]);
    }
}

std::string Coefficient::spec() const {
    switch (family_) {
        case CoefficientFamily::Linear:
            return "linear:lambda=" + format_number(p0_);
        case CoefficientFamily::Power:
            return "power:p=" + format_number(p0_);
        case CoefficientFamily::SinProduct:
            return "zsinz";
        case CoefficientFamily::PowerLog:
            return "powerlog:a=" + format_number(p0_) + ",b=" + format_number(p1_);
        case CoefficientFamily::Constant:
            return "const:c=" + format_number(p0_);
        case CoefficientFamily::Custom:
            return table_ ? "custom:file=" + table_->source : name_;
    }
    return {};
}

TruncatedCoefficient::TruncatedCoefficient(Coefficient b, double level) : base(std::move(b)), N(level) {
    if (!(N > 0) || !std::isfinite(N)) throw HypothesisError("truncation level N must be positive and finite");
}

void TruncatedCoefficient::apply(const Eigen::ArrayXd& z, Eigen::ArrayXd& out) const {
    const Eigen::ArrayXd clamped = z.max(-N).min(N);
    base.apply(clamped, out);
}

double evaluate(const Coefficient& g, double z) { return g(z); }
double evaluate(const TruncatedCoefficient& g, double z) { return g(z); }

namespace {

template <typename G>
double growth_rate_impl(const G& g, double radius, int samples) {
    if (!(radius > 0) || !std::isfinite(radius)) throw HypothesisError("growth_rate_constant needs a positive radius");
    if (samples < 1000) throw HypothesisError("growth_rate_constant needs at least 1000 samples");
    const double g0 = g(0.0);
    auto ratio = [&](double z) {
        const double r = std::max(std::abs(g(z) - g0), std::abs(g(-z) - g0)) / z;
        if (!std::isfinite(r)) throw HypothesisError("coefficient is not finite on the sampling ball");
        return r;
    };
    std::vector<double> grid;
    grid.reserve(2 * samples);
    const double lo = std::log(radius * 1e-9);
    const double hi = std::log(radius);
    for (int i = 0; i < samples; ++i) grid.push_back(std::exp(lo + (hi - lo) * i / (samples - 1)));
    for (int i = 1; i <= samples; ++i) grid.push_back(radius * i / samples);
    std::sort(grid.begin(), grid.end());
    grid.back() = radius;

    std::size_t best = 0;
    double sup = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = ratio(grid[i]);
        if (r > sup) {
            sup = r;
            best = i;
        }
    }
    // Golden-section refinement between the neighbours of the best sample.
    double a = grid[best > 0 ? best - 1 : 0];
    double b = grid[std::min(best + 1, grid.size() - 1)];
    const double phi = 0.5 * (std::sqrt(5.0) - 1);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = ratio(x1), f2 = ratio(x2);
    for (int it = 0; it < 80 && b - a > 1e-14 * b; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = ratio(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = ratio(x1);
        }
    }
    return std::max({sup, f1, f2});
}

template <typename G>
double lipschitz_impl(const G& g, double radius, int samples) {
    if (!(radius > 0) || samples < 2) throw HypothesisError("lipschitz_estimate needs radius > 0 and samples >= 2");
    const double h = 2 * radius / samples;
    double prev = g(-radius);
    double sup = 0;
    for (int i = 1; i <= samples; ++i) {
        const double cur = g(-radius + i * h);
        sup = std::max(sup, std::abs(cur - prev) / h);
        prev = cur;
    }
    return sup;
}

}  // namespace

double growth_rate_constant(const Coefficient& g, double radius, int samples) {
    return growth_rate_impl(g, radius, samples);
}

double growth_rate_constant(const TruncatedCoefficient& g, double radius, int samples) {
    return growth_rate_impl(g, std::min(radius, g.N), samples);
}

double lipschitz_estimate(const Coefficient& g, double radius, int samples) {
    return lipschitz_impl(g, radius, samples);
}

double lipschitz_estimate(const TruncatedCoefficient& g, double radius, int samples) {
    return lipschitz_impl(g, radius, samples);
}

std::string_view to_string(GrowthClass c) {
    switch (c) {
        case GrowthClass::SubCritical:
            return "subcritical";
        case GrowthClass::Critical:
            return "critical";
        case GrowthClass::Supercritical:
            return "supercritical";
    }
    return {};
}

std::string_view to_string(OsgoodVerdict v) {
    return v == OsgoodVerdict::BlowUpExpected ? "blowup_expected" : "global_expected";
}

GrowthRatios growth_ratios(const Coefficient& b, const Coefficient& sigma, double alpha) {
    GrowthRatios out{Eigen::VectorXd(11), Eigen::VectorXd(11), Eigen::VectorXd(11)};
    for (int k = 2; k <= 12; ++k) {
        const double z = std::pow(10.0, k);
        const double lz = std::log(z);
        out.z[k - 2] = z;
        out.drift[k - 2] = std::max(std::abs(b(z)), std::abs(b(-z))) / (z * lz);
        out.diffusion[k - 2] = std::max(std::abs(sigma(z)), std::abs(sigma(-z))) / (z * std::pow(lz, alpha / 2));
    }
    return out;
}

GrowthClass classify_ratio_sequence(const Eigen::Ref<const Eigen::VectorXd>& r) {
    const Eigen::Index n = r.size();
    if (n < 4) throw HypothesisError("ratio sequence too short to classify");
    if (!r.allFinite()) return GrowthClass::Supercritical;
    bool decreasing = true;
    for (Eigen::Index i = 1; i < n; ++i) decreasing = decreasing && r[i] <= r[i - 1];
    if (decreasing && r[n - 1] < 1e-2) return GrowthClass::SubCritical;

    // A ratio that keeps climbing across the tail grows without bound even
    // when its sampled range stays within the factor-10 band.
    const Eigen::Index tail = n / 2;
    bool increasing = true;
    for (Eigen::Index i = tail + 1; i < n; ++i) increasing = increasing && r[i] > r[i - 1];
    if (increasing && r[n - 1] > 1.25 * r[tail]) return GrowthClass::Supercritical;

    std::vector<double> sorted(r.data(), r.data() + n);
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    const double median = sorted[n / 2];
    const double tail_max = r.tail(n - tail).maxCoeff();
    if (tail_max <= 10 * median) return GrowthClass::Critical;
    return GrowthClass::Supercritical;
}

namespace {

// Symbolic class of one coefficient against |z| (log|z|)^{threshold}.
std::optional<GrowthClass> family_class(const Coefficient& g, double threshold) {
    switch (g.family()) {
        case CoefficientFamily::Linear:
        case CoefficientFamily::SinProduct:
        case CoefficientFamily::Constant:
            return GrowthClass::SubCritical;
        case CoefficientFamily::Power:
            return g.exponent() > 1 ? GrowthClass::Supercritical : GrowthClass::SubCritical;
        case CoefficientFamily::PowerLog: {
            if (g.exponent() < 1) return GrowthClass::SubCritical;
            if (g.exponent() > 1) return GrowthClass::Supercritical;
            const double a = g.log_power();
            if (std::abs(a - threshold) <= 1e-12) return GrowthClass::Critical;
            return a < threshold ? GrowthClass::SubCritical : GrowthClass::Supercritical;
        }
        case CoefficientFamily::Custom:
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace

GrowthClass classify_growth(const Coefficient& b, const Coefficient& sigma, double alpha) {
    if (!(alpha > 0 && alpha < 1)) throw HypothesisError("classify_growth: alpha must lie in (0, 1)");
    if (b(0.0) != 0) throw HypothesisError("classify_growth: drift is nonzero at 0 (" + b.spec() + ")");
    if (sigma(0.0) != 0) throw HypothesisError("classify_growth: diffusion is nonzero at 0 (" + sigma.spec() + ")");
    const auto ratios = growth_ratios(b, sigma, alpha);
    const GrowthClass cb = family_class(b, 1.0).value_or(classify_ratio_sequence(ratios.drift));
    const GrowthClass cs = family_class(sigma, alpha / 2).value_or(classify_ratio_sequence(ratios.diffusion));
    return std::max(cb, cs);
}

namespace {

// \int_{lo}^{hi} du / g(u) in the variable y = log u.
double reciprocal_integral(const Coefficient& g, double lo, double hi) {
    auto f = [&](double y) {
        const double u = std::exp(y);
        return u / g(u);
    };
    return quad::integrate<double>(f, std::log(lo), std::log(hi), 1e-10, 0.0, 4000).value;
}

void require_positive_increasing(const Coefficient& g, double c) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1200; ++i) {
        const double u = c * std::pow(10.0, i / 100.0);
        const double v = g(u);
        if (!(v > 0)) throw HypothesisError("osgood_check: " + g.spec() + " is not eventually positive");
        if (v < prev * (1 - kSlack))
            throw HypothesisError("osgood_check: " + g.spec() + " is not increasing on [c, infinity)");
        prev = v;
    }
}

}  // namespace

OsgoodResult osgood_check(const Coefficient& b, double c) {
    if (!(c > 0)) throw HypothesisError("osgood_check: c must be positive");
    switch (b.family()) {
        case CoefficientFamily::SinProduct:
            throw HypothesisError("osgood_check: zsinz is not eventually positive");
        case CoefficientFamily::Linear:
            if (!(b.lambda() > 0)) throw HypothesisError("osgood_check: " + b.spec() + " is not eventually positive");
            return {OsgoodVerdict::GlobalExpected, std::nullopt};
        case CoefficientFamily::Constant:
            if (!(b.constant_value() > 0))
                throw HypothesisError("osgood_check: " + b.spec() + " is not eventually positive");
            return {OsgoodVerdict::GlobalExpected, std::nullopt};
        case CoefficientFamily::Power: {
            const double p = b.exponent();
            if (p == 1) return {OsgoodVerdict::GlobalExpected, std::nullopt};
            return {OsgoodVerdict::BlowUpExpected, std::pow(c, 1 - p) / (p - 1)};
        }
        case CoefficientFamily::PowerLog: {
            const double a = b.log_power();
            const double e = b.exponent();
            if (e < 1 || (e == 1 && a <= 1)) return {OsgoodVerdict::GlobalExpected, std::nullopt};
            // Integrate to U, then close with the tail of u^{-e} log^{-a} u.
            const double U = e > 1 ? std::max(c, 1.0) * 1e12 : std::max(c, 1.0) * 1e300;
            double value = reciprocal_integral(b, c, U);
            const double L = std::log1p(U);
            if (e > 1)
                value += std::pow(U, 1 - e) / ((e - 1) * std::pow(L, a));
            else
                value += std::pow(L, 1 - a) / (a - 1);
            return {OsgoodVerdict::BlowUpExpected, value};
        }
        case CoefficientFamily::Custom:
            break;
    }
    require_positive_increasing(b, c);
    // Decade increments of the integral; a geometric decay of the last ratio
    // signals convergence.
    std::vector<double> pieces;
    for (int k = 0; k < 12; ++k) pieces.push_back(reciprocal_integral(b, c * std::pow(10.0, k), c * std::pow(10.0, k + 1)));
    const double ratio = pieces[11] / pieces[10];
    if (!(ratio < 0.9)) return {OsgoodVerdict::GlobalExpected, std::nullopt};
    double sum = 0;
    for (double v : pieces) sum += v;
    return {OsgoodVerdict::BlowUpExpected, sum + pieces[11] * ratio / (1 - ratio)};
}

bool salins_check(const Coefficient& b, const Coefficient& sigma, const Coefficient& h, double gamma) {
    if (!(gamma > 0 && gamma < 0.5)) throw HypothesisError("salins_check: gamma must lie in (0, 1/2)");
    if (!(h(0.0) >= 0)) throw HypothesisError("salins_check: h must be nonnegative");
    double prev = h(0.0);
    for (int i = 0; i <= 1800; ++i) {
        const double u = std::pow(10.0, -6 + i / 100.0);
        const double v = h(u);
        if (!(v > 0) || v < prev * (1 - kSlack))
            throw HypothesisError("salins_check: h must be positive and increasing");
        prev = v;
    }
    if (osgood_check(h, 1.0).verdict != OsgoodVerdict::GlobalExpected)
        throw HypothesisError("salins_check: h has a convergent Osgood integral");

    auto drift_ok = [&](double z) { return std::abs(b(z)) <= h(std::abs(z)) * (1 + kSlack); };
    if (!drift_ok(0.0)) return false;
    for (int i = 0; i <= 1800; ++i) {
        const double z = std::pow(10.0, -6 + i / 100.0);
        if (!drift_ok(z) || !drift_ok(-z)) return false;
    }
    for (int i = -2000; i <= 2000; ++i)
        if (!drift_ok(i / 200.0)) return false;

    for (int i = 1; i <= 1200; ++i) {
        const double z = std::pow(10.0, i / 100.0);
        const double bound = std::pow(z, 1 - gamma) * std::pow(h(z), gamma);
        if (!(std::abs(sigma(z)) <= bound * (1 + kSlack))) return false;
    }
    return true;
}

namespace {

Coefficient read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open coefficient table '" + path + "'");
    std::vector<double> z, g;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream row(line);
        double a, b;
        if (!(row >> a)) continue;
        if (!(row >> b)) throw SpecError("coefficient table '" + path + "' line " + std::to_string(line_no) + ": expected two columns");
        std::string rest;
        if (row >> rest) throw SpecError("coefficient table '" + path + "' line " + std::to_string(line_no) + ": extra columns");
        z.push_back(a);
        g.push_back(b);
    }
    try {
        return Coefficient::tabulated(Eigen::Map<Eigen::VectorXd>(z.data(), z.size()),
                                      Eigen::Map<Eigen::VectorXd>(g.data(), g.size()), path);
    } catch (const HypothesisError& e) {
        throw SpecError("coefficient table '" + path + "': " + e.what());
    }
}

}  // namespace

Coefficient parse_coefficient(std::string_view text) {
    auto spec = SpecText::parse(text);
    auto build = [&]() -> Coefficient {
        if (spec.name == "linear") return Coefficient::linear(spec.number("lambda"));
        if (spec.name == "power") return Coefficient::power(spec.number("p"));
        if (spec.name == "zsinz") return Coefficient::zsinz();
        if (spec.name == "powerlog") {
            const double a = spec.number("a");
            return Coefficient::powerlog(a, spec.number("b"));
        }
        if (spec.name == "const") return Coefficient::constant(spec.number("c"));
        if (spec.name == "custom") return read_table(spec.string("file"));
        throw SpecError("unknown coefficient '" + spec.name + "'", 0);
    };
    try {
        auto g = build();
        spec.finish();
        return g;
    } catch (const HypothesisError& e) {
        throw SpecError("invalid coefficient '" + std::string(text) + "': " + e.what());
    }
}

}  // namespace she
