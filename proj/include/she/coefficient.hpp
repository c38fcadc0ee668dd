#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "she/errors.hpp"

namespace she {

enum class CoefficientFamily { Linear, Power, SinProduct, PowerLog, Constant, Custom };

// Drift or diffusion coefficient g: R -> R. Immutable and cheap to copy.
//   Linear{lambda}  lambda z
//   Power{p}        |z|^p, p >= 1
//   SinProduct      z sin z
//   PowerLog{a, b}  |z|^b log^a(1 + |z|)
//   Constant{c}     c
//   Custom          tabulated samples (linear interpolation, end segments
//                   extended) or a user callable
class Coefficient {
public:
    static Coefficient linear(double lambda);
    static Coefficient power(double exponent);
    static Coefficient zsinz();
    static Coefficient powerlog(double a, double b);
    static Coefficient constant(double c);
    static Coefficient tabulated(Eigen::VectorXd z, Eigen::VectorXd values, std::string source = "table");
    static Coefficient custom(std::function<double(double)> g, std::string name = "custom");

    CoefficientFamily family() const noexcept { return family_; }
    double lambda() const noexcept { return p0_; }
    double exponent() const noexcept { return family_ == CoefficientFamily::PowerLog ? p1_ : p0_; }
    double log_power() const noexcept { return p0_; }
    double constant_value() const noexcept { return p0_; }

    double operator()(double z) const;
    // Element-wise evaluation; `out` may alias `z`.
    void apply(const Eigen::ArrayXd& z, Eigen::ArrayXd& out) const;

    std::string spec() const;

private:
    explicit Coefficient(CoefficientFamily family) : family_(family) {}

    struct Table {
        Eigen::VectorXd z;
        Eigen::VectorXd g;
        std::string source;
    };

    CoefficientFamily family_;
    double p0_ = 0;
    double p1_ = 0;
    std::shared_ptr<const Table> table_;
    std::shared_ptr<const std::function<double(double)>> fn_;
    std::string name_;
};

// g_N(z) = g(min(1, N/|z|) z): equal to g on [-N, N], constant beyond.
struct TruncatedCoefficient {
    Coefficient base;
    double N;

    TruncatedCoefficient(Coefficient base, double N);

    double clamp(double z) const noexcept { return std::abs(z) <= N ? z : (z > 0 ? N : -N); }
    double operator()(double z) const { return base(clamp(z)); }
    void apply(const Eigen::ArrayXd& z, Eigen::ArrayXd& out) const;
};

inline TruncatedCoefficient truncate(const Coefficient& g, double N) { return {g, N}; }

double evaluate(const Coefficient& g, double z);
double evaluate(const TruncatedCoefficient& g, double z);

// sup |g(z) - g(0)| / |z| over 0 < |z| <= radius, sampled on a log-spaced grid
// merged with a uniform grid (samples points each, endpoints included), then
// refined by golden-section search around the best sample.
double growth_rate_constant(const Coefficient& g, double radius, int samples = 4000);
// For a truncated coefficient the supremum over R is attained on |z| <= N.
double growth_rate_constant(const TruncatedCoefficient& g, double radius, int samples = 4000);

// Largest |g(z+h) - g(z)| / h over a uniform grid of [-radius, radius]; the
// local slope used for stability control, distinct from the growth rate.
double lipschitz_estimate(const Coefficient& g, double radius, int samples = 4000);
double lipschitz_estimate(const TruncatedCoefficient& g, double radius, int samples = 4000);

enum class GrowthClass { SubCritical, Critical, Supercritical };

std::string_view to_string(GrowthClass c);

// Ratios r_b(z) = |b(z)| / (|z| log|z|) and r_sigma(z) = |sigma(z)| / (|z| (log|z|)^{alpha/2})
// at z = 10^k, k = 2..12, taking the larger of z and -z.
struct GrowthRatios {
    Eigen::VectorXd z;
    Eigen::VectorXd drift;
    Eigen::VectorXd diffusion;
};
GrowthRatios growth_ratios(const Coefficient& b, const Coefficient& sigma, double alpha);

// Known families are classified from their closed form; Custom coefficients
// from the sampled ratios.
GrowthClass classify_growth(const Coefficient& b, const Coefficient& sigma, double alpha);
// Sampling classifier applied to one ratio sequence.
GrowthClass classify_ratio_sequence(const Eigen::Ref<const Eigen::VectorXd>& ratios);

enum class OsgoodVerdict { BlowUpExpected, GlobalExpected };

std::string_view to_string(OsgoodVerdict v);

struct OsgoodResult {
    OsgoodVerdict verdict;
    // \int_c^infty du / b(u) when finite.
    std::optional<double> integral;
};

OsgoodResult osgood_check(const Coefficient& b, double c);

// |b(z)| <= h(|z|) on a grid of R and |sigma(z)| <= |z|^{1-gamma} h(|z|)^gamma
// on a log grid of (1, 1e12].
bool salins_check(const Coefficient& b, const Coefficient& sigma, const Coefficient& h, double gamma);

// `linear:lambda=<r>`, `power:p=<r>`, `zsinz`, `powerlog:a=<r>,b=<r>`,
// `const:c=<r>`, `custom:file=<path>`.
Coefficient parse_coefficient(std::string_view text);

}  // namespace she
