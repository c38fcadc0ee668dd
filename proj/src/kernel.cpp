#include "she/kernel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "she/quadrature.hpp"
#include "she/spec_text.hpp"

namespace she {

namespace {

constexpr double kPi = std::numbers::pi;

void check_dim(int dim) {
    if (dim < 1) throw HypothesisError("kernel dimension must be a positive integer");
}

void check_positive(double v, const char* what) {
    if (!(v > 0) || !std::isfinite(v)) throw HypothesisError(std::string(what) + " must be positive and finite");
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

double sphere_area(int dim) {
    check_dim(dim);
    const double half = dim / 2.0;
    return 2.0 * std::pow(kPi, half) / std::tgamma(half);
}

double riesz_spectral_constant(double beta, int dim) {
    check_dim(dim);
    if (!(beta > 0 && beta < dim)) throw HypothesisError("Riesz exponent must satisfy 0 < beta < d");
    // s = e^y turns the Gaussian-mixture integral into a smooth integrand that
    // decays like exp(-decay * y) for large y and double-exponentially for y -> -inf.
    const double decay = (dim - beta) / 2.0;
    auto integrand = [decay](double y) { return std::exp(-decay * y - 0.25 * std::exp(-y)); };
    const double lower = -6.0;
    const double upper = 40.0;
    const auto body = quad::integrate<double>(integrand, lower, upper, 1e-13, 0.0, 4000);
    // exp(-e^{-y}/4) = 1 - e^{-y}/4 + O(e^{-2y}) on [upper, inf).
    const double tail = std::exp(-decay * upper) / decay -
                        0.25 * std::exp(-(decay + 1) * upper) / (decay + 1);
    return std::pow(kPi, dim / 2.0) / std::tgamma(beta / 2.0) * (body.value + tail);
}

CorrelationKernel CorrelationKernel::white(int dim) {
    check_dim(dim);
    return CorrelationKernel(KernelKind::White, dim);
}

CorrelationKernel CorrelationKernel::riesz(double beta, int dim) {
    check_dim(dim);
    if (!(beta > 0 && beta < dim))
        throw HypothesisError("Riesz kernel requires 0 < beta < d (got beta=" + format_number(beta) +
                              ", d=" + std::to_string(dim) + ")");
    CorrelationKernel k(KernelKind::Riesz, dim);
    k.beta_ = beta;
    k.riesz_c_ = riesz_spectral_constant(beta, dim);
    k.spectral_prefactor_ = k.riesz_c_;
    return k;
}

CorrelationKernel CorrelationKernel::gaussian(double scale, int dim) {
    check_dim(dim);
    check_positive(scale, "Gaussian scale");
    CorrelationKernel k(KernelKind::Gaussian, dim);
    k.scale_ = scale;
    k.spectral_prefactor_ = std::pow(2 * kPi * scale * scale, dim / 2.0);
    return k;
}

CorrelationKernel CorrelationKernel::exponential(double scale, int dim) {
    check_dim(dim);
    check_positive(scale, "exponential scale");
    CorrelationKernel k(KernelKind::Exponential, dim);
    k.scale_ = scale;
    k.spectral_prefactor_ = std::pow(2.0, dim) * std::pow(kPi, (dim - 1) / 2.0) *
                            std::tgamma((dim + 1) / 2.0) * std::pow(scale, dim);
    return k;
}

CorrelationKernel CorrelationKernel::matern(double nu, double scale, int dim) {
    check_dim(dim);
    check_positive(nu, "Matern smoothness");
    check_positive(scale, "Matern scale");
    CorrelationKernel k(KernelKind::Matern, dim);
    k.nu_ = nu;
    k.scale_ = scale;
    k.spectral_prefactor_ = std::pow(2 * std::sqrt(kPi), dim) * std::tgamma(nu + dim / 2.0) /
                            std::tgamma(nu) * std::pow(scale, dim);
    return k;
}

std::optional<double> CorrelationKernel::correlation_radial(double r) const {
    r = std::abs(r);
    switch (kind_) {
        case KernelKind::White:
            return std::nullopt;
        case KernelKind::Riesz:
            if (r == 0) return std::numeric_limits<double>::infinity();
            return std::pow(r, -beta_);
        case KernelKind::Gaussian:
            return std::exp(-r * r / (2 * scale_ * scale_));
        case KernelKind::Exponential:
            return std::exp(-r / scale_);
        case KernelKind::Matern: {
            if (r == 0) return 1.0;
            const double z = r / scale_;
            return std::pow(2.0, 1 - nu_) / std::tgamma(nu_) * std::pow(z, nu_) * std::cyl_bessel_k(nu_, z);
        }
    }
    return std::nullopt;
}

double CorrelationKernel::spectral_radial(double rho) const {
    rho = std::abs(rho);
    switch (kind_) {
        case KernelKind::White:
            return 1.0;
        case KernelKind::Riesz:
            if (rho == 0) return std::numeric_limits<double>::infinity();
            return spectral_prefactor_ * std::pow(rho, beta_ - dim_);
        case KernelKind::Gaussian:
            return spectral_prefactor_ * std::exp(-0.5 * scale_ * scale_ * rho * rho);
        case KernelKind::Exponential:
            return spectral_prefactor_ * std::pow(1 + scale_ * scale_ * rho * rho, -(dim_ + 1) / 2.0);
        case KernelKind::Matern:
            return spectral_prefactor_ * std::pow(1 + scale_ * scale_ * rho * rho, -(nu_ + dim_ / 2.0));
    }
    return 0.0;
}

double CorrelationKernel::spectral_tail_exponent() const noexcept {
    switch (kind_) {
        case KernelKind::White: return 0.0;
        case KernelKind::Riesz: return beta_ - dim_;
        case KernelKind::Gaussian: return -std::numeric_limits<double>::infinity();
        case KernelKind::Exponential: return -(dim_ + 1.0);
        case KernelKind::Matern: return -(2 * nu_ + dim_);
    }
    return 0.0;
}

double CorrelationKernel::spectral_origin_exponent() const noexcept {
    return kind_ == KernelKind::Riesz ? beta_ - dim_ : 0.0;
}

std::string CorrelationKernel::spec() const {
    std::string out;
    switch (kind_) {
        case KernelKind::White: out = "white"; break;
        case KernelKind::Riesz: out = "riesz:beta=" + format_number(beta_); break;
        case KernelKind::Gaussian: out = "gaussian:scale=" + format_number(scale_); break;
        case KernelKind::Exponential: out = "exp:scale=" + format_number(scale_); break;
        case KernelKind::Matern:
            out = "matern:nu=" + format_number(nu_) + ",scale=" + format_number(scale_);
            break;
    }
    return out + ",dim=" + std::to_string(dim_);
}

std::optional<double> eval_correlation(const CorrelationKernel& kernel,
                                       const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != kernel.dimension())
        throw HypothesisError("eval_correlation: point dimension " + std::to_string(x.size()) +
                              " does not match kernel dimension " + std::to_string(kernel.dimension()));
    return kernel.correlation_radial(x.norm());
}

double eval_spectral_density(const CorrelationKernel& kernel, const Eigen::Ref<const Eigen::VectorXd>& xi) {
    if (xi.size() != kernel.dimension())
        throw HypothesisError("eval_spectral_density: frequency dimension " + std::to_string(xi.size()) +
                              " does not match kernel dimension " + std::to_string(kernel.dimension()));
    return kernel.spectral_radial(xi.norm());
}

CorrelationKernel parse_kernel(std::string_view text) {
    auto spec = SpecText::parse(text);
    const double dim_value = spec.number_or("dim", 1.0);
    if (dim_value != std::floor(dim_value) || dim_value < 1)
        throw SpecError("kernel 'dim' must be a positive integer");
    const int dim = static_cast<int>(dim_value);
    auto build = [&]() -> CorrelationKernel {
        if (spec.name == "white") return CorrelationKernel::white(dim);
        if (spec.name == "riesz") return CorrelationKernel::riesz(spec.number("beta"), dim);
        if (spec.name == "gaussian") return CorrelationKernel::gaussian(spec.number("scale"), dim);
        if (spec.name == "exp") return CorrelationKernel::exponential(spec.number("scale"), dim);
        if (spec.name == "matern") {
            const double nu = spec.number("nu");
            return CorrelationKernel::matern(nu, spec.number("scale"), dim);
        }
        throw SpecError("unknown kernel '" + spec.name + "'", 0);
    };
    try {
        auto kernel = build();
        spec.finish();
        return kernel;
    } catch (const HypothesisError& e) {
        throw SpecError(std::string("invalid kernel '") + std::string(text) + "': " + e.what());
    }
}

}  // namespace she
