#include "she/lattice.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "she/spec_text.hpp"

namespace she {

namespace {

bool is_power_of_two(Eigen::Index n) { return n >= 2 && (n & (n - 1)) == 0; }

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

}  // namespace

Lattice Lattice::line(double extent, Eigen::Index points) {
    Lattice l;
    l.dim = 1;
    l.extent = {extent, extent};
    l.points = {points, 1};
    l.validate();
    return l;
}

Lattice Lattice::square(double extent, Eigen::Index points) {
    Lattice l;
    l.dim = 2;
    l.extent = {extent, extent};
    l.points = {points, points};
    l.validate();
    return l;
}

void Lattice::validate() const {
    if (dim != 1 && dim != 2) throw HypothesisError("lattice dimension must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
        if (!(extent[a] > 0) || !std::isfinite(extent[a])) throw HypothesisError("lattice extent must be positive");
        if (!is_power_of_two(points[a])) throw HypothesisError("lattice points must be a power of two >= 2");
    }
    if (sites() > (Eigen::Index{1} << 24)) throw HypothesisError("lattice exceeds 2^24 sites");
}

Eigen::ArrayXd Lattice::axis_coordinates(int axis) const {
    const Eigen::Index n = points[axis];
    return (Eigen::ArrayXd::LinSpaced(n, 0, static_cast<double>(n - 1)) - static_cast<double>(n / 2)) * spacing(axis);
}

Eigen::ArrayXd Lattice::radii() const {
    const Eigen::ArrayXd x0 = axis_coordinates(0);
    if (dim == 1) return x0.abs();
    const Eigen::ArrayXd x1 = axis_coordinates(1);
    Eigen::ArrayXd r(sites());
    for (Eigen::Index i = 0; i < points[0]; ++i)
        r.segment(i * points[1], points[1]) = (x0[i] * x0[i] + x1.square()).sqrt();
    return r;
}

Eigen::Index Lattice::modes() const noexcept {
    return dim == 1 ? points[0] / 2 + 1 : points[0] * (points[1] / 2 + 1);
}

Eigen::ArrayXd Lattice::mode_norm2() const {
    auto freq = [&](int axis, Eigen::Index k) {
        const Eigen::Index n = points[axis];
        const Eigen::Index s = k <= n / 2 ? k : k - n;
        return 2 * std::numbers::pi * static_cast<double>(s) / extent[axis];
    };
    Eigen::ArrayXd out(modes());
    if (dim == 1) {
        for (Eigen::Index k = 0; k < out.size(); ++k) out[k] = std::pow(freq(0, k), 2);
        return out;
    }
    const Eigen::Index h = points[1] / 2 + 1;
    for (Eigen::Index i = 0; i < points[0]; ++i)
        for (Eigen::Index j = 0; j < h; ++j) out[i * h + j] = std::pow(freq(0, i), 2) + std::pow(freq(1, j), 2);
    return out;
}

Eigen::ArrayXd Lattice::mode_weight() const {
    const Eigen::Index n = dim == 1 ? points[0] : points[1];
    const Eigen::Index h = n / 2 + 1;
    Eigen::ArrayXd out(modes());
    for (Eigen::Index m = 0; m < out.size(); ++m) {
        const Eigen::Index j = m % h;
        out[m] = (j == 0 || j == n / 2) ? 1.0 : 2.0;
    }
    return out;
}

std::string Lattice::spec() const {
    return "lattice:dim=" + std::to_string(dim) + ",extent=" + format_number(extent[0]) +
           ",points=" + std::to_string(points[0]);
}

Lattice parse_lattice(std::string_view text) {
    std::string full(text);
    if (full.rfind("lattice", 0) != 0) full = "lattice:" + full;
    auto spec = SpecText::parse(full);
    if (spec.name != "lattice") throw SpecError("expected a lattice spec, got '" + spec.name + "'", 0);
    const double dim = spec.number("dim");
    const double extent = spec.number("extent");
    const double points = spec.number("points");
    spec.finish();
    if (dim != 1 && dim != 2) throw SpecError("lattice 'dim' must be 1 or 2");
    if (points != std::floor(points) || points < 2) throw SpecError("lattice 'points' must be an integer >= 2");
    try {
        const auto n = static_cast<Eigen::Index>(points);
        return dim == 1 ? Lattice::line(extent, n) : Lattice::square(extent, n);
    } catch (const HypothesisError& e) {
        throw SpecError(std::string("invalid lattice '") + std::string(text) + "': " + e.what());
    }
}

struct SpectralTransform::Impl {
    Eigen::FFT<double> rows;
    Eigen::FFT<double> cols;
    std::vector<std::complex<double>> column;
    std::vector<std::complex<double>> column_out;
    Eigen::ArrayXcd scratch;
    Eigen::ArrayXcd spectrum;

    Impl() { rows.SetFlag(Eigen::FFT<double>::HalfSpectrum); }
};

SpectralTransform::SpectralTransform(const Lattice& lattice) : lattice_(lattice), impl_(std::make_unique<Impl>()) {
    lattice_.validate();
    impl_->column.resize(lattice_.points[0]);
    impl_->column_out.resize(lattice_.points[0]);
}

SpectralTransform::~SpectralTransform() = default;
SpectralTransform::SpectralTransform(SpectralTransform&&) noexcept = default;
SpectralTransform& SpectralTransform::operator=(SpectralTransform&&) noexcept = default;

void SpectralTransform::forward(const Eigen::ArrayXd& field, Eigen::ArrayXcd& modes) {
    if (field.size() != lattice_.sites()) throw HypothesisError("field size does not match the lattice");
    modes.resize(lattice_.modes());
    if (lattice_.dim == 1) {
        impl_->rows.fwd(modes.data(), field.data(), lattice_.points[0]);
        return;
    }
    const Eigen::Index n0 = lattice_.points[0], n1 = lattice_.points[1], h = n1 / 2 + 1;
    for (Eigen::Index i = 0; i < n0; ++i) impl_->rows.fwd(modes.data() + i * h, field.data() + i * n1, n1);
    for (Eigen::Index j = 0; j < h; ++j) {
        for (Eigen::Index i = 0; i < n0; ++i) impl_->column[i] = modes[i * h + j];
        impl_->cols.fwd(impl_->column_out.data(), impl_->column.data(), n0);
        for (Eigen::Index i = 0; i < n0; ++i) modes[i * h + j] = impl_->column_out[i];
    }
}

void SpectralTransform::inverse(const Eigen::ArrayXcd& modes, Eigen::ArrayXd& field) {
    if (modes.size() != lattice_.modes()) throw HypothesisError("mode array does not match the lattice");
    field.resize(lattice_.sites());
    if (lattice_.dim == 1) {
        impl_->rows.inv(field.data(), modes.data(), lattice_.points[0]);
        return;
    }
    const Eigen::Index n0 = lattice_.points[0], n1 = lattice_.points[1], h = n1 / 2 + 1;
    auto& tmp = impl_->scratch;
    tmp.resize(modes.size());
    for (Eigen::Index j = 0; j < h; ++j) {
        for (Eigen::Index i = 0; i < n0; ++i) impl_->column[i] = modes[i * h + j];
        impl_->cols.inv(impl_->column_out.data(), impl_->column.data(), n0);
        for (Eigen::Index i = 0; i < n0; ++i) tmp[i * h + j] = impl_->column_out[i];
    }
    for (Eigen::Index i = 0; i < n0; ++i) impl_->rows.inv(field.data() + i * n1, tmp.data() + i * h, n1);
}

void SpectralTransform::apply_multiplier(Eigen::ArrayXd& field, const Eigen::ArrayXd& multiplier) {
    auto& modes = impl_->spectrum;
    forward(field, modes);
    modes *= multiplier;
    inverse(modes, field);
}

}  // namespace she
