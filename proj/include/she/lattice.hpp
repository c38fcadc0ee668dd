#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>
#include <memory>
#include <string>
#include <string_view>

#include "she/errors.hpp"

namespace she {

// Periodic box [-l/2, l/2)^d with n points per axis, d in {1, 2}. Fields are
// flat arrays, row-major in d=2 (site (i, j) at i * n1 + j).
struct Lattice {
    int dim = 1;
    std::array<double, 2> extent{1, 1};
    std::array<Eigen::Index, 2> points{1, 1};

    static Lattice line(double extent, Eigen::Index points);
    static Lattice square(double extent, Eigen::Index points);

    void validate() const;
    Eigen::Index sites() const noexcept { return dim == 1 ? points[0] : points[0] * points[1]; }
    double spacing(int axis = 0) const noexcept { return extent[axis] / points[axis]; }
    double cell_volume() const noexcept { return dim == 1 ? spacing(0) : spacing(0) * spacing(1); }
    // Coordinates (i - n/2) dx along one axis.
    Eigen::ArrayXd axis_coordinates(int axis) const;
    // |x| of every site.
    Eigen::ArrayXd radii() const;

    // Modes of the real-to-half-complex transform: the last axis keeps
    // n/2 + 1 frequencies. d=2 modes are row-major over (k0, k1).
    Eigen::Index modes() const noexcept;
    // |xi|^2 per mode with xi = 2 pi k / l in FFT order.
    Eigen::ArrayXd mode_norm2() const;
    // Multiplicity of each half-spectrum mode in the full spectrum (1 or 2).
    Eigen::ArrayXd mode_weight() const;

    std::string spec() const;

    bool operator==(const Lattice&) const = default;
};

// `lattice:dim=<1|2>,extent=<r>,points=<n>`; the prefix `lattice:` is optional.
Lattice parse_lattice(std::string_view text);

// Real-to-complex transforms over a lattice. Holds FFT plans and scratch, so
// each thread needs its own instance.
class SpectralTransform {
public:
    explicit SpectralTransform(const Lattice& lattice);
    ~SpectralTransform();
    SpectralTransform(SpectralTransform&&) noexcept;
    SpectralTransform& operator=(SpectralTransform&&) noexcept;

    const Lattice& lattice() const noexcept { return lattice_; }

    void forward(const Eigen::ArrayXd& field, Eigen::ArrayXcd& modes);
    // Inverse including the 1/n^d normalization.
    void inverse(const Eigen::ArrayXcd& modes, Eigen::ArrayXd& field);
    // field <- F^{-1}[multiplier * F field].
    void apply_multiplier(Eigen::ArrayXd& field, const Eigen::ArrayXd& multiplier);

private:
    struct Impl;
    Lattice lattice_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace she
