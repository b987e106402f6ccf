#include "dpm/lattice.hpp"

#include "dpm/error.hpp"

#include <string>

namespace dpm {

const char* to_string(ErrorCategory category) {
    switch (category) {
    case ErrorCategory::invalid_input: return "invalid_input";
    case ErrorCategory::convergence: return "convergence";
    case ErrorCategory::infeasible_geometry: return "infeasible_geometry";
    case ErrorCategory::io: return "io";
    }
    return "unknown";
}

Lattice::Lattice(int dim, int n, bool periodic) : dim_(dim), n_(n), periodic_(periodic) {
    if (dim != 2 && dim != 3) {
        throw InvalidInput("lattice dimension must be 2 or 3, got " + std::to_string(dim));
    }
    if (n < 1) {
        throw InvalidInput("lattice resolution must be positive");
    }
    num_cells_ = 1;
    for (int a = 0; a < dim; ++a) num_cells_ *= static_cast<std::size_t>(n);
    for (int a = 0; a < 3; ++a) {
        const Coord e = face_extent(a);
        num_faces_[a] = a < dim ? static_cast<std::size_t>(e[0]) * e[1] * e[2] : 0;
    }
}

double Lattice::cell_volume() const noexcept {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= h();
    return v;
}

Coord Lattice::cell_extent() const noexcept {
    return {n_, n_, dim_ == 3 ? n_ : 1};
}

Coord Lattice::face_extent(int axis) const noexcept {
    Coord e = cell_extent();
    if (axis < dim_ && !periodic_) e[axis] += 1;
    return e;
}

Coord Lattice::cell_coords(std::size_t cell) const noexcept {
    const auto n = static_cast<std::size_t>(n_);
    Coord c{};
    c[0] = static_cast<int>(cell % n);
    c[1] = static_cast<int>((cell / n) % n);
    c[2] = static_cast<int>(cell / (n * n));
    return c;
}

std::size_t Lattice::cell_index(const Coord& c) const noexcept {
    const auto n = static_cast<std::size_t>(n_);
    return static_cast<std::size_t>(c[0]) +
           n * (static_cast<std::size_t>(c[1]) + n * static_cast<std::size_t>(c[2]));
}

std::ptrdiff_t Lattice::cell_at(Coord c) const noexcept {
    const Coord e = cell_extent();
    for (int a = 0; a < 3; ++a) {
        if (c[a] >= 0 && c[a] < e[a]) continue;
        if (!periodic_ || a >= dim_) return -1;
        c[a] = ((c[a] % e[a]) + e[a]) % e[a];
    }
    return static_cast<std::ptrdiff_t>(cell_index(c));
}

Coord Lattice::face_coords(int axis, std::size_t face) const noexcept {
    const Coord e = face_extent(axis);
    Coord c{};
    c[0] = static_cast<int>(face % e[0]);
    c[1] = static_cast<int>((face / e[0]) % e[1]);
    c[2] = static_cast<int>(face / (static_cast<std::size_t>(e[0]) * e[1]));
    return c;
}

std::size_t Lattice::face_index(int axis, const Coord& c) const noexcept {
    const Coord e = face_extent(axis);
    return static_cast<std::size_t>(c[0]) +
           static_cast<std::size_t>(e[0]) *
               (static_cast<std::size_t>(c[1]) +
                static_cast<std::size_t>(e[1]) * static_cast<std::size_t>(c[2]));
}

std::ptrdiff_t Lattice::face_at(int axis, Coord c) const noexcept {
    const Coord e = face_extent(axis);
    for (int a = 0; a < 3; ++a) {
        if (c[a] >= 0 && c[a] < e[a]) continue;
        if (!periodic_ || a >= dim_) return -1;
        c[a] = ((c[a] % e[a]) + e[a]) % e[a];
    }
    return static_cast<std::ptrdiff_t>(face_index(axis, c));
}

std::ptrdiff_t Lattice::face_low_cell(int axis, std::size_t face) const noexcept {
    Coord c = face_coords(axis, face);
    c[axis] -= 1;
    return cell_at(c);
}

std::ptrdiff_t Lattice::face_high_cell(int axis, std::size_t face) const noexcept {
    return cell_at(face_coords(axis, face));
}

Vec3 Lattice::cell_center(std::size_t cell) const noexcept {
    const Coord c = cell_coords(cell);
    Vec3 x{};
    for (int a = 0; a < dim_; ++a) x[a] = (c[a] + 0.5) * h();
    return x;
}

Vec3 Lattice::face_center(int axis, std::size_t face) const noexcept {
    const Coord c = face_coords(axis, face);
    Vec3 x{};
    for (int a = 0; a < dim_; ++a) x[a] = (a == axis ? c[a] : c[a] + 0.5) * h();
    return x;
}

}  // namespace dpm
