#pragma once

#include <array>
#include <cstddef>

namespace dpm {

using Coord = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

/// Uniform Cartesian grid of n^d cubic cells covering the unit square/cube.
///
/// Cells are numbered x-fastest. Faces normal to `axis` are numbered the same
/// way over their own extent: on a periodic lattice there are n faces per
/// line (face k sits on the low side of cell k), on a bounded lattice n + 1
/// (face n is the high wall). Unused trailing axes have extent 1.
class Lattice {
public:
    Lattice() = default;
    Lattice(int dim, int n, bool periodic);

    int dim() const noexcept { return dim_; }
    int n() const noexcept { return n_; }
    bool periodic() const noexcept { return periodic_; }
    double h() const noexcept { return 1.0 / n_; }
    double cell_volume() const noexcept;

    std::size_t num_cells() const noexcept { return num_cells_; }
    std::size_t num_faces(int axis) const noexcept { return num_faces_[axis]; }

    Coord cell_extent() const noexcept;
    Coord face_extent(int axis) const noexcept;

    Coord cell_coords(std::size_t cell) const noexcept;
    std::size_t cell_index(const Coord& c) const noexcept;
    /// Wraps on periodic lattices; returns -1 outside a bounded one.
    std::ptrdiff_t cell_at(Coord c) const noexcept;

    Coord face_coords(int axis, std::size_t face) const noexcept;
    std::size_t face_index(int axis, const Coord& c) const noexcept;
    std::ptrdiff_t face_at(int axis, Coord c) const noexcept;

    /// Cells on the low and high side of a face (-1 when outside).
    std::ptrdiff_t face_low_cell(int axis, std::size_t face) const noexcept;
    std::ptrdiff_t face_high_cell(int axis, std::size_t face) const noexcept;

    Vec3 cell_center(std::size_t cell) const noexcept;
    Vec3 face_center(int axis, std::size_t face) const noexcept;

    bool operator==(const Lattice&) const = default;

private:
    int dim_ = 0;
    int n_ = 0;
    bool periodic_ = true;
    std::size_t num_cells_ = 0;
    std::array<std::size_t, 3> num_faces_{};
};

}  // namespace dpm
