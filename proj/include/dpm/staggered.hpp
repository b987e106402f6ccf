#pragma once

#include "dpm/geometry.hpp"
#include "dpm/lattice.hpp"

#include <Eigen/Sparse>

#include <array>
#include <cstddef>
#include <vector>

namespace dpm {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Velocity components on cell faces and pressure at cell centres.
/// Inactive faces and solid cells hold zero.
struct StaggeredField {
    Lattice lattice;
    std::array<std::vector<double>, 3> velocity;
    std::vector<double> pressure;

    StaggeredField() = default;
    explicit StaggeredField(const Lattice& lat);

    /// Face-to-centre interpolated velocity of one cell.
    Vec3 cell_velocity(std::size_t cell) const;
    double max_abs_velocity() const;
};

/// MAC discretisation of a masked fluid region.
///
/// A face is active when both neighbouring cells are fluid. No-slip is exact:
/// a tangential neighbour face touching one solid cell lies on the wall and
/// contributes a zero value; a neighbour face buried between two solid cells
/// sits half a cell beyond the wall and is replaced by the mirrored value.
class StaggeredSpace {
public:
    explicit StaggeredSpace(const IndicatorField& mask);

    const IndicatorField& mask() const noexcept { return mask_; }
    const Lattice& lattice() const noexcept { return mask_.lattice(); }
    int dim() const noexcept { return mask_.dim(); }

    struct FaceRef {
        int axis;
        std::size_t face;
    };

    std::size_t num_velocity() const noexcept { return faces_.size(); }
    std::size_t num_pressure() const noexcept { return cells_.size(); }
    const std::vector<FaceRef>& velocity_faces() const noexcept { return faces_; }
    const std::vector<std::size_t>& pressure_cells() const noexcept { return cells_; }
    std::ptrdiff_t velocity_id(int axis, std::size_t face) const noexcept {
        return face_id_[axis][face];
    }
    std::ptrdiff_t pressure_id(std::size_t cell) const noexcept { return cell_id_[cell]; }

    /// Vector Laplacian on active faces (negative semidefinite), scaled by 1/h^2.
    const SparseMatrix& laplacian() const noexcept { return laplacian_; }
    /// Divergence from active faces to fluid cells, scaled by 1/h. The
    /// discrete gradient is the negative transpose.
    const SparseMatrix& divergence() const noexcept { return divergence_; }

    /// Connected components of fluid cells linked through active faces.
    const std::vector<int>& pressure_components() const noexcept { return components_; }
    int num_pressure_components() const noexcept { return num_components_; }

    /// False when some block of the velocity Laplacian has no wall contact,
    /// i.e. the viscous operator is singular (e.g. a solid-free periodic cell).
    bool viscous_operator_definite() const noexcept { return definite_; }

    Vector gather_velocity(const StaggeredField& field) const;
    Vector gather_pressure(const StaggeredField& field) const;
    void scatter_velocity(const Vector& v, StaggeredField& field) const;
    void scatter_pressure(const Vector& p, StaggeredField& field) const;

    /// Unit drive along `axis` on the active faces of that axis.
    Vector unit_drive(int axis) const;
    /// Removes the mean of p on each pressure component.
    void project_mean_zero(Vector& p) const;

private:
    void build();

    IndicatorField mask_;
    std::vector<FaceRef> faces_;
    std::vector<std::size_t> cells_;
    std::array<std::vector<std::ptrdiff_t>, 3> face_id_;
    std::vector<std::ptrdiff_t> cell_id_;
    SparseMatrix laplacian_;
    SparseMatrix divergence_;
    std::vector<int> components_;
    int num_components_ = 0;
    bool definite_ = true;
};

}  // namespace dpm
