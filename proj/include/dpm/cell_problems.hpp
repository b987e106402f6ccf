#pragma once

#include "dpm/geometry.hpp"
#include "dpm/staggered.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace dpm {

/// Iteration controls for the unit-cell solvers.
///
/// `tol` bounds the per-cell flux imbalance h * |div V| (and the Neumann
/// residual in the same units); `inner_tol` is the relative residual of each
/// inner Krylov solve.
struct CellSolverOptions {
    double tol = 1e-8;
    double inner_tol = 1e-8;
    int max_outer_iterations = 10000;
    int max_inner_iterations = 10000;
};

struct CellSolveStats {
    int outer_iterations = 0;
    long inner_iterations = 0;
    double divergence_residual = 0.0;
    double momentum_residual = 0.0;
    /// No percolating fluid path: the drive is balanced by pressure alone.
    bool blocked = false;
};

/// For the Stokes problem `field` holds (V, Pi); for the Neumann problem the
/// velocity slots hold grad Pi on active faces.
struct CellSolution {
    StaggeredField field;
    CellSolveStats stats;
};

enum class TensorKind {
    filtration_B1,
    acoustic_B2_crack,
    acoustic_B2_pore,
    acoustic_momentum_matrix
};

const char* to_string(TensorKind kind);

struct EffectiveTensor {
    TensorKind kind = TensorKind::filtration_B1;
    /// Symmetrised (B + B^T) / 2.
    Eigen::MatrixXd matrix;
    /// ||B - B^T||_F / ||B||_F before symmetrisation (0 for B = 0).
    double asymmetry = 0.0;
    std::string fingerprint;
    double tolerance = 0.0;
    std::vector<CellSolveStats> axis_stats;
};

/// Periodic Stokes cell problem mu1 lap V - grad Pi + drive = 0, div V = 0,
/// V = 0 on the solid, Pi mean-zero on each fluid component. Solved by
/// conjugate gradients on the pressure Schur complement with
/// IC-preconditioned CG for every viscous solve.
CellSolution solve_filtration_cell(const IndicatorField& cell, double mu1, const Vec3& drive,
                                   const CellSolverOptions& options = {});
CellSolution solve_filtration_cell(const IndicatorField& cell, double mu1, int axis,
                                   const CellSolverOptions& options = {});

/// Column i is the fluid integral of V^i.
EffectiveTensor filtration_tensor(const IndicatorField& cell, double mu1,
                                  const CellSolverOptions& options = {},
                                  std::vector<StaggeredField>* fields = nullptr);

/// Masked Laplace problem lap Pi = 0 with (flux_scale e_axis - grad Pi).n = 0
/// on the solid interface, periodic, mean-zero.
CellSolution solve_neumann_cell(const IndicatorField& cell, int axis, double flux_scale,
                                const CellSolverOptions& options = {});

struct AcousticCellResult {
    EffectiveTensor b2;
    EffectiveTensor momentum;
    double porosity = 0.0;
    /// Flux scale used: 1 for cracks, beta + 1 - m_c for pores.
    double flux_scale = 1.0;
};

/// B2_c = integral of grad Pi^i and the crack momentum matrix m_c I - B2_c.
AcousticCellResult acoustic_tensor_crack(const IndicatorField& cell,
                                         const CellSolverOptions& options = {},
                                         std::vector<StaggeredField>* fields = nullptr);

/// B2_p from the Neumann problem with flux scale beta_c = beta + 1 - m_c and
/// the pore momentum matrix m_p beta_c I - B2_p.
AcousticCellResult acoustic_tensor_pore(const IndicatorField& cell, double beta, double m_c,
                                        const CellSolverOptions& options = {},
                                        std::vector<StaggeredField>* fields = nullptr);

/// Smallest eigenvalue of the symmetric part.
double min_eigenvalue(const Eigen::MatrixXd& m);
double max_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace dpm
