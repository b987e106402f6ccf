#include "dpm/cell_problems.hpp"

#include "dpm/error.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>

namespace dpm {

namespace {

using InnerSolver =
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>;

class KrylovSolve {
public:
    KrylovSolve(const SparseMatrix& matrix, const CellSolverOptions& options) {
        solver_.setTolerance(options.inner_tol);
        solver_.setMaxIterations(options.max_inner_iterations);
        solver_.compute(matrix);
        if (solver_.info() != Eigen::Success) {
            throw ConvergenceError("incomplete Cholesky preconditioner failed", 0.0, 0);
        }
    }

    Vector solve(const Vector& rhs) {
        if (rhs.squaredNorm() == 0.0) return Vector::Zero(rhs.size());
        Vector x = solver_.solve(rhs);
        iterations_ += solver_.iterations();
        if (solver_.info() != Eigen::Success) {
            throw ConvergenceError("inner Krylov solve did not converge", solver_.error(),
                                   solver_.iterations());
        }
        return x;
    }

    long iterations() const { return iterations_; }

private:
    InnerSolver solver_;
    long iterations_ = 0;
};

void require_fluid(const IndicatorField& cell) {
    if (cell.empty()) throw GeometryError("empty fluid domain");
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Eigen::MatrixXd face_integrals(const StaggeredSpace& space, const Vector& values) {
    const int d = space.dim();
    Eigen::VectorXd col = Eigen::VectorXd::Zero(d);
    const auto& faces = space.velocity_faces();
    for (std::size_t i = 0; i < faces.size(); ++i) {
        col[faces[i].axis] += values[static_cast<Eigen::Index>(i)];
    }
    return col * space.lattice().cell_volume();
}

EffectiveTensor assemble(TensorKind kind, const Eigen::MatrixXd& raw, const IndicatorField& cell,
                         double tol) {
    EffectiveTensor t;
    t.kind = kind;
    const double norm = raw.norm();
    t.asymmetry = norm > 0.0 ? (raw - raw.transpose()).norm() / norm : 0.0;
    t.matrix = 0.5 * (raw + raw.transpose());
    t.fingerprint = cell.fingerprint();
    t.tolerance = tol;
    return t;
}

}  // namespace

const char* to_string(TensorKind kind) {
    switch (kind) {
    case TensorKind::filtration_B1: return "filtration_B1";
    case TensorKind::acoustic_B2_crack: return "acoustic_B2_crack";
    case TensorKind::acoustic_B2_pore: return "acoustic_B2_pore";
    case TensorKind::acoustic_momentum_matrix: return "acoustic_momentum_matrix";
    }
    return "unknown";
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().maxCoeff();
}

/// Pressure drive . x on every fluid component, with coordinates unwrapped
/// along the component. Consistent only when no component winds along a
/// driven axis; then grad Pi = drive on every active face and V = 0 exactly.
static Vector lifted_potential(const StaggeredSpace& space, const Vec3& drive) {
    const Lattice& lat = space.lattice();
    const int n = lat.n();
    const auto& cells = space.pressure_cells();
    Vector pi = Vector::Zero(static_cast<Eigen::Index>(cells.size()));
    std::vector<char> seen(cells.size(), 0);
    std::vector<std::pair<std::size_t, Coord>> queue;
    for (std::size_t start = 0; start < cells.size(); ++start) {
        if (seen[start]) continue;
        seen[start] = 1;
        queue.assign(1, {start, lat.cell_coords(cells[start])});
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const auto [id, x] = queue[head];
            double value = 0.0;
            for (int a = 0; a < lat.dim(); ++a) value += drive[a] * (x[a] + 0.5) / n;
            pi[static_cast<Eigen::Index>(id)] = value;
            for (int a = 0; a < lat.dim(); ++a) {
                for (int step : {-1, 1}) {
                    Coord y = x;
                    y[a] += step;
                    const std::ptrdiff_t c = lat.cell_at(y);
                    if (c < 0) continue;
                    const std::ptrdiff_t nid = space.pressure_id(static_cast<std::size_t>(c));
                    if (nid < 0 || seen[static_cast<std::size_t>(nid)]) continue;
                    seen[static_cast<std::size_t>(nid)] = 1;
                    queue.push_back({static_cast<std::size_t>(nid), y});
                }
            }
        }
    }
    space.project_mean_zero(pi);
    return pi;
}

CellSolution solve_filtration_cell(const IndicatorField& cell, double mu1, const Vec3& drive,
                                   const CellSolverOptions& options) {
    if (!(mu1 > 0.0) || std::isinf(mu1)) throw InvalidInput("mu1 must be positive and finite");
    if (!(options.tol > 0.0)) throw InvalidInput("solver tolerance must be positive");
    require_fluid(cell);
    const StaggeredSpace space(cell);
    if (!space.viscous_operator_definite()) {
        throw GeometryError("fluid region has no wall contact; the cell permeability is unbounded");
    }
    const double h = space.lattice().h();
    const SparseMatrix& div = space.divergence();
    const SparseMatrix viscous = -mu1 * space.laplacian();

    Vector f = Vector::Zero(static_cast<Eigen::Index>(space.num_velocity()));
    for (int a = 0; a < space.dim(); ++a) {
        if (drive[a] != 0.0) f += drive[a] * space.unit_drive(a);
    }

    CellSolution out{StaggeredField(space.lattice()), {}};
    out.stats.blocked = !fluid_percolates(cell);

    // A drive along non-percolating axes only is a discrete gradient.
    const auto percolating = percolating_axes(cell);
    bool gradient_drive = true;
    for (int a = 0; a < space.dim(); ++a) gradient_drive = gradient_drive && (drive[a] == 0.0 || !percolating[a]);
    if (gradient_drive) {
        const Vector pressure = lifted_potential(space, drive);
        out.stats.momentum_residual = max_abs(-(div.transpose() * pressure) - f);
        space.scatter_pressure(pressure, out.field);
        return out;
    }

    KrylovSolve inner(viscous, options);

    // CG on S Pi = -D A^{-1} f, S = D A^{-1} D^T.
    Vector velocity = inner.solve(f);
    Vector pressure = Vector::Zero(static_cast<Eigen::Index>(space.num_pressure()));
    Vector residual = -(div * velocity);
    space.project_mean_zero(residual);
    Vector direction = residual;
    double rr = residual.squaredNorm();
    int it = 0;
    double flux_imbalance = h * max_abs(div * velocity);
    while (flux_imbalance > options.tol) {
        if (it >= options.max_outer_iterations) {
            throw ConvergenceError("Stokes cell solve hit the outer iteration cap", flux_imbalance, it);
        }
        const Vector w = inner.solve(div.transpose() * direction);
        const Vector sp = div * w;
        const double curvature = direction.dot(sp);
        if (!(curvature > 0.0)) break;
        const double alpha = rr / curvature;
        pressure += alpha * direction;
        velocity += alpha * w;
        residual -= alpha * sp;
        space.project_mean_zero(residual);
        const double rr_next = residual.squaredNorm();
        direction = residual + (rr_next / rr) * direction;
        rr = rr_next;
        ++it;
        flux_imbalance = h * max_abs(div * velocity);
    }
    if (flux_imbalance > options.tol) {
        throw ConvergenceError("Stokes cell solve stagnated", flux_imbalance, it);
    }
    space.project_mean_zero(pressure);

    out.stats.outer_iterations = it;
    out.stats.inner_iterations = inner.iterations();
    out.stats.divergence_residual = flux_imbalance;
    out.stats.momentum_residual = max_abs(viscous * velocity - div.transpose() * pressure - f);
    space.scatter_velocity(velocity, out.field);
    space.scatter_pressure(pressure, out.field);
    return out;
}

CellSolution solve_filtration_cell(const IndicatorField& cell, double mu1, int axis,
                                   const CellSolverOptions& options) {
    if (axis < 0 || axis >= cell.dim()) throw InvalidInput("drive axis out of range");
    Vec3 drive{};
    drive[axis] = 1.0;
    return solve_filtration_cell(cell, mu1, drive, options);
}

EffectiveTensor filtration_tensor(const IndicatorField& cell, double mu1,
                                  const CellSolverOptions& options,
                                  std::vector<StaggeredField>* fields) {
    const int d = cell.dim();
    const StaggeredSpace space(cell);
    Eigen::MatrixXd raw(d, d);
    std::vector<CellSolveStats> stats;
    for (int i = 0; i < d; ++i) {
        CellSolution sol = solve_filtration_cell(cell, mu1, i, options);
        raw.col(i) = face_integrals(space, space.gather_velocity(sol.field));
        stats.push_back(sol.stats);
        if (fields) fields->push_back(std::move(sol.field));
    }
    EffectiveTensor t = assemble(TensorKind::filtration_B1, raw, cell, options.tol);
    t.axis_stats = std::move(stats);
    return t;
}

CellSolution solve_neumann_cell(const IndicatorField& cell, int axis, double flux_scale,
                                const CellSolverOptions& options) {
    if (axis < 0 || axis >= cell.dim()) throw InvalidInput("drive axis out of range");
    if (!(options.tol > 0.0)) throw InvalidInput("solver tolerance must be positive");
    require_fluid(cell);
    const StaggeredSpace space(cell);
    const double h = space.lattice().h();
    const SparseMatrix& div = space.divergence();

    // D (s e - grad Pi) = 0 with grad = -D^T gives D D^T Pi = -s D e.
    SparseMatrix laplace = div * SparseMatrix(div.transpose());
    const Vector drive = flux_scale * space.unit_drive(axis);
    Vector rhs = -(div * drive);
    space.project_mean_zero(rhs);

    // One pinned cell per component makes the operator definite without
    // changing the solution of the consistent system.
    const double pin = 1.0 / (h * h);
    std::vector<std::uint8_t> pinned(static_cast<std::size_t>(space.num_pressure_components()), 0);
    for (std::size_t i = 0; i < space.num_pressure(); ++i) {
        const int comp = space.pressure_components()[i];
        if (!pinned[comp]) {
            pinned[comp] = 1;
            laplace.coeffRef(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += pin;
        }
    }
    laplace.makeCompressed();

    CellSolution out{StaggeredField(space.lattice()), {}};
    Vector pressure = Vector::Zero(static_cast<Eigen::Index>(space.num_pressure()));
    double imbalance = 0.0;
    if (rhs.squaredNorm() > 0.0) {
        KrylovSolve solver(laplace, options);
        // Defect correction until the interface flux balance meets the tolerance.
        int sweeps = 0;
        Vector pinned_solution = Vector::Zero(rhs.size());
        while (true) {
            pinned_solution += solver.solve(rhs - laplace * pinned_solution);
            ++sweeps;
            pressure = pinned_solution;
            space.project_mean_zero(pressure);
            imbalance = h * max_abs(div * (drive + div.transpose() * pressure));
            if (imbalance <= options.tol || sweeps >= options.max_outer_iterations || sweeps >= 50) break;
        }
        out.stats.outer_iterations = sweeps;
        out.stats.inner_iterations = solver.iterations();
        if (imbalance > options.tol) {
            throw ConvergenceError("Neumann cell solve did not reach the tolerance", imbalance,
                                   out.stats.inner_iterations);
        }
    }
    out.stats.divergence_residual = imbalance;
    out.stats.momentum_residual = imbalance;
    out.stats.blocked = !fluid_percolates(cell);
    const Vector gradient = -(div.transpose() * pressure);
    space.scatter_velocity(gradient, out.field);
    space.scatter_pressure(pressure, out.field);
    return out;
}

namespace {

AcousticCellResult acoustic_tensor(const IndicatorField& cell, double flux_scale,
                                   double phase_porosity_weight, TensorKind kind,
                                   const CellSolverOptions& options,
                                   std::vector<StaggeredField>* fields) {
    require_fluid(cell);
    const int d = cell.dim();
    const StaggeredSpace space(cell);
    Eigen::MatrixXd raw(d, d);
    std::vector<CellSolveStats> stats;
    for (int i = 0; i < d; ++i) {
        CellSolution sol = solve_neumann_cell(cell, i, flux_scale, options);
        raw.col(i) = face_integrals(space, space.gather_velocity(sol.field));
        stats.push_back(sol.stats);
        if (fields) fields->push_back(std::move(sol.field));
    }
    AcousticCellResult result;
    result.porosity = porosity(cell);
    result.flux_scale = flux_scale;
    result.b2 = assemble(kind, raw, cell, options.tol);
    result.b2.axis_stats = stats;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);
    result.momentum = assemble(TensorKind::acoustic_momentum_matrix,
                               phase_porosity_weight * identity - raw, cell, options.tol);
    result.momentum.axis_stats = std::move(stats);
    return result;
}

}  // namespace

AcousticCellResult acoustic_tensor_crack(const IndicatorField& cell,
                                         const CellSolverOptions& options,
                                         std::vector<StaggeredField>* fields) {
    require_fluid(cell);
    return acoustic_tensor(cell, 1.0, porosity(cell), TensorKind::acoustic_B2_crack, options,
                           fields);
}

AcousticCellResult acoustic_tensor_pore(const IndicatorField& cell, double beta, double m_c,
                                        const CellSolverOptions& options,
                                        std::vector<StaggeredField>* fields) {
    if (!(beta > 0.0) || std::isinf(beta)) throw InvalidInput("beta must be positive");
    if (!(m_c >= 0.0 && m_c <= 1.0)) throw InvalidInput("crack porosity must lie in [0, 1]");
    require_fluid(cell);
    const double beta_c = beta + 1.0 - m_c;
    return acoustic_tensor(cell, beta_c, porosity(cell) * beta_c, TensorKind::acoustic_B2_pore,
                           options, fields);
}

}  // namespace dpm
