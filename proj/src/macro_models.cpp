#include "dpm/macro_models.hpp"

#include "dpm/error.hpp"
#include "dpm/staggered.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dpm {

namespace {

void require_symmetric_psd(const Eigen::MatrixXd& a, int dim, const char* name) {
    if (a.rows() != dim || a.cols() != dim) {
        throw InvalidInput(std::string(name) + " must be a " + std::to_string(dim) + "x" +
                           std::to_string(dim) + " matrix");
    }
    if (!a.allFinite()) throw InvalidInput(std::string(name) + " has non-finite entries");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw InvalidInput(std::string(name) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
        throw InvalidInput(std::string(name) + " is not positive semidefinite");
    }
}

/// Flux faces of a bounded macro lattice: every interior face plus the wall
/// faces carrying a prescribed pressure.
class FaceSystem {
public:
    FaceSystem(const Lattice& lat, const MacroBoundary& bc) : lat_(lat) {
        const int d = lat.dim();
        for (int a = 0; a < d; ++a) {
            id_[a].assign(lat.num_faces(a), -1);
            for (std::size_t f = 0; f < lat.num_faces(a); ++f) {
                const auto lo = lat.face_low_cell(a, f);
                const auto hi = lat.face_high_cell(a, f);
                int side = -1;
                if (lo < 0) side = 0;
                if (hi < 0) side = 1;
                if (side >= 0 && bc.kind[a][side] == BoundaryKind::no_flux) continue;
                id_[a][f] = static_cast<std::ptrdiff_t>(faces_.size());
                faces_.push_back({a, f, side});
            }
        }
        const double inv_h = 1.0 / lat.h();
        std::vector<Eigen::Triplet<double>> t;
        weight_.resize(static_cast<Eigen::Index>(faces_.size()));
        boundary_.setZero(static_cast<Eigen::Index>(faces_.size()));
        for (std::size_t i = 0; i < faces_.size(); ++i) {
            const auto& fr = faces_[i];
            const auto lo = lat.face_low_cell(fr.axis, fr.face);
            const auto hi = lat.face_high_cell(fr.axis, fr.face);
            if (lo >= 0) t.emplace_back(static_cast<int>(lo), static_cast<int>(i), inv_h);
            if (hi >= 0) t.emplace_back(static_cast<int>(hi), static_cast<int>(i), -inv_h);
            weight_[static_cast<Eigen::Index>(i)] = fr.side < 0 ? 1.0 : 0.5;
            if (fr.side == 0) boundary_[static_cast<Eigen::Index>(i)] = -bc.value[fr.axis][0] * inv_h;
            if (fr.side == 1) boundary_[static_cast<Eigen::Index>(i)] = bc.value[fr.axis][1] * inv_h;
        }
        div_.resize(static_cast<Eigen::Index>(lat.num_cells()),
                    static_cast<Eigen::Index>(faces_.size()));
        div_.setFromTriplets(t.begin(), t.end());
    }

    struct Face {
        int axis;
        std::size_t face;
        int side;  ///< -1 interior, 0 low wall, 1 high wall
    };

    const std::vector<Face>& faces() const { return faces_; }
    std::size_t size() const { return faces_.size(); }
    const SparseMatrix& div() const { return div_; }
    const Vector& weight() const { return weight_; }

    /// Face gradient W^{-1}(-D^T q + b) including the wall pressures.
    Vector gradient(const Vector& q) const {
        Vector g = -(div_.transpose() * q) + boundary_;
        return g.cwiseQuotient(weight_);
    }
    const Vector& boundary_term() const { return boundary_; }

    /// Face form of a constant tensor: diagonal entries on every flux face,
    /// off-diagonal entries averaged over the four interior faces sharing a
    /// cell, which keeps K_h W^{-1} symmetric.
    SparseMatrix tensor(const Eigen::MatrixXd& k) const {
        const int d = lat_.dim();
        std::vector<Eigen::Triplet<double>> t;
        for (std::size_t i = 0; i < faces_.size(); ++i) {
            const auto& fr = faces_[i];
            t.emplace_back(static_cast<int>(i), static_cast<int>(i), k(fr.axis, fr.axis));
            if (fr.side >= 0) continue;
            for (int b = 0; b < d; ++b) {
                if (b == fr.axis || k(fr.axis, b) == 0.0) continue;
                for (const auto cell : {lat_.face_low_cell(fr.axis, fr.face),
                                        lat_.face_high_cell(fr.axis, fr.face)}) {
                    Coord c = lat_.cell_coords(static_cast<std::size_t>(cell));
                    for (int s = 0; s < 2; ++s) {
                        Coord fc = c;
                        fc[b] += s;
                        const auto f = lat_.face_at(b, fc);
                        if (f < 0) continue;
                        const auto j = id_[b][static_cast<std::size_t>(f)];
                        if (j < 0 || faces_[static_cast<std::size_t>(j)].side >= 0) continue;
                        t.emplace_back(static_cast<int>(i), static_cast<int>(j), 0.25 * k(fr.axis, b));
                    }
                }
            }
        }
        SparseMatrix m(static_cast<Eigen::Index>(faces_.size()),
                       static_cast<Eigen::Index>(faces_.size()));
        m.setFromTriplets(t.begin(), t.end());
        return m;
    }

    Vector forcing(const ForcingSpec& f, double time) const {
        Vector out = Vector::Zero(static_cast<Eigen::Index>(faces_.size()));
        if (f.is_zero()) return out;
        for (std::size_t i = 0; i < faces_.size(); ++i) {
            out[static_cast<Eigen::Index>(i)] =
                f.component(faces_[i].axis, lat_.face_center(faces_[i].axis, faces_[i].face), time);
        }
        return out;
    }

    void scatter(const Vector& u, std::array<std::vector<double>, 3>& out) const {
        for (int a = 0; a < lat_.dim(); ++a) out[a].assign(lat_.num_faces(a), 0.0);
        for (std::size_t i = 0; i < faces_.size(); ++i) {
            out[faces_[i].axis][faces_[i].face] = u[static_cast<Eigen::Index>(i)];
        }
    }

    /// Outward flux through each wall (area-weighted).
    std::array<std::array<double, 2>, 3> wall_flux(const Vector& u) const {
        std::array<std::array<double, 2>, 3> out{};
        const double area = lat_.cell_volume() / lat_.h();
        for (std::size_t i = 0; i < faces_.size(); ++i) {
            const auto& fr = faces_[i];
            if (fr.side < 0) continue;
            const double sign = fr.side == 0 ? -1.0 : 1.0;
            out[fr.axis][fr.side] += sign * area * u[static_cast<Eigen::Index>(i)];
        }
        return out;
    }

private:
    Lattice lat_;
    std::vector<Face> faces_;
    std::array<std::vector<std::ptrdiff_t>, 3> id_;
    SparseMatrix div_;
    Vector weight_;
    Vector boundary_;
};

struct Schedule {
    long steps = 0;
    std::vector<long> sample_steps;
};

Schedule make_schedule(const MacroOptions& o) {
    if (o.resolution < 2) throw InvalidInput("macro resolution must be >= 2");
    if (!(o.dt > 0.0) || !std::isfinite(o.dt)) throw InvalidInput("dt must be positive");
    if (!(o.final_time >= 0.0) || !std::isfinite(o.final_time)) {
        throw InvalidInput("final time must be finite and >= 0");
    }
    Schedule s;
    const double ratio = o.final_time / o.dt;
    s.steps = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(s.steps)) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidInput("final time must be a multiple of dt");
    }
    for (double t : o.sample_times) {
        if (!(t >= 0.0) || t > o.final_time * (1.0 + 1e-12)) {
            throw InvalidInput("sample times must lie in [0, final_time]");
        }
        s.sample_steps.push_back(std::lround(t / o.dt));
    }
    return s;
}

MacroState empty_state(const Lattice& lat) {
    MacroState s;
    s.lattice = lat;
    s.q.assign(lat.num_cells(), 0.0);
    for (int a = 0; a < lat.dim(); ++a) {
        s.v_c[a].assign(lat.num_faces(a), 0.0);
        s.v_p[a].assign(lat.num_faces(a), 0.0);
    }
    return s;
}

Vector initial_pressure(const Lattice& lat, const InitialPressure& init) {
    Vector q(static_cast<Eigen::Index>(lat.num_cells()));
    for (std::size_t c = 0; c < lat.num_cells(); ++c) {
        q[static_cast<Eigen::Index>(c)] = init(lat.cell_center(c), lat.dim());
    }
    return q;
}

void store_pressure(const Vector& q, MacroState& s) {
    s.q.assign(q.data(), q.data() + q.size());
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double total_outflux(const std::array<std::array<double, 2>, 3>& w) {
    double s = 0.0;
    for (const auto& a : w) s += a[0] + a[1];
    return s;
}

/// Sum of |wall flux|; scales the budget when inflow and outflow cancel.
double gross_wall_flux(const std::array<std::array<double, 2>, 3>& w) {
    double s = 0.0;
    for (const auto& a : w) s += std::abs(a[0]) + std::abs(a[1]);
    return s;
}

}  // namespace

const char* to_string(BoundaryKind kind) {
    return kind == BoundaryKind::no_flux ? "no_flux" : "pressure";
}

void HomogenizedCoefficients::validate_darcy() const {
    if (dimension != 2 && dimension != 3) throw InvalidInput("dimension must be 2 or 3");
    require_symmetric_psd(B1, dimension, "B1");
    if (!(m > 0.0 && m <= 1.0)) throw InvalidInput("porosity m must lie in (0, 1]");
    if (!(c_f > 0.0) || !std::isfinite(c_f)) throw InvalidInput("c_f must be positive and finite");
}

void HomogenizedCoefficients::validate_acoustics() const {
    if (dimension != 2 && dimension != 3) throw InvalidInput("dimension must be 2 or 3");
    require_symmetric_psd(Mc, dimension, "Mc");
    require_symmetric_psd(Mp, dimension, "Mp");
    if (!(m > 0.0 && m <= 1.0)) throw InvalidInput("porosity m must lie in (0, 1]");
    if (!(c_f > 0.0) || !std::isfinite(c_f)) throw InvalidInput("c_f must be positive and finite");
    if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw InvalidInput("acoustic model requires tau0 > 0");
}

MacroBoundary MacroBoundary::no_flux() { return MacroBoundary{}; }

MacroBoundary MacroBoundary::pressure_drop_x(double left, double right) {
    MacroBoundary bc;
    bc.kind[0] = {BoundaryKind::pressure, BoundaryKind::pressure};
    bc.value[0] = {left, right};
    return bc;
}

bool MacroBoundary::any_pressure(int dim) const {
    for (int a = 0; a < dim; ++a) {
        for (int s = 0; s < 2; ++s) {
            if (kind[a][s] == BoundaryKind::pressure) return true;
        }
    }
    return false;
}

double InitialPressure::operator()(const Vec3& x, int dim) const {
    if (amplitude == 0.0) return 0.0;
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) {
        if (axes[a]) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    }
    return amplitude * std::exp(-r2 / (width * width));
}

Vec3 MacroState::cell_velocity(const std::array<std::vector<double>, 3>& v, std::size_t cell) const {
    Vec3 out{};
    const Coord c = lattice.cell_coords(cell);
    for (int a = 0; a < lattice.dim(); ++a) {
        Coord hi = c;
        hi[a] += 1;
        out[a] = 0.5 * (v[a][lattice.face_index(a, c)] + v[a][lattice.face_index(a, hi)]);
    }
    return out;
}

MacroTrajectory run_darcy(const HomogenizedCoefficients& coeffs, const ForcingSpec& forcing,
                          const MacroBoundary& bc, const MacroOptions& options) {
    coeffs.validate_darcy();
    const Schedule sched = make_schedule(options);
    const Lattice lat(coeffs.dimension, options.resolution, false);
    const FaceSystem faces(lat, bc);
    const double vol = lat.cell_volume();
    const double c2 = coeffs.c_f * coeffs.c_f;

    const SparseMatrix k = faces.tensor(coeffs.B1);
    const Vector inv_w = faces.weight().cwiseInverse();
    const SparseMatrix grad_op = inv_w.asDiagonal() * SparseMatrix(faces.div().transpose());
    SparseMatrix op = (1.0 / coeffs.m) * (faces.div() * (k * grad_op));
    op = 0.5 * (op + SparseMatrix(op.transpose()));

    const bool singular = options.incompressible && !bc.any_pressure(lat.dim());
    SparseMatrix system = op;
    if (!options.incompressible) {
        SparseMatrix id(op.rows(), op.cols());
        id.setIdentity();
        system += (1.0 / (c2 * options.dt)) * id;
    } else if (singular) {
        system.coeffRef(0, 0) += 1.0 / (lat.h() * lat.h());
    }
    system.makeCompressed();
    Eigen::SimplicialLDLT<SparseMatrix> solver(system);
    if (solver.info() != Eigen::Success || (solver.vectorD().array() <= 0.0).any()) {
        throw InvalidInput("Darcy operator is not positive definite for this tensor on the macro grid");
    }

    MacroTrajectory traj;
    Vector q = options.incompressible ? Vector::Zero(static_cast<Eigen::Index>(lat.num_cells()))
                                      : initial_pressure(lat, options.initial);
    MacroState state = empty_state(lat);
    store_pressure(q, state);
    traj.initial = state;

    auto flux_of = [&](const Vector& qv, double t) -> Vector {
        return k * (faces.forcing(forcing, t) - faces.gradient(qv) / coeffs.m);
    };
    auto sample = [&](long step) {
        for (long s : sched.sample_steps) {
            if (s == step) traj.samples.push_back(state);
        }
    };
    sample(0);

    const Vector bterm = (1.0 / coeffs.m) * (faces.div() * (k * faces.boundary_term().cwiseProduct(inv_w)));
    for (long n = 0; n < sched.steps; ++n) {
        const double t = static_cast<double>(n + 1) * options.dt;
        const Vector kf = faces.div() * (k * faces.forcing(forcing, t));
        Vector rhs = bterm - kf;
        if (!options.incompressible) rhs += q / (c2 * options.dt);
        Vector q_next = solver.solve(rhs);
        q_next += solver.solve(rhs - system * q_next);
        if (singular) q_next.array() -= q_next.mean();
        if (!q_next.allFinite()) throw ConvergenceError("Darcy step produced non-finite values", 0.0, n);

        const Vector u = flux_of(q_next, t);
        MacroDiagnostics d;
        d.time = t;
        d.wall_flux = faces.wall_flux(u);
        d.outflux = total_outflux(d.wall_flux);
        d.mass = vol * q_next.sum() / c2;
        const double dmass = options.incompressible ? 0.0 : vol * (q_next - q).sum() / c2;
        const double scale = std::max({std::abs(dmass), options.dt * gross_wall_flux(d.wall_flux),
                                       options.dt * vol * (faces.div() * u).cwiseAbs().sum()});
        d.mass_budget_residual =
            scale > 0.0 ? std::abs(dmass + options.dt * d.outflux) / scale : 0.0;
        d.max_crack_velocity = max_abs(u);
        traj.max_mass_budget_residual = std::max(traj.max_mass_budget_residual, d.mass_budget_residual);
        traj.steps.push_back(d);

        q = q_next;
        state.time = t;
        store_pressure(q, state);
        faces.scatter(u, state.v_c);
        sample(n + 1);
    }
    traj.final_state = state;
    return traj;
}

double effective_wave_speed(const HomogenizedCoefficients& coeffs) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(coeffs.Mc + coeffs.Mp);
    const double lmax = std::max(0.0, es.eigenvalues().maxCoeff());
    return coeffs.c_f * std::sqrt(lmax / (coeffs.tau0 * coeffs.m));
}

double acoustic_cfl_limit(const HomogenizedCoefficients& coeffs, int resolution) {
    const double c = effective_wave_speed(coeffs);
    if (c == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / (resolution * c * std::sqrt(static_cast<double>(coeffs.dimension)));
}

MacroTrajectory run_acoustics(const HomogenizedCoefficients& coeffs, const ForcingSpec& forcing,
                              const MacroBoundary& bc, const MacroOptions& options) {
    coeffs.validate_acoustics();
    if (options.incompressible) {
        throw InvalidInput("the incompressible switch applies to the Darcy model only");
    }
    const Schedule sched = make_schedule(options);
    const double limit = acoustic_cfl_limit(coeffs, options.resolution);
    if (options.dt > limit * (1.0 + 1e-12)) {
        throw InvalidInput("dt exceeds the acoustic CFL bound " + std::to_string(limit));
    }
    const Lattice lat(coeffs.dimension, options.resolution, false);
    const FaceSystem faces(lat, bc);
    const double vol = lat.cell_volume();
    const double c2 = coeffs.c_f * coeffs.c_f;
    const double dt = options.dt;
    const double tau0 = coeffs.tau0;

    const SparseMatrix kc = faces.tensor(coeffs.Mc);
    const SparseMatrix kp = faces.tensor(coeffs.Mp);
    const SparseMatrix ktot = kc + kp;
    const Vector& w_face = faces.weight();

    MacroTrajectory traj;

    // Drive components in the kernel of a momentum matrix cannot move that phase.
    {
        const Vector drive0 = faces.forcing(forcing, 0.0);
        const bool pressure_drive = options.initial.amplitude != 0.0 || bc.any_pressure(lat.dim());
        for (const auto* mat : {&coeffs.Mc, &coeffs.Mp}) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*mat);
            const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
            for (int i = 0; i < lat.dim(); ++i) {
                if (es.eigenvalues()[i] > 1e-12 * scale) continue;
                const Eigen::VectorXd z = es.eigenvectors().col(i);
                double proj = 0.0;
                for (std::size_t f = 0; f < faces.size(); ++f) {
                    proj += std::abs(z[faces.faces()[f].axis] * drive0[static_cast<Eigen::Index>(f)]);
                }
                if (proj > 0.0 || pressure_drive) {
                    traj.kernel_flagged = true;
                    traj.warnings.push_back(std::string(mat == &coeffs.Mc ? "Mc" : "Mp") +
                                            " is singular along a driven direction; that velocity "
                                            "component stays zero");
                }
            }
        }
    }

    Vector q = initial_pressure(lat, options.initial);
    MacroState state = empty_state(lat);
    store_pressure(q, state);
    traj.initial = state;

    auto accel = [&](const Vector& qv, double t) -> Vector {
        return (faces.forcing(forcing, t) - faces.gradient(qv) / coeffs.m) / tau0;
    };
    auto weighted = [&](const Vector& a, const Vector& b) { return vol * a.dot(w_face.cwiseProduct(b)); };

    // w^{1/2}; w^{-1/2} = -w^{1/2} makes the first update a half step.
    Vector w_half = 0.5 * dt * accel(q, 0.0);
    Vector w_prev = -w_half;
    auto energy = [&](const Vector& qv, const Vector& wm, const Vector& wp) {
        return vol * qv.squaredNorm() / (2.0 * c2 * coeffs.m) + 0.5 * tau0 * weighted(wm, ktot * wp);
    };
    MacroDiagnostics start;
    start.energy = energy(q, w_prev, w_half);
    start.mass = vol * q.sum() / c2;
    traj.initial_diagnostics = start;

    auto sample = [&](long step) {
        for (long s : sched.sample_steps) {
            if (s == step) traj.samples.push_back(state);
        }
    };
    sample(0);

    for (long n = 0; n < sched.steps; ++n) {
        const double t = static_cast<double>(n + 1) * dt;
        const Vector flux = ktot * w_half;
        const Vector div_flux = faces.div() * flux;
        const Vector q_next = q - (dt * c2) * div_flux;
        const Vector w_next = w_half + dt * accel(q_next, t);

        MacroDiagnostics d;
        d.time = t;
        d.wall_flux = faces.wall_flux(flux);
        d.outflux = total_outflux(d.wall_flux);
        d.mass = vol * q_next.sum() / c2;
        const double dmass = vol * (q_next - q).sum() / c2;
        const double scale = std::max({std::abs(dmass), dt * gross_wall_flux(d.wall_flux),
                                       dt * vol * div_flux.cwiseAbs().sum()});
        d.mass_budget_residual = scale > 0.0 ? std::abs(dmass + dt * d.outflux) / scale : 0.0;
        d.energy = energy(q_next, w_half, w_next);
        const Vector vc = kc * w_half;
        const Vector vp = kp * w_half;
        d.max_crack_velocity = max_abs(vc);
        d.max_pore_velocity = max_abs(vp);
        traj.max_mass_budget_residual = std::max(traj.max_mass_budget_residual, d.mass_budget_residual);
        traj.steps.push_back(d);

        q = q_next;
        w_prev = w_half;
        w_half = w_next;
        state.time = t;
        store_pressure(q, state);
        faces.scatter(vc, state.v_c);
        faces.scatter(vp, state.v_p);
        sample(n + 1);
    }
    traj.final_state = state;
    return traj;
}

}  // namespace dpm
