#include "dpm/stokes_dns.hpp"

#include "dpm/error.hpp"

#include <algorithm>
#include <cmath>

namespace dpm {

namespace {

Vector face_weights(const StaggeredSpace& space, const IndicatorField& phase) {
    const Lattice& lat = space.lattice();
    const auto& faces = space.velocity_faces();
    Vector w(static_cast<Eigen::Index>(faces.size()));
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const auto lo = static_cast<std::size_t>(lat.face_low_cell(faces[i].axis, faces[i].face));
        const auto hi = static_cast<std::size_t>(lat.face_high_cell(faces[i].axis, faces[i].face));
        w[static_cast<Eigen::Index>(i)] =
            0.5 * ((phase.fluid(lo) ? 1.0 : 0.0) + (phase.fluid(hi) ? 1.0 : 0.0));
    }
    return w;
}

}  // namespace

PerforatedDomain single_phase_domain(const IndicatorField& geometry, const ScalingRegime& regime) {
    PerforatedDomain domain;
    domain.fluid = geometry;
    domain.crack = geometry;
    domain.pore = IndicatorField(geometry.lattice(),
                                 std::vector<std::uint8_t>(geometry.data().size(), 0));
    domain.eps = regime.eps;
    domain.delta = regime.delta();
    domain.cells_per_crack_period = static_cast<int>(std::lround(regime.eps * geometry.resolution()));
    domain.cells_per_pore_period = static_cast<int>(std::lround(regime.delta() * geometry.resolution()));
    return domain;
}

DnsSolver::DnsSolver(const PerforatedDomain& domain, const ScalingRegime& regime, double dt,
                     double alpha_tau_floor)
    : domain_(domain), regime_(regime), space_(domain.fluid), dt_(dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive");
    regime.validate(false);
    if (domain_.fluid.empty()) throw GeometryError("empty fluid domain");
    if (!(domain_.crack.lattice() == domain_.fluid.lattice()) ||
        !(domain_.pore.lattice() == domain_.fluid.lattice())) {
        throw InvalidInput("phase indicators must share the fluid lattice");
    }
    alpha_tau_ = regime.alpha_tau() < alpha_tau_floor ? 0.0 : regime.alpha_tau();
    alpha_mu_ = regime.alpha_mu();
    alpha_q_ = regime.alpha_q();
    if (!(alpha_q_ > 0.0)) throw InvalidInput("alpha_q must be positive");
    viscous_ = -space_.laplacian();

    const SparseMatrix& div = space_.divergence();
    const SparseMatrix grad_div = SparseMatrix(div.transpose()) * div;
    system_ = alpha_mu_ * viscous_ + (dt_ * alpha_q_) * grad_div;
    if (alpha_tau_ > 0.0) {
        SparseMatrix identity(system_.rows(), system_.cols());
        identity.setIdentity();
        system_ += (alpha_tau_ / dt_) * identity;
    } else if (!(alpha_mu_ > 0.0) || !space_.viscous_operator_definite()) {
        throw GeometryError("quasi-static step needs viscosity and wall contact in every fluid region");
    }
    system_.makeCompressed();
    if (system_.rows() > 0) {
        factor_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(system_);
        if (factor_->info() != Eigen::Success) {
            throw ConvergenceError("factorisation of the step matrix failed", 0.0, 0);
        }
    }
    pore_weight_ = face_weights(space_, domain_.pore);
    crack_weight_ = face_weights(space_, domain_.crack);
}

DnsSolver::~DnsSolver() = default;

DnsState DnsSolver::initial_state() const {
    DnsState state;
    state.field = StaggeredField(space_.lattice());
    return state;
}

Vector DnsSolver::forcing_vector(const ForcingSpec& forcing, double t) const {
    const auto& faces = space_.velocity_faces();
    Vector f = Vector::Zero(static_cast<Eigen::Index>(faces.size()));
    if (forcing.is_zero()) return f;
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const Vec3 x = space_.lattice().face_center(faces[i].axis, faces[i].face);
        f[static_cast<Eigen::Index>(i)] = forcing.component(faces[i].axis, x, t);
    }
    return f;
}

double DnsSolver::forcing_sq(const ForcingSpec& forcing, double t) const {
    if (forcing.is_zero()) return 0.0;
    double sum = 0.0;
    for (std::size_t c : space_.pressure_cells()) {
        const Vec3 f = forcing(space_.lattice().cell_center(c), t);
        for (int a = 0; a < space_.dim(); ++a) sum += f[a] * f[a];
    }
    return sum * space_.lattice().cell_volume();
}

DnsStepDiagnostics DnsSolver::step(DnsState& state, const ForcingSpec& forcing) const {
    const double vol = space_.lattice().cell_volume();
    const double t_next = state.time + dt_;
    const SparseMatrix& div = space_.divergence();

    const Vector v = space_.gather_velocity(state.field);
    const Vector q = space_.gather_pressure(state.field);
    const Vector f = forcing_vector(forcing, t_next);

    Vector v_next = Vector::Zero(v.size());
    if (factor_) {
        Vector rhs = div.transpose() * q + f;
        if (alpha_tau_ > 0.0) rhs += (alpha_tau_ / dt_) * v;
        v_next = factor_->solve(rhs);
        const Vector correction = factor_->solve(rhs - system_ * v_next);
        v_next += correction;
        if (!v_next.allFinite()) {
            throw ConvergenceError("step solve produced non-finite values",
                                   (rhs - system_ * v_next).norm(), state.step);
        }
    }
    const Vector dv_div = div * v_next;
    const Vector q_next = q - (dt_ * alpha_q_) * dv_div;

    DnsStepDiagnostics d;
    d.time = t_next;
    const Vector lap_v = viscous_ * v_next;
    const double v_sq = vol * v_next.squaredNorm();
    const double grad_sq = vol * v_next.dot(lap_v);
    const double q_sq = vol * q_next.squaredNorm();
    d.kinetic = 0.5 * alpha_tau_ * v_sq;
    d.potential = 0.5 * q_sq / alpha_q_;
    d.dissipation = dt_ * alpha_mu_ * grad_sq;
    d.numerical_dissipation = 0.5 * alpha_tau_ * vol * (v_next - v).squaredNorm() +
                              0.5 * vol * (q_next - q).squaredNorm() / alpha_q_;
    d.work = dt_ * vol * f.dot(v_next);
    const double kinetic_change = 0.5 * alpha_tau_ * (v_sq - vol * v.squaredNorm());
    const double potential_change = 0.5 * (q_sq - vol * q.squaredNorm()) / alpha_q_;
    const double residual =
        kinetic_change + potential_change + d.dissipation + d.numerical_dissipation - d.work;
    const double scale = std::max({std::abs(kinetic_change), std::abs(potential_change),
                                   std::abs(d.dissipation), std::abs(d.numerical_dissipation),
                                   std::abs(d.work)});
    d.energy_residual = scale > 0.0 ? std::abs(residual) / scale : 0.0;

    d.velocity_sq = v_sq;
    d.gradient_sq = grad_sq;
    d.pressure_sq = q_sq;
    d.divergence_sq = vol * dv_div.squaredNorm();
    d.max_divergence = dv_div.size() ? dv_div.cwiseAbs().maxCoeff() : 0.0;
    d.pore_velocity_sq = vol * pore_weight_.dot(v_next.cwiseAbs2());
    d.crack_velocity_sq = vol * crack_weight_.dot(v_next.cwiseAbs2());
    d.forcing_sq = forcing_sq(forcing, t_next);

    EstimateIntegrals& acc = state.integrals;
    const double delta = regime_.delta();
    acc.energy_norm += dt_ * (v_sq + alpha_mu_ * grad_sq + q_sq + d.divergence_sq);
    acc.weighted_pore += dt_ * (alpha_mu_ / (delta * delta)) * d.pore_velocity_sq;
    acc.weighted_crack += dt_ * (alpha_mu_ / (regime_.eps * regime_.eps)) * d.crack_velocity_sq;
    acc.forcing += dt_ * d.forcing_sq;
    d.integrals = acc;

    space_.scatter_velocity(v_next, state.field);
    space_.scatter_pressure(q_next, state.field);
    state.time = t_next;
    state.step += 1;
    return d;
}

DnsTrajectory run_dns(const PerforatedDomain& domain, const ScalingRegime& regime,
                      const ForcingSpec& forcing, const DnsOptions& options) {
    if (!(options.final_time >= 0.0) || !std::isfinite(options.final_time)) {
        throw InvalidInput("final time must be finite and >= 0");
    }
    if (!(options.dt > 0.0)) throw InvalidInput("dt must be positive");
    const double ratio = options.final_time / options.dt;
    const long steps = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidInput("final time must be a multiple of dt");
    }
    std::vector<long> sample_steps;
    for (double ts : options.sample_times) {
        if (!(ts >= 0.0) || ts > options.final_time * (1.0 + 1e-12)) {
            throw InvalidInput("sample times must lie in [0, final_time]");
        }
        sample_steps.push_back(std::lround(ts / options.dt));
    }

    DnsSolver solver(domain, regime, options.dt, options.alpha_tau_floor);
    DnsTrajectory traj;
    traj.regime = regime;
    traj.dt = options.dt;
    traj.quasi_static = solver.quasi_static();
    traj.initial = solver.initial_state();
    DnsState state = traj.initial;

    auto record = [&](const DnsStepDiagnostics& diag) {
        for (long s : sample_steps) {
            if (s == state.step) traj.samples.push_back({state.time, state.field, diag});
        }
    };
    DnsStepDiagnostics zero;
    record(zero);
    for (long n = 0; n < steps; ++n) {
        const DnsStepDiagnostics diag = solver.step(state, forcing);
        traj.max_energy_residual = std::max(traj.max_energy_residual, diag.energy_residual);
        traj.steps.push_back(diag);
        record(diag);
    }
    traj.final_state = std::move(state);
    return traj;
}

DnsTrajectory run_dns(const IndicatorField& geometry, const ScalingRegime& regime,
                      const ForcingSpec& forcing, const DnsOptions& options) {
    return run_dns(single_phase_domain(geometry, regime), regime, forcing, options);
}

}  // namespace dpm
