#pragma once

#include "dpm/forcing.hpp"
#include "dpm/geometry.hpp"
#include "dpm/staggered.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace dpm {

/// Running time integrals (right-endpoint rule) of the a priori estimates.
struct EstimateIntegrals {
    /// int (|v|^2 + alpha_mu |grad v|^2 + |q|^2 + |div v|^2)
    double energy_norm = 0.0;
    /// int (alpha_mu / delta^2) I_p and int (alpha_mu / eps^2) I_c
    double weighted_pore = 0.0;
    double weighted_crack = 0.0;
    /// int |F|^2 over the fluid
    double forcing = 0.0;
};

struct DnsState {
    StaggeredField field;
    double time = 0.0;
    long step = 0;
    EstimateIntegrals integrals;
};

/// Per-step record. Energy terms refer to the step ending at `time`.
struct DnsStepDiagnostics {
    double time = 0.0;
    double kinetic = 0.0;                ///< (alpha_tau / 2) |v|^2
    double potential = 0.0;              ///< |q|^2 / (2 alpha_q)
    double dissipation = 0.0;            ///< dt alpha_mu |grad v|^2
    double numerical_dissipation = 0.0;  ///< (alpha_tau/2)|dv|^2 + |dq|^2 / (2 alpha_q)
    double work = 0.0;                   ///< dt (F, v)
    double energy_residual = 0.0;        ///< relative to the largest identity term

    double velocity_sq = 0.0;
    double gradient_sq = 0.0;
    double pressure_sq = 0.0;
    double divergence_sq = 0.0;
    double max_divergence = 0.0;
    double pore_velocity_sq = 0.0;   ///< I_p
    double crack_velocity_sq = 0.0;  ///< I_c
    double forcing_sq = 0.0;

    EstimateIntegrals integrals;
};

struct DnsSample {
    double time = 0.0;
    StaggeredField field;
    DnsStepDiagnostics diagnostics;
};

struct DnsOptions {
    double dt = 0.01;
    double final_time = 1.0;
    std::vector<double> sample_times;
    /// Below this alpha_tau the inertia term is dropped (quasi-static steps).
    double alpha_tau_floor = 1e-12;
};

struct DnsTrajectory {
    ScalingRegime regime;
    double dt = 0.0;
    bool quasi_static = false;
    DnsState initial;
    std::vector<DnsStepDiagnostics> steps;
    std::vector<DnsSample> samples;
    double max_energy_residual = 0.0;
    DnsState final_state;
};

/// Semi-implicit scheme for alpha_tau dv/dt = alpha_mu lap v - grad q + F,
/// dq/dt + alpha_q div v = 0 with no-slip on every solid face:
///
///   [(alpha_tau/dt) I + alpha_mu (-L) + dt alpha_q D^T D] v+ = (alpha_tau/dt) v + D^T q + F
///   q+ = q - dt alpha_q D v+
///
/// The matrix is factorised once. Taking the inner product with v+ gives the
/// discrete energy identity recorded by `step`.
class DnsSolver {
public:
    DnsSolver(const PerforatedDomain& domain, const ScalingRegime& regime, double dt,
              double alpha_tau_floor = 1e-12);
    ~DnsSolver();
    DnsSolver(const DnsSolver&) = delete;
    DnsSolver& operator=(const DnsSolver&) = delete;

    DnsState initial_state() const;
    DnsStepDiagnostics step(DnsState& state, const ForcingSpec& forcing) const;

    const StaggeredSpace& space() const noexcept { return space_; }
    bool quasi_static() const noexcept { return alpha_tau_ == 0.0; }
    double dt() const noexcept { return dt_; }

private:
    Vector forcing_vector(const ForcingSpec& forcing, double t) const;
    double forcing_sq(const ForcingSpec& forcing, double t) const;

    PerforatedDomain domain_;
    ScalingRegime regime_;
    StaggeredSpace space_;
    double dt_;
    double alpha_tau_;
    double alpha_mu_;
    double alpha_q_;
    SparseMatrix viscous_;  ///< -L
    SparseMatrix system_;
    Vector pore_weight_;
    Vector crack_weight_;
    std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> factor_;
};

/// Steps from zero data to `final_time` (a multiple of dt) and stores the
/// states nearest to the requested sample times.
DnsTrajectory run_dns(const PerforatedDomain& domain, const ScalingRegime& regime,
                      const ForcingSpec& forcing, const DnsOptions& options);

/// Geometry without a pore/crack split: every fluid cell is crack.
DnsTrajectory run_dns(const IndicatorField& geometry, const ScalingRegime& regime,
                      const ForcingSpec& forcing, const DnsOptions& options);

PerforatedDomain single_phase_domain(const IndicatorField& geometry, const ScalingRegime& regime);

}  // namespace dpm
