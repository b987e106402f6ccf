#pragma once

#include "dpm/forcing.hpp"
#include "dpm/lattice.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace dpm {

/// Effective coefficients of the macroscopic systems.
struct HomogenizedCoefficients {
    int dimension = 2;
    Eigen::MatrixXd B1;  ///< crack permeability
    Eigen::MatrixXd Mc;  ///< m_c I - B2_c
    Eigen::MatrixXd Mp;  ///< m_p beta_c I - B2_p
    double m = 1.0;
    double m_c = 1.0;
    double m_p = 0.0;
    double c_f = 1.0;
    double tau0 = 0.0;
    double mu1 = 0.0;
    double beta = 0.0;

    void validate_darcy() const;
    void validate_acoustics() const;
};

enum class BoundaryKind { no_flux, pressure };

const char* to_string(BoundaryKind kind);

/// Boundary condition per wall: side 0 is the low wall, side 1 the high wall.
struct MacroBoundary {
    std::array<std::array<BoundaryKind, 2>, 3> kind{};
    std::array<std::array<double, 2>, 3> value{};

    static MacroBoundary no_flux();
    /// q = left on x = 0, q = right on x = 1, no flux elsewhere.
    static MacroBoundary pressure_drop_x(double left, double right);
    bool any_pressure(int dim) const;
};

/// Initial pressure: zero or a Gaussian amplitude exp(-|x - c|^2 / width^2)
/// restricted to the axes flagged in `axes`.
struct InitialPressure {
    double amplitude = 0.0;
    Vec3 center{0.5, 0.5, 0.5};
    double width = 0.05;
    std::array<bool, 3> axes{true, true, true};

    double operator()(const Vec3& x, int dim) const;
};

/// Pressure at cell centres, v_c and v_p on the faces of a bounded lattice.
struct MacroState {
    Lattice lattice;
    double time = 0.0;
    std::vector<double> q;
    std::array<std::vector<double>, 3> v_c;
    std::array<std::vector<double>, 3> v_p;

    /// Face-to-centre average of a face field.
    Vec3 cell_velocity(const std::array<std::vector<double>, 3>& v, std::size_t cell) const;
};

struct MacroDiagnostics {
    double time = 0.0;
    double mass = 0.0;               ///< integral of q / c_f^2
    double outflux = 0.0;            ///< net outward flux through the walls
    double mass_budget_residual = 0.0;  ///< |dmass + dt outflux|, relative
    double energy = 0.0;             ///< acoustic energy (0 for Darcy)
    double max_crack_velocity = 0.0;
    double max_pore_velocity = 0.0;
    /// Outward flux through each wall.
    std::array<std::array<double, 2>, 3> wall_flux{};
};

struct MacroOptions {
    int resolution = 32;
    double dt = 0.01;
    double final_time = 1.0;
    std::vector<double> sample_times;
    /// Replace the continuity equation by div(v_c + v_p) = 0 (Darcy only).
    bool incompressible = false;
    InitialPressure initial;
};

struct MacroTrajectory {
    MacroState initial;
    MacroDiagnostics initial_diagnostics;
    std::vector<MacroState> samples;
    std::vector<MacroDiagnostics> steps;
    MacroState final_state;
    double max_mass_budget_residual = 0.0;
    /// Drive direction in the kernel of Mc + Mp.
    bool kernel_flagged = false;
    std::vector<std::string> warnings;
};

/// Implicit Euler for (1/c_f^2) dq/dt + div v_c = 0, v_c = B1 (F - grad q / m),
/// cell-centred finite volumes with v_c on faces; v_p = 0.
MacroTrajectory run_darcy(const HomogenizedCoefficients& coeffs, const ForcingSpec& forcing,
                          const MacroBoundary& bc, const MacroOptions& options);

/// Leapfrog for tau0 dv_phase/dt = M_phase (F - grad q / m),
/// (1/c_f^2) dq/dt + div (v_c + v_p) = 0. Velocities live at half steps and
/// are written as M_phase w with the impulse tau0 dw/dt = F - grad q / m.
MacroTrajectory run_acoustics(const HomogenizedCoefficients& coeffs, const ForcingSpec& forcing,
                              const MacroBoundary& bc, const MacroOptions& options);

/// Effective wave speed c_f sqrt(lambda_max(Mc + Mp) / (tau0 m)).
double effective_wave_speed(const HomogenizedCoefficients& coeffs);
/// Largest stable leapfrog step h / (c_eff sqrt(d)).
double acoustic_cfl_limit(const HomogenizedCoefficients& coeffs, int resolution);

}  // namespace dpm
