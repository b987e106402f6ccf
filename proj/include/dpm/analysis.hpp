#pragma once

#include "dpm/cell_problems.hpp"
#include "dpm/error.hpp"
#include "dpm/forcing.hpp"
#include "dpm/geometry.hpp"
#include "dpm/macro_models.hpp"
#include "dpm/stokes_dns.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dpm {

struct PoincareOptions {
    double tol = 1e-6;
    int max_iterations = 10000;
};

struct PoincareResult {
    double constant = 0.0;  ///< 1 / lambda_min
    double lambda_min = 0.0;
    int iterations = 0;
    double relative_change = 0.0;
};

/// Cell-centred Laplacian on the fluid cells with the velocity extended by
/// zero into the solid (wall on the cell face, mirrored ghost value).
SparseMatrix masked_dirichlet_laplacian(const IndicatorField& field);

/// Friedrichs-Poincare constant 1 / lambda_min by inverse power iteration
/// with a direct factorisation of the masked Laplacian.
PoincareResult poincare_constant(const IndicatorField& field, const PoincareOptions& options = {});

enum class Phase { pore, crack, all };

const char* to_string(Phase phase);

/// Per-block averages on the eps-grid (blocks^d entries, x fastest).
struct BlockField {
    int dimension = 2;
    int blocks = 0;
    std::vector<Vec3> velocity;
    std::vector<double> pressure;

    bool operator==(const BlockField&) const = default;
};

/// Zero-extended average of the phase-masked micro field over each eps-cell.
BlockField cell_average(const StaggeredField& field, const PerforatedDomain& domain, Phase phase);

/// Block average of a macro state on blocks of 1/eps macro cells.
/// `phase` selects v_c (crack), v_p (pore) or their sum.
BlockField block_average(const MacroState& state, double eps, Phase phase);

enum class Channel { velocity, pressure };

/// Relative space-time L2 error ||test - ref|| / ||ref|| over a sample
/// series; 0 when both vanish, +inf when only the reference vanishes.
double relative_l2_error(const std::vector<BlockField>& test, const std::vector<BlockField>& ref,
                         Channel channel);

/// Root mean square of the block velocity magnitudes over a sample series.
double rms_speed(const std::vector<BlockField>& series);

struct EstimateSample {
    double time = 0.0;
    double pore_integral = 0.0;  ///< I_p
    double bound = 0.0;          ///< C delta^2 int |grad v|^2
    bool holds = true;
};

struct EstimateReport {
    /// left side of the energy estimate / int int |F|^2
    double energy_ratio = 0.0;
    /// left side of the weighted pore / crack estimate / int int |F|^2
    double weighted_ratio = 0.0;
    double poincare_constant = 0.0;
    std::vector<EstimateSample> samples;
    bool bound_holds = true;
};

/// Estimate ratios from the recorded integrals and the scaled pore bound
/// I_p <= C delta^2 int |grad v|^2 at every sample time. `poincare` is the
/// constant of the unit pore cell.
EstimateReport verify_estimates(const DnsTrajectory& trajectory, double poincare);

struct ConvergenceStudyConfig {
    CellSpec crack;
    CellSpec pore;
    /// Regime template; eps is replaced for every entry.
    ScalingRegime regime;
    double beta = 1.0;
    std::vector<double> eps_list;
    ForcingSpec forcing;
    double dt = 0.05;
    double final_time = 1.0;
    std::vector<double> sample_times;
    int macro_resolution = 64;
    CellSolverOptions cell_options;
};

struct ConvergenceEntry {
    double eps = 0.0;
    double delta = 0.0;
    int fine_resolution = 0;
    int tensor_resolution = 0;
    double crack_velocity_error = 0.0;
    double total_velocity_error = 0.0;
    double pressure_error = 0.0;
    double pore_speed = 0.0;
    double crack_speed = 0.0;
    double energy_ratio = 0.0;
    double weighted_ratio = 0.0;
    bool poincare_bound_holds = true;
    double max_energy_residual = 0.0;
    Eigen::MatrixXd tensor;
};

struct ConvergenceReport {
    RegimeKind kind = RegimeKind::filtration;
    std::vector<ConvergenceEntry> entries;
    double pore_poincare_constant = 0.0;
    bool complete = true;
    std::string failure;
    ErrorCategory failure_category = ErrorCategory::invalid_input;
    bool crack_error_decreasing = false;
    bool pore_speed_decreasing = false;
    /// max / min of the energy-estimate ratio across eps
    double energy_ratio_spread = 0.0;
    double weighted_ratio_spread = 0.0;
    std::string verdict;
};

using ProgressCallback = std::function<void(const std::string&)>;

/// DNS against the homogenized model for every eps (up to `jobs` at once).
/// Entries are assembled in eps order; a failing sub-run truncates the report.
ConvergenceReport convergence_study(const ConvergenceStudyConfig& config, int jobs = 1,
                                    const ProgressCallback& progress = {});

/// Block-replicates a periodic cell to a finer resolution (same geometry).
IndicatorField refine_cell(const IndicatorField& cell, int resolution);

}  // namespace dpm
