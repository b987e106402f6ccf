#pragma once

#include "dpm/analysis.hpp"
#include "dpm/cell_problems.hpp"
#include "dpm/forcing.hpp"
#include "dpm/geometry.hpp"
#include "dpm/macro_models.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dpm {

/// Parsed INI document: section -> key -> value, with line numbers kept for
/// error messages.
struct IniDocument {
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, std::map<std::string, Entry>> sections;
};

IniDocument parse_ini(const std::string& text);

enum class ForcingPreset { zero, constant, rotational, confined_vortex };

const char* to_string(ForcingPreset preset);

struct ForcingConfig {
    ForcingPreset preset = ForcingPreset::zero;
    Vec3 vector{};
    double amplitude = 1.0;
    Factor time = Factor::one;
    double omega = 0.0;

    ForcingSpec build() const;
    bool operator==(const ForcingConfig&) const = default;
};

enum class CoefficientSource { cells, explicit_values };

struct RunConfig {
    // [geometry]
    int dimension = 2;
    CellSpec crack;
    std::string crack_mask_file;
    bool has_pore = false;
    CellSpec pore;
    std::string pore_mask_file;
    std::vector<double> eps_list;
    int domain_resolution = 0;  ///< 0 selects the smallest admissible one

    // [regime]; eps and r are read from [geometry]
    ScalingRegime regime;
    std::optional<double> beta;

    // [solver]
    CellSolverOptions cell_options;
    PoincareOptions poincare_options;
    double dt = 0.01;
    double final_time = 1.0;
    int macro_resolution = 32;
    bool incompressible = false;
    double alpha_tau_floor = 1e-12;

    // [coefficients]
    CoefficientSource coefficient_source = CoefficientSource::cells;
    Eigen::MatrixXd B1;
    Eigen::MatrixXd Mc;
    Eigen::MatrixXd Mp;
    double m = 1.0;
    double m_c = 1.0;
    double m_p = 0.0;

    ForcingConfig forcing;
    MacroBoundary boundary;
    InitialPressure initial;

    // [poincare]
    bool poincare_on_pore = false;

    // [output]
    std::vector<double> sample_times;
    bool write_vtk = false;
    bool write_masks = false;

    /// Pore cell used when none is configured: all solid.
    CellSpec pore_or_solid() const;
};

/// Parses and validates against the schema; unknown sections or keys, bad
/// values and missing required keys raise InvalidInput. Relative mask paths
/// resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Subcommand-specific requirements (e.g. beta for acoustic runs).
void validate_for(const RunConfig& config, const std::string& subcommand);

/// Canonical text with every key spelled out; parsing it yields the same
/// configuration.
std::string resolved_config(const RunConfig& config);

}  // namespace dpm
