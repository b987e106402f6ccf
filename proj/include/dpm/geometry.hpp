#pragma once

#include "dpm/lattice.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace dpm {

enum class Shape { full_fluid, centered_block, centered_ball, axis_channel, custom_mask };

const char* to_string(Shape shape);
Shape shape_from_string(const std::string& name);

/// Parametrized periodic unit cell.
///
/// `param` is the block side, ball diameter or channel width in cell units.
/// Block and ball are solid inclusions in fluid unless `inverted` is set, in
/// which case the inclusion is the fluid and the rest is solid. The channel
/// is a fluid band (a slab in 3D) centred on x_{normal} = 1/2, where
/// normal = (channel_axis + 1) % dimension, so flow runs along channel_axis.
struct CellSpec {
    int dimension = 2;
    Shape shape = Shape::full_fluid;
    double param = 0.0;
    int resolution = 32;
    bool inverted = false;
    int channel_axis = 0;
    /// Row-major (x fastest), nonzero = fluid; used by custom_mask only.
    std::vector<std::uint8_t> mask;

    void validate() const;
};

/// Boolean fluid occupancy on a lattice. Out-of-lattice cells of a bounded
/// lattice count as solid.
class IndicatorField {
public:
    IndicatorField() = default;
    IndicatorField(Lattice lattice, std::vector<std::uint8_t> fluid);

    const Lattice& lattice() const noexcept { return lattice_; }
    int dim() const noexcept { return lattice_.dim(); }
    int resolution() const noexcept { return lattice_.n(); }
    bool periodic() const noexcept { return lattice_.periodic(); }

    bool fluid(std::size_t cell) const noexcept { return fluid_[cell] != 0; }
    /// Fluid test with wrap / outside-is-solid semantics of the lattice.
    bool fluid_at(const Coord& c) const noexcept;
    const std::vector<std::uint8_t>& data() const noexcept { return fluid_; }

    std::size_t fluid_count() const noexcept;
    bool empty() const noexcept { return fluid_count() == 0; }
    bool has_solid() const noexcept { return fluid_count() < fluid_.size(); }

    /// FNV-1a hash of lattice and mask, as 16 hex digits.
    std::string fingerprint() const;

    bool operator==(const IndicatorField&) const = default;

private:
    Lattice lattice_;
    std::vector<std::uint8_t> fluid_;
};

/// Rule alpha(eps) = coefficient * eps^exponent.
struct AlphaRule {
    double coefficient = 0.0;
    double exponent = 0.0;

    double operator()(double eps) const;
    /// Limit of alpha(eps) / eps^power as eps -> 0 (may be +inf).
    double limit_scaled(double power) const;

    bool operator==(const AlphaRule&) const = default;
};

enum class RegimeKind { filtration, acoustics };

const char* to_string(RegimeKind kind);
RegimeKind regime_from_string(const std::string& name);

/// Dimensionless parameter bundle of the microscale model and its limits.
struct ScalingRegime {
    double eps = 0.5;
    double r = 1.0;
    RegimeKind kind = RegimeKind::filtration;
    double tau0 = 0.0;
    double mu1 = 1.0;
    double c_f = 1.0;
    AlphaRule alpha_tau_rule;
    AlphaRule alpha_mu_rule;
    AlphaRule alpha_q_rule;

    /// Regime with alpha rules alpha_tau = tau0, alpha_mu = mu1 eps^2, alpha_q = c_f^2.
    static ScalingRegime with_default_rules(RegimeKind kind, double eps, double r, double tau0,
                                            double mu1, double c_f);

    double delta() const;
    double alpha_tau() const { return alpha_tau_rule(eps); }
    double alpha_mu() const { return alpha_mu_rule(eps); }
    double alpha_q() const { return alpha_q_rule(eps); }
    /// Limit of alpha_mu / delta^2; infinite whenever mu1 > 0 and r > 1.
    double mu2() const;

    /// Checks parameter ranges, regime criteria and that the alpha rules have
    /// the declared limits. With `homogenized` also requires tau0 + mu1 > 0.
    void validate(bool homogenized = true) const;

    bool operator==(const ScalingRegime&) const = default;
};

/// Double-porosity fluid domain inside the unit cube together with its
/// crack / pore phase indicators (chi_c, chi_p, with chi = chi_c + chi_p).
struct PerforatedDomain {
    IndicatorField fluid;
    IndicatorField crack;
    IndicatorField pore;
    double eps = 0.0;
    double delta = 0.0;
    /// Fine cells per eps-period and per delta-period.
    int cells_per_crack_period = 0;
    int cells_per_pore_period = 0;
};

IndicatorField build_cell(const CellSpec& spec);

/// Fluid-cell fraction.
double porosity(const IndicatorField& field);
/// m = m_c + (1 - m_c) m_p.
double composite_porosity(double crack_porosity, double pore_porosity);

/// Smallest fine resolution at which both cells nest exactly.
int minimal_domain_resolution(const ScalingRegime& regime, const CellSpec& crack_cell,
                              const CellSpec& pore_cell);

PerforatedDomain build_perforated_domain(const ScalingRegime& regime, const CellSpec& crack_cell,
                                         const CellSpec& pore_cell, int macro_resolution);

/// Per-axis percolation: a periodic cycle with nonzero winding (periodic
/// lattice) or a path between opposite walls (bounded lattice).
std::array<bool, 3> percolating_axes(const IndicatorField& field);
bool fluid_percolates(const IndicatorField& field);

/// Label of the face-connected fluid component of every cell (-1 = solid).
/// Returns the number of components.
int fluid_components(const IndicatorField& field, std::vector<int>& labels);

}  // namespace dpm
