#include "dpm/geometry.hpp"

#include "dpm/error.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>

namespace dpm {

namespace {

bool is_power_of_two(long v) { return v > 0 && (v & (v - 1)) == 0; }

/// Returns round(1/x) when 1/x is an integer power of two, else -1.
long inverse_power_of_two(double x) {
    if (!(x > 0.0) || x > 1.0) return -1;
    const double inv = 1.0 / x;
    const long rounded = std::lround(inv);
    if (std::abs(inv - static_cast<double>(rounded)) > 1e-9 * inv) return -1;
    return is_power_of_two(rounded) ? rounded : -1;
}

bool shape_is_fluid(const CellSpec& spec, const Vec3& x) {
    const double half = 0.5 * spec.param;
    bool fluid = true;
    switch (spec.shape) {
    case Shape::full_fluid:
        fluid = true;
        break;
    case Shape::centered_block: {
        bool inside = true;
        for (int a = 0; a < spec.dimension; ++a) inside = inside && std::abs(x[a] - 0.5) < half;
        fluid = !inside;
        break;
    }
    case Shape::centered_ball: {
        double r2 = 0.0;
        for (int a = 0; a < spec.dimension; ++a) r2 += (x[a] - 0.5) * (x[a] - 0.5);
        fluid = !(r2 < half * half);
        break;
    }
    case Shape::axis_channel: {
        const int normal = (spec.channel_axis + 1) % spec.dimension;
        fluid = std::abs(x[normal] - 0.5) < half;
        break;
    }
    case Shape::custom_mask:
        break;
    }
    return spec.inverted ? !fluid : fluid;
}

}  // namespace

const char* to_string(Shape shape) {
    switch (shape) {
    case Shape::full_fluid: return "full_fluid";
    case Shape::centered_block: return "centered_block";
    case Shape::centered_ball: return "centered_ball";
    case Shape::axis_channel: return "axis_channel";
    case Shape::custom_mask: return "custom_mask";
    }
    return "unknown";
}

Shape shape_from_string(const std::string& name) {
    for (Shape s : {Shape::full_fluid, Shape::centered_block, Shape::centered_ball,
                    Shape::axis_channel, Shape::custom_mask}) {
        if (name == to_string(s)) return s;
    }
    throw InvalidInput("unknown cell shape '" + name + "'");
}

const char* to_string(RegimeKind kind) {
    return kind == RegimeKind::filtration ? "filtration" : "acoustics";
}

RegimeKind regime_from_string(const std::string& name) {
    if (name == "filtration") return RegimeKind::filtration;
    if (name == "acoustics") return RegimeKind::acoustics;
    throw InvalidInput("unknown regime kind '" + name + "'");
}

void CellSpec::validate() const {
    if (dimension != 2 && dimension != 3) {
        throw InvalidInput("cell dimension must be 2 or 3");
    }
    if (!(param >= 0.0 && param <= 1.0)) {
        throw InvalidInput("shape parameter must lie in [0, 1]");
    }
    if (resolution < 8 || !is_power_of_two(resolution)) {
        throw InvalidInput("cell resolution must be a power of two >= 8, got " +
                           std::to_string(resolution));
    }
    if (channel_axis < 0 || channel_axis >= dimension) {
        throw InvalidInput("channel_axis out of range");
    }
    if (shape == Shape::custom_mask) {
        std::size_t expected = 1;
        for (int a = 0; a < dimension; ++a) expected *= static_cast<std::size_t>(resolution);
        if (mask.size() != expected) {
            throw InvalidInput("custom_mask has " + std::to_string(mask.size()) +
                               " entries, expected " + std::to_string(expected));
        }
    }
}

IndicatorField::IndicatorField(Lattice lattice, std::vector<std::uint8_t> fluid)
    : lattice_(lattice), fluid_(std::move(fluid)) {
    if (fluid_.size() != lattice_.num_cells()) {
        throw InvalidInput("indicator size does not match lattice");
    }
    for (auto& v : fluid_) v = v ? 1 : 0;
}

bool IndicatorField::fluid_at(const Coord& c) const noexcept {
    const std::ptrdiff_t cell = lattice_.cell_at(c);
    return cell >= 0 && fluid_[static_cast<std::size_t>(cell)] != 0;
}

std::size_t IndicatorField::fluid_count() const noexcept {
    std::size_t count = 0;
    for (auto v : fluid_) count += v;
    return count;
}

std::string IndicatorField::fingerprint() const {
    std::uint64_t hash = 1469598103934665603ULL;
    auto mix = [&hash](std::uint64_t byte) {
        hash ^= byte;
        hash *= 1099511628211ULL;
    };
    mix(static_cast<std::uint64_t>(lattice_.dim()));
    mix(static_cast<std::uint64_t>(lattice_.n()));
    mix(lattice_.periodic() ? 1 : 0);
    for (auto v : fluid_) mix(v);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

double AlphaRule::operator()(double eps) const {
    if (coefficient == 0.0) return 0.0;
    return coefficient * std::pow(eps, exponent);
}

double AlphaRule::limit_scaled(double power) const {
    if (coefficient == 0.0) return 0.0;
    const double p = exponent - power;
    if (std::abs(p) < 1e-12) return coefficient;
    if (p > 0.0) return 0.0;
    return std::numeric_limits<double>::infinity();
}

ScalingRegime ScalingRegime::with_default_rules(RegimeKind kind, double eps, double r,
                                                double tau0, double mu1, double c_f) {
    ScalingRegime regime;
    regime.kind = kind;
    regime.eps = eps;
    regime.r = r;
    regime.tau0 = tau0;
    regime.mu1 = mu1;
    regime.c_f = c_f;
    regime.alpha_tau_rule = {tau0, 0.0};
    regime.alpha_mu_rule = {mu1, 2.0};
    regime.alpha_q_rule = {c_f * c_f, 0.0};
    return regime;
}

double ScalingRegime::delta() const { return std::pow(eps, r); }

double ScalingRegime::mu2() const { return alpha_mu_rule.limit_scaled(2.0 * r); }

void ScalingRegime::validate(bool homogenized) const {
    auto close = [](double a, double b) {
        if (std::isinf(a) || std::isinf(b)) return a == b;
        return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    if (!(eps > 0.0 && eps <= 1.0)) throw InvalidInput("eps must lie in (0, 1]");
    if (!(r >= 1.0)) throw InvalidInput("r must be >= 1");
    if (!(tau0 >= 0.0) || std::isinf(tau0)) throw InvalidInput("tau0 must be finite and >= 0");
    if (!(mu1 >= 0.0)) throw InvalidInput("mu1 must be >= 0");
    if (!(c_f > 0.0) || std::isinf(c_f)) throw InvalidInput("c_f must satisfy 0 < c_f < inf");
    if (kind == RegimeKind::filtration) {
        if (tau0 != 0.0) throw InvalidInput("filtration regime requires tau0 = 0");
        if (!(mu1 > 0.0)) throw InvalidInput("filtration regime requires mu1 > 0");
    } else if (!(tau0 > 0.0)) {
        throw InvalidInput("acoustic regime requires tau0 > 0");
    }
    if (homogenized && !(tau0 + mu1 > 0.0)) {
        throw InvalidInput("homogenization requires tau0 + mu1 > 0");
    }
    for (const AlphaRule* rule : {&alpha_tau_rule, &alpha_mu_rule, &alpha_q_rule}) {
        if (!(rule->coefficient >= 0.0) || !std::isfinite(rule->coefficient) ||
            !std::isfinite(rule->exponent)) {
            throw InvalidInput("alpha rules need finite non-negative coefficients");
        }
    }
    if (!close(alpha_tau_rule.limit_scaled(0.0), tau0)) {
        throw InvalidInput("alpha_tau rule does not tend to tau0");
    }
    if (alpha_mu_rule.limit_scaled(0.0) != 0.0) {
        throw InvalidInput("alpha_mu rule must vanish as eps -> 0");
    }
    if (!close(alpha_mu_rule.limit_scaled(2.0), mu1)) {
        throw InvalidInput("alpha_mu / eps^2 rule does not tend to mu1");
    }
    if (!close(alpha_q_rule.limit_scaled(0.0), c_f * c_f)) {
        throw InvalidInput("alpha_q rule does not tend to c_f^2");
    }
}

IndicatorField build_cell(const CellSpec& spec) {
    spec.validate();
    const Lattice lattice(spec.dimension, spec.resolution, true);
    std::vector<std::uint8_t> fluid(lattice.num_cells());
    for (std::size_t c = 0; c < fluid.size(); ++c) {
        if (spec.shape == Shape::custom_mask) {
            const bool f = spec.mask[c] != 0;
            fluid[c] = (spec.inverted ? !f : f) ? 1 : 0;
        } else {
            fluid[c] = shape_is_fluid(spec, lattice.cell_center(c)) ? 1 : 0;
        }
    }
    return IndicatorField(lattice, std::move(fluid));
}

double porosity(const IndicatorField& field) {
    if (field.data().empty()) return 0.0;
    return static_cast<double>(field.fluid_count()) / static_cast<double>(field.data().size());
}

double composite_porosity(double crack_porosity, double pore_porosity) {
    return crack_porosity + (1.0 - crack_porosity) * pore_porosity;
}

int minimal_domain_resolution(const ScalingRegime& regime, const CellSpec& crack_cell,
                              const CellSpec& pore_cell) {
    const long crack_periods = inverse_power_of_two(regime.eps);
    const long pore_periods = inverse_power_of_two(regime.delta());
    if (crack_periods < 0) {
        throw GeometryError("eps must be an inverse power of two");
    }
    if (pore_periods < 0) {
        throw GeometryError("delta = eps^r must be an inverse power of two");
    }
    const long a = crack_periods * crack_cell.resolution;
    const long b = pore_periods * pore_cell.resolution;
    // Both are powers of two, so the lcm is the larger one.
    const long m = std::max(a, b);
    if (m > std::numeric_limits<int>::max()) throw GeometryError("domain resolution overflows");
    return static_cast<int>(m);
}

PerforatedDomain build_perforated_domain(const ScalingRegime& regime, const CellSpec& crack_cell,
                                         const CellSpec& pore_cell, int macro_resolution) {
    regime.validate(false);
    crack_cell.validate();
    pore_cell.validate();
    if (crack_cell.dimension != pore_cell.dimension) {
        throw InvalidInput("crack and pore cells must share the dimension");
    }
    const int minimal = minimal_domain_resolution(regime, crack_cell, pore_cell);
    if (macro_resolution <= 0 || macro_resolution % minimal != 0) {
        throw GeometryError("domain resolution " + std::to_string(macro_resolution) +
                            " does not nest the eps- and delta-cells; smallest admissible "
                            "resolution is " + std::to_string(minimal));
    }
    const IndicatorField crack = build_cell(crack_cell);
    const IndicatorField pore = build_cell(pore_cell);

    const int dim = crack_cell.dimension;
    const Lattice lattice(dim, macro_resolution, false);
    const int crack_period = macro_resolution / static_cast<int>(inverse_power_of_two(regime.eps));
    const int pore_period = macro_resolution / static_cast<int>(inverse_power_of_two(regime.delta()));
    const int crack_block = crack_period / crack_cell.resolution;
    const int pore_block = pore_period / pore_cell.resolution;

    std::vector<std::uint8_t> chi_c(lattice.num_cells()), chi_p(lattice.num_cells()),
        chi(lattice.num_cells());
    for (std::size_t cell = 0; cell < lattice.num_cells(); ++cell) {
        const Coord x = lattice.cell_coords(cell);
        Coord zc{}, yc{};
        for (int a = 0; a < dim; ++a) {
            zc[a] = (x[a] % crack_period) / crack_block;
            yc[a] = (x[a] % pore_period) / pore_block;
        }
        const bool in_crack = crack.fluid(crack.lattice().cell_index(zc));
        const bool in_pore = !in_crack && pore.fluid(pore.lattice().cell_index(yc));
        chi_c[cell] = in_crack ? 1 : 0;
        chi_p[cell] = in_pore ? 1 : 0;
        chi[cell] = (in_crack || in_pore) ? 1 : 0;
    }
    PerforatedDomain domain;
    domain.fluid = IndicatorField(lattice, std::move(chi));
    domain.crack = IndicatorField(lattice, std::move(chi_c));
    domain.pore = IndicatorField(lattice, std::move(chi_p));
    domain.eps = regime.eps;
    domain.delta = regime.delta();
    domain.cells_per_crack_period = crack_period;
    domain.cells_per_pore_period = pore_period;
    return domain;
}

int fluid_components(const IndicatorField& field, std::vector<int>& labels) {
    const Lattice& lat = field.lattice();
    labels.assign(lat.num_cells(), -1);
    int count = 0;
    std::deque<std::size_t> queue;
    for (std::size_t seed = 0; seed < lat.num_cells(); ++seed) {
        if (!field.fluid(seed) || labels[seed] >= 0) continue;
        labels[seed] = count;
        queue.push_back(seed);
        while (!queue.empty()) {
            const std::size_t cell = queue.front();
            queue.pop_front();
            const Coord c = lat.cell_coords(cell);
            for (int a = 0; a < lat.dim(); ++a) {
                for (int s : {-1, 1}) {
                    Coord nb = c;
                    nb[a] += s;
                    const std::ptrdiff_t j = lat.cell_at(nb);
                    if (j < 0) continue;
                    const auto uj = static_cast<std::size_t>(j);
                    if (!field.fluid(uj) || labels[uj] >= 0) continue;
                    labels[uj] = count;
                    queue.push_back(uj);
                }
            }
        }
        ++count;
    }
    return count;
}

std::array<bool, 3> percolating_axes(const IndicatorField& field) {
    const Lattice& lat = field.lattice();
    const int dim = lat.dim();
    std::array<bool, 3> result{false, false, false};

    if (!lat.periodic()) {
        std::vector<int> labels;
        const int count = fluid_components(field, labels);
        for (int a = 0; a < dim; ++a) {
            std::vector<std::uint8_t> low(count, 0), high(count, 0);
            for (std::size_t cell = 0; cell < lat.num_cells(); ++cell) {
                if (labels[cell] < 0) continue;
                const Coord c = lat.cell_coords(cell);
                if (c[a] == 0) low[labels[cell]] = 1;
                if (c[a] == lat.n() - 1) high[labels[cell]] = 1;
            }
            for (int k = 0; k < count; ++k) result[a] = result[a] || (low[k] && high[k]);
        }
        return result;
    }

    // Unwrapped coordinates: revisiting a cell at a different unwrapped
    // position closes a cycle that winds around the torus.
    std::vector<Coord> unwrapped(lat.num_cells());
    std::vector<std::uint8_t> seen(lat.num_cells(), 0);
    std::deque<std::size_t> queue;
    for (std::size_t seed = 0; seed < lat.num_cells(); ++seed) {
        if (!field.fluid(seed) || seen[seed]) continue;
        seen[seed] = 1;
        unwrapped[seed] = lat.cell_coords(seed);
        queue.push_back(seed);
        while (!queue.empty()) {
            const std::size_t cell = queue.front();
            queue.pop_front();
            const Coord u = unwrapped[cell];
            for (int a = 0; a < dim; ++a) {
                for (int s : {-1, 1}) {
                    Coord nb = u;
                    nb[a] += s;
                    const std::ptrdiff_t j = lat.cell_at(nb);
                    if (j < 0 || !field.fluid(static_cast<std::size_t>(j))) continue;
                    const auto uj = static_cast<std::size_t>(j);
                    if (!seen[uj]) {
                        seen[uj] = 1;
                        unwrapped[uj] = nb;
                        queue.push_back(uj);
                    } else {
                        for (int b = 0; b < dim; ++b) {
                            if (unwrapped[uj][b] != nb[b]) result[b] = true;
                        }
                    }
                }
            }
        }
    }
    return result;
}

bool fluid_percolates(const IndicatorField& field) {
    const auto axes = percolating_axes(field);
    return axes[0] || axes[1] || axes[2];
}

}  // namespace dpm
