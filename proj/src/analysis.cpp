#include "dpm/analysis.hpp"

#include "dpm/error.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace dpm {

namespace {

int blocks_for(double eps, int resolution) {
    const double inv = 1.0 / eps;
    const long blocks = std::lround(inv);
    if (blocks < 1 || std::abs(inv - static_cast<double>(blocks)) > 1e-9 * inv ||
        resolution % blocks != 0) {
        throw InvalidInput("eps-cells do not align with the grid of resolution " +
                           std::to_string(resolution));
    }
    return static_cast<int>(blocks);
}

std::size_t block_of(const Coord& c, int dim, int per_block, int blocks) {
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (int a = 0; a < dim; ++a) {
        idx += static_cast<std::size_t>(c[a] / per_block) * stride;
        stride *= static_cast<std::size_t>(blocks);
    }
    return idx;
}

BlockField empty_blocks(int dim, int blocks) {
    BlockField out;
    out.dimension = dim;
    out.blocks = blocks;
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(blocks);
    out.velocity.assign(n, Vec3{});
    out.pressure.assign(n, 0.0);
    return out;
}

double spread(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo <= 0.0) return *hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return *hi / *lo;
}

bool strictly_decreasing(const std::vector<double>& values) {
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (!(values[i] < values[i - 1])) return false;
    }
    return !values.empty();
}

ConvergenceEntry run_entry(const ConvergenceStudyConfig& cfg, double eps, double poincare,
                           const ProgressCallback& progress) {
    ScalingRegime regime = cfg.regime;
    regime.eps = eps;
    regime.validate(true);
    const int fine = minimal_domain_resolution(regime, cfg.crack, cfg.pore);
    const PerforatedDomain domain = build_perforated_domain(regime, cfg.crack, cfg.pore, fine);

    ConvergenceEntry e;
    e.eps = eps;
    e.delta = regime.delta();
    e.fine_resolution = fine;
    e.tensor_resolution = domain.cells_per_crack_period;

    // Tensors at the resolution the DNS sees each eps-cell with.
    const IndicatorField crack_cell = refine_cell(build_cell(cfg.crack), domain.cells_per_crack_period);
    const IndicatorField pore_cell = refine_cell(build_cell(cfg.pore), domain.cells_per_pore_period);
    HomogenizedCoefficients coeffs;
    coeffs.dimension = cfg.crack.dimension;
    coeffs.m_c = porosity(crack_cell);
    coeffs.m_p = porosity(pore_cell);
    coeffs.m = composite_porosity(coeffs.m_c, coeffs.m_p);
    coeffs.c_f = regime.c_f;
    coeffs.tau0 = regime.tau0;
    coeffs.mu1 = regime.mu1;
    coeffs.beta = cfg.beta;

    MacroOptions mo;
    mo.resolution = cfg.macro_resolution;
    mo.final_time = cfg.final_time;
    mo.sample_times = cfg.sample_times;
    mo.dt = cfg.dt;
    const MacroBoundary bc = MacroBoundary::no_flux();
    MacroTrajectory macro;
    if (regime.kind == RegimeKind::filtration) {
        coeffs.B1 = filtration_tensor(crack_cell, regime.mu1, cfg.cell_options).matrix;
        e.tensor = coeffs.B1;
        macro = run_darcy(coeffs, cfg.forcing, bc, mo);
    } else {
        const AcousticCellResult c = acoustic_tensor_crack(crack_cell, cfg.cell_options);
        const AcousticCellResult p =
            coeffs.m_p > 0.0 ? acoustic_tensor_pore(pore_cell, cfg.beta, coeffs.m_c, cfg.cell_options)
                             : AcousticCellResult{};
        const int d = coeffs.dimension;
        coeffs.Mc = c.momentum.matrix;
        coeffs.Mp = coeffs.m_p > 0.0 ? p.momentum.matrix : Eigen::MatrixXd::Zero(d, d);
        e.tensor = coeffs.Mc + coeffs.Mp;
        const double limit = acoustic_cfl_limit(coeffs, mo.resolution);
        const long substeps = std::max(1L, static_cast<long>(std::ceil(cfg.dt / (0.9 * limit))));
        mo.dt = cfg.dt / static_cast<double>(substeps);
        macro = run_acoustics(coeffs, cfg.forcing, bc, mo);
    }
    blocks_for(eps, cfg.macro_resolution);

    DnsOptions dno;
    dno.dt = cfg.dt;
    dno.final_time = cfg.final_time;
    dno.sample_times = cfg.sample_times;
    const DnsTrajectory dns = run_dns(domain, regime, cfg.forcing, dno);
    e.max_energy_residual = dns.max_energy_residual;

    std::vector<BlockField> dns_crack, dns_pore, dns_all, hom_crack, hom_all;
    for (const auto& s : dns.samples) {
        dns_crack.push_back(cell_average(s.field, domain, Phase::crack));
        dns_pore.push_back(cell_average(s.field, domain, Phase::pore));
        dns_all.push_back(cell_average(s.field, domain, Phase::all));
    }
    for (const auto& s : macro.samples) {
        hom_crack.push_back(block_average(s, eps, Phase::crack));
        hom_all.push_back(block_average(s, eps, Phase::all));
    }
    e.crack_velocity_error = relative_l2_error(dns_crack, hom_crack, Channel::velocity);
    e.total_velocity_error = relative_l2_error(dns_all, hom_all, Channel::velocity);
    e.pressure_error = relative_l2_error(dns_all, hom_all, Channel::pressure);
    e.pore_speed = rms_speed(dns_pore);
    e.crack_speed = rms_speed(dns_crack);

    const EstimateReport est = verify_estimates(dns, poincare);
    e.energy_ratio = est.energy_ratio;
    e.weighted_ratio = est.weighted_ratio;
    e.poincare_bound_holds = est.bound_holds;
    if (progress) {
        progress("eps " + std::to_string(eps) + ": fine grid " + std::to_string(fine) +
                 ", crack velocity error " + std::to_string(e.crack_velocity_error));
    }
    return e;
}

}  // namespace

IndicatorField refine_cell(const IndicatorField& cell, int resolution) {
    const int n = cell.resolution();
    if (resolution == n) return cell;
    if (resolution < n || resolution % n != 0) {
        throw InvalidInput("refined resolution must be a multiple of the cell resolution");
    }
    const int factor = resolution / n;
    const Lattice fine(cell.dim(), resolution, cell.periodic());
    std::vector<std::uint8_t> data(fine.num_cells());
    for (std::size_t c = 0; c < data.size(); ++c) {
        Coord x = fine.cell_coords(c);
        for (int a = 0; a < cell.dim(); ++a) x[a] /= factor;
        data[c] = cell.fluid(cell.lattice().cell_index(x)) ? 1 : 0;
    }
    return IndicatorField(fine, std::move(data));
}

SparseMatrix masked_dirichlet_laplacian(const IndicatorField& field) {
    const Lattice& lat = field.lattice();
    const double inv_h2 = 1.0 / (lat.h() * lat.h());
    std::vector<std::ptrdiff_t> id(lat.num_cells(), -1);
    std::ptrdiff_t count = 0;
    for (std::size_t c = 0; c < lat.num_cells(); ++c) {
        if (field.fluid(c)) id[c] = count++;
    }
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t c = 0; c < lat.num_cells(); ++c) {
        if (id[c] < 0) continue;
        const Coord x = lat.cell_coords(c);
        double diag = 0.0;
        for (int a = 0; a < lat.dim(); ++a) {
            for (int s : {-1, 1}) {
                Coord y = x;
                y[a] += s;
                const auto nb = lat.cell_at(y);
                if (nb >= 0 && field.fluid(static_cast<std::size_t>(nb))) {
                    diag += inv_h2;
                    t.emplace_back(static_cast<int>(id[c]), static_cast<int>(id[nb]), -inv_h2);
                } else {
                    diag += 2.0 * inv_h2;
                }
            }
        }
        t.emplace_back(static_cast<int>(id[c]), static_cast<int>(id[c]), diag);
    }
    SparseMatrix a(count, count);
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

PoincareResult poincare_constant(const IndicatorField& field, const PoincareOptions& options) {
    if (field.empty()) throw GeometryError("empty fluid domain");
    if (!(options.tol > 0.0)) throw InvalidInput("tolerance must be positive");
    std::vector<int> labels;
    const int comps = fluid_components(field, labels);
    std::vector<std::uint8_t> touches(static_cast<std::size_t>(comps), 0);
    const Lattice& lat = field.lattice();
    for (std::size_t c = 0; c < lat.num_cells(); ++c) {
        if (labels[c] < 0) continue;
        const Coord x = lat.cell_coords(c);
        for (int a = 0; a < lat.dim(); ++a) {
            for (int s : {-1, 1}) {
                Coord y = x;
                y[a] += s;
                if (!field.fluid_at(y)) touches[static_cast<std::size_t>(labels[c])] = 1;
            }
        }
    }
    for (auto t : touches) {
        if (!t) throw GeometryError("a fluid component has no solid contact; the Poincare constant is unbounded");
    }

    const SparseMatrix a = masked_dirichlet_laplacian(field);
    Eigen::SimplicialLDLT<SparseMatrix> solver(a);
    if (solver.info() != Eigen::Success) throw ConvergenceError("factorisation failed", 0.0, 0);

    Vector x = Vector::Ones(a.rows()).normalized();
    double lambda = 0.0;
    PoincareResult r;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const Vector y = solver.solve(x);
        const double next = x.dot(y) > 0.0 ? 1.0 / x.dot(y) : 0.0;
        r.iterations = it;
        r.relative_change = lambda > 0.0 ? std::abs(next - lambda) / next : 1.0;
        lambda = next;
        x = y.normalized();
        if (it > 1 && r.relative_change <= options.tol) {
            // Rayleigh quotient of the converged vector.
            r.lambda_min = x.dot(a * x);
            r.constant = 1.0 / r.lambda_min;
            return r;
        }
    }
    throw ConvergenceError("inverse power iteration did not converge; last eigenvalue estimate " +
                               std::to_string(lambda),
                           r.relative_change, r.iterations);
}

const char* to_string(Phase phase) {
    switch (phase) {
    case Phase::pore: return "pore";
    case Phase::crack: return "crack";
    case Phase::all: return "all";
    }
    return "all";
}

BlockField cell_average(const StaggeredField& field, const PerforatedDomain& domain, Phase phase) {
    const Lattice& lat = field.lattice;
    if (!(lat == domain.fluid.lattice())) throw InvalidInput("field and domain lattices differ");
    const int blocks = blocks_for(domain.eps, lat.n());
    const int per = lat.n() / blocks;
    const int d = lat.dim();
    BlockField out = empty_blocks(d, blocks);
    const IndicatorField& mask = phase == Phase::pore    ? domain.pore
                                 : phase == Phase::crack ? domain.crack
                                                         : domain.fluid;
    for (std::size_t c = 0; c < lat.num_cells(); ++c) {
        if (!mask.fluid(c)) continue;
        const std::size_t b = block_of(lat.cell_coords(c), d, per, blocks);
        const Vec3 v = field.cell_velocity(c);
        for (int a = 0; a < d; ++a) out.velocity[b][a] += v[a];
        out.pressure[b] += field.pressure[c];
    }
    const double inv = 1.0 / std::pow(static_cast<double>(per), d);
    for (std::size_t b = 0; b < out.velocity.size(); ++b) {
        for (int a = 0; a < d; ++a) out.velocity[b][a] *= inv;
        out.pressure[b] *= inv;
    }
    return out;
}

BlockField block_average(const MacroState& state, double eps, Phase phase) {
    const Lattice& lat = state.lattice;
    const int blocks = blocks_for(eps, lat.n());
    const int per = lat.n() / blocks;
    const int d = lat.dim();
    BlockField out = empty_blocks(d, blocks);
    for (std::size_t c = 0; c < lat.num_cells(); ++c) {
        const std::size_t b = block_of(lat.cell_coords(c), d, per, blocks);
        Vec3 v{};
        if (phase != Phase::pore) {
            const Vec3 vc = state.cell_velocity(state.v_c, c);
            for (int a = 0; a < d; ++a) v[a] += vc[a];
        }
        if (phase != Phase::crack) {
            const Vec3 vp = state.cell_velocity(state.v_p, c);
            for (int a = 0; a < d; ++a) v[a] += vp[a];
        }
        for (int a = 0; a < d; ++a) out.velocity[b][a] += v[a];
        out.pressure[b] += state.q[c];
    }
    const double inv = 1.0 / std::pow(static_cast<double>(per), d);
    for (std::size_t b = 0; b < out.velocity.size(); ++b) {
        for (int a = 0; a < d; ++a) out.velocity[b][a] *= inv;
        out.pressure[b] *= inv;
    }
    return out;
}

double relative_l2_error(const std::vector<BlockField>& test, const std::vector<BlockField>& ref,
                         Channel channel) {
    if (test.size() != ref.size()) throw InvalidInput("sample series differ in length");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t s = 0; s < test.size(); ++s) {
        if (test[s].velocity.size() != ref[s].velocity.size()) {
            throw InvalidInput("block fields differ in size");
        }
        for (std::size_t b = 0; b < test[s].velocity.size(); ++b) {
            if (channel == Channel::velocity) {
                for (int a = 0; a < 3; ++a) {
                    const double diff = test[s].velocity[b][a] - ref[s].velocity[b][a];
                    num += diff * diff;
                    den += ref[s].velocity[b][a] * ref[s].velocity[b][a];
                }
            } else {
                const double diff = test[s].pressure[b] - ref[s].pressure[b];
                num += diff * diff;
                den += ref[s].pressure[b] * ref[s].pressure[b];
            }
        }
    }
    if (num == 0.0) return 0.0;
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

double rms_speed(const std::vector<BlockField>& series) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& f : series) {
        for (const auto& v : f.velocity) {
            sum += v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            ++count;
        }
    }
    return count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

EstimateReport verify_estimates(const DnsTrajectory& traj, double poincare) {
    if (!(poincare >= 0.0)) throw InvalidInput("Poincare constant must be >= 0");
    EstimateReport r;
    r.poincare_constant = poincare;
    if (!traj.steps.empty()) {
        const EstimateIntegrals& acc = traj.steps.back().integrals;
        if (acc.forcing > 0.0) {
            r.energy_ratio = acc.energy_norm / acc.forcing;
            r.weighted_ratio = (acc.weighted_pore + acc.weighted_crack) / acc.forcing;
        } else if (acc.energy_norm > 0.0 || acc.weighted_pore + acc.weighted_crack > 0.0) {
            r.energy_ratio = std::numeric_limits<double>::infinity();
            r.weighted_ratio = std::numeric_limits<double>::infinity();
        }
    }
    const double delta = traj.regime.delta();
    for (const auto& s : traj.samples) {
        EstimateSample e;
        e.time = s.time;
        e.pore_integral = s.diagnostics.pore_velocity_sq;
        e.bound = poincare * delta * delta * s.diagnostics.gradient_sq;
        e.holds = e.pore_integral <= e.bound * (1.0 + 1e-12) + 1e-300;
        r.bound_holds = r.bound_holds && e.holds;
        r.samples.push_back(e);
    }
    return r;
}

ConvergenceReport convergence_study(const ConvergenceStudyConfig& cfg, int jobs,
                                    const ProgressCallback& progress) {
    if (cfg.eps_list.empty()) throw InvalidInput("eps list is empty");
    for (std::size_t i = 1; i < cfg.eps_list.size(); ++i) {
        if (!(cfg.eps_list[i] < cfg.eps_list[i - 1])) {
            throw InvalidInput("eps list must be strictly decreasing");
        }
    }
    if (cfg.crack.dimension != 2) throw InvalidInput("convergence studies run in d = 2");
    if (cfg.sample_times.empty()) throw InvalidInput("convergence study needs sample times");
    if (jobs < 1) throw InvalidInput("jobs must be >= 1");
    cfg.regime.validate(true);

    ConvergenceReport report;
    report.kind = cfg.regime.kind;
    const IndicatorField pore_cell = build_cell(cfg.pore);
    report.pore_poincare_constant = pore_cell.empty() ? 0.0 : poincare_constant(pore_cell).constant;

    const std::size_t n = cfg.eps_list.size();
    std::vector<ConvergenceEntry> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    const ProgressCallback locked = [&](const std::string& msg) {
        if (!progress) return;
        std::lock_guard<std::mutex> lock(log_mutex);
        progress(msg);
    };
    auto worker = [&]() {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                results[i] = run_entry(cfg, cfg.eps_list[i], report.pore_poincare_constant, locked);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int threads = std::min<int>(jobs, static_cast<int>(n));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) {
            report.complete = false;
            try {
                std::rethrow_exception(errors[i]);
            } catch (const Error& e) {
                report.failure = e.what();
                report.failure_category = e.category();
            } catch (const std::exception& e) {
                report.failure = e.what();
                report.failure_category = ErrorCategory::convergence;
            }
            break;
        }
        report.entries.push_back(results[i]);
    }

    std::vector<double> crack_err, pore_speed, e_ratio, w_ratio;
    for (const auto& e : report.entries) {
        crack_err.push_back(report.kind == RegimeKind::filtration ? e.crack_velocity_error
                                                                  : e.total_velocity_error);
        pore_speed.push_back(e.pore_speed);
        e_ratio.push_back(e.energy_ratio);
        w_ratio.push_back(e.weighted_ratio);
    }
    report.crack_error_decreasing = report.complete && strictly_decreasing(crack_err);
    report.pore_speed_decreasing = report.complete && strictly_decreasing(pore_speed);
    report.energy_ratio_spread = spread(e_ratio);
    report.weighted_ratio_spread = spread(w_ratio);
    if (!report.complete) {
        report.verdict = "incomplete";
    } else {
        report.verdict = report.crack_error_decreasing ? "converging" : "not converging";
    }
    return report;
}

}  // namespace dpm
