#include "dpm/runner.hpp"

#include "dpm/analysis.hpp"
#include "dpm/cell_problems.hpp"
#include "dpm/config.hpp"
#include "dpm/io.hpp"
#include "dpm/macro_models.hpp"
#include "dpm/stokes_dns.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace dpm {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

/// Non-finite values are written as strings so the document stays valid JSON.
json num(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

json tensor_json(const EffectiveTensor& t) {
    json j;
    j["kind"] = to_string(t.kind);
    j["matrix"] = matrix_json(t.matrix);
    j["asymmetry"] = num(t.asymmetry);
    j["min_eigenvalue"] = num(min_eigenvalue(t.matrix));
    j["max_eigenvalue"] = num(max_eigenvalue(t.matrix));
    j["cell_fingerprint"] = t.fingerprint;
    j["tolerance"] = num(t.tolerance);
    bool blocked = false;
    for (const auto& s : t.axis_stats) blocked = blocked || s.blocked;
    j["blocked"] = blocked;
    return j;
}

std::string numbered(const std::string& stem, std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu", i);
    return stem + buf + ".vtk";
}

struct Context {
    const RunConfig& cfg;
    const RunOptions& opts;
    fs::path out;
    json summary;
    struct Failure {
        ErrorCategory category;
        std::string message;
    };
    std::optional<Failure> failure;

    std::string path(const std::string& name) const { return (out / name).string(); }
    void log(const std::string& msg) const {
        if (!opts.quiet) std::cerr << msg << '\n';
    }
};

void write_cell_masks(const Context& ctx, const IndicatorField& crack, const IndicatorField* pore) {
    if (!ctx.cfg.write_masks) return;
    write_mask_vtk(ctx.path("mask_crack.vtk"), crack);
    write_raw_mask(ctx.path("mask_crack.raw"), crack);
    if (pore) {
        write_mask_vtk(ctx.path("mask_pore.vtk"), *pore);
        write_raw_mask(ctx.path("mask_pore.raw"), *pore);
    }
}

void add_tensor_rows(CsvTable& csv, const EffectiveTensor& t) {
    for (std::size_t a = 0; a < t.axis_stats.size(); ++a) {
        const auto& s = t.axis_stats[a];
        csv.add_row({static_cast<double>(t.kind), static_cast<double>(a),
                     static_cast<double>(s.outer_iterations), static_cast<double>(s.inner_iterations),
                     s.divergence_residual, s.momentum_residual, s.blocked ? 1.0 : 0.0});
    }
}

void write_tensor_fields(const Context& ctx, const EffectiveTensor& t,
                         const std::vector<StaggeredField>& fields, const IndicatorField& cell) {
    if (!ctx.cfg.write_vtk) return;
    for (std::size_t a = 0; a < fields.size(); ++a) {
        write_field_vtk(ctx.path(std::string("fields_") + to_string(t.kind) + "_axis" +
                                 std::to_string(a) + ".vtk"),
                        fields[a], cell);
    }
}

void run_cell_tensor(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const IndicatorField crack = build_cell(cfg.crack);
    std::optional<IndicatorField> pore;
    if (cfg.has_pore) pore = build_cell(cfg.pore);
    write_cell_masks(ctx, crack, pore ? &*pore : nullptr);

    CsvTable csv({"tensor_kind", "axis", "outer_iterations", "inner_iterations",
                  "divergence_residual", "momentum_residual", "blocked"});
    json tensors = json::array();
    const double m_c = porosity(crack);
    ctx.summary["crack_porosity"] = num(m_c);
    ctx.summary["crack_fingerprint"] = crack.fingerprint();
    if (pore) {
        ctx.summary["pore_porosity"] = num(porosity(*pore));
        ctx.summary["pore_fingerprint"] = pore->fingerprint();
        ctx.summary["composite_porosity"] = num(composite_porosity(m_c, porosity(*pore)));
    }

    auto emit = [&](const EffectiveTensor& t, const std::vector<StaggeredField>& fields,
                    const IndicatorField& cell) {
        tensors.push_back(tensor_json(t));
        add_tensor_rows(csv, t);
        write_tensor_fields(ctx, t, fields, cell);
    };
    std::vector<StaggeredField> fields;
    if (cfg.regime.kind == RegimeKind::filtration) {
        ctx.log("computing crack permeability");
        const EffectiveTensor b1 = filtration_tensor(crack, cfg.regime.mu1, cfg.cell_options, &fields);
        emit(b1, fields, crack);
    } else {
        ctx.log("computing crack acoustic tensor");
        const AcousticCellResult c = acoustic_tensor_crack(crack, cfg.cell_options, &fields);
        emit(c.b2, fields, crack);
        tensors.push_back(tensor_json(c.momentum));
        if (pore) {
            ctx.log("computing pore acoustic tensor");
            fields.clear();
            const AcousticCellResult p =
                acoustic_tensor_pore(*pore, *cfg.beta, m_c, cfg.cell_options, &fields);
            emit(p.b2, fields, *pore);
            tensors.push_back(tensor_json(p.momentum));
            ctx.summary["pore_flux_scale"] = num(p.flux_scale);
        }
    }
    ctx.summary["tensors"] = tensors;
    write_text_file(ctx.path("diagnostics.csv"), csv.str());
}

void run_dns_command(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const CellSpec pore_spec = cfg.pore_or_solid();
    const int resolution = cfg.domain_resolution > 0
                               ? cfg.domain_resolution
                               : minimal_domain_resolution(cfg.regime, cfg.crack, pore_spec);
    const PerforatedDomain domain = build_perforated_domain(cfg.regime, cfg.crack, pore_spec, resolution);
    if (cfg.write_masks) {
        write_mask_vtk(ctx.path("mask_domain.vtk"), domain.fluid);
        write_raw_mask(ctx.path("mask_domain.raw"), domain.fluid);
    }
    double poincare = 0.0;
    if (cfg.has_pore) {
        const IndicatorField pore = build_cell(cfg.pore);
        if (!pore.empty()) poincare = poincare_constant(pore, cfg.poincare_options).constant;
    }

    DnsOptions opts;
    opts.dt = cfg.dt;
    opts.final_time = cfg.final_time;
    opts.sample_times = cfg.sample_times;
    opts.alpha_tau_floor = cfg.alpha_tau_floor;
    ctx.log("running DNS on a " + std::to_string(resolution) + "^" + std::to_string(cfg.dimension) +
            " grid");
    const DnsTrajectory traj = run_dns(domain, cfg.regime, cfg.forcing.build(), opts);
    const EstimateReport est = verify_estimates(traj, poincare);

    CsvTable csv({"step", "time", "kinetic", "potential", "dissipation", "numerical_dissipation",
                  "work", "energy_residual", "velocity_sq", "gradient_sq", "pressure_sq",
                  "divergence_sq", "max_divergence", "pore_velocity_sq", "crack_velocity_sq",
                  "forcing_sq", "energy_norm_integral", "weighted_pore_integral",
                  "weighted_crack_integral", "forcing_integral"});
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        const auto& s = traj.steps[i];
        csv.add_row({static_cast<double>(i + 1), s.time, s.kinetic, s.potential, s.dissipation,
                     s.numerical_dissipation, s.work, s.energy_residual, s.velocity_sq, s.gradient_sq,
                     s.pressure_sq, s.divergence_sq, s.max_divergence, s.pore_velocity_sq,
                     s.crack_velocity_sq, s.forcing_sq, s.integrals.energy_norm,
                     s.integrals.weighted_pore, s.integrals.weighted_crack, s.integrals.forcing});
    }
    write_text_file(ctx.path("diagnostics.csv"), csv.str());

    json samples = json::array();
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const auto& s = traj.samples[i];
        json j;
        j["time"] = num(s.time);
        j["velocity_sq"] = num(s.diagnostics.velocity_sq);
        j["gradient_sq"] = num(s.diagnostics.gradient_sq);
        j["pressure_sq"] = num(s.diagnostics.pressure_sq);
        j["pore_velocity_sq"] = num(s.diagnostics.pore_velocity_sq);
        j["crack_velocity_sq"] = num(s.diagnostics.crack_velocity_sq);
        j["max_divergence"] = num(s.diagnostics.max_divergence);
        samples.push_back(j);
        if (cfg.write_vtk) write_field_vtk(ctx.path(numbered("fields_", i)), s.field, domain.fluid);
    }
    json bound = json::array();
    for (const auto& s : est.samples) {
        bound.push_back({{"time", num(s.time)},
                         {"pore_integral", num(s.pore_integral)},
                         {"bound", num(s.bound)},
                         {"holds", s.holds}});
    }
    const auto& acc = traj.final_state.integrals;
    ctx.summary["fine_resolution"] = resolution;
    ctx.summary["eps"] = num(domain.eps);
    ctx.summary["delta"] = num(domain.delta);
    ctx.summary["cells_per_crack_period"] = domain.cells_per_crack_period;
    ctx.summary["cells_per_pore_period"] = domain.cells_per_pore_period;
    ctx.summary["quasi_static"] = traj.quasi_static;
    ctx.summary["steps"] = traj.steps.size();
    ctx.summary["max_energy_residual"] = num(traj.max_energy_residual);
    ctx.summary["integrals"] = {{"energy_norm", num(acc.energy_norm)},
                                {"weighted_pore", num(acc.weighted_pore)},
                                {"weighted_crack", num(acc.weighted_crack)},
                                {"forcing", num(acc.forcing)}};
    ctx.summary["estimates"] = {{"energy_ratio", num(est.energy_ratio)},
                                {"weighted_ratio", num(est.weighted_ratio)},
                                {"pore_poincare_constant", num(est.poincare_constant)},
                                {"pore_bound_holds", est.bound_holds},
                                {"pore_bound", bound}};
    ctx.summary["samples"] = samples;
}

HomogenizedCoefficients coefficients(Context& ctx, bool acoustic) {
    const RunConfig& cfg = ctx.cfg;
    HomogenizedCoefficients c;
    c.dimension = cfg.dimension;
    c.c_f = cfg.regime.c_f;
    c.tau0 = cfg.regime.tau0;
    c.mu1 = cfg.regime.mu1;
    c.beta = cfg.beta.value_or(0.0);
    const int d = cfg.dimension;
    if (cfg.coefficient_source == CoefficientSource::explicit_values) {
        c.B1 = cfg.B1.size() ? cfg.B1 : Eigen::MatrixXd::Zero(d, d);
        c.Mc = cfg.Mc.size() ? cfg.Mc : Eigen::MatrixXd::Zero(d, d);
        c.Mp = cfg.Mp.size() ? cfg.Mp : Eigen::MatrixXd::Zero(d, d);
        c.m = cfg.m;
        c.m_c = cfg.m_c;
        c.m_p = cfg.m_p;
        return c;
    }
    const IndicatorField crack = build_cell(cfg.crack);
    c.m_c = porosity(crack);
    std::optional<IndicatorField> pore;
    if (cfg.has_pore) pore = build_cell(cfg.pore);
    c.m_p = pore ? porosity(*pore) : 0.0;
    c.m = composite_porosity(c.m_c, c.m_p);
    c.B1 = Eigen::MatrixXd::Zero(d, d);
    c.Mc = Eigen::MatrixXd::Zero(d, d);
    c.Mp = Eigen::MatrixXd::Zero(d, d);
    if (!acoustic) {
        ctx.log("computing crack permeability");
        c.B1 = filtration_tensor(crack, cfg.regime.mu1, cfg.cell_options).matrix;
    } else {
        ctx.log("computing acoustic momentum matrices");
        c.Mc = acoustic_tensor_crack(crack, cfg.cell_options).momentum.matrix;
        if (pore && c.m_p > 0.0) {
            c.Mp = acoustic_tensor_pore(*pore, *cfg.beta, c.m_c, cfg.cell_options).momentum.matrix;
        }
    }
    return c;
}

void run_macro(Context& ctx, bool acoustic) {
    const RunConfig& cfg = ctx.cfg;
    const HomogenizedCoefficients c = coefficients(ctx, acoustic);
    MacroOptions opts;
    opts.resolution = cfg.macro_resolution;
    opts.dt = cfg.dt;
    opts.final_time = cfg.final_time;
    opts.sample_times = cfg.sample_times;
    opts.incompressible = cfg.incompressible;
    opts.initial = cfg.initial;
    const ForcingSpec forcing = cfg.forcing.build();
    ctx.log(std::string("running ") + (acoustic ? "acoustic" : "Darcy") + " model on a " +
            std::to_string(cfg.macro_resolution) + "^" + std::to_string(cfg.dimension) + " grid");
    const MacroTrajectory traj = acoustic ? run_acoustics(c, forcing, cfg.boundary, opts)
                                          : run_darcy(c, forcing, cfg.boundary, opts);

    std::vector<std::string> header = {"step", "time", "mass", "outflux", "mass_budget_residual",
                                       "energy", "max_crack_velocity", "max_pore_velocity"};
    const char* axes = "xyz";
    for (int a = 0; a < cfg.dimension; ++a) {
        header.push_back(std::string("flux_") + axes[a] + "_low");
        header.push_back(std::string("flux_") + axes[a] + "_high");
    }
    CsvTable csv(header);
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        const auto& s = traj.steps[i];
        std::vector<double> row = {static_cast<double>(i + 1), s.time, s.mass, s.outflux,
                                   s.mass_budget_residual, s.energy, s.max_crack_velocity,
                                   s.max_pore_velocity};
        for (int a = 0; a < cfg.dimension; ++a) {
            row.push_back(s.wall_flux[a][0]);
            row.push_back(s.wall_flux[a][1]);
        }
        csv.add_row(row);
    }
    write_text_file(ctx.path("diagnostics.csv"), csv.str());
    if (cfg.write_vtk) {
        for (std::size_t i = 0; i < traj.samples.size(); ++i) {
            write_macro_vtk(ctx.path(numbered("fields_", i)), traj.samples[i]);
        }
    }

    json coeffs;
    coeffs["m"] = num(c.m);
    coeffs["m_c"] = num(c.m_c);
    coeffs["m_p"] = num(c.m_p);
    if (acoustic) {
        coeffs["Mc"] = matrix_json(c.Mc);
        coeffs["Mp"] = matrix_json(c.Mp);
        coeffs["wave_speed"] = num(effective_wave_speed(c));
        coeffs["cfl_limit"] = num(acoustic_cfl_limit(c, cfg.macro_resolution));
    } else {
        coeffs["B1"] = matrix_json(c.B1);
    }
    ctx.summary["coefficients"] = coeffs;
    ctx.summary["steps"] = traj.steps.size();
    ctx.summary["max_mass_budget_residual"] = num(traj.max_mass_budget_residual);
    ctx.summary["kernel_flagged"] = traj.kernel_flagged;
    ctx.summary["warnings"] = traj.warnings;
    if (!traj.steps.empty()) {
        const auto& s = traj.steps.back();
        ctx.summary["final"] = {{"time", num(s.time)},
                                {"mass", num(s.mass)},
                                {"energy", num(s.energy)},
                                {"max_crack_velocity", num(s.max_crack_velocity)},
                                {"max_pore_velocity", num(s.max_pore_velocity)}};
    }
    json samples = json::array();
    for (const auto& s : traj.samples) samples.push_back(num(s.time));
    ctx.summary["sample_times"] = samples;
}

void run_poincare(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    const IndicatorField cell = build_cell(cfg.poincare_on_pore ? cfg.pore : cfg.crack);
    if (cfg.write_masks) {
        write_mask_vtk(ctx.path("mask_cell.vtk"), cell);
        write_raw_mask(ctx.path("mask_cell.raw"), cell);
    }
    const PoincareResult r = poincare_constant(cell, cfg.poincare_options);
    CsvTable csv({"constant", "lambda_min", "iterations", "relative_change", "porosity"});
    csv.add_row({r.constant, r.lambda_min, static_cast<double>(r.iterations), r.relative_change,
                 porosity(cell)});
    write_text_file(ctx.path("diagnostics.csv"), csv.str());
    ctx.summary["cell"] = cfg.poincare_on_pore ? "pore" : "crack";
    ctx.summary["cell_fingerprint"] = cell.fingerprint();
    ctx.summary["porosity"] = num(porosity(cell));
    ctx.summary["constant"] = num(r.constant);
    ctx.summary["lambda_min"] = num(r.lambda_min);
    ctx.summary["iterations"] = r.iterations;
    ctx.summary["relative_change"] = num(r.relative_change);
}

int run_converge(Context& ctx) {
    const RunConfig& cfg = ctx.cfg;
    ConvergenceStudyConfig sc;
    sc.crack = cfg.crack;
    sc.pore = cfg.pore;
    sc.regime = cfg.regime;
    sc.beta = cfg.beta.value_or(1.0);
    sc.eps_list = cfg.eps_list;
    sc.forcing = cfg.forcing.build();
    sc.dt = cfg.dt;
    sc.final_time = cfg.final_time;
    sc.sample_times = cfg.sample_times;
    sc.macro_resolution = cfg.macro_resolution;
    sc.cell_options = cfg.cell_options;
    ProgressCallback progress;
    if (!ctx.opts.quiet) progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
    const ConvergenceReport report = convergence_study(sc, ctx.opts.jobs, progress);

    CsvTable csv({"eps", "delta", "fine_resolution", "tensor_resolution", "crack_velocity_error",
                  "total_velocity_error", "pressure_error", "pore_speed", "crack_speed",
                  "energy_ratio", "weighted_ratio", "poincare_bound_holds", "max_energy_residual"});
    json entries = json::array();
    for (const auto& e : report.entries) {
        csv.add_row({e.eps, e.delta, static_cast<double>(e.fine_resolution),
                     static_cast<double>(e.tensor_resolution), e.crack_velocity_error,
                     e.total_velocity_error, e.pressure_error, e.pore_speed, e.crack_speed,
                     e.energy_ratio, e.weighted_ratio, e.poincare_bound_holds ? 1.0 : 0.0,
                     e.max_energy_residual});
        json j;
        j["eps"] = num(e.eps);
        j["delta"] = num(e.delta);
        j["fine_resolution"] = e.fine_resolution;
        j["tensor_resolution"] = e.tensor_resolution;
        j["crack_velocity_error"] = num(e.crack_velocity_error);
        j["total_velocity_error"] = num(e.total_velocity_error);
        j["pressure_error"] = num(e.pressure_error);
        j["pore_speed"] = num(e.pore_speed);
        j["crack_speed"] = num(e.crack_speed);
        j["energy_ratio"] = num(e.energy_ratio);
        j["weighted_ratio"] = num(e.weighted_ratio);
        j["poincare_bound_holds"] = e.poincare_bound_holds;
        j["max_energy_residual"] = num(e.max_energy_residual);
        j["tensor"] = matrix_json(e.tensor);
        entries.push_back(j);
    }
    write_text_file(ctx.path("diagnostics.csv"), csv.str());
    ctx.summary["regime"] = to_string(report.kind);
    ctx.summary["verdict"] = report.verdict;
    ctx.summary["complete"] = report.complete;
    if (!report.complete) {
        ctx.summary["failure"] = report.failure;
        ctx.summary["failure_category"] = to_string(report.failure_category);
        ctx.failure = Context::Failure{report.failure_category, report.failure};
    }
    ctx.summary["pore_poincare_constant"] = num(report.pore_poincare_constant);
    ctx.summary["crack_error_decreasing"] = report.crack_error_decreasing;
    ctx.summary["pore_speed_decreasing"] = report.pore_speed_decreasing;
    ctx.summary["energy_ratio_spread"] = num(report.energy_ratio_spread);
    ctx.summary["weighted_ratio_spread"] = num(report.weighted_ratio_spread);
    ctx.summary["entries"] = entries;
    return report.complete ? 0 : exit_code(report.failure_category);
}

void report_error(std::ostream& err, ErrorCategory category, const std::string& message) {
    json j;
    j["error"] = {{"category", to_string(category)}, {"message", message}};
    err << j.dump() << '\n';
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"cell-tensor", "dns",      "darcy",
                                                   "acoustics",   "poincare", "converge"};
    return names;
}

int exit_code(ErrorCategory category) {
    switch (category) {
    case ErrorCategory::invalid_input: return 2;
    case ErrorCategory::convergence: return 3;
    case ErrorCategory::infeasible_geometry: return 4;
    case ErrorCategory::io: return 5;
    }
    return 1;
}

int run(const RunOptions& options, std::ostream& err) {
    RunConfig cfg;
    try {
        if (options.jobs < 1) throw InvalidInput("--jobs must be >= 1");
        cfg = load_config(options.config_path);
        validate_for(cfg, options.subcommand);
    } catch (const Error& e) {
        report_error(err, e.category(), e.what());
        return exit_code(e.category());
    }

    Context ctx{cfg, options, fs::path(options.out_dir), json::object(), std::nullopt};
    try {
        std::error_code ec;
        fs::create_directories(ctx.out, ec);
        if (ec) throw IoError("cannot create output directory '" + options.out_dir + "': " + ec.message());
        const std::string resolved = resolved_config(cfg);
        write_text_file(ctx.path("config.resolved"), resolved);
        ctx.summary["subcommand"] = options.subcommand;
        ctx.summary["config_fingerprint"] = [&] {
            std::uint64_t h = 1469598103934665603ULL;
            for (unsigned char ch : resolved) {
                h ^= ch;
                h *= 1099511628211ULL;
            }
            char buf[17];
            std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
            return std::string(buf);
        }();

        int status = 0;
        const std::string& sub = options.subcommand;
        if (sub == "cell-tensor") run_cell_tensor(ctx);
        else if (sub == "dns") run_dns_command(ctx);
        else if (sub == "darcy") run_macro(ctx, false);
        else if (sub == "acoustics") run_macro(ctx, true);
        else if (sub == "poincare") run_poincare(ctx);
        else status = run_converge(ctx);

        write_text_file(ctx.path("summary.json"), ctx.summary.dump(2) + "\n");
        if (ctx.failure) report_error(err, ctx.failure->category, ctx.failure->message);
        return status;
    } catch (const Error& e) {
        report_error(err, e.category(), e.what());
        return exit_code(e.category());
    } catch (const std::exception& e) {
        report_error(err, ErrorCategory::convergence, e.what());
        return 1;
    }
}

}  // namespace dpm
