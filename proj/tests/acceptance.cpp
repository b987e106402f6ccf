// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include "dpm/analysis.hpp"
#include "dpm/cell_problems.hpp"
#include "dpm/config.hpp"
#include "dpm/geometry.hpp"
#include "dpm/io.hpp"
#include "dpm/macro_models.hpp"
#include "dpm/runner.hpp"
#include "dpm/stokes_dns.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef DPM_CLI_PATH
#define DPM_CLI_PATH "dpm"
#endif

using namespace dpm;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kChannelRelTol = 0.05;
constexpr double kChannelSeconds = 60.0;
constexpr double kBlockedFactor = 10.0;
constexpr double kAsymmetryTol = 1e-6;
constexpr double kPsdRelTol = 1e-10;
constexpr double kMachineTol = 1e-14;
constexpr double kEnergyIdentityTol = 1e-10;
constexpr double kEstimateSpread = 2.0;
constexpr double kWaveSpeedTol = 0.02;
constexpr double kPoincareRelTol = 0.05;
constexpr double kStudySeconds = 1800.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CellSpec cell(Shape shape, double param, int n, bool inverted = false, int dim = 2, int axis = 0) {
    CellSpec s;
    s.dimension = dim;
    s.shape = shape;
    s.param = param;
    s.resolution = n;
    s.inverted = inverted;
    s.channel_axis = axis;
    return s;
}

bool psd_on_random(const Eigen::MatrixXd& m, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    const double scale = std::max(1.0, m.norm());
    for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd x(m.rows());
        for (int i = 0; i < x.size(); ++i) x[i] = g(rng);
        if (x.dot(m * x) < -kPsdRelTol * scale * x.squaredNorm()) return false;
    }
    return true;
}

/// The study backing criteria 3, 4, 8 and 10.
ConvergenceStudyConfig study_config() {
    ConvergenceStudyConfig c;
    c.crack = cell(Shape::centered_block, 0.5, 64);
    c.pore = cell(Shape::centered_block, 0.75, 8, true);
    c.regime = ScalingRegime::with_default_rules(RegimeKind::filtration, 0.5, 2.0, 0.0, 1.0, 1.0);
    c.eps_list = {0.5, 0.25, 0.125};
    c.forcing = ForcingSpec::confined_vortex();
    c.dt = 0.05;
    c.final_time = 1.0;
    c.sample_times = {0.25, 0.5, 0.75, 1.0};
    c.macro_resolution = 64;
    return c;
}

Outcome channel_permeability() {
    const auto t0 = std::chrono::steady_clock::now();
    const EffectiveTensor b = filtration_tensor(build_cell(cell(Shape::axis_channel, 0.5, 128)), 1.0);
    const double secs = seconds_since(t0);
    const double target = 0.125 / 12.0;
    const double err = std::abs(b.matrix(0, 0) - target) / target;
    return {err <= kChannelRelTol && secs < kChannelSeconds,
            "B_xx = " + fmt("%.8g", b.matrix(0, 0)) + ", relative error " + fmt("%.3g", err) + ", " +
                fmt("%.2f", secs) + " s"};
}

Outcome disconnected_cracks() {
    CellSolverOptions opts;
    const IndicatorField island = build_cell(cell(Shape::centered_block, 0.5, 32, true));
    const EffectiveTensor b = filtration_tensor(island, 1.0, opts);
    const double norm = b.matrix.norm();

    HomogenizedCoefficients c;
    c.dimension = 2;
    c.B1 = b.matrix;
    c.m_c = porosity(island);
    c.m = c.m_c;
    c.mu1 = 1.0;
    MacroOptions mo;
    mo.resolution = 32;
    mo.dt = 0.05;
    mo.final_time = 1.0;
    mo.sample_times = {0.5, 1.0};
    const MacroTrajectory t =
        run_darcy(c, ForcingSpec::rotational(), MacroBoundary::pressure_drop_x(1.0, 0.0), mo);
    double vmax = 0.0;
    for (const auto& d : t.steps) vmax = std::max(vmax, d.max_crack_velocity);
    return {norm <= kBlockedFactor * opts.tol && vmax == 0.0,
            "|B1| = " + fmt("%.3g", norm) + ", max |v_c| = " + fmt("%.3g", vmax)};
}

Outcome tensor_structure() {
    std::vector<CellSpec> cells = {
        cell(Shape::full_fluid, 0.0, 16),
        cell(Shape::centered_block, 0.5, 32),
        cell(Shape::centered_block, 0.25, 32),
        cell(Shape::centered_ball, 0.6, 32),
        cell(Shape::axis_channel, 0.5, 32),
        cell(Shape::axis_channel, 0.375, 32, false, 2, 1),
        cell(Shape::centered_block, 0.5, 32, true),
        cell(Shape::centered_block, 0.75, 8, true),
        cell(Shape::centered_ball, 0.5, 16, false, 3),
    };
    // Asymmetric L-shaped inclusion.
    CellSpec l = cell(Shape::custom_mask, 0.0, 16);
    l.mask.assign(256, 1);
    for (int j = 3; j < 12; ++j) {
        for (int i = 2; i < 6; ++i) l.mask[i + 16 * j] = 0;
    }
    for (int j = 3; j < 7; ++j) {
        for (int i = 6; i < 13; ++i) l.mask[i + 16 * j] = 0;
    }
    cells.push_back(l);

    std::mt19937_64 rng(7);
    double worst_asym = 0.0;
    bool psd = true;
    int tensors = 0;
    for (const auto& spec : cells) {
        const IndicatorField f = build_cell(spec);
        std::vector<EffectiveTensor> ts;
        const bool has_solid_contact = f.has_solid();
        if (has_solid_contact) ts.push_back(filtration_tensor(f, 1.0));
        const AcousticCellResult c = acoustic_tensor_crack(f);
        ts.push_back(c.b2);
        ts.push_back(c.momentum);
        const AcousticCellResult p = acoustic_tensor_pore(f, 1.0, 0.75);
        ts.push_back(p.b2);
        ts.push_back(p.momentum);
        for (const auto& t : ts) {
            worst_asym = std::max(worst_asym, t.asymmetry);
            const bool sym = (t.matrix - t.matrix.transpose()).norm() == 0.0;
            psd = psd && sym && psd_on_random(t.matrix, rng);
            ++tensors;
        }
    }
    return {worst_asym <= kAsymmetryTol && psd,
            std::to_string(tensors) + " tensors on " + std::to_string(cells.size()) +
                " cells, worst asymmetry " + fmt("%.3g", worst_asym) + (psd ? ", all PSD" : ", PSD violated")};
}

Outcome trivial_acoustic_limits() {
    const IndicatorField crack = build_cell(cell(Shape::full_fluid, 0.0, 16));
    const IndicatorField pore = build_cell(cell(Shape::full_fluid, 0.0, 8));
    const AcousticCellResult c = acoustic_tensor_crack(crack);
    const double beta = 2.0, m_c = 1.0;
    const AcousticCellResult p = acoustic_tensor_pore(pore, beta, m_c);
    const bool exact_zero = (c.b2.matrix.array() == 0.0).all() && (p.b2.matrix.array() == 0.0).all();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
    const double beta_c = beta + 1.0 - m_c;
    const bool momentum = (c.momentum.matrix - id).norm() == 0.0 &&
                          (p.momentum.matrix - beta_c * id).norm() == 0.0;

    // tau0 dv/dt = M F away from the walls, before any pressure signal arrives.
    HomogenizedCoefficients h;
    h.dimension = 2;
    h.Mc = c.momentum.matrix;
    h.Mp = p.momentum.matrix;
    h.m = 1.0;
    h.m_c = 1.0;
    h.m_p = 1.0;
    h.tau0 = 0.5;
    h.beta = beta;
    MacroOptions mo;
    mo.resolution = 64;
    mo.dt = 0.5 * acoustic_cfl_limit(h, mo.resolution);
    const int steps = 10;
    mo.final_time = steps * mo.dt;
    const Vec3 force{0.3, -0.7, 0.0};
    const MacroTrajectory t = run_acoustics(h, ForcingSpec::constant(force), MacroBoundary::no_flux(), mo);
    const MacroState& s = t.final_state;
    const Lattice& lat = s.lattice;
    const double t_half = mo.final_time - 0.5 * mo.dt;
    double err = 0.0;
    for (int a = 0; a < 2; ++a) {
        Coord mid{32, 32, 0};
        const std::size_t face = lat.face_index(a, mid);
        const double vc = h.Mc(a, a) * force[a] * t_half / h.tau0;
        const double vp = h.Mp(a, a) * force[a] * t_half / h.tau0;
        err = std::max(err, std::abs(s.v_c[a][face] - vc) / std::abs(vc));
        err = std::max(err, std::abs(s.v_p[a][face] - vp) / std::abs(vp));
    }
    return {exact_zero && momentum && err <= kMachineTol,
            std::string(exact_zero ? "B2 = 0 exactly" : "B2 nonzero") +
                (momentum ? ", momentum = m I" : ", momentum mismatch") +
                ", interior velocity error " + fmt("%.3g", err)};
}

Outcome energy_identity(const ConvergenceReport& report) {
    double worst = 0.0;
    for (const auto& e : report.entries) worst = std::max(worst, e.max_energy_residual);
    // Inertial regime on a perforated domain.
    const ScalingRegime reg =
        ScalingRegime::with_default_rules(RegimeKind::acoustics, 0.25, 2.0, 1.0, 0.5, 1.0);
    const PerforatedDomain dom = build_perforated_domain(
        reg, cell(Shape::centered_ball, 0.6, 16), cell(Shape::centered_block, 0.5, 8),
        minimal_domain_resolution(reg, cell(Shape::centered_ball, 0.6, 16), cell(Shape::centered_block, 0.5, 8)));
    DnsOptions o;
    o.dt = 0.01;
    o.final_time = 0.5;
    ForcingSpec f = ForcingSpec::rotational();
    for (auto& term : f.terms) {
        term.time = Factor::cos;
        term.omega = 3.0;
    }
    const DnsTrajectory t = run_dns(dom, reg, f, o);
    worst = std::max(worst, t.max_energy_residual);
    return {report.complete && worst <= kEnergyIdentityTol,
            "worst relative residual " + fmt("%.3g", worst) + " over " +
                std::to_string(t.steps.size()) + " inertial steps and the filtration study"};
}

Outcome estimate_stability(const ConvergenceReport& report) {
    const bool ok = report.complete && report.entries.size() == 3 &&
                    report.energy_ratio_spread < kEstimateSpread &&
                    report.weighted_ratio_spread < kEstimateSpread;
    return {ok, "energy estimate spread " + fmt("%.3g", report.energy_ratio_spread) +
                    ", weighted estimate spread " + fmt("%.3g", report.weighted_ratio_spread)};
}

/// Centroid of q over x > x0 along the row through the pulse.
double right_centroid(const MacroState& s, double x0) {
    const Lattice& lat = s.lattice;
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < lat.num_cells(); ++c) {
        const Vec3 x = lat.cell_center(c);
        if (x[0] <= x0) continue;
        const double q = std::max(0.0, s.q[c]);
        num += q * x[0];
        den += q;
    }
    return num / den;
}

Outcome wave_speed() {
    HomogenizedCoefficients h;
    h.dimension = 2;
    h.Mc = 0.5 * Eigen::MatrixXd::Identity(2, 2);
    h.Mp = 0.5 * Eigen::MatrixXd::Identity(2, 2);
    h.m = 1.0;
    h.m_c = 0.5;
    h.m_p = 0.5;
    h.tau0 = 1.0;
    h.c_f = 1.0;
    MacroOptions mo;
    mo.resolution = 256;
    // The left-going half reflects off x = 0 but stays below x = 0.3 until t2.
    mo.dt = 5e-4;
    const double t1 = 0.15, t2 = 0.5;
    mo.final_time = t2;
    mo.sample_times = {t1, t2};
    mo.initial.amplitude = 1.0;
    mo.initial.center = {0.3, 0.5, 0.5};
    mo.initial.width = 0.03;
    mo.initial.axes = {true, false, false};
    const MacroTrajectory t = run_acoustics(h, ForcingSpec{}, MacroBoundary::no_flux(), mo);
    const double speed = (right_centroid(t.samples[1], 0.3) - right_centroid(t.samples[0], 0.3)) / (t2 - t1);
    bool monotone = true;
    double prev = t.initial_diagnostics.energy;
    for (const auto& d : t.steps) {
        monotone = monotone && d.energy <= prev * (1.0 + 1e-12);
        prev = d.energy;
    }
    const double err = std::abs(speed - 1.0);
    return {err <= kWaveSpeedTol && monotone,
            "speed " + fmt("%.5f", speed) + " (c_eff " + fmt("%.3g", effective_wave_speed(h)) + ")" +
                (monotone ? ", energy non-increasing" : ", energy increased")};
}

Outcome poincare_scaling(const ConvergenceReport& report) {
    const double s = 0.5;
    const PoincareResult r = poincare_constant(build_cell(cell(Shape::axis_channel, s, 128)));
    const double target = s * s / (std::numbers::pi * std::numbers::pi);
    const double err = std::abs(r.constant - target) / target;
    bool bound = report.complete;
    for (const auto& e : report.entries) bound = bound && e.poincare_bound_holds;
    return {err <= kPoincareRelTol && bound,
            "C = " + fmt("%.6g", r.constant) + " vs s^2/pi^2 = " + fmt("%.6g", target) +
                ", relative error " + fmt("%.3g", err) +
                (bound ? ", pore bound holds at all samples" : ", pore bound violated")};
}

std::string slurp(const fs::path& p) {
    if (!fs::exists(p)) return "<missing>";
    return read_text_file(p.string());
}

Outcome determinism(const fs::path& scratch) {
    struct Case {
        std::string sub;
        std::string config;
    };
    const std::string regime_f = "[regime]\nkind = filtration\ntau0 = 0\nmu1 = 1\nc_f = 1\n";
    const std::vector<Case> cases = {
        {"cell-tensor",
         "[geometry]\ndimension = 2\ncrack.shape = centered_ball\ncrack.param = 0.5\ncrack.resolution = 32\n" +
             regime_f},
        {"dns",
         "[geometry]\ndimension = 2\ncrack.shape = centered_block\ncrack.param = 0.5\ncrack.resolution = 16\n"
         "pore.shape = centered_block\npore.param = 0.75\npore.resolution = 8\npore.inverted = true\n"
         "eps = 0.25\nr = 2\n" +
             regime_f +
             "[solver]\ndt = 0.1\nfinal_time = 0.5\n[forcing]\npreset = confined_vortex\n"
             "[output]\nsample_times = 0.2, 0.5\n"},
        {"darcy",
         "[geometry]\ndimension = 2\ncrack.shape = centered_block\ncrack.param = 0.5\ncrack.resolution = 16\n" +
             regime_f +
             "[solver]\ndt = 0.1\nfinal_time = 1\nmacro_resolution = 16\n[boundary]\nx_low = pressure 1\n"
             "x_high = pressure 0\n"},
        {"acoustics",
         "[geometry]\ndimension = 2\ncrack.shape = centered_block\ncrack.param = 0.5\ncrack.resolution = 16\n"
         "pore.shape = centered_ball\npore.param = 0.5\npore.resolution = 16\n"
         "[regime]\nkind = acoustics\ntau0 = 1\nmu1 = 0\nc_f = 1\nbeta = 1\n"
         "[solver]\ndt = 0.01\nfinal_time = 0.2\nmacro_resolution = 32\n"
         "[initial]\namplitude = 1\ncenter = 0.5, 0.5\nwidth = 0.1\n"},
        {"poincare",
         "[geometry]\ndimension = 2\ncrack.shape = centered_ball\ncrack.param = 0.5\ncrack.resolution = 32\n" +
             regime_f},
        {"converge",
         "[geometry]\ndimension = 2\ncrack.shape = centered_block\ncrack.param = 0.5\ncrack.resolution = 16\n"
         "pore.shape = centered_block\npore.param = 0.75\npore.resolution = 8\npore.inverted = true\n"
         "r = 2\neps_list = 0.5, 0.25\n" +
             regime_f +
             "[solver]\ndt = 0.1\nfinal_time = 0.5\nmacro_resolution = 16\n"
             "[forcing]\npreset = confined_vortex\n[output]\nsample_times = 0.2, 0.5\n"},
    };
    int identical = 0;
    std::string odd;
    for (const auto& c : cases) {
        const fs::path dir = scratch / c.sub;
        fs::create_directories(dir);
        const fs::path cfg = dir / "run.ini";
        write_text_file(cfg.string(), c.config);
        std::string outs[2];
        for (int k = 0; k < 2; ++k) {
            const fs::path out = dir / ("run" + std::to_string(k));
            fs::remove_all(out);
            // Second converge run goes through the CLI with two workers.
            std::string cmd = std::string("\"") + DPM_CLI_PATH + "\" " + c.sub + " --config \"" +
                              cfg.string() + "\" --out \"" + out.string() + "\" --quiet" +
                              (k == 1 && c.sub == "converge" ? " --jobs 2" : "");
            const int status = std::system(cmd.c_str());
            if (status != 0) odd += c.sub + " exited with status " + std::to_string(status) + "; ";
            outs[k] = slurp(out / "summary.json") + slurp(out / "diagnostics.csv") +
                      slurp(out / "config.resolved");
        }
        if (outs[0] == outs[1] && outs[0].find("<missing>") == std::string::npos) ++identical;
        else odd += c.sub + " differs; ";
    }
    return {identical == static_cast<int>(cases.size()),
            std::to_string(identical) + "/" + std::to_string(cases.size()) +
                " subcommands byte-identical" + (odd.empty() ? "" : " (" + odd + ")")};
}

}  // namespace

int main() {
    const fs::path scratch = fs::temp_directory_path() / "dpm_acceptance";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    int failures = 0;
    auto report_line = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    };

    report_line(1, "channel permeability", channel_permeability);
    report_line(2, "disconnected cracks are blocked", disconnected_cracks);

    const auto t0 = std::chrono::steady_clock::now();
    ConvergenceReport study;
    std::string study_error;
    try {
        study = convergence_study(study_config(), 1);
    } catch (const std::exception& e) {
        study.complete = false;
        study_error = e.what();
    }
    const double study_secs = seconds_since(t0);

    report_line(3, "blocked pores under filtration", [&] {
        std::string d = "pore speed";
        for (const auto& e : study.entries) d += " " + fmt("%.3g", e.pore_speed);
        d += ", " + fmt("%.1f", study_secs) + " s";
        if (!study_error.empty()) d += ", " + study_error;
        return Outcome{study.complete && study.pore_speed_decreasing && study_secs < kStudySeconds, d};
    });
    report_line(4, "homogenization convergence", [&] {
        std::string d = "crack velocity error";
        for (const auto& e : study.entries) d += " " + fmt("%.4g", e.crack_velocity_error);
        d += ", verdict " + study.verdict;
        return Outcome{study.complete && study.crack_error_decreasing, d};
    });
    report_line(5, "tensor structure", tensor_structure);
    report_line(6, "trivial acoustic limits", trivial_acoustic_limits);
    report_line(7, "discrete energy identity", [&] { return energy_identity(study); });
    report_line(8, "a priori estimate stability", [&] { return estimate_stability(study); });
    report_line(9, "acoustic wave speed", wave_speed);
    report_line(10, "Poincare scaling", [&] { return poincare_scaling(study); });
    report_line(11, "determinism", [&] { return determinism(scratch); });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
