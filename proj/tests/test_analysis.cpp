#include "dpm/analysis.hpp"
#include "dpm/error.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace dpm;

namespace {

CellSpec spec(Shape shape, double param, int n, bool inverted = false) {
    CellSpec s;
    s.shape = shape;
    s.param = param;
    s.resolution = n;
    s.inverted = inverted;
    return s;
}

/// Smallest eigenvalue of -u'' on `rows` cells with walls half a cell
/// beyond the first and last row.
double strip_lambda(int rows, int n) {
    const double h = 1.0 / n;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, rows);
    for (int j = 0; j < rows; ++j) {
        a(j, j) = 2.0;
        if (j > 0) a(j, j - 1) = -1.0;
        if (j + 1 < rows) a(j, j + 1) = -1.0;
    }
    a(0, 0) = 3.0;
    a(rows - 1, rows - 1) = 3.0;
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a / (h * h)).eigenvalues().minCoeff();
}

BlockField blocks(std::vector<Vec3> v, std::vector<double> p) {
    BlockField b;
    b.blocks = 1;
    b.velocity = std::move(v);
    b.pressure = std::move(p);
    return b;
}

ConvergenceStudyConfig small_study(double amplitude) {
    ConvergenceStudyConfig c;
    c.crack = spec(Shape::centered_block, 0.5, 16);
    c.pore = spec(Shape::centered_block, 0.75, 8, true);
    c.regime = ScalingRegime::with_default_rules(RegimeKind::filtration, 0.5, 2.0, 0.0, 1.0, 1.0);
    c.eps_list = {0.5, 0.25};
    c.forcing = ForcingSpec::confined_vortex(amplitude);
    c.dt = 0.1;
    c.final_time = 0.4;
    c.sample_times = {0.2, 0.4};
    c.macro_resolution = 16;
    return c;
}

}  // namespace

TEST(Poincare, StripMatchesDiscreteOracle) {
    for (int n : {16, 32}) {
        const PoincareResult r = poincare_constant(build_cell(spec(Shape::axis_channel, 0.5, n)));
        EXPECT_NEAR(r.lambda_min, strip_lambda(n / 2, n), 1e-6 * r.lambda_min) << n;
        EXPECT_DOUBLE_EQ(r.constant, 1.0 / r.lambda_min);
    }
}

TEST(Poincare, ApproachesContinuumStrip) {
    // Strip of width s: C = s^2 / pi^2.
    const double s = 0.5;
    const PoincareResult r = poincare_constant(build_cell(spec(Shape::axis_channel, s, 128)));
    EXPECT_NEAR(r.constant, s * s / (std::numbers::pi * std::numbers::pi), 0.01 * r.constant);
}

TEST(Poincare, ShrinksUnderNestedFluid) {
    const double wide = poincare_constant(build_cell(spec(Shape::centered_block, 0.25, 32))).constant;
    const double narrow = poincare_constant(build_cell(spec(Shape::centered_block, 0.75, 32))).constant;
    EXPECT_LT(narrow, wide);
}

TEST(Poincare, SelfConvergesUnderRefinement) {
    const double a = poincare_constant(build_cell(spec(Shape::centered_block, 0.75, 16, true))).constant;
    const double b = poincare_constant(build_cell(spec(Shape::centered_block, 0.75, 32, true))).constant;
    EXPECT_LT(std::abs(a - b) / b, 0.05);
}

TEST(Poincare, RejectsUnboundedAndEmptyCells) {
    EXPECT_THROW(poincare_constant(build_cell(spec(Shape::full_fluid, 0.0, 8))), GeometryError);
    EXPECT_THROW(poincare_constant(build_cell(spec(Shape::centered_block, 1.0, 8))), GeometryError);
    PoincareOptions o;
    o.tol = 0.0;
    EXPECT_THROW(poincare_constant(build_cell(spec(Shape::centered_block, 0.5, 8)), o), InvalidInput);
}

TEST(Poincare, LaplacianIsSymmetricPositive) {
    const SparseMatrix a = masked_dirichlet_laplacian(build_cell(spec(Shape::centered_ball, 0.5, 16)));
    const Eigen::MatrixXd d(a);
    EXPECT_EQ((d - d.transpose()).norm(), 0.0);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(d).eigenvalues().minCoeff(), 0.0);
}

TEST(Averages, ConstantFieldAveragesToPorosity) {
    const ScalingRegime r = ScalingRegime::with_default_rules(RegimeKind::filtration, 0.5, 2.0, 0.0, 1.0, 1.0);
    const CellSpec crack = spec(Shape::centered_block, 0.5, 8);
    const CellSpec pore = spec(Shape::centered_block, 0.5, 8, true);
    const PerforatedDomain d = build_perforated_domain(r, crack, pore, minimal_domain_resolution(r, crack, pore));
    StaggeredField f(d.fluid.lattice());
    for (std::size_t c = 0; c < f.pressure.size(); ++c) f.pressure[c] = 2.0;
    const BlockField all = cell_average(f, d, Phase::all);
    const BlockField cr = cell_average(f, d, Phase::crack);
    const BlockField po = cell_average(f, d, Phase::pore);
    ASSERT_EQ(all.pressure.size(), 4u);
    const double mc = porosity(build_cell(crack));
    const double m = composite_porosity(mc, porosity(build_cell(pore)));
    for (std::size_t b = 0; b < all.pressure.size(); ++b) {
        EXPECT_NEAR(all.pressure[b], 2.0 * m, 1e-14);
        EXPECT_NEAR(cr.pressure[b], 2.0 * mc, 1e-14);
        EXPECT_NEAR(cr.pressure[b] + po.pressure[b], all.pressure[b], 1e-14);
    }
}

TEST(Averages, BlockAverageOfMacroState) {
    MacroState s;
    s.lattice = Lattice(2, 8, false);
    s.q.assign(s.lattice.num_cells(), 0.0);
    for (std::size_t c = 0; c < s.q.size(); ++c) s.q[c] = s.lattice.cell_center(c)[0];
    for (int a = 0; a < 2; ++a) {
        s.v_c[a].assign(s.lattice.num_faces(a), a == 0 ? 1.0 : 0.0);
        s.v_p[a].assign(s.lattice.num_faces(a), a == 1 ? 0.5 : 0.0);
    }
    const BlockField all = block_average(s, 0.5, Phase::all);
    const BlockField crack = block_average(s, 0.5, Phase::crack);
    ASSERT_EQ(all.pressure.size(), 4u);
    EXPECT_NEAR(all.pressure[0], 0.25, 1e-14);
    EXPECT_NEAR(all.pressure[1], 0.75, 1e-14);
    EXPECT_NEAR(all.velocity[3][0], 1.0, 1e-14);
    EXPECT_NEAR(all.velocity[3][1], 0.5, 1e-14);
    EXPECT_NEAR(crack.velocity[3][1], 0.0, 1e-14);
}

TEST(Averages, RelativeErrorEdgeCases) {
    const BlockField zero = blocks({{0, 0, 0}}, {0.0});
    const BlockField one = blocks({{1, 0, 0}}, {1.0});
    const BlockField half = blocks({{0.5, 0, 0}}, {1.5});
    EXPECT_EQ(relative_l2_error({zero}, {zero}, Channel::velocity), 0.0);
    EXPECT_TRUE(std::isinf(relative_l2_error({one}, {zero}, Channel::velocity)));
    EXPECT_DOUBLE_EQ(relative_l2_error({half}, {one}, Channel::velocity), 0.5);
    EXPECT_DOUBLE_EQ(relative_l2_error({half}, {one}, Channel::pressure), 0.5);
    EXPECT_THROW(relative_l2_error({one, one}, {one}, Channel::velocity), InvalidInput);
    EXPECT_DOUBLE_EQ(rms_speed({one, zero}), std::sqrt(0.5));
}

TEST(Estimates, ZeroForcingGivesZeroRatios) {
    DnsTrajectory t;
    t.regime = ScalingRegime::with_default_rules(RegimeKind::filtration, 0.5, 2.0, 0.0, 1.0, 1.0);
    t.steps.resize(3);
    const EstimateReport r = verify_estimates(t, 0.1);
    EXPECT_EQ(r.energy_ratio, 0.0);
    EXPECT_EQ(r.weighted_ratio, 0.0);
    EXPECT_TRUE(r.bound_holds);
    EXPECT_THROW(verify_estimates(t, -1.0), InvalidInput);
}

TEST(Estimates, PoreBoundHoldsOnDns) {
    const ScalingRegime r = ScalingRegime::with_default_rules(RegimeKind::filtration, 0.25, 2.0, 0.0, 1.0, 1.0);
    const CellSpec crack = spec(Shape::centered_block, 0.5, 16);
    const CellSpec pore = spec(Shape::centered_block, 0.75, 8, true);
    const PerforatedDomain d = build_perforated_domain(r, crack, pore, minimal_domain_resolution(r, crack, pore));
    DnsOptions o;
    o.dt = 0.1;
    o.final_time = 0.3;
    o.sample_times = {0.1, 0.3};
    const DnsTrajectory t = run_dns(d, r, ForcingSpec::confined_vortex(), o);
    const double c = poincare_constant(build_cell(pore)).constant;
    const EstimateReport e = verify_estimates(t, c);
    ASSERT_EQ(e.samples.size(), 2u);
    EXPECT_TRUE(e.bound_holds);
    for (const auto& s : e.samples) EXPECT_GT(s.pore_integral, 0.0);
    EXPECT_GT(e.energy_ratio, 0.0);
}

TEST(Study, ReportIsInvariantUnderForcingScale) {
    const ConvergenceReport a = convergence_study(small_study(1.0));
    const ConvergenceReport b = convergence_study(small_study(5.0));
    ASSERT_TRUE(a.complete);
    ASSERT_EQ(a.entries.size(), 2u);
    ASSERT_EQ(b.entries.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& x = a.entries[i];
        const auto& y = b.entries[i];
        EXPECT_NEAR(x.crack_velocity_error, y.crack_velocity_error, 1e-8 * x.crack_velocity_error);
        EXPECT_NEAR(x.energy_ratio, y.energy_ratio, 1e-8 * x.energy_ratio);
        EXPECT_NEAR(x.weighted_ratio, y.weighted_ratio, 1e-8 * x.weighted_ratio);
        EXPECT_NEAR(y.pore_speed, 5.0 * x.pore_speed, 1e-8 * y.pore_speed);
        EXPECT_EQ(x.fine_resolution, y.fine_resolution);
    }
    EXPECT_EQ(a.verdict, b.verdict);
    EXPECT_EQ(a.entries[0].fine_resolution, 32);
    EXPECT_EQ(a.entries[1].fine_resolution, 128);
}

TEST(Study, ParallelRunMatchesSerial) {
    const ConvergenceReport a = convergence_study(small_study(1.0), 1);
    const ConvergenceReport b = convergence_study(small_study(1.0), 2);
    ASSERT_EQ(a.entries.size(), b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].crack_velocity_error, b.entries[i].crack_velocity_error);
        EXPECT_EQ(a.entries[i].pore_speed, b.entries[i].pore_speed);
    }
}

TEST(Study, RejectsBadEpsLists) {
    ConvergenceStudyConfig c = small_study(1.0);
    c.eps_list = {0.25, 0.5};
    EXPECT_THROW(convergence_study(c), InvalidInput);
    c.eps_list = {};
    EXPECT_THROW(convergence_study(c), InvalidInput);
    c = small_study(1.0);
    c.sample_times.clear();
    EXPECT_THROW(convergence_study(c), InvalidInput);
}

TEST(Study, RefineCellKeepsGeometry) {
    const IndicatorField coarse = build_cell(spec(Shape::centered_block, 0.5, 8));
    const IndicatorField fine = refine_cell(coarse, 32);
    EXPECT_EQ(fine.resolution(), 32);
    EXPECT_DOUBLE_EQ(porosity(fine), porosity(coarse));
    EXPECT_EQ(fine.data(), build_cell(spec(Shape::centered_block, 0.5, 32)).data());
    EXPECT_THROW(refine_cell(coarse, 12), InvalidInput);
}
