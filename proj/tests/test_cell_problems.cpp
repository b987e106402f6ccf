#include "dpm/cell_problems.hpp"
#include "dpm/error.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <random>

using namespace dpm;

namespace {

CellSpec spec(Shape shape, double param, int n, bool inverted = false, int dim = 2, int axis = 0) {
    CellSpec s;
    s.dimension = dim;
    s.shape = shape;
    s.param = param;
    s.resolution = n;
    s.inverted = inverted;
    s.channel_axis = axis;
    return s;
}

/// Flux of the discrete plane Poiseuille problem across a band of `rows`
/// cells: -u'' = 1/mu with the wall half a cell beyond the last row.
double poiseuille_flux(int rows, int n, double mu) {
    const double h = 1.0 / n;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, rows);
    for (int j = 0; j < rows; ++j) {
        a(j, j) = 2.0;
        if (j > 0) a(j, j - 1) = -1.0;
        if (j + 1 < rows) a(j, j + 1) = -1.0;
    }
    a(0, 0) = 3.0;
    a(rows - 1, rows - 1) = 3.0;
    a *= mu / (h * h);
    const Eigen::VectorXd u = a.ldlt().solve(Eigen::VectorXd::Ones(rows));
    return h * u.sum();
}

IndicatorField l_shape() {
    CellSpec l = spec(Shape::custom_mask, 0.0, 16);
    l.mask.assign(256, 1);
    for (int j = 3; j < 12; ++j) {
        for (int i = 2; i < 6; ++i) l.mask[i + 16 * j] = 0;
    }
    for (int j = 3; j < 7; ++j) {
        for (int i = 6; i < 13; ++i) l.mask[i + 16 * j] = 0;
    }
    return build_cell(l);
}

bool psd(const Eigen::MatrixXd& m, double tol) { return min_eigenvalue(m) >= -tol * std::max(1.0, m.norm()); }

}  // namespace

TEST(Filtration, ChannelMatchesDiscretePoiseuille) {
    for (int n : {16, 32, 64}) {
        const EffectiveTensor b = filtration_tensor(build_cell(spec(Shape::axis_channel, 0.5, n)), 1.0);
        EXPECT_NEAR(b.matrix(0, 0), poiseuille_flux(n / 2, n, 1.0), 1e-8 * b.matrix(0, 0)) << n;
        EXPECT_EQ(b.matrix(1, 1), 0.0);
        EXPECT_FALSE(b.axis_stats[0].blocked);
    }
}

TEST(Filtration, ChannelApproachesCubicLaw) {
    const double s = 0.25;
    const EffectiveTensor b = filtration_tensor(build_cell(spec(Shape::axis_channel, s, 128)), 1.0);
    EXPECT_NEAR(b.matrix(0, 0), s * s * s / 12.0, 0.01 * s * s * s / 12.0);
}

TEST(Filtration, TransposedChannel) {
    const EffectiveTensor b = filtration_tensor(build_cell(spec(Shape::axis_channel, 0.5, 32, false, 2, 1)), 1.0);
    EXPECT_EQ(b.matrix(0, 0), 0.0);
    EXPECT_NEAR(b.matrix(1, 1), poiseuille_flux(16, 32, 1.0), 1e-10);
}

TEST(Filtration, InverseViscosityScaling) {
    const IndicatorField cell = build_cell(spec(Shape::centered_ball, 0.5, 32));
    const EffectiveTensor b1 = filtration_tensor(cell, 1.0);
    const EffectiveTensor b2 = filtration_tensor(cell, 4.0);
    EXPECT_NEAR((b1.matrix - 4.0 * b2.matrix).norm(), 0.0, 1e-7 * b1.matrix.norm());
}

TEST(Filtration, SquareSymmetryGivesIsotropicTensor) {
    const EffectiveTensor b = filtration_tensor(build_cell(spec(Shape::centered_block, 0.5, 32)), 1.0);
    EXPECT_NEAR(b.matrix(0, 0), b.matrix(1, 1), 1e-8);
    EXPECT_NEAR(b.matrix(0, 1), 0.0, 1e-8);
    EXPECT_GT(b.matrix(0, 0), 0.0);
}

TEST(Filtration, GridRefinementSelfConvergence) {
    const double coarse = filtration_tensor(build_cell(spec(Shape::centered_block, 0.5, 32)), 1.0).matrix(0, 0);
    const double fine = filtration_tensor(build_cell(spec(Shape::centered_block, 0.5, 64)), 1.0).matrix(0, 0);
    EXPECT_LT(std::abs(coarse - fine) / fine, 0.05);
}

TEST(Filtration, BlockedIslandGivesZeroTensorAndStaticPressure) {
    const IndicatorField island = build_cell(spec(Shape::centered_block, 0.5, 16, true));
    const EffectiveTensor b = filtration_tensor(island, 1.0);
    EXPECT_EQ(b.matrix.norm(), 0.0);
    EXPECT_TRUE(b.axis_stats[0].blocked);
    const CellSolution sol = solve_filtration_cell(island, 1.0, 0);
    EXPECT_EQ(sol.field.max_abs_velocity(), 0.0);
    EXPECT_LT(sol.stats.momentum_residual, 1e-10);
}

TEST(Filtration, StructureOnRandomConnectedMasks) {
    std::mt19937 rng(11);
    std::bernoulli_distribution solid(0.15);
    int tested = 0;
    for (int trial = 0; trial < 6; ++trial) {
        CellSpec s = spec(Shape::custom_mask, 0.0, 16);
        s.mask.resize(256);
        for (auto& v : s.mask) v = solid(rng) ? 0 : 1;
        const IndicatorField cell = build_cell(s);
        if (!cell.has_solid()) continue;
        const EffectiveTensor b = filtration_tensor(cell, 1.0);
        EXPECT_LE(b.asymmetry, 1e-6);
        EXPECT_TRUE(psd(b.matrix, 1e-12));
        ++tested;
    }
    EXPECT_GT(tested, 0);
}

TEST(Filtration, AsymmetricInclusionStillSymmetric) {
    const EffectiveTensor b = filtration_tensor(l_shape(), 1.0);
    EXPECT_LE(b.asymmetry, 1e-6);
    EXPECT_GT(std::abs(b.matrix(0, 1)), 1e-6);
    EXPECT_TRUE(psd(b.matrix, 1e-12));
}

TEST(Filtration, RejectsDegenerateCells) {
    EXPECT_THROW(filtration_tensor(build_cell(spec(Shape::full_fluid, 0.0, 8)), 1.0), GeometryError);
    EXPECT_THROW(filtration_tensor(build_cell(spec(Shape::centered_block, 1.0, 8)), 1.0), GeometryError);
    EXPECT_THROW(filtration_tensor(build_cell(spec(Shape::centered_block, 0.5, 8)), 0.0), InvalidInput);
}

TEST(Filtration, IterationCapRaisesConvergenceError) {
    CellSolverOptions o;
    o.tol = 1e-14;
    o.max_outer_iterations = 1;
    try {
        solve_filtration_cell(build_cell(spec(Shape::centered_ball, 0.5, 32)), 1.0, 0, o);
        FAIL() << "expected a convergence error";
    } catch (const ConvergenceError& e) {
        EXPECT_GT(e.last_residual(), 0.0);
    }
}

TEST(Filtration, ThreeDimensionalBallIsIsotropic) {
    const EffectiveTensor b = filtration_tensor(build_cell(spec(Shape::centered_ball, 0.5, 16, false, 3)), 1.0);
    EXPECT_NEAR(b.matrix(0, 0), b.matrix(2, 2), 1e-8);
    EXPECT_NEAR(b.matrix(0, 1), 0.0, 1e-8);
    EXPECT_TRUE(psd(b.matrix, 1e-12));
}

TEST(Acoustic, FullFluidPotentialVanishes) {
    const AcousticCellResult c = acoustic_tensor_crack(build_cell(spec(Shape::full_fluid, 0.0, 16)));
    EXPECT_EQ(c.b2.matrix.norm(), 0.0);
    EXPECT_EQ(c.momentum.matrix, Eigen::MatrixXd::Identity(2, 2));
    const AcousticCellResult p = acoustic_tensor_pore(build_cell(spec(Shape::full_fluid, 0.0, 16)), 0.5, 0.75);
    EXPECT_EQ(p.b2.matrix.norm(), 0.0);
    EXPECT_DOUBLE_EQ(p.flux_scale, 0.75);
    EXPECT_EQ(p.momentum.matrix, 0.75 * Eigen::MatrixXd::Identity(2, 2));
}

TEST(Acoustic, LaminatedCellOracle) {
    // Along the channel the potential is constant; across it Pi = y on the
    // rows - 1 interior faces, while the wall faces carry no flux.
    const int n = 32, rows = 12;
    const double s = static_cast<double>(rows) / n;
    const AcousticCellResult c = acoustic_tensor_crack(build_cell(spec(Shape::axis_channel, s, n)));
    EXPECT_NEAR(c.b2.matrix(0, 0), 0.0, 1e-12);
    EXPECT_NEAR(c.b2.matrix(1, 1), static_cast<double>(rows - 1) / n, 1e-9);
    EXPECT_NEAR(c.momentum.matrix(0, 0), s, 1e-9);
    EXPECT_NEAR(c.momentum.matrix(1, 1), 1.0 / n, 1e-9);
}

TEST(Acoustic, PoreTensorScalesWithFluxScale) {
    const IndicatorField cell = build_cell(spec(Shape::centered_ball, 0.5, 32));
    const AcousticCellResult c = acoustic_tensor_crack(cell);
    const double beta = 2.0, m_c = 0.5;
    const AcousticCellResult p = acoustic_tensor_pore(cell, beta, m_c);
    const double scale = beta + 1.0 - m_c;
    EXPECT_NEAR((p.b2.matrix - scale * c.b2.matrix).norm(), 0.0, 1e-8);
    EXPECT_NEAR((p.momentum.matrix - scale * c.momentum.matrix).norm(), 0.0, 1e-8);
}

TEST(Acoustic, MomentumMatricesArePsdAndBounded) {
    for (const IndicatorField& cell : {build_cell(spec(Shape::centered_block, 0.5, 32)), l_shape(),
                                       build_cell(spec(Shape::centered_block, 0.5, 16, true)),
                                       build_cell(spec(Shape::centered_ball, 0.5, 16, false, 3))}) {
        const AcousticCellResult c = acoustic_tensor_crack(cell);
        EXPECT_LE(c.b2.asymmetry, 1e-6);
        EXPECT_TRUE(psd(c.b2.matrix, 1e-10));
        EXPECT_TRUE(psd(c.momentum.matrix, 1e-10));
        // 0 <= B2 <= m_c I
        EXPECT_LE(max_eigenvalue(c.b2.matrix), c.porosity + 1e-10);
    }
}

TEST(Acoustic, RejectsBadInputs) {
    const IndicatorField cell = build_cell(spec(Shape::centered_block, 0.5, 16));
    EXPECT_THROW(acoustic_tensor_pore(cell, 0.0, 0.5), InvalidInput);
    EXPECT_THROW(acoustic_tensor_pore(cell, 1.0, 1.5), InvalidInput);
    EXPECT_THROW(acoustic_tensor_crack(build_cell(spec(Shape::centered_block, 1.0, 8))), GeometryError);
}

TEST(Acoustic, NeumannSolutionBalancesInterfaceFlux) {
    const CellSolution sol = solve_neumann_cell(l_shape(), 1, 1.0);
    EXPECT_LE(sol.stats.divergence_residual, CellSolverOptions{}.tol);
}

TEST(Tensor, EigenvalueHelpers) {
    Eigen::MatrixXd m(2, 2);
    m << 2.0, 1.0, 1.0, 2.0;
    EXPECT_NEAR(min_eigenvalue(m), 1.0, 1e-14);
    EXPECT_NEAR(max_eigenvalue(m), 3.0, 1e-14);
}
