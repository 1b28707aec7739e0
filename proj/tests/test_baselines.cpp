// SPDX-License-Identifier: Apache-2.0

#include "flexprec/baselines.hpp"
#include "flexprec/flex_omp.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <random>

using namespace flexprec;

namespace {

const double kLambda = wavelength_from_carrier(3e9);

double log_det_oracle(const CMatrix &H, double noise)
{
    CMatrix A = CMatrix::Identity(H.rows(), H.rows()) + H * H.adjoint() / noise;
    return std::log(A.determinant().real());
}

} // namespace

TEST(FixedArray, TwoByTwoLattice)
{
    const double d = kLambda / 2;
    const auto pos = fixed_array_positions(2, 2, kLambda);
    const AntennaPositions expected{{0, 0}, {d, 0}, {0, d}, {d, d}};
    EXPECT_EQ(pos, expected);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
        {
            const double r = distance(pos[i], pos[j]);
            EXPECT_TRUE(std::abs(r - d) < 1e-15 || std::abs(r - kLambda / std::sqrt(2.0)) < 1e-15) << r;
        }
}

TEST(FixedArray, LinearArrayAlongX)
{
    const auto pos = fixed_array_positions(4, 1, kLambda);
    ASSERT_EQ(pos.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i)
    {
        EXPECT_DOUBLE_EQ(pos[i].x, i * kLambda / 2);
        EXPECT_EQ(pos[i].z, 0.0);
    }
    EXPECT_THROW(fixed_array_positions(0, 2, kLambda), std::invalid_argument);
}

TEST(CapacityLogDet, MatchesDeterminant)
{
    std::mt19937_64 rng(61);
    const CMatrix H = oracle::random_cgauss(4, 3, rng);
    EXPECT_NEAR(capacity_log_det(H, 0.7), log_det_oracle(H, 0.7), 1e-12);
}

TEST(FastAntennaSelection, FullGridSelection)
{
    const PositionGrid grid(3, 2, kLambda);
    const PathSet paths = sample_paths(3, 3, 5);
    const auto sel = fast_antenna_selection(paths, grid, grid.size(), 1.0);
    auto idx = sel.grid_indices;
    std::sort(idx.begin(), idx.end());
    EXPECT_EQ(idx, all_candidates(grid));
    EXPECT_NEAR(sel.value, log_det_oracle(build_dictionary(paths, grid), 1.0), 1e-10);
}

TEST(FastAntennaSelection, SingleUserPicksStrongestPoint)
{
    const PositionGrid grid(5, 5, kLambda);
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        const PathSet paths = sample_paths(seed, 1, 10);
        const auto sel = fast_antenna_selection(paths, grid, 3, 1.0);
        Eigen::Index best = 0;
        build_dictionary(paths, grid).row(0).cwiseAbs().maxCoeff(&best);
        EXPECT_EQ(sel.grid_indices[0], static_cast<std::size_t>(best));
    }
}

TEST(FastAntennaSelection, NearExhaustiveOnSmallGrid)
{
    const PositionGrid grid(3, 3, kLambda);
    int good = 0;
    double worst = 1.0;
    constexpr int kSeeds = 200;
    for (int seed = 0; seed < kSeeds; ++seed)
    {
        const PathSet paths = sample_paths(static_cast<std::uint64_t>(seed), 2, 15);
        const CMatrix D = build_dictionary(paths, grid);
        double best = -1.0;
        for (int i = 0; i < 9; ++i)
            for (int j = i + 1; j < 9; ++j)
            {
                CMatrix H(2, 2);
                H.col(0) = D.col(i);
                H.col(1) = D.col(j);
                best = std::max(best, log_det_oracle(H, 1.0));
            }
        const double greedy = fast_antenna_selection(paths, grid, 2, 1.0).value;
        EXPECT_LE(greedy, best + 1e-10);
        const double ratio = greedy / best;
        worst = std::min(worst, ratio);
        good += ratio >= 0.9;
    }
    std::printf("greedy log det >= 0.9 x exhaustive on %d / %d seeds (worst ratio %.4f)\n", good, kSeeds, worst);
    EXPECT_GE(good, kSeeds * 9 / 10);
}

TEST(FastAntennaSelection, DeterministicAndGuarded)
{
    const PositionGrid grid(4, 4, kLambda);
    const PathSet paths = sample_paths(5, 4, 15);
    EXPECT_EQ(fast_antenna_selection(paths, grid, 4, 1.0).grid_indices,
              fast_antenna_selection(paths, grid, 4, 1.0).grid_indices);
    EXPECT_THROW(fast_antenna_selection(paths, grid, 17, 1.0), std::invalid_argument);
}

TEST(ExhaustiveOracle, SingleAntennaIsDirectArgmin)
{
    const PositionGrid grid(4, 3, kLambda);
    const PathSet paths = sample_paths(9, 3, 6);
    const auto best = exhaustive_selection_oracle(paths, grid, 1, 1.0);
    double ref = 1e300;
    std::size_t arg = 0;
    for (std::size_t g = 0; g < grid.size(); ++g)
    {
        const double v = oracle::ridge_objective(channel_matrix(AntennaPositions{grid.coordinate(g)}, paths, kLambda), 1.0);
        if (v < ref)
        {
            ref = v;
            arg = g;
        }
    }
    EXPECT_EQ(best.grid_indices, std::vector<std::size_t>{arg});
    EXPECT_NEAR(best.value, ref, 1e-12);
}

TEST(ExhaustiveOracle, FullSet)
{
    const PositionGrid grid(2, 2, kLambda);
    const auto best = exhaustive_selection_oracle(sample_paths(1, 2, 3), grid, 4, 1.0);
    EXPECT_EQ(best.grid_indices, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(ExhaustiveOracle, CombinatorialGuard)
{
    EXPECT_EQ(binomial_capped(9, 2, 1000), 36u);
    EXPECT_EQ(binomial_capped(36, 4, 1'000'000), 58905u);
    EXPECT_GT(binomial_capped(100, 10, 1'000'000), 1'000'000u);
    const PositionGrid grid(10, 10, kLambda);
    EXPECT_THROW(exhaustive_selection_oracle(sample_paths(1, 2, 3), grid, 10, 1.0), std::invalid_argument);
}

TEST(ExhaustiveOracle, EnumeratesEverySubsetOnce)
{
    // C(6, 3) = 20 subsets; checks the combination walk against nested loops.
    const PositionGrid grid(3, 2, kLambda);
    const PathSet paths = sample_paths(21, 3, 4);
    double ref = 1e300;
    for (int a = 0; a < 6; ++a)
        for (int b = a + 1; b < 6; ++b)
            for (int c = b + 1; c < 6; ++c)
            {
                const AntennaPositions pos{grid.coordinate(a), grid.coordinate(b), grid.coordinate(c)};
                ref = std::min(ref, oracle::ridge_objective(channel_matrix(pos, paths, kLambda), 1.0));
            }
    EXPECT_NEAR(exhaustive_selection_oracle(paths, grid, 3, 1.0).value, ref, 1e-12);
}

TEST(BaselineOrdering, ExhaustiveGreedyRandomMedian)
{
    const PositionGrid grid(3, 3, kLambda);
    RefinementParams on_grid;
    on_grid.max_refine_iters = 0;
    std::mt19937_64 rng(71);
    for (int seed = 0; seed < 100; ++seed)
    {
        const PathSet paths = sample_paths(static_cast<std::uint64_t>(seed), 2, 15);
        const double exhaustive = exhaustive_selection_oracle(paths, grid, 2, 1.0).value;
        const double greedy = flexible_precoding(paths, grid, 2, 1.0, on_grid).objective;
        std::vector<double> random_obj;
        for (int r = 0; r < 101; ++r)
        {
            std::vector<std::size_t> idx = all_candidates(grid);
            std::shuffle(idx.begin(), idx.end(), rng);
            const AntennaPositions pos{grid.coordinate(idx[0]), grid.coordinate(idx[1])};
            random_obj.push_back(rzf_objective(channel_matrix(pos, paths, kLambda), 1.0));
        }
        std::nth_element(random_obj.begin(), random_obj.begin() + 50, random_obj.end());
        EXPECT_LE(exhaustive, greedy + 1e-12);
        EXPECT_LE(greedy, random_obj[50]);
    }
}

TEST(BaselineOrdering, RefinementImprovesOnAverage)
{
    // Individual instances can end worse than the on-grid run: refinement of an
    // early antenna is gated on the partial objective and changes which grid
    // points later iterations may use. The average gain is what holds.
    const PositionGrid grid(6, 6, kLambda);
    RefinementParams on_grid;
    on_grid.max_refine_iters = 0;
    double sum_on = 0.0, sum_off = 0.0;
    int worse = 0;
    constexpr int kTrials = 200;
    for (int seed = 0; seed < kTrials; ++seed)
    {
        const PathSet paths = sample_paths(static_cast<std::uint64_t>(seed) + 300, 4, 15);
        const double refined = flexible_precoding(paths, grid, 4, 1.0, {}).objective;
        const double plain = flexible_precoding(paths, grid, 4, 1.0, on_grid).objective;
        sum_on += refined;
        sum_off += plain;
        worse += refined > plain;
    }
    std::printf("mean objective refined %.4f vs on-grid %.4f; refined worse on %d / %d\n", sum_on / kTrials,
                sum_off / kTrials, worse, kTrials);
    EXPECT_LT(sum_on, sum_off);
}
