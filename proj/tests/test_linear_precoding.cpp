// SPDX-License-Identifier: Apache-2.0

#include "flexprec/linear_precoding.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace flexprec;

namespace {

double max_abs(const CMatrix &M) { return M.cwiseAbs().maxCoeff(); }

} // namespace

TEST(RzfDual, IdentityClosedForms)
{
    const CMatrix I4 = CMatrix::Identity(4, 4);
    EXPECT_LT(max_abs(rzf_dual(I4, 1.0) - 0.5 * I4), 1e-15);
    EXPECT_LT(max_abs(rzf_dual(I4, 0.0) - I4), 1e-15);
}

TEST(RzfDual, LargeAlphaApproachesMatchedFilter)
{
    std::mt19937_64 rng(1);
    const CMatrix H = oracle::random_cgauss(4, 4, rng);
    const double alpha = 1e6;
    const CMatrix F = rzf_dual(H, alpha);
    EXPECT_LT(max_abs(alpha * F - H.adjoint()), 1e-4 * H.norm());
}

TEST(RzfDual, MatchesSvdRidge)
{
    std::mt19937_64 rng(2);
    const CMatrix H = oracle::random_cgauss(4, 7, rng);
    EXPECT_LT(max_abs(rzf_dual(H, 0.3) - oracle::ridge_svd(H, 0.3)), 1e-12);
}

TEST(RzfDual, SingularWithoutRegularization)
{
    CMatrix H(2, 2);
    H << 1.0, 2.0, 2.0, 4.0;
    EXPECT_THROW(rzf_dual(H, 0.0), SingularSystemError);
    EXPECT_NO_THROW(rzf_dual(H, 1e-3));
    EXPECT_THROW(rzf_dual(H, -1.0), std::invalid_argument);
}

TEST(RzfPrimal, IdentityClosedForm)
{
    const CMatrix I2 = CMatrix::Identity(2, 2);
    EXPECT_LT(max_abs(rzf_primal(I2, 3.0) - 0.25 * I2), 1e-15);
}

TEST(RzfPrimal, RejectsNonPositiveAlpha)
{
    const CMatrix I2 = CMatrix::Identity(2, 2);
    EXPECT_THROW(rzf_primal(I2, 0.0), std::invalid_argument);
    EXPECT_THROW(rzf_primal(I2, -1.0), std::invalid_argument);
}

TEST(RzfPrimal, EqualsDualForm)
{
    std::mt19937_64 rng(3);
    const CMatrix H = oracle::random_cgauss(4, 6, rng);
    EXPECT_LT(max_abs(rzf_primal(H, 1.0) - rzf_dual(H, 1.0)), 1e-10);
}

TEST(RzfPrimal, DualIdentityProperty)
{
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> ncols(4, 40);
    for (int trial = 0; trial < 100; ++trial)
    {
        const CMatrix H = oracle::random_cgauss(4, ncols(rng), rng);
        for (const double alpha : {1e-2, 1.0, 1e2})
            ASSERT_LT(max_abs(rzf_primal(H, alpha) - rzf_dual(H, alpha)), 1e-9) << "trial " << trial;
    }
}

TEST(RzfPrimal, ZeroForcingLimit)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial)
    {
        const CMatrix H = oracle::random_cgauss(4, 4, rng);
        const CMatrix F = rzf_primal(H, 1e-10);
        EXPECT_LT((CMatrix::Identity(4, 4) - H * F).norm(), 1e-5);
        EXPECT_LT(max_abs(F - oracle::pinv(H)), 1e-5 * oracle::pinv(H).norm());
    }
}

TEST(Rzf, MmseIsTheSameCodePath)
{
    std::mt19937_64 rng(6);
    const CMatrix H = oracle::random_cgauss(4, 4, rng);
    const double sigma2 = 0.7;
    CMatrix A = H * H.adjoint();
    A.diagonal().array() += sigma2;
    const CMatrix mmse = H.adjoint() * A.inverse();
    EXPECT_EQ(rzf_dual(H, sigma2), rzf_dual(H, sigma2));
    EXPECT_LT(max_abs(rzf_dual(H, sigma2) - mmse), 1e-12);
}

TEST(NormalizePrecoder, EqualColumnPower)
{
    const CMatrix F = normalize_precoder(CMatrix::Identity(2, 2), 1.0);
    EXPECT_NEAR(F.col(0).norm(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(F.squaredNorm(), 1.0, 1e-15);

    CMatrix G = CMatrix::Zero(2, 2);
    G(0, 0) = 2.0;
    G(1, 1) = 4.0;
    const CMatrix Gn = normalize_precoder(G, 1.0);
    EXPECT_NEAR(Gn.col(0).norm(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(Gn.col(1).norm(), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(NormalizePrecoder, RandomMatrixProperty)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial)
    {
        const CMatrix F = normalize_precoder(oracle::random_cgauss(4, 4, rng), 1.0);
        EXPECT_NEAR(F.squaredNorm(), 1.0, 1e-12);
        for (int k = 0; k < 4; ++k)
            EXPECT_NEAR(F.col(k).squaredNorm(), 0.25, 1e-12);
    }
}

TEST(NormalizePrecoder, ZeroColumnError)
{
    CMatrix F = CMatrix::Identity(3, 2);
    F.col(1).setZero();
    EXPECT_THROW(normalize_precoder(F, 1.0), std::invalid_argument);
}

TEST(Sinr, NoInterferenceUnitGain)
{
    const RVector s = sinr_per_user(CMatrix::Identity(2, 2), CMatrix::Identity(2, 2), 1.0);
    EXPECT_DOUBLE_EQ(s(0), 1.0);
    EXPECT_DOUBLE_EQ(s(1), 1.0);
}

TEST(Sinr, ZeroPrecoder)
{
    std::mt19937_64 rng(8);
    const RVector s = sinr_per_user(oracle::random_cgauss(3, 5, rng), CMatrix::Zero(5, 3), 1.0);
    EXPECT_EQ(s.norm(), 0.0);
}

TEST(Sinr, MatchesScalarDefinition)
{
    std::mt19937_64 rng(9);
    const CMatrix H = oracle::random_cgauss(4, 4, rng);
    const CMatrix F = oracle::random_cgauss(4, 4, rng);
    const RVector s = sinr_per_user(H, F, 0.5);
    const auto ref = oracle::sinr(H, F, 0.5);
    for (int k = 0; k < 4; ++k)
        EXPECT_NEAR(s(k), ref[static_cast<std::size_t>(k)], 1e-12 * ref[static_cast<std::size_t>(k)]);
}

TEST(Sinr, DimensionMismatch)
{
    EXPECT_THROW(sinr_per_user(CMatrix::Identity(2, 3), CMatrix::Identity(2, 2), 1.0), std::invalid_argument);
}

TEST(SumRate, AnalyticIdentityCase)
{
    const CMatrix F = normalize_precoder(CMatrix::Identity(4, 4), 1.0);
    EXPECT_NEAR(sum_rate(CMatrix::Identity(4, 4), F, 1.0), 4.0 * std::log2(1.25), 1e-14);
    EXPECT_NEAR(4.0 * std::log2(1.25), 1.288, 1e-3);
    EXPECT_EQ(sum_rate(CMatrix::Identity(4, 4), CMatrix::Zero(4, 4), 1.0), 0.0);
}

TEST(SumRate, EqualsLogSumOfOracleSinr)
{
    std::mt19937_64 rng(10);
    const CMatrix H = oracle::random_cgauss(4, 6, rng);
    const CMatrix F = normalize_precoder(rzf_dual(H, 1.0), 1.0);
    double ref = 0.0;
    for (double v : oracle::sinr(H, F, 1.0))
        ref += std::log2(1.0 + v);
    EXPECT_NEAR(sum_rate(H, F, 1.0), ref, 1e-12);
}

TEST(RegularizedProjection, CoordinateProjection)
{
    CMatrix H(2, 1);
    H << 1.0, 0.0;
    const CMatrix P0 = regularized_projection(H, 0.0);
    CMatrix expected = CMatrix::Zero(2, 2);
    expected(0, 0) = 1.0;
    EXPECT_LT(max_abs(P0 - expected), 1e-15);
    EXPECT_LT(max_abs(P0 * P0 - P0), 1e-15);

    const CMatrix P1 = regularized_projection(H, 1.0);
    expected(0, 0) = 0.5;
    EXPECT_LT(max_abs(P1 - expected), 1e-15);
    EXPECT_GT(max_abs(P1 * P1 - P1), 0.2);
}

TEST(RegularizedProjection, IdempotentWithoutRegularization)
{
    std::mt19937_64 rng(11);
    const CMatrix H = oracle::random_cgauss(4, 3, rng);
    const CMatrix P = regularized_projection(H, 0.0);
    EXPECT_LT((P * P - P).norm(), 1e-9);
    EXPECT_LT(max_abs(P * H - H), 1e-12 * H.norm());
}

TEST(RegularizedProjection, SpectrumInUnitInterval)
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial)
        for (const double alpha : {0.0, 1e-3, 1.0, 1e3})
        {
            const CMatrix H = oracle::random_cgauss(4, 3, rng);
            const CMatrix P = regularized_projection(H, alpha);
            EXPECT_LT(max_abs(P - P.adjoint()), 1e-12);
            const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<CMatrix>(P).eigenvalues();
            EXPECT_GE(ev.minCoeff(), -1e-10);
            EXPECT_LE(ev.maxCoeff(), 1.0 + 1e-10);
        }
}

TEST(PrecodingState, ResidualInvariant)
{
    std::mt19937_64 rng(13);
    const CMatrix H = oracle::random_cgauss(4, 3, rng);
    const auto s = PrecodingState::from_channel(H, 0.5);
    EXPECT_EQ(s.precoder.cols(), 4);
    EXPECT_LT((s.residual - (CMatrix::Identity(4, 4) - s.channel * s.precoder)).norm(), 1e-10);
    EXPECT_NEAR(s.objective(), oracle::ridge_objective(H, 0.5), 1e-10);
    EXPECT_NEAR(rzf_objective(H, 0.5), s.objective(), 1e-12);
}
