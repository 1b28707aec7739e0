// SPDX-License-Identifier: Apache-2.0
//
// Regularized zero-forcing precoding, power normalization and rate evaluation.
//
// H is K x n with rows h_k^H. The two closed forms
//   dual:   F = H^H (H H^H + alpha I_K)^-1
//   primal: F = (H^H H + alpha I_n)^-1 H^H
// coincide for alpha > 0. alpha -> inf approaches MRT (scaled), alpha = 0 is
// ZF and alpha = sigma^2 is MMSE.

#ifndef FLEXPREC_LINEAR_PRECODING_HPP
#define FLEXPREC_LINEAR_PRECODING_HPP

#include "types.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace flexprec {

class SingularSystemError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Reciprocal condition number below which an unregularized Gram matrix is
/// treated as singular.
inline constexpr double kMinReciprocalCondition = 1e-12;

namespace detail {

// Cholesky of a Hermitian Gram matrix plus alpha I. With alpha == 0 the matrix
// may be singular, so the factor is additionally checked against a condition
// estimate.
inline Eigen::LLT<CMatrix> factor_gram(const CMatrix &gram, double alpha, const char *who)
{
    CMatrix A = gram;
    A.diagonal().array() += alpha;
    Eigen::LLT<CMatrix> llt(A);
    if (llt.info() != Eigen::Success)
        throw SingularSystemError(std::string(who) + ": Gram matrix is not positive definite.");
    if (alpha == 0.0 && !(llt.rcond() >= kMinReciprocalCondition))
        throw SingularSystemError(std::string(who) + ": Gram matrix is numerically singular (alpha = 0).");
    return llt;
}

} // namespace detail

/// F = H^H (H H^H + alpha I)^-1.
inline CMatrix rzf_dual(const CMatrix &H, double alpha)
{
    if (!(alpha >= 0.0))
        throw std::invalid_argument("rzf_dual: alpha must be non-negative.");
    const auto llt = detail::factor_gram(H * H.adjoint(), alpha, "rzf_dual");
    // (H H^H + alpha I) is Hermitian, so F^H = (H H^H + alpha I)^-1 H.
    return llt.solve(H).adjoint();
}

/// F = (H^H H + alpha I)^-1 H^H. Requires alpha > 0.
inline CMatrix rzf_primal(const CMatrix &H, double alpha)
{
    if (!(alpha > 0.0))
        throw std::invalid_argument("rzf_primal: alpha must be positive.");
    const auto llt = detail::factor_gram(H.adjoint() * H, alpha, "rzf_primal");
    return llt.solve(H.adjoint());
}

/// ||I - H F||_F^2 + alpha ||F||_F^2.
inline double rzf_objective(const CMatrix &H, const CMatrix &F, double alpha)
{
    const CMatrix R = CMatrix::Identity(H.rows(), F.cols()) - H * F;
    return R.squaredNorm() + alpha * F.squaredNorm();
}

/// Objective at the optimal F for a given channel.
inline double rzf_objective(const CMatrix &H, double alpha)
{
    return rzf_objective(H, rzf_primal(H, alpha), alpha);
}

/// Scales every column to squared norm total_power / K.
inline CMatrix normalize_precoder(const CMatrix &F, double total_power)
{
    if (!(total_power > 0.0))
        throw std::invalid_argument("normalize_precoder: total power must be positive.");
    const double column_norm = std::sqrt(total_power / static_cast<double>(F.cols()));
    CMatrix out(F.rows(), F.cols());
    for (Eigen::Index k = 0; k < F.cols(); ++k)
    {
        const double norm = F.col(k).norm();
        if (!(norm > std::numeric_limits<double>::min()) || !std::isfinite(norm))
            throw std::invalid_argument("normalize_precoder: column " + std::to_string(k) + " is zero.");
        out.col(k) = F.col(k) * (column_norm / norm);
    }
    return out;
}

inline RVector sinr_per_user(const CMatrix &H, const CMatrix &F, double noise_power)
{
    if (H.cols() != F.rows() || H.rows() != F.cols())
        throw std::invalid_argument("sinr_per_user: H must be K x N and F must be N x K.");
    if (!(noise_power > 0.0))
        throw std::invalid_argument("sinr_per_user: noise power must be positive.");
    const RMatrix gain = (H * F).cwiseAbs2();
    RVector sinr(H.rows());
    for (Eigen::Index k = 0; k < H.rows(); ++k)
    {
        const double signal = gain(k, k);
        const double interference = gain.row(k).sum() - signal;
        sinr(k) = signal / (interference + noise_power);
    }
    return sinr;
}

/// Sum over users of log2(1 + SINR_k), bits/s/Hz.
inline double sum_rate(const CMatrix &H, const CMatrix &F, double noise_power)
{
    const RVector sinr = sinr_per_user(H, F, noise_power);
    double rate = 0.0;
    for (Eigen::Index k = 0; k < sinr.size(); ++k)
        rate += std::log2(1.0 + sinr(k));
    return rate;
}

/// P = H (H^H H + alpha I)^-1 H^H. Hermitian with spectrum in [0, 1]; a true
/// projector onto span(H) only at alpha = 0.
inline CMatrix regularized_projection(const CMatrix &H, double alpha)
{
    if (!(alpha >= 0.0))
        throw std::invalid_argument("regularized_projection: alpha must be non-negative.");
    const auto llt = detail::factor_gram(H.adjoint() * H, alpha, "regularized_projection");
    return H * llt.solve(H.adjoint());
}

/// Channel, precoder and residual of a partially built antenna set.
struct PrecodingState
{
    CMatrix channel;  // K x n
    CMatrix precoder; // n x K
    CMatrix residual; // I_K - channel * precoder
    double alpha = 1.0;

    static PrecodingState from_channel(CMatrix H, double alpha)
    {
        PrecodingState s;
        s.alpha = alpha;
        s.precoder = rzf_primal(H, alpha);
        s.residual = CMatrix::Identity(H.rows(), H.rows()) - H * s.precoder;
        s.channel = std::move(H);
        return s;
    }

    double objective() const { return residual.squaredNorm() + alpha * precoder.squaredNorm(); }
};

} // namespace flexprec

#endif
