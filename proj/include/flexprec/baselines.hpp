// SPDX-License-Identifier: Apache-2.0
//
// Comparison schemes: a fixed half-wavelength array, greedy capacity-based
// antenna selection over the grid, and an exhaustive on-grid search used as
// a test oracle.

#ifndef FLEXPREC_BASELINES_HPP
#define FLEXPREC_BASELINES_HPP

#include "channel_model.hpp"
#include "linear_precoding.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace flexprec {

enum class BaselineKind
{
    FixedArray,
    FastAS,
    ExhaustiveOracle,
};

/// Largest number of subsets the exhaustive oracle will enumerate.
inline constexpr std::uint64_t kMaxExhaustiveSubsets = 1'000'000;

/// Nx x Nz lattice at lambda/2 anchored at the origin, x varying fastest.
inline AntennaPositions fixed_array_positions(std::size_t nx, std::size_t nz, double wavelength)
{
    if (nx == 0 || nz == 0)
        throw std::invalid_argument("fixed_array_positions: dimensions must be positive.");
    const double d = wavelength / 2.0;
    AntennaPositions out;
    out.reserve(nx * nz);
    for (std::size_t j = 0; j < nz; ++j)
        for (std::size_t i = 0; i < nx; ++i)
            out.push_back({static_cast<double>(i) * d, static_cast<double>(j) * d});
    return out;
}

/// log det(I_K + H H^H / sigma^2), natural log.
inline double capacity_log_det(const CMatrix &H, double noise_power)
{
    CMatrix A = H * H.adjoint() / noise_power;
    A.diagonal().array() += 1.0;
    Eigen::LLT<CMatrix> llt(A);
    if (llt.info() != Eigen::Success)
        throw SingularSystemError("capacity_log_det: matrix is not positive definite.");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        acc += std::log(llt.matrixLLT()(i, i).real());
    return 2.0 * acc;
}

struct SelectionResult
{
    AntennaPositions positions;
    std::vector<std::size_t> grid_indices; // in selection order
    double value = 0.0;                    // log det for FastAS, RZF objective for the oracle
};

/// Greedy incremental capacity maximization over grid points.
inline SelectionResult fast_antenna_selection(const PathSet &paths, const PositionGrid &grid, std::size_t num_antennas,
                                              double noise_power)
{
    if (num_antennas > grid.size())
        throw std::invalid_argument("fast_antenna_selection: more antennas than grid points.");
    if (!(noise_power > 0.0))
        throw std::invalid_argument("fast_antenna_selection: noise power must be positive.");

    const CMatrix D = build_dictionary(paths, grid);
    const auto K = D.rows();
    std::vector<bool> used(grid.size(), false);
    SelectionResult out;
    CMatrix H(K, 0);

    for (std::size_t n = 0; n < num_antennas; ++n)
    {
        std::size_t best = grid.size();
        double best_value = -std::numeric_limits<double>::infinity();
        CMatrix trial(K, H.cols() + 1);
        trial.leftCols(H.cols()) = H;
        for (std::size_t g = 0; g < grid.size(); ++g)
        {
            if (used[g])
                continue;
            trial.col(H.cols()) = D.col(static_cast<Eigen::Index>(g));
            const double v = capacity_log_det(trial, noise_power);
            if (v > best_value)
            {
                best_value = v;
                best = g;
            }
        }
        used[best] = true;
        trial.col(H.cols()) = D.col(static_cast<Eigen::Index>(best));
        H = std::move(trial);
        out.grid_indices.push_back(best);
        out.positions.push_back(grid.coordinate(best));
        out.value = best_value;
    }
    return out;
}

/// C(n, k), saturating at `cap + 1`.
inline std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap)
{
    if (k > n)
        return 0;
    k = std::min(k, n - k);
    std::uint64_t c = 1;
    for (std::uint64_t i = 1; i <= k; ++i)
    {
        // c * (n - k + i) / i stays integral at every step.
        c = c * (n - k + i) / i;
        if (c > cap)
            return cap + 1;
    }
    return c;
}

/// Minimizes the RZF objective over every N-subset of grid points.
inline SelectionResult exhaustive_selection_oracle(const PathSet &paths, const PositionGrid &grid,
                                                   std::size_t num_antennas, double alpha)
{
    if (num_antennas == 0 || num_antennas > grid.size())
        throw std::invalid_argument("exhaustive_selection_oracle: need 1 <= N <= G.");
    if (binomial_capped(grid.size(), num_antennas, kMaxExhaustiveSubsets) > kMaxExhaustiveSubsets)
        throw std::invalid_argument("exhaustive_selection_oracle: C(G, N) exceeds the enumeration limit.");

    const CMatrix D = build_dictionary(paths, grid);
    const auto N = static_cast<Eigen::Index>(num_antennas);
    std::vector<std::size_t> idx(num_antennas);
    for (std::size_t i = 0; i < num_antennas; ++i)
        idx[i] = i;

    SelectionResult best;
    best.value = std::numeric_limits<double>::infinity();
    CMatrix H(D.rows(), N);
    const std::size_t G = grid.size();
    while (true)
    {
        for (Eigen::Index i = 0; i < N; ++i)
            H.col(i) = D.col(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
        const double v = rzf_objective(H, alpha);
        if (v < best.value)
        {
            best.value = v;
            best.grid_indices = idx;
        }
        // Next combination in lexicographic order.
        std::size_t i = num_antennas;
        while (i > 0 && idx[i - 1] == G - num_antennas + i - 1)
            --i;
        if (i == 0)
            break;
        ++idx[i - 1];
        for (std::size_t j = i; j < num_antennas; ++j)
            idx[j] = idx[j - 1] + 1;
    }
    for (const auto g : best.grid_indices)
        best.positions.push_back(grid.coordinate(g));
    return best;
}

} // namespace flexprec

#endif
