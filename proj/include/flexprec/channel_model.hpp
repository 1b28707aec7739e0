// SPDX-License-Identifier: Apache-2.0
//
// Multipath scenarios, array manifolds and the on-grid position dictionary.
//
// Conventions: virtual azimuth phi multiplies the x coordinate, virtual
// elevation theta multiplies z. A user channel h_k is an N-vector over
// antennas; the position manifold b(x, z) is a K-vector over users with
// b(x_n, z_n)[k] = conj(h_k[n]), so the K x N downlink channel whose rows are
// h_k^H has the position manifolds of the antennas as its columns.

#ifndef FLEXPREC_CHANNEL_MODEL_HPP
#define FLEXPREC_CHANNEL_MODEL_HPP

#include "rng.hpp"
#include "types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flexprec {

using AntennaPositions = std::vector<Position>;

// ---------------------------------------------------------------------------
// PathSet

/// Per-user multipath parameters: complex gains and virtual DoAs, K x L each.
class PathSet
{
  public:
    PathSet(CMatrix gains, RMatrix azimuth, RMatrix elevation)
        : gains_(std::move(gains)), azimuth_(std::move(azimuth)), elevation_(std::move(elevation))
    {
        if (gains_.rows() == 0 || gains_.cols() == 0)
            throw std::invalid_argument("PathSet needs at least one user and one path.");
        if (azimuth_.rows() != gains_.rows() || azimuth_.cols() != gains_.cols() ||
            elevation_.rows() != gains_.rows() || elevation_.cols() != gains_.cols())
            throw std::invalid_argument("PathSet gains, azimuth and elevation must all be K x L.");
        if ((azimuth_.array().abs() > 1.0).any() || (elevation_.array().abs() > 1.0).any())
            throw std::invalid_argument("Virtual angles must lie in [-1, 1].");
    }

    std::size_t num_users() const { return static_cast<std::size_t>(gains_.rows()); }
    std::size_t num_paths() const { return static_cast<std::size_t>(gains_.cols()); }

    const CMatrix &gains() const { return gains_; }
    const RMatrix &azimuth() const { return azimuth_; }
    const RMatrix &elevation() const { return elevation_; }

    /// FNV-1a hash over the raw parameter bytes. Equal digests mean
    /// bit-identical scenarios (up to hash collisions).
    std::uint64_t digest() const
    {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        auto mix = [&h](const void *data, std::size_t bytes) {
            const auto *p = static_cast<const unsigned char *>(data);
            for (std::size_t i = 0; i < bytes; ++i)
            {
                h ^= p[i];
                h *= 0x100000001B3ULL;
            }
        };
        const auto rows = gains_.rows(), cols = gains_.cols();
        mix(&rows, sizeof rows);
        mix(&cols, sizeof cols);
        mix(gains_.data(), sizeof(cplx) * static_cast<std::size_t>(gains_.size()));
        mix(azimuth_.data(), sizeof(double) * static_cast<std::size_t>(azimuth_.size()));
        mix(elevation_.data(), sizeof(double) * static_cast<std::size_t>(elevation_.size()));
        return h;
    }

  private:
    CMatrix gains_;
    RMatrix azimuth_;
    RMatrix elevation_;
};

/// Random scenario: angles i.i.d. U[-1, 1], gains i.i.d. CN(0, 1).
/// Deterministic in `seed`.
inline PathSet sample_paths(std::uint64_t seed, std::size_t num_users, std::size_t num_paths)
{
    if (num_users == 0 || num_paths == 0)
        throw std::invalid_argument("sample_paths: K and L must be positive.");

    auto engine = make_engine(seed);
    std::uniform_real_distribution<double> angle(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

    const auto K = static_cast<Eigen::Index>(num_users);
    const auto L = static_cast<Eigen::Index>(num_paths);
    CMatrix gains(K, L);
    RMatrix azimuth(K, L), elevation(K, L);
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index l = 0; l < L; ++l)
        {
            azimuth(k, l) = angle(engine);
            elevation(k, l) = angle(engine);
            const double re = gauss(engine);
            const double im = gauss(engine);
            gains(k, l) = cplx(re, im);
        }
    return PathSet(std::move(gains), std::move(azimuth), std::move(elevation));
}

// ---------------------------------------------------------------------------
// PositionGrid

/// Discretized movable region: nx x nz points at half-wavelength spacing,
/// anchored at the origin. Grid index g = i + j * nx maps to (i d, j d), so x
/// varies fastest.
class PositionGrid
{
  public:
    PositionGrid(std::size_t nx, std::size_t nz, double wavelength)
        : nx_(nx), nz_(nz), wavelength_(wavelength), spacing_(wavelength / 2.0)
    {
        if (nx == 0 || nz == 0)
            throw std::invalid_argument("PositionGrid dimensions must be positive.");
        if (!(wavelength > 0.0) || !std::isfinite(wavelength))
            throw std::invalid_argument("PositionGrid wavelength must be positive.");
    }

    std::size_t nx() const { return nx_; }
    std::size_t nz() const { return nz_; }
    std::size_t size() const { return nx_ * nz_; }
    double wavelength() const { return wavelength_; }
    double spacing() const { return spacing_; }

    double x_max() const { return static_cast<double>(nx_ - 1) * spacing_; }
    double z_max() const { return static_cast<double>(nz_ - 1) * spacing_; }

    std::size_t index(std::size_t i, std::size_t j) const { return i + j * nx_; }
    std::pair<std::size_t, std::size_t> lattice(std::size_t g) const { return {g % nx_, g / nx_}; }

    Position coordinate(std::size_t g) const
    {
        if (g >= size())
            throw std::out_of_range("PositionGrid: index " + std::to_string(g) + " out of range.");
        const auto [i, j] = lattice(g);
        return {static_cast<double>(i) * spacing_, static_cast<double>(j) * spacing_};
    }

    bool contains(const Position &p) const
    {
        return p.x >= 0.0 && p.x <= x_max() && p.z >= 0.0 && p.z <= z_max();
    }

    Position clamp(const Position &p) const
    {
        return {std::clamp(p.x, 0.0, x_max()), std::clamp(p.z, 0.0, z_max())};
    }

  private:
    std::size_t nx_;
    std::size_t nz_;
    double wavelength_;
    double spacing_;
};

// ---------------------------------------------------------------------------
// Antenna position helpers

inline double min_pairwise_distance(std::span<const Position> positions)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < positions.size(); ++i)
        for (std::size_t j = i + 1; j < positions.size(); ++j)
            best = std::min(best, distance(positions[i], positions[j]));
    return best;
}

/// True when every pair is at least lambda/2 apart, up to `tol`.
inline bool satisfies_spacing(std::span<const Position> positions, double wavelength, double tol = 1e-9)
{
    return min_pairwise_distance(positions) >= wavelength / 2.0 - tol;
}

// ---------------------------------------------------------------------------
// Manifolds

/// Array-angle manifold a(theta, phi): one unit-modulus phase per antenna.
inline CVector angle_manifold(std::span<const Position> positions, double theta, double phi, double wavelength)
{
    if (std::abs(theta) > 1.0 || std::abs(phi) > 1.0)
        throw std::invalid_argument("angle_manifold: virtual angles must lie in [-1, 1].");
    const double wavenumber = kTwoPi / wavelength;
    CVector a(static_cast<Eigen::Index>(positions.size()));
    for (std::size_t n = 0; n < positions.size(); ++n)
        a(static_cast<Eigen::Index>(n)) =
            std::polar(1.0, wavenumber * (phi * positions[n].x + theta * positions[n].z));
    return a;
}

/// Channel of user k (0-based) across the given antennas.
inline CVector user_channel(std::span<const Position> positions, const PathSet &paths, std::size_t k,
                            double wavelength)
{
    if (k >= paths.num_users())
        throw std::out_of_range("user_channel: user index out of range.");
    const auto kk = static_cast<Eigen::Index>(k);
    CVector h = CVector::Zero(static_cast<Eigen::Index>(positions.size()));
    for (Eigen::Index l = 0; l < paths.gains().cols(); ++l)
        h += paths.gains()(kk, l) *
             angle_manifold(positions, paths.elevation()(kk, l), paths.azimuth()(kk, l), wavelength);
    return h / std::sqrt(static_cast<double>(paths.num_paths()));
}

/// Array-position manifold b(x, z): response of one antenna at (x, z) to every user.
inline CVector position_manifold(const PathSet &paths, double x, double z, double wavelength)
{
    const double wavenumber = kTwoPi / wavelength;
    const auto &beta = paths.gains();
    const auto &phi = paths.azimuth();
    const auto &theta = paths.elevation();
    CVector b(beta.rows());
    for (Eigen::Index k = 0; k < beta.rows(); ++k)
    {
        cplx acc = 0.0;
        for (Eigen::Index l = 0; l < beta.cols(); ++l)
            acc += std::conj(beta(k, l)) * std::polar(1.0, -wavenumber * (phi(k, l) * x + theta(k, l) * z));
        b(k) = acc;
    }
    return b / std::sqrt(static_cast<double>(paths.num_paths()));
}

inline CVector position_manifold(const PathSet &paths, const Position &p, double wavelength)
{
    return position_manifold(paths, p.x, p.z, wavelength);
}

struct ManifoldGradient
{
    CVector d_x; // db/dx
    CVector d_z; // db/dz
};

inline ManifoldGradient position_manifold_grad(const PathSet &paths, double x, double z, double wavelength)
{
    const double wavenumber = kTwoPi / wavelength;
    const auto &beta = paths.gains();
    const auto &phi = paths.azimuth();
    const auto &theta = paths.elevation();
    const cplx minus_j(0.0, -1.0);
    ManifoldGradient grad{CVector(beta.rows()), CVector(beta.rows())};
    for (Eigen::Index k = 0; k < beta.rows(); ++k)
    {
        cplx gx = 0.0, gz = 0.0;
        for (Eigen::Index l = 0; l < beta.cols(); ++l)
        {
            const cplx term =
                std::conj(beta(k, l)) * std::polar(1.0, -wavenumber * (phi(k, l) * x + theta(k, l) * z));
            gx += minus_j * wavenumber * phi(k, l) * term;
            gz += minus_j * wavenumber * theta(k, l) * term;
        }
        grad.d_x(k) = gx;
        grad.d_z(k) = gz;
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(paths.num_paths()));
    grad.d_x *= scale;
    grad.d_z *= scale;
    return grad;
}

/// K x N downlink channel for antennas at `positions`; column n is b(x_n, z_n)
/// and row k is h_k^H.
inline CMatrix channel_matrix(std::span<const Position> positions, const PathSet &paths, double wavelength)
{
    CMatrix H(static_cast<Eigen::Index>(paths.num_users()), static_cast<Eigen::Index>(positions.size()));
    for (std::size_t n = 0; n < positions.size(); ++n)
        H.col(static_cast<Eigen::Index>(n)) = position_manifold(paths, positions[n], wavelength);
    return H;
}

/// K x G dictionary of position manifolds over every grid point, in grid index order.
inline CMatrix build_dictionary(const PathSet &paths, const PositionGrid &grid)
{
    CMatrix D(static_cast<Eigen::Index>(paths.num_users()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t g = 0; g < grid.size(); ++g)
        D.col(static_cast<Eigen::Index>(g)) = position_manifold(paths, grid.coordinate(g), grid.wavelength());
    return D;
}

} // namespace flexprec

#endif
