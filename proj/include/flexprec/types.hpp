// SPDX-License-Identifier: Apache-2.0
//
// Shared numeric types and physical constants.

#ifndef FLEXPREC_TYPES_HPP
#define FLEXPREC_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <numbers>

namespace flexprec {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kSpeedOfLight = 2.99792458e8; // m/s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Free-space wavelength in meters for a carrier frequency in Hz.
inline double wavelength_from_carrier(double carrier_hz) { return kSpeedOfLight / carrier_hz; }

/// A point in the x-z plane of the transmit aperture, in meters.
struct Position
{
    double x = 0.0;
    double z = 0.0;

    friend bool operator==(const Position &, const Position &) = default;
};

inline double distance(const Position &a, const Position &b)
{
    const double dx = a.x - b.x;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dz * dz);
}

} // namespace flexprec

#endif
