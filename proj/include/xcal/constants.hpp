#pragma once

#include <limits>
#include <numbers>

namespace xcal::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double deg2rad = std::numbers::pi / 180.0;
inline constexpr double rad2deg = 180.0 / std::numbers::pi;

// Earth model (spherical for all geodetic and footprint math)
inline constexpr double earth_radius_km = 6378.137;
inline constexpr double mu_earth_km3_s2 = 398600.4418;
inline constexpr double j2 = 1.08263e-3;
inline constexpr double earth_rotation_rad_s = 7.2921158553e-5;

inline constexpr double seconds_per_day = 86400.0;
inline constexpr double au_km = 149597870.7;
inline constexpr double jd_j2000 = 2451545.0;
inline constexpr double jd_unix_epoch = 2440587.5;
inline constexpr double days_per_julian_century = 36525.0;

// Mean motion of the Sun used as the sun-synchronous nodal rate.
inline constexpr double sso_raan_rate_deg_per_day = 0.98565;

inline constexpr double unbounded = std::numeric_limits<double>::infinity();

}  // namespace xcal::constants
