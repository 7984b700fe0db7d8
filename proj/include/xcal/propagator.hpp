#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "xcal/astro_time.hpp"
#include "xcal/constants.hpp"
#include "xcal/error.hpp"
#include "xcal/vec3.hpp"

namespace xcal {

struct OrbitalElements {
    double semimajor_axis_km = constants::earth_radius_km + 500.0;
    double eccentricity = 0.0;
    double inclination_deg = 0.0;
    double raan_deg = 0.0;
    double arg_perigee_deg = 0.0;
    double true_anomaly_deg = 0.0;  // for e = 0: argument of latitude from the ascending node
    Epoch epoch;

    double perigee_altitude_km() const {
        return semimajor_axis_km * (1.0 - eccentricity) - constants::earth_radius_km;
    }
    double mean_motion_rad_s() const {
        return std::sqrt(constants::mu_earth_km3_s2 / (semimajor_axis_km * semimajor_axis_km * semimajor_axis_km));
    }
    double period_s() const { return constants::two_pi / mean_motion_rad_s(); }
};

struct J2Rates {
    double raan_rate_deg_per_day = 0.0;
    double arg_perigee_rate_deg_per_day = 0.0;
    double mean_anomaly_correction_deg_per_day = 0.0;
};

enum class ForceModel { two_body, j2_secular };

inline OrbitalElements circular_orbit(double altitude_km, double inclination_deg, double raan_deg,
                                      double arg_latitude_deg, const Epoch& epoch) {
    return {constants::earth_radius_km + altitude_km, 0.0, inclination_deg, raan_deg, 0.0, arg_latitude_deg, epoch};
}

/// Rejects elements that cannot describe a closed orbit.
inline void check_elements(const OrbitalElements& el) {
    if (!(el.eccentricity >= 0.0 && el.eccentricity < 1.0))
        throw Error(fmt::format("eccentricity {} outside [0, 1)", el.eccentricity));
    if (!(el.semimajor_axis_km > 0.0)) throw Error(fmt::format("semimajor axis {} km must be positive", el.semimajor_axis_km));
    if (!(el.inclination_deg >= 0.0 && el.inclination_deg <= 180.0))
        throw Error(fmt::format("inclination {} deg outside [0, 180]", el.inclination_deg));
}

/// Scenario satellites additionally need perigee above 100 km.
inline void check_scenario_elements(const OrbitalElements& el) {
    check_elements(el);
    if (!(el.perigee_altitude_km() > 100.0))
        throw Error(fmt::format("perigee altitude {:.1f} km must exceed 100 km", el.perigee_altitude_km()));
}

/// Newton solve of M = E - e sin E. Throws if it fails to converge.
inline double solve_kepler(double mean_anomaly_rad, double e) {
    const double m = std::remainder(mean_anomaly_rad, constants::two_pi);
    if (e == 0.0) return m;
    double ecc = e < 0.8 ? m : std::copysign(constants::pi, m);
    for (int iter = 0; iter < 50; ++iter) {
        const double f = ecc - e * std::sin(ecc) - m;
        const double step = f / (1.0 - e * std::cos(ecc));
        ecc -= step;
        if (std::abs(step) < 1e-12) return ecc;
    }
    throw Error(fmt::format("Kepler solver did not converge (M = {}, e = {})", m, e));
}

inline double true_to_mean_anomaly(double nu_rad, double e) {
    if (e == 0.0) return nu_rad;
    const double ecc = 2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(nu_rad / 2.0),
                                        std::sqrt(1.0 + e) * std::cos(nu_rad / 2.0));
    return ecc - e * std::sin(ecc);
}

inline double eccentric_to_true_anomaly(double ecc, double e) {
    if (e == 0.0) return ecc;
    return 2.0 * std::atan2(std::sqrt(1.0 + e) * std::sin(ecc / 2.0), std::sqrt(1.0 - e) * std::cos(ecc / 2.0));
}

namespace detail {

// Perifocal position/velocity rotated into ECI; all angles in radians.
inline std::pair<Vec3, Vec3> perifocal_to_eci(double a, double e, double inc, double raan, double argp, double nu) {
    const double p = a * (1.0 - e * e);
    const double r = p / (1.0 + e * std::cos(nu));
    const double sqrt_mu_p = std::sqrt(constants::mu_earth_km3_s2 / p);
    const double rp_x = r * std::cos(nu);
    const double rp_y = r * std::sin(nu);
    const double vp_x = -sqrt_mu_p * std::sin(nu);
    const double vp_y = sqrt_mu_p * (e + std::cos(nu));

    const double co = std::cos(raan), so = std::sin(raan);
    const double cw = std::cos(argp), sw = std::sin(argp);
    const double ci = std::cos(inc), si = std::sin(inc);
    const Vec3 px{co * cw - so * sw * ci, so * cw + co * sw * ci, sw * si};
    const Vec3 py{-co * sw - so * cw * ci, -so * sw + co * cw * ci, cw * si};
    return {px * rp_x + py * rp_y, px * vp_x + py * vp_y};
}

}  // namespace detail

inline EciState elements_to_state(const OrbitalElements& el) {
    check_elements(el);
    using constants::deg2rad;
    const auto [r, v] = detail::perifocal_to_eci(el.semimajor_axis_km, el.eccentricity, el.inclination_deg * deg2rad,
                                                 el.raan_deg * deg2rad, el.arg_perigee_deg * deg2rad,
                                                 el.true_anomaly_deg * deg2rad);
    return {r, v, el.epoch};
}

/// First-order secular J2 rates of node, perigee and mean anomaly.
inline J2Rates j2_secular_rates(const OrbitalElements& el) {
    check_elements(el);
    const double n = el.mean_motion_rad_s();
    const double e2 = el.eccentricity * el.eccentricity;
    const double p = el.semimajor_axis_km * (1.0 - e2);
    const double k = n * constants::j2 * (constants::earth_radius_km / p) * (constants::earth_radius_km / p);
    const double ci = std::cos(el.inclination_deg * constants::deg2rad);
    const double to_deg_day = constants::rad2deg * constants::seconds_per_day;
    J2Rates rates;
    rates.raan_rate_deg_per_day = -1.5 * k * ci * to_deg_day;
    rates.arg_perigee_rate_deg_per_day = 0.75 * k * (5.0 * ci * ci - 1.0) * to_deg_day;
    rates.mean_anomaly_correction_deg_per_day = 0.75 * k * std::sqrt(1.0 - e2) * (3.0 * ci * ci - 1.0) * to_deg_day;
    return rates;
}

/// Keplerian propagator with J2 secular drift of node, perigee and mean
/// anomaly. Construction caches everything that does not depend on time.
class Propagator {
public:
    explicit Propagator(const OrbitalElements& el, ForceModel model = ForceModel::j2_secular) : el_(el) {
        check_elements(el);
        using constants::deg2rad;
        n_ = el.mean_motion_rad_s();
        m0_ = true_to_mean_anomaly(el.true_anomaly_deg * deg2rad, el.eccentricity);
        if (model == ForceModel::j2_secular) {
            const J2Rates rates = j2_secular_rates(el);
            const double per_s = deg2rad / constants::seconds_per_day;
            raan_rate_ = rates.raan_rate_deg_per_day * per_s;
            argp_rate_ = rates.arg_perigee_rate_deg_per_day * per_s;
            m_rate_ = n_ + rates.mean_anomaly_correction_deg_per_day * per_s;
        } else {
            m_rate_ = n_;
        }
    }

    const OrbitalElements& elements() const { return el_; }

    /// State `t_offset_s` seconds after the element epoch.
    EciState state_at(double t_offset_s) const {
        using constants::deg2rad;
        const double m = m0_ + m_rate_ * t_offset_s;
        const double ecc = solve_kepler(m, el_.eccentricity);
        const double nu = eccentric_to_true_anomaly(ecc, el_.eccentricity);
        const auto [r, v] = detail::perifocal_to_eci(
            el_.semimajor_axis_km, el_.eccentricity, el_.inclination_deg * deg2rad,
            el_.raan_deg * deg2rad + raan_rate_ * t_offset_s, el_.arg_perigee_deg * deg2rad + argp_rate_ * t_offset_s,
            nu);
        return {r, v, el_.epoch.plus_seconds(t_offset_s)};
    }

    /// Node longitude (deg, unwrapped) at the given offset.
    double raan_deg_at(double t_offset_s) const {
        return el_.raan_deg + raan_rate_ * t_offset_s * constants::rad2deg;
    }

private:
    OrbitalElements el_;
    double n_ = 0.0;
    double m0_ = 0.0;
    double m_rate_ = 0.0;
    double raan_rate_ = 0.0;
    double argp_rate_ = 0.0;
};

inline EciState propagate(const OrbitalElements& el, double t_offset_s, ForceModel model = ForceModel::j2_secular) {
    return Propagator(el, model).state_at(t_offset_s);
}

/// Inclination (deg) of a circular sun-synchronous orbit at the given altitude.
inline double sso_inclination(double altitude_km) {
    if (!(altitude_km >= 200.0 && altitude_km <= 2000.0))
        throw Error(fmt::format("altitude {} km outside the supported 200-2000 km range", altitude_km));
    const double a = constants::earth_radius_km + altitude_km;
    const double n = std::sqrt(constants::mu_earth_km3_s2 / (a * a * a));
    const double k = 1.5 * n * constants::j2 * (constants::earth_radius_km / a) * (constants::earth_radius_km / a);
    const double target = constants::sso_raan_rate_deg_per_day * constants::deg2rad / constants::seconds_per_day;
    const double cos_i = -target / k;
    const double inc = std::acos(std::clamp(cos_i, -1.0, 1.0)) * constants::rad2deg;
    if (std::abs(cos_i) > 1.0 || inc < 90.0 || inc > 110.0)
        throw Error(fmt::format("no sun-synchronous inclination in [90, 110] deg at {} km", altitude_km));
    return inc;
}

}  // namespace xcal
