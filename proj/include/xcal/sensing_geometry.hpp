#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "xcal/astro_time.hpp"
#include "xcal/constants.hpp"
#include "xcal/error.hpp"
#include "xcal/vec3.hpp"

namespace xcal {

enum class PointingMode { nadir_fixed, cross_track_agile, conical_3dof };

inline std::string_view to_string(PointingMode m) {
    switch (m) {
        case PointingMode::nadir_fixed: return "NADIR_FIXED";
        case PointingMode::cross_track_agile: return "CROSS_TRACK_AGILE";
        case PointingMode::conical_3dof: return "CONICAL_3DOF";
    }
    return "?";
}

inline PointingMode parse_pointing_mode(std::string_view s) {
    if (s == "NADIR_FIXED") return PointingMode::nadir_fixed;
    if (s == "CROSS_TRACK_AGILE") return PointingMode::cross_track_agile;
    if (s == "CONICAL_3DOF") return PointingMode::conical_3dof;
    throw Error(fmt::format("unknown pointing mode '{}'", s));
}

/// Instrument description. Angles in degrees; FOVs are full angles.
///
/// The body frame used for pointing has +z toward nadir, +x along the
/// velocity projected onto the local horizontal, and +y = z cross x, which
/// is the right-hand side of the ground track. `boresight_tilt_deg` is a
/// static roll toward +y.
struct SensorSpec {
    double fov_cross_track_deg = 3.0;
    double fov_along_track_deg = 2.0;
    PointingMode pointing_mode = PointingMode::nadir_fixed;
    double for_half_angle_deg = 27.5;
    double boresight_tilt_deg = 0.0;

    void validate() const {
        if (!(fov_cross_track_deg > 0.0 && fov_cross_track_deg < 180.0))
            throw Error(fmt::format("fov_cross_track_deg {} outside (0, 180)", fov_cross_track_deg));
        if (!(fov_along_track_deg > 0.0 && fov_along_track_deg < 180.0))
            throw Error(fmt::format("fov_along_track_deg {} outside (0, 180)", fov_along_track_deg));
        if (!(for_half_angle_deg >= 0.0 && for_half_angle_deg < 70.0))
            throw Error(fmt::format("for_half_angle_deg {} outside [0, 70)", for_half_angle_deg));
        if (!(std::abs(boresight_tilt_deg) < 90.0))
            throw Error(fmt::format("boresight_tilt_deg {} outside (-90, 90)", boresight_tilt_deg));
    }
};

struct LookGeometry {
    double off_nadir_deg = 0.0;
    double vza_deg = 0.0;
    double sza_deg = 0.0;
    double slant_range_km = 0.0;
    // Line of sight in the body frame: roll angle about the along-track
    // axis, and elevation of the line of sight out of the cross-track plane.
    double cross_track_deg = 0.0;
    double along_track_deg = 0.0;
    bool visible = false;
};

inline GeodeticPoint nadir_point(const EciState& state) {
    GeodeticPoint p = ecef_to_geodetic(eci_to_ecef(state.position, state.epoch));
    p.altitude_km = 0.0;
    return p;
}

/// Frame-agnostic look geometry: all four vectors must be expressed in the
/// same Earth-centred frame.
inline LookGeometry look_angles(const Vec3& sat_pos, const Vec3& sat_vel, const Vec3& target_pos, const Vec3& sun_pos) {
    using constants::rad2deg;
    LookGeometry g;
    const Vec3 los = target_pos - sat_pos;
    g.slant_range_km = los.norm();
    const Vec3 zenith = target_pos.normalized();
    const Vec3 to_sat = sat_pos - target_pos;
    g.visible = zenith.dot(to_sat) > 0.0;
    g.vza_deg = angle_between(zenith, to_sat) * rad2deg;
    g.sza_deg = angle_between(zenith, sun_pos - target_pos) * rad2deg;

    const Vec3 nadir = (-sat_pos).normalized();
    const Vec3 along = (sat_vel - nadir * nadir.dot(sat_vel)).normalized();
    const Vec3 cross = nadir.cross(along);
    const Vec3 u = los / g.slant_range_km;
    const double lx = u.dot(along);
    const double ly = u.dot(cross);
    const double lz = u.dot(nadir);
    g.off_nadir_deg = std::atan2(std::hypot(lx, ly), lz) * rad2deg;
    g.cross_track_deg = std::atan2(ly, lz) * rad2deg;
    g.along_track_deg = std::atan2(lx, std::hypot(ly, lz)) * rad2deg;
    return g;
}

/// Look geometry from a satellite state to a surface target at `epoch`.
inline LookGeometry look_geometry(const EciState& sat, const GeodeticPoint& target, const Epoch& epoch) {
    const Vec3 target_eci = ecef_to_eci(geodetic_to_ecef(target), epoch);
    return look_angles(sat.position, sat.velocity, target_eci, sun_position_eci(epoch).position());
}

/// Whether the sensor can observe the target described by `look`.
///
/// NADIR_FIXED tests containment in the rectangular frame of the (tilted)
/// boresight. The agile modes test boresight reachability within the field
/// of regard: CONICAL_3DOF is a cone of `for_half_angle_deg` about nadir;
/// CROSS_TRACK_AGILE is the part of that cone reachable by rolling about
/// the along-track axis, with the along-track half FOV absorbing the miss.
inline bool in_access(const LookGeometry& look, const SensorSpec& sensor) {
    using constants::deg2rad;
    if (!look.visible) return false;
    switch (sensor.pointing_mode) {
        case PointingMode::conical_3dof: return look.off_nadir_deg <= sensor.for_half_angle_deg;
        case PointingMode::cross_track_agile:
            return look.off_nadir_deg <= sensor.for_half_angle_deg &&
                   std::abs(look.cross_track_deg) <= sensor.for_half_angle_deg &&
                   std::abs(look.along_track_deg) <= 0.5 * sensor.fov_along_track_deg;
        case PointingMode::nadir_fixed: {
            const double roll = (look.cross_track_deg - sensor.boresight_tilt_deg) * deg2rad;
            if (std::abs(roll) > 0.5 * sensor.fov_cross_track_deg * deg2rad) return false;
            // along-track angle measured from the rolled boresight plane
            const double along = std::atan2(std::tan(std::abs(look.along_track_deg) * deg2rad), std::cos(roll));
            return along <= 0.5 * sensor.fov_along_track_deg * deg2rad;
        }
    }
    return false;
}

/// Earth central angle (rad) between nadir and the surface point seen at
/// off-nadir angle `half_angle_deg`, or a negative value past the limb.
inline double ground_central_angle(double altitude_km, double half_angle_deg) {
    const double ratio = (constants::earth_radius_km + altitude_km) / constants::earth_radius_km;
    const double eta = half_angle_deg * constants::deg2rad;
    const double s = ratio * std::sin(eta);
    if (s >= 1.0) return -1.0;
    return std::asin(s) - eta;
}

/// Ground arc (km) from nadir to the footprint edge at `half_angle_deg`.
inline double swath_half_width(double altitude_km, double half_angle_deg) {
    if (!(altitude_km > 0.0)) throw Error(fmt::format("altitude {} km must be positive", altitude_km));
    if (!(half_angle_deg >= 0.0)) throw Error(fmt::format("half angle {} deg must be non-negative", half_angle_deg));
    const double lambda = ground_central_angle(altitude_km, half_angle_deg);
    if (lambda < 0.0)
        throw Error(fmt::format("half angle {} deg reaches beyond the Earth limb at {} km", half_angle_deg, altitude_km));
    return constants::earth_radius_km * lambda;
}

/// View zenith angle (deg) of a surface point seen at the given off-nadir angle.
inline double vza_from_off_nadir(double altitude_km, double off_nadir_deg) {
    const double ratio = (constants::earth_radius_km + altitude_km) / constants::earth_radius_km;
    return std::asin(std::min(1.0, ratio * std::sin(off_nadir_deg * constants::deg2rad))) * constants::rad2deg;
}

/// Largest off-nadir angle (deg) at which the sensor can observe anything.
inline double max_off_nadir_deg(const SensorSpec& s) {
    switch (s.pointing_mode) {
        case PointingMode::conical_3dof:
        case PointingMode::cross_track_agile: return s.for_half_angle_deg;
        case PointingMode::nadir_fixed: {
            const double ct = std::abs(s.boresight_tilt_deg) + 0.5 * s.fov_cross_track_deg;
            const double at = 0.5 * s.fov_along_track_deg;
            if (ct >= 90.0 || at >= 90.0) return 90.0;
            // corner of the rolled frame
            const double c = std::cos(ct * constants::deg2rad) * std::cos(at * constants::deg2rad);
            return std::acos(c) * constants::rad2deg;
        }
    }
    return 90.0;
}

/// Ground reach (Earth central angle, rad) of the sensor's field of regard,
/// capped at the horizon.
inline double reach_central_angle(const SensorSpec& s, double altitude_km) {
    const double lambda = ground_central_angle(altitude_km, max_off_nadir_deg(s));
    if (lambda >= 0.0) return lambda;
    return std::acos(constants::earth_radius_km / (constants::earth_radius_km + altitude_km));
}

/// Ground reach (km) used for track-overlap tests: the field of regard for
/// agile sensors, the cross-track half swath for nadir-fixed ones.
inline double ground_reach_km(const SensorSpec& s, double altitude_km) {
    double half = s.for_half_angle_deg;
    if (s.pointing_mode == PointingMode::nadir_fixed)
        half = std::abs(s.boresight_tilt_deg) + 0.5 * s.fov_cross_track_deg;
    const double lambda = ground_central_angle(altitude_km, half);
    if (lambda >= 0.0) return constants::earth_radius_km * lambda;
    return constants::earth_radius_km * std::acos(constants::earth_radius_km / (constants::earth_radius_km + altitude_km));
}

}  // namespace xcal
