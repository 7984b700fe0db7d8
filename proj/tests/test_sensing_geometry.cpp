#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "xcal/sensing_geometry.hpp"

using namespace xcal;

namespace {

// satellite at (r, 0, 0) moving along +y; target placed at off-nadir angle
// `eta` in the direction `az` (0 = along track, 90 = right of track)
struct Setup {
    Vec3 sat, vel, target;
};

Setup make_setup(double alt, double eta_deg, double az_deg) {
    const double re = constants::earth_radius_km, r = re + alt;
    const double lambda = ground_central_angle(alt, eta_deg);
    const double az = az_deg * constants::deg2rad;
    // local frame at nadir: east = +y (along), north = +z; right of track when moving +y with nadir -x is -z
    const Vec3 along{0, 1, 0}, right{0, 0, -1};
    const Vec3 dir = along * std::cos(az) + right * std::sin(az);
    const Vec3 target = (Vec3{1, 0, 0} * std::cos(lambda) + dir * std::sin(lambda)) * re;
    return {{r, 0, 0}, {0, 7.5, 0}, target};
}

Vec3 rotate(const Vec3& v, const std::array<std::array<double, 3>, 3>& m) {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

std::array<std::array<double, 3>, 3> random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    double q[4];
    double norm = 0;
    for (double& x : q) {
        x = n(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : q) x /= norm;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
             {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
             {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

}  // namespace

TEST(Nadir, PointUnderSatellite) {
    const Epoch e = Epoch::parse_iso("2019-06-01T00:00:00Z");
    const Vec3 ecef{6828.137, 0, 0};
    const GeodeticPoint p = nadir_point({ecef_to_eci(ecef, e), {0, 7.6, 0}, e});
    EXPECT_NEAR(p.latitude_deg, 0, 1e-9);
    EXPECT_NEAR(p.longitude_deg, 0, 1e-9);
    EXPECT_EQ(p.altitude_km, 0.0);
    EXPECT_NEAR(nadir_point({{0, 0, 7000}, {7, 0, 0}, e}).latitude_deg, 90.0, 1e-9);
    EXPECT_NEAR(nadir_point({{0, 0, -7000}, {7, 0, 0}, e}).latitude_deg, -90.0, 1e-9);
}

TEST(Look, NadirTargetAndOverheadSun) {
    const auto s = make_setup(710, 0, 0);
    const LookGeometry g = look_angles(s.sat, s.vel, s.target, Vec3{1, 0, 0} * constants::au_km);
    EXPECT_NEAR(g.off_nadir_deg, 0, 1e-9);
    EXPECT_NEAR(g.vza_deg, 0, 1e-9);
    EXPECT_NEAR(g.sza_deg, 0, 1e-6);
    EXPECT_NEAR(g.slant_range_km, 710, 1e-9);
    EXPECT_TRUE(g.visible);
}

TEST(Look, VzaFromLawOfSines) {
    const auto s = make_setup(710, 7.5, 90);
    const LookGeometry g = look_angles(s.sat, s.vel, s.target, {0, 0, constants::au_km});
    EXPECT_NEAR(g.off_nadir_deg, 7.5, 1e-9);
    const double expect = std::asin(7088.137 / 6378.137 * std::sin(7.5 * constants::deg2rad)) * constants::rad2deg;
    EXPECT_NEAR(g.vza_deg, expect, 1e-9);
    EXPECT_NEAR(g.vza_deg, 8.34, 0.02);
    EXPECT_NEAR(g.vza_deg, oracle::vza_deg(710, 7.5), 1e-9);
    EXPECT_NEAR(g.cross_track_deg, 7.5, 1e-9);
    EXPECT_NEAR(g.along_track_deg, 0.0, 1e-9);
}

TEST(Look, OccludedTargetNotVisible) {
    const Vec3 sat{6828.137, 0, 0};
    const Vec3 target{-6378.137, 0, 0};
    const LookGeometry g = look_angles(sat, {0, 7.6, 0}, target, {1, 0, 0});
    EXPECT_FALSE(g.visible);
    SensorSpec s;
    s.pointing_mode = PointingMode::conical_3dof;
    s.for_half_angle_deg = 69;
    EXPECT_FALSE(in_access(g, s));
}

TEST(Look, RotationInvariance) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> alt(300, 900), eta(0, 50), az(0, 360);
    for (int k = 0; k < 1000; ++k) {
        const auto s = make_setup(alt(rng), eta(rng), az(rng));
        const Vec3 sun = Vec3{0.3, -0.8, 0.52}.normalized() * constants::au_km;
        const auto m = random_rotation(rng);
        const LookGeometry a = look_angles(s.sat, s.vel, s.target, sun);
        const LookGeometry b = look_angles(rotate(s.sat, m), rotate(s.vel, m), rotate(s.target, m), rotate(sun, m));
        EXPECT_NEAR(a.off_nadir_deg, b.off_nadir_deg, 1e-8);
        EXPECT_NEAR(a.vza_deg, b.vza_deg, 1e-8);
        EXPECT_NEAR(a.sza_deg, b.sza_deg, 1e-8);
        EXPECT_NEAR(a.cross_track_deg, b.cross_track_deg, 1e-8);
        EXPECT_NEAR(a.along_track_deg, b.along_track_deg, 1e-8);
    }
}

TEST(Look, VzaAtLeastOffNadirAndSzaSharedAcrossSatellites) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> alt(300, 900), eta(0, 60), az(0, 360);
    const Vec3 sun = Vec3{0.1, 0.7, -0.2}.normalized() * constants::au_km;
    for (int k = 0; k < 2000; ++k) {
        const auto s = make_setup(alt(rng), eta(rng), az(rng));
        const LookGeometry g = look_angles(s.sat, s.vel, s.target, sun);
        EXPECT_GE(g.vza_deg + 1e-9, g.off_nadir_deg);
        const Vec3 other = s.target.normalized() * 7500.0 + Vec3{100, 200, -300};
        const LookGeometry h = look_angles(other, {0, 0, 7}, s.target, sun);
        EXPECT_DOUBLE_EQ(g.sza_deg, h.sza_deg);
        EXPECT_GE(g.sza_deg, 0.0);
        EXPECT_LE(g.sza_deg, 180.0);
    }
}

TEST(Access, NadirAlwaysInAccessForAnyMode) {
    const auto s = make_setup(500, 0, 0);
    const LookGeometry g = look_angles(s.sat, s.vel, s.target, {1, 0, 0});
    for (auto mode : {PointingMode::nadir_fixed, PointingMode::cross_track_agile, PointingMode::conical_3dof}) {
        SensorSpec sp;
        sp.pointing_mode = mode;
        EXPECT_TRUE(in_access(g, sp)) << to_string(mode);
    }
}

TEST(Access, ConicalThreshold) {
    SensorSpec sp;
    sp.pointing_mode = PointingMode::conical_3dof;
    sp.for_half_angle_deg = 27.5;
    for (double az : {0.0, 45.0, 130.0}) {
        const auto s30 = make_setup(450, 30, az);
        EXPECT_FALSE(in_access(look_angles(s30.sat, s30.vel, s30.target, {1, 0, 0}), sp));
        const auto s27 = make_setup(450, 27, az);
        EXPECT_TRUE(in_access(look_angles(s27.sat, s27.vel, s27.target, {1, 0, 0}), sp));
    }
}

TEST(Access, TiltedPushbroomSeesOneSide) {
    SensorSpec sp;
    sp.pointing_mode = PointingMode::nadir_fixed;
    sp.fov_cross_track_deg = 20;
    sp.fov_along_track_deg = 1;
    sp.boresight_tilt_deg = 12;
    const auto right = make_setup(800, 18, 90), left = make_setup(800, 18, 270), nadir = make_setup(800, 0, 0);
    EXPECT_TRUE(in_access(look_angles(right.sat, right.vel, right.target, {1, 0, 0}), sp));
    EXPECT_FALSE(in_access(look_angles(left.sat, left.vel, left.target, {1, 0, 0}), sp));
    EXPECT_FALSE(in_access(look_angles(nadir.sat, nadir.vel, nadir.target, {1, 0, 0}), sp));
}

TEST(Access, ModeNestingOnRandomGeometry) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> alt(300, 900), eta(0, 40), az(0, 360), fh(5, 40), fov(0.5, 10);
    int n_ct = 0, n_nadir = 0;
    for (int k = 0; k < 10000; ++k) {
        SensorSpec sp;
        sp.for_half_angle_deg = fh(rng);
        sp.fov_along_track_deg = fov(rng);
        sp.fov_cross_track_deg = fov(rng);
        // keep the whole nadir frame inside the cone
        if (max_off_nadir_deg(sp) > sp.for_half_angle_deg) {
            --k;
            continue;
        }
        const auto s = make_setup(alt(rng), eta(rng) * (k % 3 == 0 ? 0.1 : 1.0), az(rng));
        const LookGeometry g = look_angles(s.sat, s.vel, s.target, {1, 0, 0});
        sp.pointing_mode = PointingMode::conical_3dof;
        const bool c3 = in_access(g, sp);
        sp.pointing_mode = PointingMode::cross_track_agile;
        const bool ct = in_access(g, sp);
        sp.pointing_mode = PointingMode::nadir_fixed;
        const bool nf = in_access(g, sp);
        EXPECT_TRUE(!ct || c3);
        EXPECT_TRUE(!nf || ct);
        n_ct += ct;
        n_nadir += nf;
    }
    EXPECT_GT(n_ct, 100);
    EXPECT_GT(n_nadir, 100);
}

TEST(Swath, AgreesWithLawOfCosinesRoute) {
    EXPECT_EQ(swath_half_width(700, 0), 0.0);
    EXPECT_NEAR(swath_half_width(710, 7.5), 93.7, 0.5);
    EXPECT_NEAR(2 * swath_half_width(710, 7.5), 187, 5);
    EXPECT_NEAR(swath_half_width(710, 7.5), oracle::swath_half_width_km(710, 7.5), 1e-6);
    EXPECT_NEAR(swath_half_width(450, 27.5), oracle::swath_half_width_km(450, 27.5), 1e-6);
    for (double alt = 300; alt <= 1200; alt += 50)
        for (double eta = 1; eta < 50; eta += 3.7)
            EXPECT_NEAR(swath_half_width(alt, eta), oracle::swath_half_width_km(alt, eta), 1e-6);
    EXPECT_THROW(swath_half_width(450, 80), Error);
    EXPECT_THROW(swath_half_width(450, -1), Error);
}

TEST(Sensor, Validation) {
    SensorSpec s;
    EXPECT_NO_THROW(s.validate());
    s.for_half_angle_deg = 70;
    EXPECT_THROW(s.validate(), Error);
    s = {};
    s.fov_cross_track_deg = 0;
    EXPECT_THROW(s.validate(), Error);
    EXPECT_EQ(parse_pointing_mode("CONICAL_3DOF"), PointingMode::conical_3dof);
    EXPECT_THROW(parse_pointing_mode("SIDEWAYS"), Error);
}
