#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "xcal/propagator.hpp"

using namespace xcal;

namespace {
const Epoch epoch0 = Epoch::parse_iso("2019-06-01T00:00:00Z");
}

TEST(Elements, CircularEquatorialState) {
    const OrbitalElements el = circular_orbit(450.0, 0.0, 0.0, 0.0, epoch0);
    const EciState s = elements_to_state(el);
    EXPECT_NEAR((s.position - Vec3{6828.137, 0, 0}).norm(), 0.0, 1e-9);
    EXPECT_NEAR(s.velocity.norm(), std::sqrt(398600.4418 / 6828.137), 1e-12);
    EXPECT_NEAR(s.velocity.norm(), 7.641, 0.001);
}

TEST(Elements, PolarQuarterOrbitOnZAxis) {
    const EciState s = elements_to_state(circular_orbit(700.0, 90.0, 0.0, 90.0, epoch0));
    EXPECT_NEAR(s.position.x, 0.0, 1e-9);
    EXPECT_NEAR(s.position.y, 0.0, 1e-9);
    EXPECT_NEAR(s.position.z, 7078.137, 1e-9);
}

TEST(Elements, RadiusEqualsSemimajorAxisWhenCircular) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ang(0, 360), inc(0, 180), alt(200, 2000);
    for (int k = 0; k < 500; ++k) {
        const auto el = circular_orbit(alt(rng), inc(rng), ang(rng), ang(rng), epoch0);
        EXPECT_NEAR(elements_to_state(el).position.norm(), el.semimajor_axis_km, 1e-8);
    }
}

TEST(Elements, RejectsHyperbolicAndLowPerigee) {
    OrbitalElements el = circular_orbit(500, 45, 0, 0, epoch0);
    el.eccentricity = 1.0;
    EXPECT_THROW(elements_to_state(el), Error);
    el.eccentricity = 0.1;
    EXPECT_THROW(check_scenario_elements(el), Error);
    EXPECT_THROW(check_scenario_elements(circular_orbit(50, 45, 0, 0, epoch0)), Error);
}

TEST(J2, RatesAgainstDirectFormula) {
    const auto polar = j2_secular_rates(circular_orbit(700, 90, 0, 0, epoch0));
    EXPECT_NEAR(polar.raan_rate_deg_per_day, 0.0, 1e-12);
    const auto sso = j2_secular_rates(circular_orbit(710, 98.19, 0, 0, epoch0));
    EXPECT_NEAR(sso.raan_rate_deg_per_day, 0.986, 0.01);
    EXPECT_NEAR(sso.raan_rate_deg_per_day, oracle::raan_rate_deg_per_day(7088.137, 0, 98.19), 1e-9);
    const auto tr = j2_secular_rates(circular_orbit(450, 45, 0, 0, epoch0));
    EXPECT_NEAR(tr.raan_rate_deg_per_day, -5.55, 0.05);
    EXPECT_NEAR(tr.raan_rate_deg_per_day, oracle::raan_rate_deg_per_day(6828.137, 0, 45), 1e-9);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> inc(0, 180);
    for (int k = 0; k < 200; ++k) {
        const double i = inc(rng);
        const double rate = j2_secular_rates(circular_orbit(600, i, 0, 0, epoch0)).raan_rate_deg_per_day;
        if (std::abs(i - 90) > 1e-6) {
            EXPECT_EQ(std::signbit(rate), !std::signbit(std::cos(i * constants::deg2rad)));
        }
    }
}

TEST(Propagate, ZeroOffsetMatchesElements) {
    const auto el = circular_orbit(450, 45, 30, 10, epoch0);
    const EciState a = propagate(el, 0.0), b = elements_to_state(el);
    EXPECT_NEAR((a.position - b.position).norm(), 0.0, 1e-9);
    EXPECT_NEAR((a.velocity - b.velocity).norm(), 0.0, 1e-12);
}

TEST(Propagate, TwoBodyPeriodicity) {
    OrbitalElements el = circular_orbit(450, 45, 30, 10, epoch0);
    el.eccentricity = 0.05;
    el.semimajor_axis_km = 7200;
    el.arg_perigee_deg = 40;
    const EciState a = propagate(el, 0.0, ForceModel::two_body);
    const EciState b = propagate(el, el.period_s(), ForceModel::two_body);
    EXPECT_LT((a.position - b.position).norm(), 1e-3);
}

TEST(Propagate, TwoBodyConservesEnergyAndMomentum) {
    OrbitalElements el = circular_orbit(600, 63, 10, 20, epoch0);
    el.eccentricity = 0.02;
    el.arg_perigee_deg = 270;
    const double mu = constants::mu_earth_km3_s2;
    const EciState s0 = propagate(el, 0, ForceModel::two_body);
    const double e0 = s0.velocity.dot(s0.velocity) / 2 - mu / s0.position.norm();
    const double h0 = s0.position.cross(s0.velocity).norm();
    for (double t = 0; t <= 48 * 3600; t += 977) {
        const EciState s = propagate(el, t, ForceModel::two_body);
        const double e = s.velocity.dot(s.velocity) / 2 - mu / s.position.norm();
        EXPECT_NEAR(e / e0 - 1, 0.0, 1e-9);
        EXPECT_NEAR(s.position.cross(s.velocity).norm() / h0 - 1, 0.0, 1e-9);
    }
}

TEST(Propagate, J2CircularRadiusAndLinearNode) {
    const auto el = circular_orbit(450, 45, 100, 0, epoch0);
    const Propagator p(el);
    for (double t = 0; t <= 48 * 3600; t += 1234) EXPECT_NEAR(p.state_at(t).position.norm() / el.semimajor_axis_km, 1, 1e-6);
    EXPECT_NEAR(p.raan_deg_at(86400) - 100.0, -5.55, 0.05);
    const double r0 = p.raan_deg_at(0), r1 = p.raan_deg_at(40000), r2 = p.raan_deg_at(80000);
    EXPECT_NEAR((r2 - r1) - (r1 - r0), 0.0, 1e-9);
    // node direction from the angular momentum vector
    const EciState s = p.state_at(86400);
    const Vec3 h = s.position.cross(s.velocity);
    const double node = std::atan2(h.x, -h.y) * constants::rad2deg;
    EXPECT_NEAR(std::remainder(node - p.raan_deg_at(86400), 360.0), 0.0, 1e-6);
}

TEST(Propagate, RevolutionsPerDayAt450) {
    const auto el = circular_orbit(450, 45, 0, 0, epoch0);
    EXPECT_NEAR(86400.0 / el.period_s(), 15.38, 0.05);
}

TEST(Kepler, SolverAccuracy) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> m(-10, 10), e(0, 0.95);
    for (int k = 0; k < 5000; ++k) {
        const double mm = m(rng), ee = e(rng);
        const double E = solve_kepler(mm, ee);
        EXPECT_NEAR(std::remainder(E - ee * std::sin(E) - mm, 2 * constants::pi), 0.0, 1e-10);
    }
}

TEST(Sso, InclinationMatchesRootSolve) {
    EXPECT_NEAR(sso_inclination(710), 98.2, 0.1);
    EXPECT_NEAR(sso_inclination(788), 98.6, 0.1);
    EXPECT_NEAR(sso_inclination(802), 98.6, 0.1);
    for (double alt : {300.0, 500.0, 710.0, 788.0, 802.0, 1500.0})
        EXPECT_NEAR(sso_inclination(alt), oracle::sso_inclination_bisect(alt), 1e-6);
    EXPECT_THROW(sso_inclination(150), Error);
    EXPECT_THROW(sso_inclination(2500), Error);
}
