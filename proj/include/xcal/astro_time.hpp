#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "xcal/constants.hpp"
#include "xcal/error.hpp"
#include "xcal/vec3.hpp"

namespace xcal {

struct CalendarTime {
    int year = 2000;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    double second = 0.0;
};

namespace detail {

inline constexpr bool is_leap_year(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline constexpr int days_in_month(int y, int m) {
    constexpr int table[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap_year(y) ? 29 : table[m - 1];
}

// Days since 1970-01-01 in the proleptic Gregorian calendar.
inline constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline constexpr void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2));
}

inline double wrap_360(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    return r >= 360.0 ? 0.0 : r;
}

}  // namespace detail

/// Continuous Julian Date for a Gregorian UTC calendar instant. Leap seconds
/// are ignored: the time scale is a single continuous UT-like count.
inline double jd_from_calendar(int year, int month, int day, int hour, int minute, double second) {
    if (year < 1901) throw Error(fmt::format("year {} before 1901 is not supported", year));
    if (month < 1 || month > 12) throw Error(fmt::format("invalid month {}", month));
    if (day < 1 || day > detail::days_in_month(year, month))
        throw Error(fmt::format("invalid day {} for {:04d}-{:02d}", day, year, month));
    if (hour < 0 || hour > 23) throw Error(fmt::format("invalid hour {}", hour));
    if (minute < 0 || minute > 59) throw Error(fmt::format("invalid minute {}", minute));
    if (!(second >= 0.0 && second < 60.0)) throw Error(fmt::format("invalid second {}", second));
    const auto days = detail::days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return static_cast<double>(days) + constants::jd_unix_epoch +
           (hour * 3600.0 + minute * 60.0 + second) / constants::seconds_per_day;
}

/// Inverse of jd_from_calendar, rounded to the nearest millisecond.
inline CalendarTime calendar_from_jd(double jd) {
    const double unix_days = jd - constants::jd_unix_epoch;
    auto day = static_cast<std::int64_t>(std::floor(unix_days));
    auto ms = static_cast<std::int64_t>(std::llround((unix_days - static_cast<double>(day)) * 86400000.0));
    if (ms >= 86400000) {
        ms -= 86400000;
        ++day;
    }
    CalendarTime ct;
    detail::civil_from_days(day, ct.year, ct.month, ct.day);
    ct.hour = static_cast<int>(ms / 3600000);
    ct.minute = static_cast<int>((ms / 60000) % 60);
    ct.second = static_cast<double>(ms % 60000) / 1000.0;
    return ct;
}

/// An instant on the continuous scenario time scale.
class Epoch {
public:
    constexpr Epoch() = default;
    constexpr explicit Epoch(double julian_day) : jd_(julian_day) {}

    static Epoch from_calendar(int year, int month, int day, int hour = 0, int minute = 0, double second = 0.0) {
        return Epoch(jd_from_calendar(year, month, day, hour, minute, second));
    }

    /// Parses `YYYY-MM-DDThh:mm:ss[.fff]Z`.
    static Epoch parse_iso(std::string_view text) {
        const auto fail = [&] { return Error(fmt::format("malformed ISO-8601 epoch '{}'", text)); };
        if (text.size() < 20 || text.back() != 'Z' || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
            text[13] != ':' || text[16] != ':')
            throw fail();
        const auto field = [&](std::size_t pos, std::size_t len) {
            int v = 0;
            const char* first = text.data() + pos;
            const auto [ptr, ec] = std::from_chars(first, first + len, v);
            if (ec != std::errc() || ptr != first + len) throw fail();
            return v;
        };
        double second = field(17, 2);
        const std::string_view frac = text.substr(19, text.size() - 20);
        if (!frac.empty()) {
            if (frac.front() != '.' || frac.size() < 2) throw fail();
            double scale = 0.1;
            for (char c : frac.substr(1)) {
                if (c < '0' || c > '9') throw fail();
                second += (c - '0') * scale;
                scale *= 0.1;
            }
        }
        return from_calendar(field(0, 4), field(5, 2), field(8, 2), field(11, 2), field(14, 2), second);
    }

    constexpr double julian_day() const { return jd_; }
    CalendarTime calendar() const { return calendar_from_jd(jd_); }

    constexpr Epoch plus_seconds(double seconds) const {
        return Epoch(jd_ + seconds / constants::seconds_per_day);
    }
    constexpr double seconds_since(const Epoch& start) const {
        return (jd_ - start.jd_) * constants::seconds_per_day;
    }
    constexpr double centuries_since_j2000() const {
        return (jd_ - constants::jd_j2000) / constants::days_per_julian_century;
    }

    /// ISO-8601 string; fractional seconds appear only when non-zero.
    std::string iso() const {
        const CalendarTime c = calendar();
        const auto ms = static_cast<int>(std::lround(c.second * 1000.0));
        if (ms % 1000 == 0)
            return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", c.year, c.month, c.day, c.hour,
                               c.minute, ms / 1000);
        return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}.{:03d}Z", c.year, c.month, c.day, c.hour,
                           c.minute, ms / 1000, ms % 1000);
    }

    constexpr auto operator<=>(const Epoch&) const = default;

private:
    double jd_ = constants::jd_j2000;
};

struct EciState {
    Vec3 position;  // km
    Vec3 velocity;  // km/s
    Epoch epoch;
};

struct GeodeticPoint {
    double latitude_deg = 0.0;   // [-90, 90]
    double longitude_deg = 0.0;  // (-180, 180]
    double altitude_km = 0.0;
};

inline double normalize_longitude(double lon_deg) {
    double r = std::fmod(lon_deg, 360.0);
    if (r <= -180.0) r += 360.0;
    if (r > 180.0) r -= 360.0;
    return r;
}

/// Greenwich mean sidereal time in degrees, [0, 360).
inline double gmst_deg(const Epoch& epoch) {
    const double d = epoch.julian_day() - constants::jd_j2000;
    const double t = d / constants::days_per_julian_century;
    return detail::wrap_360(280.46061837 + 360.98564736629 * d + 0.000387933 * t * t - t * t * t / 38710000.0);
}

struct SunPosition {
    Vec3 direction;  // unit vector, ECI
    double distance_km = 0.0;

    Vec3 position() const { return direction * distance_km; }
};

/// Low-precision solar ephemeris from mean longitude and mean anomaly,
/// good to about 0.01 deg in direction over 1950-2050.
inline SunPosition sun_position_eci(const Epoch& epoch) {
    using constants::deg2rad;
    const double n = epoch.julian_day() - constants::jd_j2000;
    const double mean_longitude = detail::wrap_360(280.460 + 0.9856474 * n);
    const double g = detail::wrap_360(357.528 + 0.9856003 * n) * deg2rad;
    const double ecliptic_longitude = (mean_longitude + 1.915 * std::sin(g) + 0.020 * std::sin(2.0 * g)) * deg2rad;
    const double obliquity = (23.439 - 0.0000004 * n) * deg2rad;
    const double r_au = 1.00014 - 0.01671 * std::cos(g) - 0.00014 * std::cos(2.0 * g);
    return {{std::cos(ecliptic_longitude), std::cos(obliquity) * std::sin(ecliptic_longitude),
             std::sin(obliquity) * std::sin(ecliptic_longitude)},
            r_au * constants::au_km};
}

inline double solar_declination_deg(const Epoch& epoch) {
    const Vec3 d = sun_position_eci(epoch).direction;
    return std::asin(d.z) * constants::rad2deg;
}

inline double solar_right_ascension_deg(const Epoch& epoch) {
    const Vec3 d = sun_position_eci(epoch).direction;
    return detail::wrap_360(std::atan2(d.y, d.x) * constants::rad2deg);
}

inline Vec3 eci_to_ecef(const Vec3& eci, const Epoch& epoch) {
    return rotate_z(eci, -gmst_deg(epoch) * constants::deg2rad);
}

inline Vec3 eci_to_ecef(const EciState& state, const Epoch& epoch) { return eci_to_ecef(state.position, epoch); }

inline Vec3 ecef_to_eci(const Vec3& ecef, const Epoch& epoch) {
    return rotate_z(ecef, gmst_deg(epoch) * constants::deg2rad);
}

inline GeodeticPoint ecef_to_geodetic(const Vec3& pos) {
    const double r = pos.norm();
    if (!(r > 0.0)) throw Error("cannot convert a zero-magnitude position to geodetic coordinates");
    GeodeticPoint p;
    p.latitude_deg = std::asin(std::clamp(pos.z / r, -1.0, 1.0)) * constants::rad2deg;
    p.longitude_deg = normalize_longitude(std::atan2(pos.y, pos.x) * constants::rad2deg);
    p.altitude_km = r - constants::earth_radius_km;
    return p;
}

inline Vec3 geodetic_to_ecef(const GeodeticPoint& p) {
    const double r = constants::earth_radius_km + p.altitude_km;
    const double lat = p.latitude_deg * constants::deg2rad;
    const double lon = p.longitude_deg * constants::deg2rad;
    return {r * std::cos(lat) * std::cos(lon), r * std::cos(lat) * std::sin(lon), r * std::sin(lat)};
}

}  // namespace xcal
