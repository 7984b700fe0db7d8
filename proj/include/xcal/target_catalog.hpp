#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "xcal/astro_time.hpp"
#include "xcal/constants.hpp"
#include "xcal/csv.hpp"
#include "xcal/error.hpp"

namespace xcal {

struct CalSite {
    std::string site_id;
    std::string name;
    GeodeticPoint center;
    double extent_km = 250.0;  // side of the square region
};

struct GridPoint {
    std::string site_id;
    int index = 0;
    GeodeticPoint location;
};

inline constexpr int grid_columns = 20;  // east-west
inline constexpr int grid_rows = 10;     // north-south
inline constexpr int grid_points_per_site = grid_columns * grid_rows;
inline constexpr double max_site_latitude_deg = 80.0;

namespace detail {

inline double parse_double_field(std::string_view text, std::string_view what, std::string_view source, int line) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
        throw Error(fmt::format("{}:{}: invalid {} '{}'", source, line, what, text));
    return v;
}

}  // namespace detail

/// Parses a site catalog with header `site_id,name,lat_deg,lon_deg[,extent_km]`.
/// Lines starting with `#` and blank lines are skipped.
inline std::vector<CalSite> parse_sites(std::istream& in, std::string_view source = "<sites>") {
    std::vector<CalSite> sites;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> f;
        try {
            f = csv::split_record(line);
        } catch (const Error& e) {
            throw Error(fmt::format("{}:{}: {}", source, line_no, e.what()));
        }
        if (!have_header) {
            if (f.size() < 4 || f[0] != "site_id" || f[1] != "name" || f[2] != "lat_deg" || f[3] != "lon_deg" ||
                (f.size() == 5 && f[4] != "extent_km") || f.size() > 5)
                throw Error(fmt::format("{}:{}: expected header 'site_id,name,lat_deg,lon_deg[,extent_km]'", source,
                                        line_no));
            have_header = true;
            continue;
        }
        if (f.size() != 4 && f.size() != 5)
            throw Error(fmt::format("{}:{}: expected 4 or 5 fields, found {}", source, line_no, f.size()));
        CalSite s;
        s.site_id = f[0];
        s.name = f[1];
        if (s.site_id.empty() || s.site_id.find_first_of(" \t") != std::string::npos)
            throw Error(fmt::format("{}:{}: site_id must be a non-empty token", source, line_no));
        const double lat = detail::parse_double_field(f[2], "latitude", source, line_no);
        const double lon = detail::parse_double_field(f[3], "longitude", source, line_no);
        if (lat < -90.0 || lat > 90.0)
            throw Error(fmt::format("{}:{}: latitude {} outside [-90, 90]", source, line_no, lat));
        if (lon < -180.0 || lon > 360.0)
            throw Error(fmt::format("{}:{}: longitude {} outside [-180, 360]", source, line_no, lon));
        if (std::abs(lat) > max_site_latitude_deg)
            throw Error(fmt::format("{}:{}: |latitude| {} exceeds {} deg", source, line_no, lat, max_site_latitude_deg));
        s.center = {lat, normalize_longitude(lon), 0.0};
        if (f.size() == 5 && !f[4].empty()) {
            s.extent_km = detail::parse_double_field(f[4], "extent", source, line_no);
            if (!(s.extent_km > 0.0 && s.extent_km <= 2000.0))
                throw Error(fmt::format("{}:{}: extent {} km outside (0, 2000]", source, line_no, s.extent_km));
        }
        if (!seen.insert(s.site_id).second)
            throw Error(fmt::format("{}:{}: duplicate site_id '{}'", source, line_no, s.site_id));
        sites.push_back(std::move(s));
    }
    if (!have_header) throw Error(fmt::format("{}: missing header line", source));
    return sites;
}

inline std::vector<CalSite> load_sites(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open site catalog '{}'", path.string()));
    return parse_sites(in, path.string());
}

/// 20 x 10 cell-centred lattice over the site's square, laid out in the
/// local east/north plane and mapped back equirectangularly. Index is
/// row-major from the south-west corner: index = row * 20 + column.
inline std::vector<GridPoint> grid_region(const CalSite& site) {
    if (std::abs(site.center.latitude_deg) > max_site_latitude_deg)
        throw Error(fmt::format("site '{}' latitude {} too close to the pole for gridding", site.site_id,
                                site.center.latitude_deg));
    const double re = constants::earth_radius_km;
    const double cos_lat = std::cos(site.center.latitude_deg * constants::deg2rad);
    std::vector<GridPoint> grid;
    grid.reserve(grid_points_per_site);
    for (int row = 0; row < grid_rows; ++row) {
        const double north_km = site.extent_km * ((row + 0.5) / grid_rows - 0.5);
        for (int col = 0; col < grid_columns; ++col) {
            const double east_km = site.extent_km * ((col + 0.5) / grid_columns - 0.5);
            GeodeticPoint p;
            p.latitude_deg = site.center.latitude_deg + north_km / re * constants::rad2deg;
            p.longitude_deg = normalize_longitude(site.center.longitude_deg + east_km / (re * cos_lat) * constants::rad2deg);
            grid.push_back({site.site_id, row * grid_columns + col, p});
        }
    }
    return grid;
}

}  // namespace xcal
