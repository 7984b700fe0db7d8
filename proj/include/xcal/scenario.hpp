#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "xcal/access_engine.hpp"
#include "xcal/astro_time.hpp"
#include "xcal/constants.hpp"
#include "xcal/csv.hpp"
#include "xcal/error.hpp"
#include "xcal/propagator.hpp"
#include "xcal/sensing_geometry.hpp"
#include "xcal/target_catalog.hpp"
#include "xcal/xcal_planner.hpp"

namespace xcal {

inline constexpr std::string_view library_version = "0.3.1";

using json = nlohmann::ordered_json;

// --- constellation architectures -----------------------------------------

struct Architecture {
    int arch_id = 1;
    int n_sats = 1;
    int n_planes = 1;
    double altitude_km = 450.0;
    double inclination_deg = 45.0;
    std::vector<double> raan_list;   // one per plane
    std::vector<double> phase_list;  // argument of latitude within a plane
};

struct ArchitectureTopology {
    int n_sats;
    int n_planes;
};

inline constexpr std::array<ArchitectureTopology, 6> architecture_table{{{1, 1}, {2, 1}, {3, 1}, {4, 2}, {6, 2}, {6, 3}}};

inline double angular_distance_deg(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 360.0);
    return std::min(d, 360.0 - d);
}

/// Evenly spaced plane RAANs offset to maximise the smallest separation from
/// any reference RAAN (1 deg search, smallest offset wins ties).
inline std::vector<double> max_separation_raans(int n_planes, std::span<const double> reference_raans) {
    if (n_planes < 1) throw Error("plane count must be positive");
    const double spacing = 360.0 / n_planes;
    double best_offset = 0.0;
    double best_score = -1.0;
    for (int k = 0; k < 360; ++k) {
        const double offset = k;
        if (offset >= spacing - 1e-9) break;
        double score = constants::unbounded;
        for (int p = 0; p < n_planes; ++p)
            for (double r : reference_raans) score = std::min(score, angular_distance_deg(offset + p * spacing, r));
        if (score > best_score + 1e-9) {
            best_score = score;
            best_offset = offset;
        }
    }
    std::vector<double> raans;
    for (int p = 0; p < n_planes; ++p) raans.push_back(std::fmod(best_offset + p * spacing, 360.0));
    std::sort(raans.begin(), raans.end());
    return raans;
}

inline Architecture make_architecture(int arch_id, std::span<const double> reference_raans, double altitude_km = 450.0,
                                      double inclination_deg = 45.0) {
    if (arch_id < 1 || arch_id > static_cast<int>(architecture_table.size()))
        throw Error(fmt::format("unknown architecture {} (expected 1-{})", arch_id, architecture_table.size()));
    const auto topo = architecture_table[static_cast<std::size_t>(arch_id - 1)];
    Architecture a;
    a.arch_id = arch_id;
    a.n_sats = topo.n_sats;
    a.n_planes = topo.n_planes;
    a.altitude_km = altitude_km;
    a.inclination_deg = inclination_deg;
    a.raan_list = max_separation_raans(topo.n_planes, reference_raans);
    const int per_plane = topo.n_sats / topo.n_planes;
    for (int k = 0; k < per_plane; ++k) a.phase_list.push_back(360.0 * k / per_plane);
    return a;
}

inline std::vector<OrbitalElements> build_architecture(int arch_id, const Epoch& epoch,
                                                       std::span<const double> reference_raans,
                                                       double altitude_km = 450.0, double inclination_deg = 45.0) {
    const Architecture a = make_architecture(arch_id, reference_raans, altitude_km, inclination_deg);
    std::vector<OrbitalElements> out;
    for (double raan : a.raan_list)
        for (double phase : a.phase_list) out.push_back(circular_orbit(a.altitude_km, a.inclination_deg, raan, phase, epoch));
    return out;
}

inline SensorSpec transfer_radiometer_sensor() {
    SensorSpec s;
    s.fov_cross_track_deg = 3.0;
    s.fov_along_track_deg = 2.0;
    s.pointing_mode = PointingMode::conical_3dof;
    s.for_half_angle_deg = 27.5;
    return s;
}

inline std::vector<Satellite> architecture_satellites(int arch_id, const Epoch& epoch,
                                                      std::span<const double> reference_raans,
                                                      const SensorSpec& sensor = transfer_radiometer_sensor(),
                                                      double altitude_km = 450.0, double inclination_deg = 45.0) {
    const Architecture a = make_architecture(arch_id, reference_raans, altitude_km, inclination_deg);
    std::vector<Satellite> sats;
    for (std::size_t p = 0; p < a.raan_list.size(); ++p)
        for (std::size_t k = 0; k < a.phase_list.size(); ++k)
            sats.push_back({fmt::format("TR{}-P{}S{}", arch_id, p + 1, k + 1),
                            circular_orbit(a.altitude_km, a.inclination_deg, a.raan_list[p], a.phase_list[k], epoch),
                            sensor});
    return sats;
}

// --- presets -----------------------------------------------------------------

/// RAAN placing the descending node at the given mean local solar time.
inline double raan_for_ltdn(const Epoch& epoch, double ltdn_hours) {
    const double ltan = ltdn_hours + 12.0;
    return detail::wrap_360(solar_right_ascension_deg(epoch) + (ltan - 12.0) * 15.0);
}

namespace presets {

inline json sensor_block(double fov_ct, double fov_at, std::string_view mode, double for_half, double tilt) {
    return json{{"fov_cross_track_deg", fov_ct},
                {"fov_along_track_deg", fov_at},
                {"pointing_mode", std::string(mode)},
                {"for_half_angle_deg", for_half},
                {"boresight_tilt_deg", tilt}};
}

inline json flagship_block(std::string_view id, double alt, double fov_ct, double tilt, double ltdn, double arg_lat) {
    return json{{"id", std::string(id)},
                {"altitude_km", alt},
                {"sso", true},
                {"ltdn_hours", ltdn},
                {"true_anomaly_deg", arg_lat},
                {"sensor", sensor_block(fov_ct, 1.0, "NADIR_FIXED", 0.0, tilt)}};
}

inline constexpr double landsat_ltdn_hours = 10.0 + 11.0 / 60.0;
inline constexpr double sentinel2_ltdn_hours = 10.5;
inline constexpr double sentinel3_ltdn_hours = 10.0;
inline constexpr double dove_trailing_deg = 5.0;

/// Six nadir-fixed flagship imagers. Along-track FOV of pushbrooms is the
/// 1 deg sampling slab swept per step.
inline std::vector<json> flagships() {
    return {flagship_block("LANDSAT-8", 710.0, 15.0, 0.0, landsat_ltdn_hours, 0.0),
            flagship_block("LANDSAT-7", 710.0, 15.0, 0.0, landsat_ltdn_hours, 180.0),
            flagship_block("SENTINEL-2A", 788.0, 20.6, 0.0, sentinel2_ltdn_hours, 60.0),
            flagship_block("SENTINEL-2B", 788.0, 20.6, 0.0, sentinel2_ltdn_hours, 240.0),
            flagship_block("SENTINEL-3A", 802.0, 68.6, 12.6, sentinel3_ltdn_hours, 120.0),
            flagship_block("SENTINEL-3B", 802.0, 68.6, 12.6, sentinel3_ltdn_hours, 260.0)};
}

inline json dove_sensor(std::string_view mode, double for_half) { return sensor_block(3.0, 2.0, mode, for_half, 0.0); }

inline json dove_iss(std::string_view mode = "CROSS_TRACK_AGILE", double for_half = 27.5) {
    return json{{"id", "DOVE-ISS"},   {"altitude_km", 410.0},        {"inclination_deg", 51.6},
                {"raan_deg", 0.0},    {"true_anomaly_deg", 0.0},     {"sensor", dove_sensor(mode, for_half)}};
}

inline json dove_trailing(std::string_view id, double leader_arg_lat, std::string_view mode, double for_half) {
    return json{{"id", std::string(id)},
                {"altitude_km", 710.0},
                {"sso", true},
                {"ltdn_hours", landsat_ltdn_hours},
                {"true_anomaly_deg", detail::wrap_360(leader_arg_lat - dove_trailing_deg)},
                {"sensor", dove_sensor(mode, for_half)}};
}

inline std::vector<std::string> test_preset_names() { return {"dove_iss", "dove_sso_l8", "dove_sso_l7"}; }

inline json test_preset(std::string_view name, std::string_view mode = "CROSS_TRACK_AGILE", double for_half = 27.5) {
    if (name == "dove_iss") return dove_iss(mode, for_half);
    if (name == "dove_sso_l8") return dove_trailing("DOVE-SSO-L8", 0.0, mode, for_half);
    if (name == "dove_sso_l7") return dove_trailing("DOVE-SSO-L7", 180.0, mode, for_half);
    throw Error(fmt::format("unknown test preset '{}'", name));
}

}  // namespace presets

// --- configuration -------------------------------------------------------

namespace config {

inline std::string join(std::string_view path, std::string_view key) {
    return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

[[noreturn]] inline void fail(std::string_view path, std::string_view what) {
    throw Error(fmt::format("config: {}: {}", path.empty() ? "<root>" : path, what));
}

inline void check_object(const json& j, std::string_view path) {
    if (!j.is_object()) fail(path, "expected an object");
}

inline void check_keys(const json& j, std::string_view path, std::initializer_list<std::string_view> allowed) {
    check_object(j, path);
    for (const auto& [k, v] : j.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) fail(join(path, k), "unknown key");
}

inline const json* find(const json& j, std::string_view key) {
    const auto it = j.find(std::string(key));
    return it == j.end() ? nullptr : &*it;
}

inline double number(const json& j, std::string_view key, std::string_view path, std::optional<double> fallback = {}) {
    const json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        fail(join(path, key), "required number missing");
    }
    if (!v->is_number()) fail(join(path, key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) fail(join(path, key), "must be finite");
    return d;
}

// null or absent means unbounded
inline double bound(const json& j, std::string_view key, std::string_view path) {
    const json* v = find(j, key);
    if (!v || v->is_null()) return constants::unbounded;
    if (!v->is_number()) fail(join(path, key), "expected a number or null");
    const double d = v->get<double>();
    if (!(d >= 0.0)) fail(join(path, key), "must be non-negative");
    return d;
}

inline std::string string(const json& j, std::string_view key, std::string_view path,
                          std::optional<std::string> fallback = {}) {
    const json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        fail(join(path, key), "required string missing");
    }
    if (!v->is_string()) fail(join(path, key), "expected a string");
    return v->get<std::string>();
}

inline bool boolean(const json& j, std::string_view key, std::string_view path, bool fallback) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(join(path, key), "expected true or false");
    return v->get<bool>();
}

inline std::vector<double> number_list(const json& j, std::string_view key, std::string_view path,
                                       std::vector<double> fallback) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_array()) fail(join(path, key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
        const json& e = (*v)[i];
        if (!e.is_number() || !std::isfinite(e.get<double>()))
            fail(fmt::format("{}[{}]", join(path, key), i), "expected a number");
        out.push_back(e.get<double>());
    }
    return out;
}

inline Epoch epoch(const json& j, std::string_view key, std::string_view path) {
    const std::string text = string(j, key, path);
    try {
        return Epoch::parse_iso(text);
    } catch (const Error& e) {
        fail(join(path, key), e.what());
    }
}

inline SensorSpec sensor(const json& j, std::string_view path) {
    check_keys(j, path,
               {"fov_cross_track_deg", "fov_along_track_deg", "pointing_mode", "for_half_angle_deg", "boresight_tilt_deg"});
    SensorSpec s;
    s.fov_cross_track_deg = number(j, "fov_cross_track_deg", path, s.fov_cross_track_deg);
    s.fov_along_track_deg = number(j, "fov_along_track_deg", path, s.fov_along_track_deg);
    s.for_half_angle_deg = number(j, "for_half_angle_deg", path, s.for_half_angle_deg);
    s.boresight_tilt_deg = number(j, "boresight_tilt_deg", path, s.boresight_tilt_deg);
    if (find(j, "pointing_mode")) {
        try {
            s.pointing_mode = parse_pointing_mode(string(j, "pointing_mode", path));
        } catch (const Error& e) {
            fail(join(path, "pointing_mode"), e.what());
        }
    }
    try {
        s.validate();
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return s;
}

inline Satellite satellite(const json& j, std::string_view path, const Epoch& scenario_epoch) {
    check_keys(j, path,
               {"id", "altitude_km", "semimajor_axis_km", "eccentricity", "inclination_deg", "sso", "raan_deg",
                "ltdn_hours", "arg_perigee_deg", "true_anomaly_deg", "epoch", "sensor"});
    Satellite s;
    s.id = string(j, "id", path);
    if (s.id.empty()) fail(join(path, "id"), "must not be empty");
    OrbitalElements& el = s.elements;
    el.epoch = find(j, "epoch") ? epoch(j, "epoch", path) : scenario_epoch;

    const bool has_alt = find(j, "altitude_km") != nullptr;
    const bool has_sma = find(j, "semimajor_axis_km") != nullptr;
    if (has_alt == has_sma) fail(path, "give exactly one of altitude_km or semimajor_axis_km");
    el.eccentricity = number(j, "eccentricity", path, 0.0);
    el.semimajor_axis_km =
        has_sma ? number(j, "semimajor_axis_km", path) : constants::earth_radius_km + number(j, "altitude_km", path);

    const bool sso = boolean(j, "sso", path, false);
    const bool has_inc = find(j, "inclination_deg") != nullptr;
    if (sso == has_inc) fail(path, "give exactly one of inclination_deg or \"sso\": true");
    if (sso) {
        if (el.eccentricity != 0.0) fail(join(path, "sso"), "sun-synchronous presets require a circular orbit");
        try {
            el.inclination_deg = sso_inclination(el.semimajor_axis_km - constants::earth_radius_km);
        } catch (const Error& e) {
            fail(join(path, "sso"), e.what());
        }
    } else {
        el.inclination_deg = number(j, "inclination_deg", path);
    }

    const bool has_raan = find(j, "raan_deg") != nullptr;
    const bool has_ltdn = find(j, "ltdn_hours") != nullptr;
    if (has_raan && has_ltdn) fail(path, "give at most one of raan_deg or ltdn_hours");
    el.raan_deg = has_ltdn ? raan_for_ltdn(el.epoch, number(j, "ltdn_hours", path))
                           : detail::wrap_360(number(j, "raan_deg", path, 0.0));
    el.arg_perigee_deg = detail::wrap_360(number(j, "arg_perigee_deg", path, 0.0));
    el.true_anomaly_deg = detail::wrap_360(number(j, "true_anomaly_deg", path, 0.0));
    if (el.eccentricity == 0.0 && el.arg_perigee_deg != 0.0)
        fail(join(path, "arg_perigee_deg"), "must be 0 for circular orbits (anomaly counts from the node)");
    try {
        check_scenario_elements(el);
    } catch (const Error& e) {
        fail(path, e.what());
    }
    if (const json* sj = find(j, "sensor")) s.sensor = sensor(*sj, join(path, "sensor"));
    return s;
}

}  // namespace config

enum class PlanMode { vicarious, toa, both };

inline PlanMode parse_plan_mode(std::string_view s) {
    if (s == "VICARIOUS") return PlanMode::vicarious;
    if (s == "TOA") return PlanMode::toa;
    if (s == "BOTH") return PlanMode::both;
    throw Error(fmt::format("unknown mode '{}' (expected VICARIOUS, TOA or BOTH)", s));
}

inline std::string_view to_string(PlanMode m) {
    switch (m) {
        case PlanMode::vicarious: return "VICARIOUS";
        case PlanMode::toa: return "TOA";
        case PlanMode::both: return "BOTH";
    }
    return "?";
}

struct CriteriaVariant {
    std::string label;
    FilterCriteria criteria;
};

struct ArchitectureConfig {
    std::optional<int> arch_id;
    std::vector<double> reference_raans_deg;
    double altitude_km = 450.0;
    double inclination_deg = 45.0;
    SensorSpec sensor = transfer_radiometer_sensor();
};

struct Scenario {
    Epoch epoch;
    ScenarioWindow window;
    PlanMode mode = PlanMode::both;
    std::vector<CalSite> sites;
    std::string sites_source;
    std::vector<Satellite> reference;
    std::vector<Satellite> test;
    std::optional<ArchitectureConfig> architecture;
    std::vector<CriteriaVariant> criteria;
    std::vector<double> dt_grid_h;
    std::vector<double> horizons_h;
    double dedupe_window_s = default_dedupe_window_s;
    double pass_gap_s = default_pass_gap_s;
    bool write_access_events = false;
    json source;
};

inline std::vector<double> default_dt_grid() { return {0.25, 0.5, 1, 2, 3, 4, 6, 12, 18, 24, 30, 36, 42, 48}; }

namespace config {

inline std::vector<json> expand_presets(const json& block, std::string_view path, bool reference, std::string_view mode,
                                        double for_half) {
    std::vector<json> out;
    const json* p = find(block, "presets");
    if (!p) return out;
    if (!p->is_array()) fail(join(path, "presets"), "expected an array of preset names");
    for (std::size_t i = 0; i < p->size(); ++i) {
        const std::string ip = fmt::format("{}[{}]", join(path, "presets"), i);
        if (!(*p)[i].is_string()) fail(ip, "expected a preset name");
        const std::string name = (*p)[i].get<std::string>();
        if (reference) {
            if (name != "flagships") fail(ip, fmt::format("unknown reference preset '{}'", name));
            for (auto& b : presets::flagships()) out.push_back(std::move(b));
        } else {
            try {
                out.push_back(presets::test_preset(name, mode, for_half));
            } catch (const Error& e) {
                fail(ip, e.what());
            }
        }
    }
    return out;
}

inline std::vector<Satellite> satellite_group(const json& block, std::string_view path, bool reference,
                                              const Epoch& epoch) {
    std::string mode = "CROSS_TRACK_AGILE";
    double for_half = 27.5;
    if (!reference) {
        mode = string(block, "pointing_mode", path, mode);
        for_half = number(block, "for_half_angle_deg", path, for_half);
        try {
            (void)parse_pointing_mode(mode);
        } catch (const Error& e) {
            fail(join(path, "pointing_mode"), e.what());
        }
    }
    std::vector<json> blocks = expand_presets(block, path, reference, mode, for_half);
    if (const json* o = find(block, "overrides")) {
        check_object(*o, join(path, "overrides"));
        for (const auto& [id, patch] : o->items()) {
            const std::string op = join(join(path, "overrides"), id);
            check_object(patch, op);
            auto it = std::find_if(blocks.begin(), blocks.end(), [&](const json& b) { return b.at("id") == id; });
            if (it == blocks.end()) fail(op, "no preset satellite with this id");
            if (patch.contains("raan_deg")) it->erase("ltdn_hours");
            if (patch.contains("ltdn_hours")) it->erase("raan_deg");
            if (patch.contains("inclination_deg")) it->erase("sso");
            if (patch.contains("semimajor_axis_km")) it->erase("altitude_km");
            it->merge_patch(patch);
        }
    }
    std::vector<Satellite> sats;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        sats.push_back(satellite(blocks[i], fmt::format("{}.presets<{}>", path, blocks[i].value("id", "?")), epoch));
    if (const json* list = find(block, "satellites")) {
        if (!list->is_array()) fail(join(path, "satellites"), "expected an array");
        for (std::size_t i = 0; i < list->size(); ++i)
            sats.push_back(satellite((*list)[i], fmt::format("{}[{}]", join(path, "satellites"), i), epoch));
    }
    std::set<std::string> seen;
    for (const auto& s : sats)
        if (!seen.insert(s.id).second) fail(path, fmt::format("duplicate satellite id '{}'", s.id));
    return sats;
}

inline std::vector<double> flagship_raans(const Epoch& epoch) {
    std::vector<double> raans;
    for (const auto& b : presets::flagships()) raans.push_back(satellite(b, "flagships", epoch).elements.raan_deg);
    return raans;
}

inline ArchitectureConfig architecture(const json& j, std::string_view path, const Epoch& epoch) {
    check_keys(j, path, {"arch_id", "reference_raans_deg", "altitude_km", "inclination_deg", "sensor"});
    ArchitectureConfig a;
    if (const json* id = find(j, "arch_id")) {
        if (!id->is_number_integer() || id->get<int>() < 1 || id->get<int>() > 6)
            fail(join(path, "arch_id"), "expected an integer in 1-6");
        a.arch_id = id->get<int>();
    }
    a.reference_raans_deg = number_list(j, "reference_raans_deg", path, flagship_raans(epoch));
    a.altitude_km = number(j, "altitude_km", path, a.altitude_km);
    a.inclination_deg = number(j, "inclination_deg", path, a.inclination_deg);
    if (const json* s = find(j, "sensor")) a.sensor = sensor(*s, join(path, "sensor"));
    return a;
}

inline std::vector<CriteriaVariant> criteria_list(const json& root, const ScenarioWindow& w) {
    const json* c = find(root, "criteria");
    if (!c) return {{"default", FilterCriteria{}}};
    if (!c->is_array() || c->empty()) fail("criteria", "expected a non-empty array");
    std::vector<CriteriaVariant> out;
    std::set<std::string> labels;
    for (std::size_t i = 0; i < c->size(); ++i) {
        const std::string p = fmt::format("criteria[{}]", i);
        const json& j = (*c)[i];
        check_keys(j, p,
                   {"label", "dt_site_max_hours", "dsza_max_deg", "dvza_max_deg", "sza_abs_max_deg", "vza_abs_max_deg",
                    "dt_stab_horizon_hours"});
        CriteriaVariant v;
        v.label = string(j, "label", p, fmt::format("c{}", i));
        if (!labels.insert(v.label).second) fail(join(p, "label"), fmt::format("duplicate label '{}'", v.label));
        v.criteria.dt_site_max_h = bound(j, "dt_site_max_hours", p);
        v.criteria.dsza_max_deg = bound(j, "dsza_max_deg", p);
        v.criteria.dvza_max_deg = bound(j, "dvza_max_deg", p);
        v.criteria.sza_abs_max_deg = bound(j, "sza_abs_max_deg", p);
        v.criteria.vza_abs_max_deg = bound(j, "vza_abs_max_deg", p);
        v.criteria.dt_stab_horizon_h = bound(j, "dt_stab_horizon_hours", p);
        try {
            v.criteria.validate();
        } catch (const Error& e) {
            fail(p, e.what());
        }
        (void)w;
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace config

/// Builds a scenario from a parsed configuration. Relative catalog paths
/// resolve against `base_dir`.
inline Scenario parse_scenario(const json& root, const std::filesystem::path& base_dir = {}) {
    using namespace config;
    check_keys(root, "",
               {"epoch", "window", "mode", "sites", "reference", "test", "criteria", "dt_grid_hours", "horizons_hours",
                "toa", "pass_gap_s", "outputs"});
    Scenario sc;
    sc.source = root;
    sc.epoch = config::epoch(root, "epoch", "");
    sc.window.start = sc.epoch;
    if (const json* w = find(root, "window")) {
        check_keys(*w, "window", {"duration_hours", "coarse_step_s", "fine_step_s"});
        sc.window.duration_hours = number(*w, "duration_hours", "window", sc.window.duration_hours);
        sc.window.coarse_step_s = number(*w, "coarse_step_s", "window", sc.window.coarse_step_s);
        sc.window.fine_step_s = number(*w, "fine_step_s", "window", sc.window.fine_step_s);
    }
    try {
        sc.window.validate();
    } catch (const Error& e) {
        fail("window", e.what());
    }
    try {
        sc.mode = parse_plan_mode(string(root, "mode", "", "BOTH"));
    } catch (const Error& e) {
        fail("mode", e.what());
    }

    if (const json* s = find(root, "sites")) {
        if (s->is_string()) {
            std::filesystem::path p = s->get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            sc.sites_source = s->get<std::string>();
            try {
                sc.sites = load_sites(p);
            } catch (const Error& e) {
                fail("sites", e.what());
            }
        } else if (s->is_array()) {
            std::ostringstream csv;
            csv << "site_id,name,lat_deg,lon_deg,extent_km\n";
            for (std::size_t i = 0; i < s->size(); ++i) {
                const std::string p = fmt::format("sites[{}]", i);
                const json& e = (*s)[i];
                check_keys(e, p, {"site_id", "name", "lat_deg", "lon_deg", "extent_km"});
                csv << csv::quote(string(e, "site_id", p)) << ',' << csv::quote(string(e, "name", p, "")) << ','
                    << fmt::format("{},{},{}", number(e, "lat_deg", p), number(e, "lon_deg", p),
                                   number(e, "extent_km", p, 250.0))
                    << '\n';
            }
            std::istringstream in(csv.str());
            try {
                sc.sites = parse_sites(in, "sites");
            } catch (const Error& e) {
                fail("sites", e.what());
            }
            sc.sites_source = "inline";
        } else {
            fail("sites", "expected a catalog path or an array of sites");
        }
    }

    const json* ref = find(root, "reference");
    if (!ref) fail("reference", "required block missing");
    check_keys(*ref, "reference", {"presets", "satellites", "overrides", "architecture"});
    sc.reference = satellite_group(*ref, "reference", true, sc.epoch);
    if (const json* a = find(*ref, "architecture")) {
        sc.architecture = architecture(*a, "reference.architecture", sc.epoch);
        if (sc.architecture->arch_id) {
            auto tr = architecture_satellites(*sc.architecture->arch_id, sc.epoch, sc.architecture->reference_raans_deg,
                                              sc.architecture->sensor, sc.architecture->altitude_km,
                                              sc.architecture->inclination_deg);
            sc.reference.insert(sc.reference.end(), tr.begin(), tr.end());
        }
    }

    const json* test = find(root, "test");
    if (!test) fail("test", "required block missing");
    check_keys(*test, "test", {"presets", "satellites", "overrides", "pointing_mode", "for_half_angle_deg"});
    sc.test = satellite_group(*test, "test", false, sc.epoch);
    if (sc.test.empty()) fail("test", "at least one test satellite is required");
    if (sc.reference.empty() && !(sc.architecture && !sc.architecture->arch_id))
        fail("reference", "at least one reference satellite is required");

    if (sc.mode != PlanMode::toa && sc.sites.empty()) fail("sites", "vicarious planning needs at least one site");

    sc.criteria = criteria_list(root, sc.window);
    sc.dt_grid_h = number_list(root, "dt_grid_hours", "", default_dt_grid());
    sc.horizons_h = number_list(root, "horizons_hours", "", {sc.window.duration_hours});
    for (double v : sc.dt_grid_h)
        if (!(v >= 0.0)) fail("dt_grid_hours", "thresholds must be non-negative");
    for (double v : sc.horizons_h)
        if (!(v >= 0.0)) fail("horizons_hours", "horizons must be non-negative");
    if (const json* t = find(root, "toa")) {
        check_keys(*t, "toa", {"dedupe_window_s"});
        sc.dedupe_window_s = number(*t, "dedupe_window_s", "toa", sc.dedupe_window_s);
        if (!(sc.dedupe_window_s > 0.0)) fail("toa.dedupe_window_s", "must be positive");
    }
    sc.pass_gap_s = number(root, "pass_gap_s", "", sc.pass_gap_s);
    if (!(sc.pass_gap_s > 0.0)) fail("pass_gap_s", "must be positive");
    if (const json* o = find(root, "outputs")) {
        check_keys(*o, "outputs", {"access_events"});
        sc.write_access_events = boolean(*o, "access_events", "outputs", false);
    }
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot open config '{}'", path.string()));
    json root;
    try {
        root = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw Error(fmt::format("config '{}': {}", path.string(), e.what()));
    }
    return parse_scenario(root, path.parent_path());
}

// --- execution -------------------------------------------------------------

struct RunOptions {
    unsigned threads = 1;
    std::uint64_t seed = 0;
};

/// Everything computed for one side of the pairing; reusable across
/// reference fleets.
struct SideData {
    std::vector<AccessEvent> events;
    PassIndex passes;
    std::vector<GroundTrack> tracks;
};

inline SideData compute_side(std::span<const Satellite> sats, const Scenario& sc, const RunOptions& opt,
                             bool need_events, bool need_tracks) {
    SideData d;
    if (need_events) {
        d.events = compute_accesses(sats, sc.sites, sc.window, {opt.threads, ForceModel::j2_secular});
        d.passes = PassIndex(d.events, sc.pass_gap_s);
    }
    if (need_tracks && sc.window.fine_sample_count() > 0) {
        d.tracks.resize(sats.size());
        parallel_for(sats.size(), opt.threads, [&](std::size_t i) {
            d.tracks[i] = sample_ground_track(sats[i], static_cast<std::uint32_t>(i), sc.window);
        });
    }
    return d;
}

struct VicariousResult {
    std::string label;
    std::vector<RegionOpportunity> regions;
};

struct ToaResult {
    std::string label;
    std::vector<XcalOpportunity> crossovers;
};

struct PlanResult {
    std::vector<VicariousResult> vicarious;
    std::vector<ToaResult> toa;
};

inline bool wants_vicarious(PlanMode m) { return m != PlanMode::toa; }
inline bool wants_toa(PlanMode m) { return m != PlanMode::vicarious; }

inline PlanResult plan(const Scenario& sc, std::span<const Satellite> reference, const SideData& ref,
                       const SideData& test, const SunTable* sun, PlanMode mode, const RunOptions& opt) {
    PlanResult r;
    for (const auto& v : sc.criteria) {
        if (wants_vicarious(mode))
            r.vicarious.push_back(
                {v.label, vicarious_regions(ref.events, test.events, v.criteria, ref.passes, test.passes, opt.threads)});
        if (wants_toa(mode)) {
            std::vector<std::vector<XcalOpportunity>> per_test(sc.test.size());
            parallel_for(sc.test.size(), opt.threads, [&](std::size_t k) {
                per_test[k] = toa_crossovers(ref.tracks, reference, test.tracks[k], sc.test[k], *sun, v.criteria,
                                             sc.dedupe_window_s);
            });
            ToaResult t{v.label, {}};
            for (auto& p : per_test) t.crossovers.insert(t.crossovers.end(), p.begin(), p.end());
            std::sort(t.crossovers.begin(), t.crossovers.end(), opportunity_less);
            r.toa.push_back(std::move(t));
        }
    }
    return r;
}

struct CountRow {
    std::string test_sat;
    std::string criteria_label;
    double dt_threshold_h;
    double horizon_h;
    std::size_t count;
};

inline std::vector<CountRow> count_rows(const Scenario& sc, const PlanResult& r) {
    std::vector<CountRow> rows;
    const auto emit = [&](auto opps, std::string_view kind, const std::string& label) {
        for (std::uint32_t k = 0; k < sc.test.size(); ++k)
            for (double h : sc.horizons_h) {
                const auto curve = count_curve(opps, std::span<const double>(sc.dt_grid_h), h, k);
                for (std::size_t i = 0; i < curve.size(); ++i)
                    rows.push_back({sc.test[k].id, fmt::format("{}:{}", kind, label), sc.dt_grid_h[i], h, curve[i]});
            }
    };
    for (const auto& v : r.vicarious) emit(std::span<const RegionOpportunity>(v.regions), "VICARIOUS", v.label);
    for (const auto& t : r.toa) emit(std::span<const XcalOpportunity>(t.crossovers), "TOA", t.label);
    return rows;
}

// --- output files ----------------------------------------------------------

namespace output {

inline std::string num(double v, int decimals) { return csv::fixed(v, decimals); }

/// Tracks files written into one directory; removes them unless committed.
class FileSet {
public:
    explicit FileSet(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw Error(fmt::format("cannot create output directory '{}': {}", dir_.string(), ec.message()));
    }
    FileSet(const FileSet&) = delete;
    FileSet& operator=(const FileSet&) = delete;
    ~FileSet() {
        if (committed_) return;
        for (const auto& p : written_) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
    }

    std::ofstream open(const std::string& name) {
        const auto p = dir_ / name;
        written_.push_back(p);
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write '{}'", p.string()));
        return out;
    }

    void commit() { committed_ = true; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
    bool committed_ = false;
};

inline void close_checked(std::ofstream& out, const std::string& name) {
    out.flush();
    if (!out) throw Error(fmt::format("write failed for '{}'", name));
}

inline void write_access_events(FileSet& files, const std::string& name, std::span<const AccessEvent> events,
                                std::span<const Satellite> sats, std::span<const CalSite> sites) {
    auto out = files.open(name);
    csv::Writer w(out);
    w.row({"epoch_iso", "sat_id", "site_id", "grid_index", "off_nadir_deg", "vza_deg", "sza_deg", "slant_range_km"});
    for (const auto& e : events)
        w.row({e.epoch.iso(), sats[e.sat].id, sites[e.site].site_id, std::to_string(e.grid), num(e.off_nadir_deg, 4),
               num(e.vza_deg, 4), num(e.sza_deg, 4), num(e.slant_range_km, 3)});
    close_checked(out, name);
}

inline void write_intervals(FileSet& files, const std::string& name, std::span<const AccessInterval> intervals,
                            std::span<const Satellite> sats, std::span<const CalSite> sites, const Epoch& start) {
    auto out = files.open(name);
    csv::Writer w(out);
    w.row({"sat_id", "site_id", "grid_index", "start_iso", "end_iso", "duration_s", "best_epoch_iso",
           "best_off_nadir_deg", "best_vza_deg", "best_sza_deg"});
    for (const auto& iv : intervals)
        w.row({sats[iv.sat].id, sites[iv.site].site_id, std::to_string(iv.grid), start.plus_seconds(iv.start_s).iso(),
               start.plus_seconds(iv.end_s).iso(), num(iv.end_s - iv.start_s, 3), iv.best.epoch.iso(),
               num(iv.best.off_nadir_deg, 4), num(iv.best.vza_deg, 4), num(iv.best.sza_deg, 4)});
    close_checked(out, name);
}

inline std::vector<std::string> opportunity_fields(const XcalOpportunity& o, std::span<const Satellite> ref,
                                                   std::span<const Satellite> test, std::span<const CalSite> sites,
                                                   const std::vector<std::vector<GridPoint>>& grids) {
    std::string site_id, grid_index;
    GeodeticPoint loc = o.location;
    if (o.kind == XcalKind::vicarious) {
        site_id = sites[o.ref_event.site].site_id;
        grid_index = std::to_string(o.ref_event.grid);
        loc = grids[o.ref_event.site][o.ref_event.grid].location;
    }
    return {std::string(to_string(o.kind)),
            ref[o.ref_event.sat].id,
            test[o.test_event.sat].id,
            site_id,
            num(loc.latitude_deg, 6),
            num(loc.longitude_deg, 6),
            grid_index,
            o.ref_event.epoch.iso(),
            o.test_event.epoch.iso(),
            num(o.dt_h, 6),
            num(o.dsza_deg, 4),
            num(o.dvza_deg, 4),
            num(o.ref_event.sza_deg, 4),
            num(o.test_event.sza_deg, 4),
            num(o.ref_event.vza_deg, 4),
            num(o.test_event.vza_deg, 4)};
}

inline void write_opportunities(FileSet& files, const Scenario& sc, std::span<const Satellite> reference,
                                const PlanResult& r) {
    std::vector<std::vector<GridPoint>> grids;
    for (const auto& s : sc.sites) grids.push_back(grid_region(s));
    auto out = files.open("opportunities.csv");
    csv::Writer w(out);
    w.row({"kind", "ref_sat", "test_sat", "site_id", "lat_deg", "lon_deg", "grid_index", "t_ref_iso", "t_test_iso",
           "dt_hours", "dsza_deg", "dvza_deg", "sza_ref", "sza_test", "vza_ref", "vza_test", "criteria_label",
           "opportunity_id"});
    for (const auto& v : r.vicarious)
        for (std::size_t i = 0; i < v.regions.size(); ++i)
            for (const auto& o : v.regions[i].image_options) {
                auto f = opportunity_fields(o, reference, sc.test, sc.sites, grids);
                f.push_back(v.label);
                f.push_back(std::to_string(i));
                w.row(f);
            }
    for (const auto& t : r.toa)
        for (std::size_t i = 0; i < t.crossovers.size(); ++i) {
            auto f = opportunity_fields(t.crossovers[i], reference, sc.test, sc.sites, grids);
            f.push_back(t.label);
            f.push_back(std::to_string(i));
            w.row(f);
        }
    close_checked(out, "opportunities.csv");
}

inline void write_counts(FileSet& files, const std::vector<CountRow>& rows) {
    auto out = files.open("counts.csv");
    csv::Writer w(out);
    w.row({"test_sat", "criteria_label", "dt_threshold_hours", "horizon_hours", "count"});
    for (const auto& c : rows)
        w.row({c.test_sat, c.criteria_label, num(c.dt_threshold_h, 4), num(c.horizon_h, 4), std::to_string(c.count)});
    close_checked(out, "counts.csv");
}

inline void write_crossover_map(FileSet& files, const Scenario& sc, std::span<const Satellite> reference,
                                const PlanResult& r) {
    auto out = files.open("crossover_map.csv");
    csv::Writer w(out);
    w.row({"lat", "lon", "t_ref_iso", "t_test_iso", "dt_hours", "ref_sat", "test_sat", "criteria_label"});
    for (const auto& t : r.toa)
        for (const auto& o : t.crossovers)
            w.row({num(o.location.latitude_deg, 6), num(o.location.longitude_deg, 6), o.ref_event.epoch.iso(),
                   o.test_event.epoch.iso(), num(o.dt_h, 6), reference[o.ref_event.sat].id, sc.test[o.test_event.sat].id,
                   t.label});
    close_checked(out, "crossover_map.csv");
}

inline json bound_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json satellite_json(const Satellite& s) {
    const auto& el = s.elements;
    return json{{"id", s.id},
                {"semimajor_axis_km", el.semimajor_axis_km},
                {"eccentricity", el.eccentricity},
                {"inclination_deg", el.inclination_deg},
                {"raan_deg", el.raan_deg},
                {"arg_perigee_deg", el.arg_perigee_deg},
                {"true_anomaly_deg", el.true_anomaly_deg},
                {"epoch", el.epoch.iso()},
                {"sensor",
                 {{"fov_cross_track_deg", s.sensor.fov_cross_track_deg},
                  {"fov_along_track_deg", s.sensor.fov_along_track_deg},
                  {"pointing_mode", std::string(to_string(s.sensor.pointing_mode))},
                  {"for_half_angle_deg", s.sensor.for_half_angle_deg},
                  {"boresight_tilt_deg", s.sensor.boresight_tilt_deg}}}};
}

inline void write_manifest(FileSet& files, const Scenario& sc, std::span<const Satellite> reference,
                           std::string_view command, PlanMode mode, const RunOptions& opt,
                           const std::vector<std::string>& outputs) {
    json m;
    m["tool"] = "xcal";
    m["version"] = std::string(library_version);
    m["command"] = std::string(command);
    m["mode"] = std::string(to_string(mode));
    m["seed"] = opt.seed;
    m["constants"] = {{"earth_radius_km", constants::earth_radius_km},
                      {"mu_earth_km3_s2", constants::mu_earth_km3_s2},
                      {"j2", constants::j2},
                      {"earth_rotation_rad_s", constants::earth_rotation_rad_s},
                      {"sso_raan_rate_deg_per_day", constants::sso_raan_rate_deg_per_day},
                      {"grid_columns", grid_columns},
                      {"grid_rows", grid_rows}};
    json crit = json::array();
    for (const auto& c : sc.criteria)
        crit.push_back({{"label", c.label},
                        {"dt_site_max_hours", bound_json(c.criteria.dt_site_max_h)},
                        {"dsza_max_deg", bound_json(c.criteria.dsza_max_deg)},
                        {"dvza_max_deg", bound_json(c.criteria.dvza_max_deg)},
                        {"sza_abs_max_deg", bound_json(c.criteria.sza_abs_max_deg)},
                        {"vza_abs_max_deg", bound_json(c.criteria.vza_abs_max_deg)},
                        {"dt_stab_horizon_hours", bound_json(c.criteria.dt_stab_horizon_h)}});
    json refs = json::array(), tests = json::array();
    for (const auto& s : reference) refs.push_back(satellite_json(s));
    for (const auto& s : sc.test) tests.push_back(satellite_json(s));
    m["resolved"] = {{"epoch", sc.epoch.iso()},
                     {"window",
                      {{"duration_hours", sc.window.duration_hours},
                       {"coarse_step_s", sc.window.coarse_step_s},
                       {"fine_step_s", sc.window.fine_step_s}}},
                     {"site_count", sc.sites.size()},
                     {"reference", refs},
                     {"test", tests},
                     {"criteria", crit},
                     {"pass_gap_s", sc.pass_gap_s},
                     {"dedupe_window_s", sc.dedupe_window_s}};
    m["config"] = sc.source;
    m["outputs"] = outputs;
    auto out = files.open("manifest.json");
    out << m.dump(2) << '\n';
    close_checked(out, "manifest.json");
}

}  // namespace output

/// Runs the planning pipeline for one reference fleet and writes the
/// standard output set into `out_dir`. Test-side data may be supplied
/// precomputed (architecture sweeps reuse it).
inline PlanResult run_plan(const Scenario& sc, std::span<const Satellite> reference, PlanMode mode,
                           const std::filesystem::path& out_dir, std::string_view command, const RunOptions& opt,
                           const SideData* test_side = nullptr, const SunTable* sun_table = nullptr) {
    if (reference.empty()) throw Error("at least one reference satellite is required");
    if (sc.test.empty()) throw Error("at least one test satellite is required");
    if (wants_vicarious(mode) && sc.sites.empty()) throw Error("vicarious planning needs at least one site");
    output::FileSet files(out_dir);

    const bool vic = wants_vicarious(mode);
    const bool toa = wants_toa(mode);
    const SideData ref = compute_side(reference, sc, opt, vic, toa);
    SideData own_test;
    if (!test_side) {
        own_test = compute_side(sc.test, sc, opt, vic, toa);
        test_side = &own_test;
    }
    std::optional<SunTable> own_sun;
    if (toa && !sun_table) {
        own_sun = SunTable::build(sc.window);
        sun_table = &*own_sun;
    }
    PlanResult r = plan(sc, reference, ref, *test_side, sun_table, mode, opt);

    std::vector<std::string> written;
    if (sc.write_access_events && vic) {
        output::write_access_events(files, "access_events_ref.csv", ref.events, reference, sc.sites);
        output::write_access_events(files, "access_events_test.csv", test_side->events, sc.test, sc.sites);
        written.insert(written.end(), {"access_events_ref.csv", "access_events_test.csv"});
    }
    output::write_opportunities(files, sc, reference, r);
    output::write_counts(files, count_rows(sc, r));
    output::write_crossover_map(files, sc, reference, r);
    written.insert(written.end(), {"opportunities.csv", "counts.csv", "crossover_map.csv", "manifest.json"});
    output::write_manifest(files, sc, reference, command, mode, opt, written);
    files.commit();
    return r;
}

/// One reference fleet per entry of architecture_table, each planned against
/// the scenario's test satellites into out_dir/archN.
inline void evaluate_architectures(const Scenario& sc, const std::filesystem::path& out_dir, const RunOptions& opt) {
    ArchitectureConfig ac;
    if (sc.architecture)
        ac = *sc.architecture;
    else
        ac.reference_raans_deg = config::flagship_raans(sc.epoch);
    const bool vic = wants_vicarious(sc.mode);
    const bool toa = wants_toa(sc.mode);
    const SideData test = compute_side(sc.test, sc, opt, vic, toa);
    std::optional<SunTable> sun;
    if (toa) sun = SunTable::build(sc.window);

    output::FileSet summary_files(out_dir);
    auto out = summary_files.open("arch_summary.csv");
    csv::Writer w(out);
    w.row({"arch_id", "n_sats", "n_planes", "test_sat", "criteria_label", "dt_threshold_hours", "horizon_hours",
           "count"});
    for (std::size_t a = 1; a <= architecture_table.size(); ++a) {
        const int id = static_cast<int>(a);
        const auto fleet = architecture_satellites(id, sc.epoch, ac.reference_raans_deg, ac.sensor, ac.altitude_km,
                                                   ac.inclination_deg);
        const PlanResult r = run_plan(sc, fleet, sc.mode, out_dir / fmt::format("arch{}", id), "evaluate-arch", opt,
                                      &test, sun ? &*sun : nullptr);
        const double dt_max = *std::max_element(sc.dt_grid_h.begin(), sc.dt_grid_h.end());
        const double h_max = *std::max_element(sc.horizons_h.begin(), sc.horizons_h.end());
        for (const auto& c : count_rows(sc, r))
            if (c.dt_threshold_h == dt_max && c.horizon_h == h_max)
                w.row({std::to_string(id), std::to_string(architecture_table[a - 1].n_sats),
                       std::to_string(architecture_table[a - 1].n_planes), c.test_sat, c.criteria_label,
                       output::num(c.dt_threshold_h, 4), output::num(c.horizon_h, 4), std::to_string(c.count)});
    }
    output::close_checked(out, "arch_summary.csv");
    summary_files.commit();
}

// --- report ------------------------------------------------------------------

namespace report {

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open '{}'", p.string()));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(csv::split_record(line));
    }
    if (rows.empty()) throw Error(fmt::format("'{}' is empty", p.string()));
    return rows;
}

inline std::size_t column(const std::vector<std::string>& header, std::string_view name,
                          const std::filesystem::path& p) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(fmt::format("'{}' has no column '{}'", p.string(), name));
    return static_cast<std::size_t>(it - header.begin());
}

inline std::string slug(std::string_view s) {
    std::string out;
    for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c)) : '_');
    return out;
}

// rows x columns pivot; missing cells stay empty
struct Pivot {
    std::vector<std::string> row_keys;
    std::vector<std::string> col_keys;
    std::map<std::pair<std::string, std::string>, std::string> cells;

    void put(const std::string& r, const std::string& c, const std::string& v) {
        if (std::find(row_keys.begin(), row_keys.end(), r) == row_keys.end()) row_keys.push_back(r);
        if (std::find(col_keys.begin(), col_keys.end(), c) == col_keys.end()) col_keys.push_back(c);
        cells[{r, c}] = v;
    }

    void write(output::FileSet& files, const std::string& name, const std::string& row_title) const {
        auto out = files.open(name);
        csv::Writer w(out);
        std::vector<std::string> header{row_title};
        header.insert(header.end(), col_keys.begin(), col_keys.end());
        w.row(header);
        for (const auto& r : row_keys) {
            std::vector<std::string> f{r};
            for (const auto& c : col_keys) {
                const auto it = cells.find({r, c});
                f.push_back(it == cells.end() ? "" : it->second);
            }
            w.row(f);
        }
        output::close_checked(out, name);
    }
};

inline std::vector<std::string> pivot_counts(output::FileSet& files, const std::filesystem::path& counts,
                                             const std::string& prefix) {
    const auto rows = read_csv(counts);
    const auto& h = rows.front();
    const std::size_t c_sat = column(h, "test_sat", counts), c_label = column(h, "criteria_label", counts),
                      c_dt = column(h, "dt_threshold_hours", counts), c_hor = column(h, "horizon_hours", counts),
                      c_n = column(h, "count", counts);
    std::map<std::pair<std::string, std::string>, Pivot> tables;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != h.size()) throw Error(fmt::format("'{}': row {} has {} fields", counts.string(), i + 1, r.size()));
        tables[{r[c_label], r[c_hor]}].put(r[c_dt], r[c_sat], r[c_n]);
    }
    std::vector<std::string> names;
    for (const auto& [key, t] : tables) {
        const std::string name = fmt::format("{}curve_{}_h{}.csv", prefix, slug(key.first), slug(key.second));
        t.write(files, name, "dt_threshold_hours");
        names.push_back(name);
    }
    return names;
}

/// Reshapes counts tables found in `in_dir` (and its archN subdirectories)
/// into one plot-ready table per curve family. Returns the files written.
inline std::vector<std::string> write_report(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir) {
    output::FileSet files(out_dir);
    std::vector<std::string> names;
    bool any = false;
    if (std::filesystem::exists(in_dir / "counts.csv")) {
        auto n = pivot_counts(files, in_dir / "counts.csv", "");
        names.insert(names.end(), n.begin(), n.end());
        any = true;
    }
    for (std::size_t a = 1; a <= architecture_table.size(); ++a) {
        const auto p = in_dir / fmt::format("arch{}", a) / "counts.csv";
        if (!std::filesystem::exists(p)) continue;
        auto n = pivot_counts(files, p, fmt::format("arch{}_", a));
        names.insert(names.end(), n.begin(), n.end());
        any = true;
    }
    if (std::filesystem::exists(in_dir / "arch_summary.csv")) {
        const auto p = in_dir / "arch_summary.csv";
        const auto rows = read_csv(p);
        const auto& h = rows.front();
        const std::size_t c_arch = column(h, "arch_id", p), c_sat = column(h, "test_sat", p),
                          c_label = column(h, "criteria_label", p), c_n = column(h, "count", p);
        std::map<std::string, Pivot> tables;
        for (std::size_t i = 1; i < rows.size(); ++i) tables[rows[i][c_label]].put(rows[i][c_arch], rows[i][c_sat], rows[i][c_n]);
        for (const auto& [label, t] : tables) {
            const std::string name = fmt::format("arch_sweep_{}.csv", slug(label));
            t.write(files, name, "arch_id");
            names.push_back(name);
        }
        any = true;
    }
    if (!any) throw Error(fmt::format("no counts.csv or arch_summary.csv under '{}'", in_dir.string()));
    files.commit();
    return names;
}

}  // namespace report

}  // namespace xcal
