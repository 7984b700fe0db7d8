#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "xcal/astro_time.hpp"
#include "xcal/constants.hpp"
#include "xcal/error.hpp"
#include "xcal/parallel.hpp"
#include "xcal/propagator.hpp"
#include "xcal/sensing_geometry.hpp"
#include "xcal/target_catalog.hpp"

namespace xcal {

struct Satellite {
    std::string id;
    OrbitalElements elements;
    SensorSpec sensor;
};

struct ScenarioWindow {
    Epoch start;
    double duration_hours = 48.0;
    double coarse_step_s = 10.0;
    double fine_step_s = 1.0;

    double duration_s() const { return duration_hours * 3600.0; }

    void validate() const {
        if (!(duration_hours > 0.0)) throw Error(fmt::format("window duration {} h must be positive", duration_hours));
        if (!(fine_step_s > 0.0)) throw Error(fmt::format("fine step {} s must be positive", fine_step_s));
        if (!(coarse_step_s >= fine_step_s))
            throw Error(fmt::format("coarse step {} s must be at least the fine step {} s", coarse_step_s, fine_step_s));
    }

    /// Number of fine samples; sample i lies at i * fine_step_s.
    std::int64_t fine_sample_count() const {
        if (!(duration_s() > 0.0)) return 0;
        return static_cast<std::int64_t>(std::ceil(duration_s() / fine_step_s - 1e-9));
    }
};

inline constexpr std::uint32_t no_site = 0xffffffffu;

/// One visibility sample. `sat` and `site` index the satellite and site
/// lists the engine was called with; `t_s` is seconds since window start.
struct AccessEvent {
    std::uint32_t sat = 0;
    std::uint32_t site = no_site;
    std::uint32_t grid = 0;
    double t_s = 0.0;
    Epoch epoch;
    double off_nadir_deg = 0.0;
    double vza_deg = 0.0;
    double sza_deg = 0.0;
    double slant_range_km = 0.0;

    auto order_key() const { return std::tie(t_s, sat, site, grid); }
};

inline bool canonical_less(const AccessEvent& a, const AccessEvent& b) { return a.order_key() < b.order_key(); }

struct AccessOptions {
    unsigned threads = 1;
    ForceModel force_model = ForceModel::j2_secular;
};

/// Satellite state on the scenario clock (seconds since window start).
class ScenarioPropagator {
public:
    ScenarioPropagator(const OrbitalElements& el, const Epoch& start, ForceModel model = ForceModel::j2_secular)
        : prop_(el, model), offset_s_(start.seconds_since(el.epoch)), start_(start) {}

    EciState state_at(double t_s) const {
        EciState s = prop_.state_at(offset_s_ + t_s);
        s.epoch = start_.plus_seconds(t_s);
        return s;
    }

private:
    Propagator prop_;
    double offset_s_;
    Epoch start_;
};

/// Satellite and Sun geometry at one scenario time, Earth-fixed frame.
struct EcefSample {
    Epoch epoch;
    Vec3 position;
    Vec3 velocity;  // inertial velocity rotated into the Earth-fixed axes
    Vec3 sun;
};

inline EcefSample ecef_sample(const ScenarioPropagator& prop, double t_s) {
    const EciState s = prop.state_at(t_s);
    const double theta = -gmst_deg(s.epoch) * constants::deg2rad;
    return {s.epoch, rotate_z(s.position, theta), rotate_z(s.velocity, theta),
            rotate_z(sun_position_eci(s.epoch).position(), theta)};
}

namespace detail {

struct SiteGrid {
    Vec3 center_unit;
    double radius_rad = 0.0;  // angular radius enclosing every grid point
    std::vector<Vec3> points;  // ECEF km
};

inline SiteGrid make_site_grid(const CalSite& site) {
    SiteGrid g;
    g.center_unit = geodetic_to_ecef(site.center).normalized();
    for (const auto& gp : grid_region(site)) {
        g.points.push_back(geodetic_to_ecef(gp.location));
        g.radius_rad = std::max(g.radius_rad, angle_between(g.center_unit, g.points.back()));
    }
    g.radius_rad *= 1.001;
    return g;
}

struct CoarseSample {
    Vec3 unit;
    double reach_rad = 0.0;  // sensor reach plus motion margin over one coarse step
};

inline std::vector<CoarseSample> coarse_track(const Satellite& sat, const ScenarioPropagator& prop,
                                              const ScenarioWindow& w) {
    std::vector<CoarseSample> out;
    const auto n = static_cast<std::int64_t>(std::floor(w.duration_s() / w.coarse_step_s)) + 1;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) {
        const EcefSample s = ecef_sample(prop, static_cast<double>(k) * w.coarse_step_s);
        const double r = s.position.norm();
        const double motion = (s.velocity.norm() / r + constants::earth_rotation_rad_s) * w.coarse_step_s;
        out.push_back({s.position / r, 1.02 * reach_central_angle(sat.sensor, r - constants::earth_radius_km) + motion});
    }
    return out;
}

// Fine sample ranges [first, last] worth evaluating for one site.
inline std::vector<std::pair<std::int64_t, std::int64_t>> candidate_ranges(const std::vector<CoarseSample>& track,
                                                                           const SiteGrid& grid,
                                                                           const ScenarioWindow& w) {
    std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
    const std::int64_t n_fine = w.fine_sample_count();
    for (std::size_t k = 0; k < track.size(); ++k) {
        const double angle = angle_between(track[k].unit, grid.center_unit);
        if (angle > track[k].reach_rad + grid.radius_rad) continue;
        const double tk = static_cast<double>(k) * w.coarse_step_s;
        auto first = static_cast<std::int64_t>(std::ceil((tk - w.coarse_step_s) / w.fine_step_s));
        auto last = static_cast<std::int64_t>(std::floor((tk + w.coarse_step_s) / w.fine_step_s));
        first = std::max<std::int64_t>(first, 0);
        last = std::min<std::int64_t>(last, n_fine - 1);
        if (first > last) continue;
        if (!ranges.empty() && first <= ranges.back().second + 1)
            ranges.back().second = std::max(ranges.back().second, last);
        else
            ranges.emplace_back(first, last);
    }
    return ranges;
}

inline void evaluate_pair(const Satellite& sat, std::uint32_t sat_index, const ScenarioPropagator& prop,
                          const std::vector<CoarseSample>& track, const SiteGrid& grid, std::uint32_t site_index,
                          const ScenarioWindow& w, std::vector<AccessEvent>& out) {
    const double cos_max_off = std::cos(max_off_nadir_deg(sat.sensor) * constants::deg2rad);
    for (const auto& [first, last] : candidate_ranges(track, grid, w)) {
        for (std::int64_t i = first; i <= last; ++i) {
            const double t = static_cast<double>(i) * w.fine_step_s;
            const EcefSample s = ecef_sample(prop, t);
            const Vec3 nadir = (-s.position).normalized();
            for (std::size_t g = 0; g < grid.points.size(); ++g) {
                const Vec3& p = grid.points[g];
                const Vec3 los = p - s.position;
                const double range = los.norm();
                // cheap rejections before the full geometry
                if (p.dot(los) >= 0.0) continue;
                if (nadir.dot(los) < cos_max_off * range * (1.0 - 1e-12)) continue;
                const LookGeometry look = look_angles(s.position, s.velocity, p, s.sun);
                if (!in_access(look, sat.sensor)) continue;
                out.push_back({sat_index, site_index, static_cast<std::uint32_t>(g), t, s.epoch, look.off_nadir_deg,
                               look.vza_deg, look.sza_deg, look.slant_range_km});
            }
        }
    }
}

}  // namespace detail

/// Samples the window and emits one event per fine sample in which a grid
/// point is inside the satellite's access region.
///
/// A coarse pass discards (satellite, site) time spans whose sub-satellite
/// point is farther from the site than the sensor reach plus the site radius
/// plus the ground-track motion over one coarse step; the remaining spans
/// are evaluated on the fine grid. Output is sorted by (time, sat, site, grid)
/// and does not depend on the thread count.
inline std::vector<AccessEvent> compute_accesses(std::span<const Satellite> satellites, std::span<const CalSite> sites,
                                                 const ScenarioWindow& window, const AccessOptions& opts = {}) {
    if (window.fine_sample_count() == 0 || satellites.empty() || sites.empty()) return {};
    window.validate();

    std::vector<detail::SiteGrid> grids(sites.size());
    parallel_for(sites.size(), opts.threads, [&](std::size_t i) { grids[i] = detail::make_site_grid(sites[i]); });

    std::vector<ScenarioPropagator> props;
    props.reserve(satellites.size());
    for (const auto& s : satellites) props.emplace_back(s.elements, window.start, opts.force_model);

    std::vector<std::vector<detail::CoarseSample>> tracks(satellites.size());
    parallel_for(satellites.size(), opts.threads,
                 [&](std::size_t i) { tracks[i] = detail::coarse_track(satellites[i], props[i], window); });

    const std::size_t n_pairs = satellites.size() * sites.size();
    std::vector<std::vector<AccessEvent>> partial(n_pairs);
    parallel_for(n_pairs, opts.threads, [&](std::size_t p) {
        const std::size_t si = p / sites.size();
        const std::size_t ti = p % sites.size();
        detail::evaluate_pair(satellites[si], static_cast<std::uint32_t>(si), props[si], tracks[si], grids[ti],
                              static_cast<std::uint32_t>(ti), window, partial[p]);
    });

    std::size_t total = 0;
    for (const auto& v : partial) total += v.size();
    std::vector<AccessEvent> events;
    events.reserve(total);
    for (auto& v : partial) {
        events.insert(events.end(), v.begin(), v.end());
        std::vector<AccessEvent>().swap(v);
    }
    std::sort(events.begin(), events.end(), canonical_less);
    return events;
}

struct AccessInterval {
    std::uint32_t sat = 0;
    std::uint32_t site = no_site;
    std::uint32_t grid = 0;
    double start_s = 0.0;
    double end_s = 0.0;  // last sample time plus one fine step
    AccessEvent best;    // minimum off-nadir sample of the run
};

/// Merges runs of consecutive fine samples per (sat, site, grid) into
/// intervals. Output ordered by (sat, site, grid, start).
inline std::vector<AccessInterval> accesses_to_intervals(std::span<const AccessEvent> events, double fine_step_s) {
    std::vector<const AccessEvent*> order;
    order.reserve(events.size());
    for (const auto& e : events) order.push_back(&e);
    std::sort(order.begin(), order.end(), [](const AccessEvent* a, const AccessEvent* b) {
        return std::tie(a->sat, a->site, a->grid, a->t_s) < std::tie(b->sat, b->site, b->grid, b->t_s);
    });
    std::vector<AccessInterval> out;
    const double gap = fine_step_s * (1.0 + 1e-6);
    for (const AccessEvent* e : order) {
        if (!out.empty()) {
            AccessInterval& cur = out.back();
            if (cur.sat == e->sat && cur.site == e->site && cur.grid == e->grid && e->t_s - (cur.end_s - fine_step_s) <= gap) {
                cur.end_s = e->t_s + fine_step_s;
                if (e->off_nadir_deg < cur.best.off_nadir_deg) cur.best = *e;
                continue;
            }
        }
        out.push_back({e->sat, e->site, e->grid, e->t_s, e->t_s + fine_step_s, *e});
    }
    return out;
}

}  // namespace xcal
