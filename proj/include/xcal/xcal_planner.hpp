#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "xcal/access_engine.hpp"
#include "xcal/astro_time.hpp"
#include "xcal/constants.hpp"
#include "xcal/error.hpp"
#include "xcal/parallel.hpp"
#include "xcal/sensing_geometry.hpp"

namespace xcal {

/// Bounds on a calibration pair. Unset bounds are infinite.
struct FilterCriteria {
    double dt_site_max_h = constants::unbounded;
    double dsza_max_deg = constants::unbounded;
    double dvza_max_deg = constants::unbounded;
    double sza_abs_max_deg = constants::unbounded;
    double vza_abs_max_deg = constants::unbounded;
    double dt_stab_horizon_h = constants::unbounded;

    void validate() const {
        const std::pair<double, std::string_view> fields[] = {
            {dt_site_max_h, "dt_site_max_hours"}, {dsza_max_deg, "dsza_max_deg"},
            {dvza_max_deg, "dvza_max_deg"},       {sza_abs_max_deg, "sza_abs_max_deg"},
            {vza_abs_max_deg, "vza_abs_max_deg"}, {dt_stab_horizon_h, "dt_stab_horizon_hours"}};
        for (const auto& [v, name] : fields)
            if (!(v >= 0.0)) throw Error(fmt::format("{} must be non-negative (got {})", name, v));
        if (dt_site_max_h > dt_stab_horizon_h)
            throw Error(fmt::format("dt_site_max_hours {} exceeds dt_stab_horizon_hours {}", dt_site_max_h,
                                    dt_stab_horizon_h));
    }

    bool admits(const AccessEvent& e) const {
        return e.sza_deg <= sza_abs_max_deg && e.vza_deg <= vza_abs_max_deg && e.t_s <= dt_stab_horizon_h * 3600.0;
    }
};

enum class XcalKind { vicarious, toa };

inline std::string_view to_string(XcalKind k) { return k == XcalKind::vicarious ? "VICARIOUS" : "TOA"; }

/// A matched (reference, test) collection pair. For vicarious pairs the
/// target is the events' site/grid; for TOA pairs it is `location`.
struct XcalOpportunity {
    XcalKind kind = XcalKind::vicarious;
    AccessEvent ref_event;
    AccessEvent test_event;
    double dt_h = 0.0;  // test minus reference
    double dsza_deg = 0.0;
    double dvza_deg = 0.0;
    GeodeticPoint location;
    double separation_km = 0.0;  // TOA: ground distance between the two nadir points

    double latest_s() const { return std::max(ref_event.t_s, test_event.t_s); }
};

/// Canonical opportunity order: (dt, reference time, site, grid, sats, test time).
inline bool opportunity_less(const XcalOpportunity& a, const XcalOpportunity& b) {
    return std::tie(a.dt_h, a.ref_event.t_s, a.ref_event.site, a.ref_event.grid, a.ref_event.sat, a.test_event.sat,
                    a.test_event.t_s) < std::tie(b.dt_h, b.ref_event.t_s, b.ref_event.site, b.ref_event.grid,
                                                 b.ref_event.sat, b.test_event.sat, b.test_event.t_s);
}

inline bool passes_pair_bounds(const FilterCriteria& c, double dt_h, double dsza, double dvza) {
    return std::abs(dt_h) <= c.dt_site_max_h && dsza <= c.dsza_max_deg && dvza <= c.dvza_max_deg;
}

inline XcalOpportunity make_vicarious(const AccessEvent& ref, const AccessEvent& test) {
    XcalOpportunity o;
    o.kind = XcalKind::vicarious;
    o.ref_event = ref;
    o.test_event = test;
    o.dt_h = (test.t_s - ref.t_s) / 3600.0;
    o.dsza_deg = std::abs(test.sza_deg - ref.sza_deg);
    o.dvza_deg = std::abs(test.vza_deg - ref.vza_deg);
    return o;
}

/// Grid-point level matcher. Events of each list are filtered by the
/// absolute caps and the horizon, grouped by (site, grid) and scanned with a
/// time-sorted sliding window, so each group costs O(n + window sizes).
class VicariousPairing {
public:
    VicariousPairing(std::span<const AccessEvent> ref, std::span<const AccessEvent> test, const FilterCriteria& c)
        : criteria_(c) {
        c.validate();
        ref_ = sorted_admitted(ref);
        test_ = sorted_admitted(test);
        std::size_t i = 0, j = 0;
        while (i < ref_.size() && j < test_.size()) {
            const auto ki = key(*ref_[i]);
            const auto kj = key(*test_[j]);
            if (ki < kj) {
                i = advance(ref_, i);
            } else if (kj < ki) {
                j = advance(test_, j);
            } else {
                const std::size_t ie = advance(ref_, i);
                const std::size_t je = advance(test_, j);
                groups_.push_back({i, ie, j, je});
                i = ie;
                j = je;
            }
        }
    }

    std::size_t group_count() const { return groups_.size(); }

    /// Calls fn(const XcalOpportunity&) for every admissible pair in group g,
    /// in (reference time, test time, test sat) order.
    template <typename Fn>
    void visit(std::size_t g, Fn&& fn) const {
        const Group& gr = groups_[g];
        const double window_s = criteria_.dt_site_max_h * 3600.0 + 1e-6;
        std::size_t lo = gr.test_begin;
        std::size_t hi = gr.test_begin;
        for (std::size_t r = gr.ref_begin; r < gr.ref_end; ++r) {
            const AccessEvent& re = *ref_[r];
            while (lo < gr.test_end && test_[lo]->t_s < re.t_s - window_s) ++lo;
            if (hi < lo) hi = lo;
            while (hi < gr.test_end && test_[hi]->t_s <= re.t_s + window_s) ++hi;
            for (std::size_t k = lo; k < hi; ++k) {
                const AccessEvent& te = *test_[k];
                const double dt_h = (te.t_s - re.t_s) / 3600.0;
                const double dsza = std::abs(te.sza_deg - re.sza_deg);
                const double dvza = std::abs(te.vza_deg - re.vza_deg);
                if (passes_pair_bounds(criteria_, dt_h, dsza, dvza)) fn(make_vicarious(re, te));
            }
        }
    }

    template <typename Fn>
    void visit_all(Fn&& fn) const {
        for (std::size_t g = 0; g < groups_.size(); ++g) visit(g, fn);
    }

private:
    struct Group {
        std::size_t ref_begin, ref_end, test_begin, test_end;
    };

    static std::pair<std::uint32_t, std::uint32_t> key(const AccessEvent& e) { return {e.site, e.grid}; }

    static std::size_t advance(const std::vector<const AccessEvent*>& v, std::size_t i) {
        const auto k = key(*v[i]);
        while (i < v.size() && key(*v[i]) == k) ++i;
        return i;
    }

    std::vector<const AccessEvent*> sorted_admitted(std::span<const AccessEvent> events) const {
        std::vector<const AccessEvent*> out;
        for (const auto& e : events)
            if (criteria_.admits(e)) out.push_back(&e);
        std::sort(out.begin(), out.end(), [](const AccessEvent* a, const AccessEvent* b) {
            return std::tie(a->site, a->grid, a->t_s, a->sat) < std::tie(b->site, b->grid, b->t_s, b->sat);
        });
        return out;
    }

    FilterCriteria criteria_;
    std::vector<const AccessEvent*> ref_;
    std::vector<const AccessEvent*> test_;
    std::vector<Group> groups_;
};

/// Every (reference, test) event pair at a common grid point that satisfies
/// all bounds, in canonical order.
inline std::vector<XcalOpportunity> pair_vicarious(std::span<const AccessEvent> ref_events,
                                                   std::span<const AccessEvent> test_events,
                                                   const FilterCriteria& criteria) {
    std::vector<XcalOpportunity> out;
    VicariousPairing(ref_events, test_events, criteria).visit_all([&](const XcalOpportunity& o) { out.push_back(o); });
    std::sort(out.begin(), out.end(), opportunity_less);
    return out;
}

// --- pass grouping ------------------------------------------------------

inline constexpr double default_pass_gap_s = 1800.0;

/// Contiguous visits of one satellite to one site. Samples of a (sat, site)
/// stream separated by more than `gap_s` start a new pass.
class PassIndex {
public:
    struct Pass {
        double start_s = 0.0;
        double end_s = 0.0;
    };

    PassIndex() = default;

    PassIndex(std::span<const AccessEvent> events, double gap_s = default_pass_gap_s) {
        std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> samples;
        samples.reserve(events.size());
        for (const auto& e : events) samples.emplace_back(e.sat, e.site, e.t_s);
        build(std::move(samples), gap_s);
    }

    static PassIndex from_times(std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> samples,
                                double gap_s = default_pass_gap_s) {
        PassIndex idx;
        idx.build(std::move(samples), gap_s);
        return idx;
    }

    /// Ordinal of the pass containing t_s, or -1.
    int pass_of(std::uint32_t sat, std::uint32_t site, double t_s) const {
        const auto it = passes_.find(pack(sat, site));
        if (it == passes_.end()) return -1;
        const auto& v = it->second;
        auto p = std::upper_bound(v.begin(), v.end(), t_s, [](double t, const Pass& q) { return t < q.start_s; });
        if (p == v.begin()) return -1;
        --p;
        return t_s <= p->end_s ? static_cast<int>(p - v.begin()) : -1;
    }

    const Pass& pass(std::uint32_t sat, std::uint32_t site, int ordinal) const {
        return passes_.at(pack(sat, site)).at(static_cast<std::size_t>(ordinal));
    }

    std::size_t pass_count(std::uint32_t sat, std::uint32_t site) const {
        const auto it = passes_.find(pack(sat, site));
        return it == passes_.end() ? 0 : it->second.size();
    }

private:
    static std::uint64_t pack(std::uint32_t sat, std::uint32_t site) {
        return (static_cast<std::uint64_t>(sat) << 32) | site;
    }

    void build(std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> samples, double gap_s) {
        std::sort(samples.begin(), samples.end());
        for (const auto& [sat, site, t] : samples) {
            auto& v = passes_[pack(sat, site)];
            if (!v.empty() && t - v.back().end_s <= gap_s)
                v.back().end_s = std::max(v.back().end_s, t);
            else
                v.push_back({t, t});
        }
    }

    std::unordered_map<std::uint64_t, std::vector<Pass>> passes_;
};

/// Point on the (|dt|, latest time) trade-off of a region opportunity.
struct ParetoPoint {
    double abs_dt_h = 0.0;
    double latest_s = 0.0;
};

/// Grid-level matches of one (site, reference pass, test pass) collapsed
/// into a single opportunity with up to 200 image options (one per grid
/// point: the member with the smallest |dt|, then dVZA, then dSZA).
struct RegionOpportunity {
    std::uint32_t site = no_site;
    std::uint32_t ref_sat = 0;
    std::uint32_t test_sat = 0;
    int ref_pass = -1;
    int test_pass = -1;
    std::vector<XcalOpportunity> image_options;  // sorted by grid index
    std::vector<ParetoPoint> front;              // non-dominated (|dt|, latest)
    std::size_t grid_matches = 0;                // all grid-level pairs merged here

    double min_abs_dt_h() const {
        double m = constants::unbounded;
        for (const auto& p : front) m = std::min(m, p.abs_dt_h);
        return m;
    }
    const XcalOpportunity& representative() const {
        return *std::min_element(image_options.begin(), image_options.end(), [](const auto& a, const auto& b) {
            return std::make_tuple(std::abs(a.dt_h), a.dvza_deg, a.dsza_deg, a.ref_event.grid) <
                   std::make_tuple(std::abs(b.dt_h), b.dvza_deg, b.dsza_deg, b.ref_event.grid);
        });
    }
};

namespace detail {

inline bool better_image_option(const XcalOpportunity& a, const XcalOpportunity& b) {
    return std::make_tuple(std::abs(a.dt_h), a.dvza_deg, a.dsza_deg, a.ref_event.t_s, a.test_event.t_s) <
           std::make_tuple(std::abs(b.dt_h), b.dvza_deg, b.dsza_deg, b.ref_event.t_s, b.test_event.t_s);
}

inline void pareto_insert(std::vector<ParetoPoint>& front, ParetoPoint p) {
    for (const auto& q : front)
        if (q.abs_dt_h <= p.abs_dt_h && q.latest_s <= p.latest_s) return;
    std::erase_if(front, [&](const ParetoPoint& q) { return p.abs_dt_h <= q.abs_dt_h && p.latest_s <= q.latest_s; });
    front.push_back(p);
    std::sort(front.begin(), front.end(),
              [](const ParetoPoint& a, const ParetoPoint& b) { return a.abs_dt_h < b.abs_dt_h; });
}

}  // namespace detail

/// Streaming builder of region opportunities. Accumulators fed from
/// disjoint groups can be merged; the result is independent of merge order.
class RegionAccumulator {
public:
    using Key = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, int, int>;  // site, ref, test, passes

    void add(const XcalOpportunity& o, int ref_pass, int test_pass) {
        RegionOpportunity& r = regions_[Key{o.ref_event.site, o.ref_event.sat, o.test_event.sat, ref_pass, test_pass}];
        if (r.grid_matches == 0) {
            r.site = o.ref_event.site;
            r.ref_sat = o.ref_event.sat;
            r.test_sat = o.test_event.sat;
            r.ref_pass = ref_pass;
            r.test_pass = test_pass;
        }
        ++r.grid_matches;
        auto it = std::lower_bound(r.image_options.begin(), r.image_options.end(), o.ref_event.grid,
                                   [](const XcalOpportunity& a, std::uint32_t g) { return a.ref_event.grid < g; });
        if (it != r.image_options.end() && it->ref_event.grid == o.ref_event.grid) {
            if (detail::better_image_option(o, *it)) *it = o;
        } else {
            r.image_options.insert(it, o);
        }
        detail::pareto_insert(r.front, {std::abs(o.dt_h), o.latest_s()});
    }

    void merge(RegionAccumulator&& other) {
        for (auto& [k, src] : other.regions_) {
            auto [it, inserted] = regions_.try_emplace(k, std::move(src));
            if (inserted) continue;
            RegionOpportunity& dst = it->second;
            dst.grid_matches += src.grid_matches;
            for (auto& o : src.image_options) {
                auto pos = std::lower_bound(dst.image_options.begin(), dst.image_options.end(), o.ref_event.grid,
                                            [](const XcalOpportunity& a, std::uint32_t g) { return a.ref_event.grid < g; });
                if (pos != dst.image_options.end() && pos->ref_event.grid == o.ref_event.grid) {
                    if (detail::better_image_option(o, *pos)) *pos = o;
                } else {
                    dst.image_options.insert(pos, o);
                }
            }
            for (const auto& p : src.front) detail::pareto_insert(dst.front, p);
        }
        other.regions_.clear();
    }

    std::size_t size() const { return regions_.size(); }

    /// Regions ordered by (site, ref sat, test sat, ref pass, test pass).
    std::vector<RegionOpportunity> finish() && {
        std::vector<RegionOpportunity> out;
        out.reserve(regions_.size());
        for (auto& [k, r] : regions_) out.push_back(std::move(r));
        regions_.clear();
        return out;
    }

private:
    std::map<Key, RegionOpportunity> regions_;
};

/// Groups grid-level matches by (site, ref sat, test sat, ref pass, test
/// pass). Without explicit pass indices, passes are derived from the
/// opportunities' own event times.
inline std::vector<RegionOpportunity> dedupe_to_passes(std::span<const XcalOpportunity> opportunities,
                                                       const PassIndex* ref_passes = nullptr,
                                                       const PassIndex* test_passes = nullptr,
                                                       double gap_s = default_pass_gap_s) {
    PassIndex own_ref, own_test;
    if (!ref_passes || !test_passes) {
        std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> rs, ts;
        for (const auto& o : opportunities) {
            rs.emplace_back(o.ref_event.sat, o.ref_event.site, o.ref_event.t_s);
            ts.emplace_back(o.test_event.sat, o.test_event.site, o.test_event.t_s);
        }
        if (!ref_passes) {
            own_ref = PassIndex::from_times(std::move(rs), gap_s);
            ref_passes = &own_ref;
        }
        if (!test_passes) {
            own_test = PassIndex::from_times(std::move(ts), gap_s);
            test_passes = &own_test;
        }
    }
    RegionAccumulator acc;
    for (const auto& o : opportunities) {
        const int rp = ref_passes->pass_of(o.ref_event.sat, o.ref_event.site, o.ref_event.t_s);
        const int tp = test_passes->pass_of(o.test_event.sat, o.test_event.site, o.test_event.t_s);
        acc.add(o, rp, tp);
    }
    return std::move(acc).finish();
}

/// Region opportunities straight from access events, without
/// materialising the grid-level pair list. Passes come from the supplied
/// indices (normally built from the full, unfiltered event streams).
inline std::vector<RegionOpportunity> vicarious_regions(std::span<const AccessEvent> ref_events,
                                                        std::span<const AccessEvent> test_events,
                                                        const FilterCriteria& criteria, const PassIndex& ref_passes,
                                                        const PassIndex& test_passes, unsigned threads = 1) {
    const VicariousPairing pairing(ref_events, test_events, criteria);
    const std::size_t groups = pairing.group_count();
    if (groups == 0) return {};
    const std::size_t n_chunks = std::min<std::size_t>(groups, 64);
    std::vector<RegionAccumulator> acc(n_chunks);
    parallel_for(n_chunks, threads, [&](std::size_t c) {
        const std::size_t g0 = c * groups / n_chunks;
        const std::size_t g1 = (c + 1) * groups / n_chunks;
        for (std::size_t g = g0; g < g1; ++g)
            pairing.visit(g, [&](const XcalOpportunity& o) {
                acc[c].add(o, ref_passes.pass_of(o.ref_event.sat, o.ref_event.site, o.ref_event.t_s),
                           test_passes.pass_of(o.test_event.sat, o.test_event.site, o.test_event.t_s));
            });
    });
    for (std::size_t c = 1; c < n_chunks; ++c) acc[0].merge(std::move(acc[c]));
    return std::move(acc[0]).finish();
}

// --- counting -------------------------------------------------------------

inline bool counts_within(const XcalOpportunity& o, double dt_threshold_h, double horizon_h) {
    return std::abs(o.dt_h) <= dt_threshold_h && o.latest_s() <= horizon_h * 3600.0 + 1e-9;
}

inline bool counts_within(const RegionOpportunity& r, double dt_threshold_h, double horizon_h) {
    return std::any_of(r.front.begin(), r.front.end(), [&](const ParetoPoint& p) {
        return p.abs_dt_h <= dt_threshold_h && p.latest_s <= horizon_h * 3600.0 + 1e-9;
    });
}

inline std::uint32_t test_sat_of(const XcalOpportunity& o) { return o.test_event.sat; }
inline std::uint32_t test_sat_of(const RegionOpportunity& r) { return r.test_sat; }

/// Cumulative count of opportunities with |dt| <= each threshold, optionally
/// restricted to one test satellite and a planning horizon.
template <typename Opp>
std::vector<std::size_t> count_curve(std::span<const Opp> opportunities, std::span<const double> dt_grid_h,
                                     double horizon_h = constants::unbounded,
                                     std::optional<std::uint32_t> test_sat = std::nullopt) {
    std::vector<std::size_t> counts(dt_grid_h.size(), 0);
    for (const auto& o : opportunities) {
        if (test_sat && test_sat_of(o) != *test_sat) continue;
        for (std::size_t k = 0; k < dt_grid_h.size(); ++k)
            if (counts_within(o, dt_grid_h[k], horizon_h)) ++counts[k];
    }
    return counts;
}

/// Counts restricted to collections made within each horizon from the
/// window start.
template <typename Opp>
std::vector<std::size_t> horizon_sweep(std::span<const Opp> opportunities, std::span<const double> horizons_h,
                                       double dt_threshold_h = constants::unbounded,
                                       std::optional<std::uint32_t> test_sat = std::nullopt) {
    std::vector<std::size_t> counts(horizons_h.size(), 0);
    for (const auto& o : opportunities) {
        if (test_sat && test_sat_of(o) != *test_sat) continue;
        for (std::size_t k = 0; k < horizons_h.size(); ++k)
            if (counts_within(o, dt_threshold_h, horizons_h[k])) ++counts[k];
    }
    return counts;
}

// --- top-of-atmosphere crossovers -----------------------------------------

inline constexpr double default_dedupe_window_s = 300.0;

/// Sun positions on the fine time grid, Earth-fixed.
struct SunTable {
    double step_s = 1.0;
    std::vector<Epoch> epochs;
    std::vector<Vec3> sun_ecef;  // km

    static SunTable build(const ScenarioWindow& w) {
        SunTable t;
        t.step_s = w.fine_step_s;
        const auto n = static_cast<std::size_t>(w.fine_sample_count());
        t.epochs.reserve(n);
        t.sun_ecef.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Epoch e = w.start.plus_seconds(static_cast<double>(i) * w.fine_step_s);
            t.epochs.push_back(e);
            t.sun_ecef.push_back(eci_to_ecef(sun_position_eci(e).position(), e));
        }
        return t;
    }
};

/// Sub-satellite track sampled on the fine grid, Earth-fixed.
struct GroundTrack {
    std::uint32_t sat = 0;
    double step_s = 1.0;
    std::vector<Vec3> position;  // km
    std::vector<Vec3> nadir;     // unit

    std::size_t size() const { return position.size(); }
    double altitude_km(std::size_t i) const { return position[i].norm() - constants::earth_radius_km; }
};

inline GroundTrack sample_ground_track(const Satellite& sat, std::uint32_t index, const ScenarioWindow& w,
                                       ForceModel model = ForceModel::j2_secular) {
    GroundTrack g;
    g.sat = index;
    g.step_s = w.fine_step_s;
    const ScenarioPropagator prop(sat.elements, w.start, model);
    const auto n = static_cast<std::size_t>(w.fine_sample_count());
    g.position.reserve(n);
    g.nadir.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const EciState s = prop.state_at(static_cast<double>(i) * w.fine_step_s);
        const Vec3 p = eci_to_ecef(s.position, s.epoch);
        g.position.push_back(p);
        g.nadir.push_back(p.normalized());
    }
    return g;
}

namespace detail {

// Uniform 3-D cell index over unit vectors; cells at least as wide as the
// largest reach chord, so all neighbours within reach lie in the 27 cells
// around the query.
class TrackCells {
public:
    TrackCells(const GroundTrack& track, double cell) : cell_(cell) {
        for (std::uint32_t j = 0; j < track.size(); ++j) cells_[key_of(track.nadir[j], 0, 0, 0)].push_back(j);
    }

    template <typename Fn>
    void for_each_in_time(const Vec3& u, std::int64_t j_lo, std::int64_t j_hi, Fn&& fn) const {
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    const auto it = cells_.find(key_of(u, dx, dy, dz));
                    if (it == cells_.end()) continue;
                    const auto& v = it->second;
                    auto b = std::lower_bound(v.begin(), v.end(), j_lo,
                                              [](std::uint32_t a, std::int64_t x) { return a < x; });
                    for (; b != v.end() && static_cast<std::int64_t>(*b) <= j_hi; ++b) fn(*b);
                }
    }

private:
    std::uint64_t key_of(const Vec3& u, int dx, int dy, int dz) const {
        const auto q = [&](double c, int d) {
            return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(c / cell_)) + d + (1 << 20)) &
                   0x1fffffu;
        };
        return (q(u.x, dx) << 42) | (q(u.y, dy) << 21) | q(u.z, dz);
    }

    double cell_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

// Greedy clustering of detections that arrive in reference-time order: a
// detection joins the open cluster whose first member lies within the window
// in reference time and in time offset (t_test - t_ref).
class CrossoverClusterer {
public:
    explicit CrossoverClusterer(double window_s) : window_s_(window_s) {}

    void add(const XcalOpportunity& o) {
        flush_before(o.ref_event.t_s);
        for (auto& c : open_) {
            if (std::abs((o.test_event.t_s - o.ref_event.t_s) - c.offset0) < window_s_) {
                if (o.separation_km < c.best.separation_km) c.best = o;
                return;
            }
        }
        open_.push_back({o.ref_event.t_s, o.test_event.t_s - o.ref_event.t_s, o});
    }

    std::vector<XcalOpportunity> finish() && {
        flush_before(constants::unbounded);
        return std::move(done_);
    }

private:
    struct Cluster {
        double ref0, offset0;
        XcalOpportunity best;
    };

    void flush_before(double t_ref) {
        auto keep = open_.begin();
        for (auto it = open_.begin(); it != open_.end(); ++it) {
            if (t_ref - it->ref0 >= window_s_)
                done_.push_back(it->best);
            else
                *keep++ = *it;
        }
        open_.erase(keep, open_.end());
    }

    double window_s_;
    std::vector<Cluster> open_;
    std::vector<XcalOpportunity> done_;
};

}  // namespace detail

/// Ground-track crossovers between nadir-pointed reference satellites and a
/// test satellite's field of regard.
///
/// A detection is a pair of fine samples (t_ref, t_test) where the reference
/// nadir point lies within the test sensor's ground reach of the test nadir
/// point and |t_test - t_ref| <= dt_site_max. The crossover point is the
/// reference nadir point. Detections that fail the solar/view filters are
/// dropped; the rest collapse per (ref, test) pair within `dedupe_window_s`
/// to the detection with the smallest ground separation.
inline std::vector<XcalOpportunity> toa_crossovers(std::span<const GroundTrack> ref_tracks,
                                                   std::span<const Satellite> ref_sats, const GroundTrack& test_track,
                                                   const Satellite& test_sat, const SunTable& sun,
                                                   const FilterCriteria& criteria,
                                                   double dedupe_window_s = default_dedupe_window_s) {
    criteria.validate();
    const std::size_t n = test_track.size();
    if (n == 0) return {};
    const double re = constants::earth_radius_km;

    std::vector<double> cos_reach(n);
    double max_reach = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double reach = ground_reach_km(test_sat.sensor, test_track.altitude_km(j)) / re;
        cos_reach[j] = std::cos(reach);
        max_reach = std::max(max_reach, reach);
    }
    const detail::TrackCells cells(test_track, std::max(max_reach * 1.01, 1e-3));

    const double step = test_track.step_s;
    const double horizon_s = criteria.dt_stab_horizon_h * 3600.0;
    const double dt_max_s = criteria.dt_site_max_h * 3600.0;
    const auto j_window = std::isfinite(dt_max_s) ? static_cast<std::int64_t>(std::floor(dt_max_s / step + 1e-6)) + 1
                                                  : static_cast<std::int64_t>(n);

    std::vector<XcalOpportunity> out;
    std::vector<std::uint32_t> cand;
    for (const GroundTrack& ref : ref_tracks) {
        const Satellite& rs = ref_sats[ref.sat];
        detail::CrossoverClusterer clusters(dedupe_window_s);
        for (std::size_t i = 0; i < ref.size() && i < n; ++i) {
            const double t_ref = static_cast<double>(i) * step;
            if (t_ref > horizon_s + 1e-9) break;
            const Vec3& u = ref.nadir[i];
            cand.clear();
            const auto ii = static_cast<std::int64_t>(i);
            cells.for_each_in_time(u, ii - j_window, ii + j_window, [&](std::uint32_t j) { cand.push_back(j); });
            if (cand.empty()) continue;
            std::sort(cand.begin(), cand.end());

            const Vec3 target = u * re;
            const double ref_alt = ref.altitude_km(i);
            const double ref_edge = 0.5 * std::max(rs.sensor.fov_cross_track_deg, 0.0);
            const double vza_ref = vza_from_off_nadir(ref_alt, ref_edge);
            const double sza_ref = angle_between(u, sun.sun_ecef[i] - target) * constants::rad2deg;
            if (sza_ref > criteria.sza_abs_max_deg || vza_ref > criteria.vza_abs_max_deg) continue;

            for (std::uint32_t j : cand) {
                const double cosang = u.dot(test_track.nadir[j]);
                if (cosang < cos_reach[j]) continue;
                const double t_test = static_cast<double>(j) * step;
                if (t_test > horizon_s + 1e-9) continue;
                const double dt_h = (t_test - t_ref) / 3600.0;
                if (std::abs(dt_h) > criteria.dt_site_max_h) continue;
                const double sza_test = angle_between(u, sun.sun_ecef[j] - target) * constants::rad2deg;
                if (sza_test > criteria.sza_abs_max_deg) continue;
                const Vec3 to_test = test_track.position[j] - target;
                const double vza_test = angle_between(u, to_test) * constants::rad2deg;
                if (vza_test > criteria.vza_abs_max_deg) continue;
                const double dsza = std::abs(sza_test - sza_ref);
                const double dvza = std::abs(vza_test - vza_ref);
                if (!passes_pair_bounds(criteria, dt_h, dsza, dvza)) continue;

                XcalOpportunity o;
                o.kind = XcalKind::toa;
                o.ref_event = {ref.sat, no_site, 0, t_ref, sun.epochs[i], ref_edge, vza_ref, sza_ref, ref_alt};
                o.test_event = {test_track.sat,
                                no_site,
                                0,
                                t_test,
                                sun.epochs[j],
                                angle_between(-test_track.position[j], -to_test) * constants::rad2deg,
                                vza_test,
                                sza_test,
                                to_test.norm()};
                o.dt_h = dt_h;
                o.dsza_deg = dsza;
                o.dvza_deg = dvza;
                o.location = ecef_to_geodetic(target);
                o.location.altitude_km = 0.0;
                o.separation_km = re * std::acos(std::clamp(cosang, -1.0, 1.0));
                clusters.add(o);
            }
        }
        auto found = std::move(clusters).finish();
        out.insert(out.end(), found.begin(), found.end());
    }
    std::sort(out.begin(), out.end(), opportunity_less);
    return out;
}

/// Convenience overload that samples the tracks itself.
inline std::vector<XcalOpportunity> toa_crossovers(std::span<const Satellite> ref_sats, const Satellite& test_sat,
                                                   const ScenarioWindow& window, const FilterCriteria& criteria,
                                                   double dedupe_window_s = default_dedupe_window_s) {
    if (window.fine_sample_count() == 0) return {};
    window.validate();
    std::vector<GroundTrack> refs;
    for (std::uint32_t k = 0; k < ref_sats.size(); ++k) refs.push_back(sample_ground_track(ref_sats[k], k, window));
    const GroundTrack test = sample_ground_track(test_sat, 0, window);
    return toa_crossovers(refs, ref_sats, test, test_sat, SunTable::build(window), criteria, dedupe_window_s);
}

}  // namespace xcal
