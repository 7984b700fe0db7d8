// Command-line front end for the cross-calibration planner.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "xcal/xcal.hpp"

namespace fs = std::filesystem;
using namespace xcal;

namespace {

struct CommonArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config, "scenario configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", a.out, "output directory")->required();
    cmd->add_option("--seed", a.seed, "seed recorded in the manifest (randomised tests only)");
    cmd->add_option("--threads", a.threads, "worker threads; never changes results")->check(CLI::Range(1u, 256u));
}

RunOptions run_options(const CommonArgs& a) { return {a.threads, a.seed}; }

void cmd_propagate(const CommonArgs& a, double step_s) {
    const Scenario sc = load_scenario(a.config);
    if (step_s <= 0.0) step_s = sc.window.coarse_step_s;
    output::FileSet files(a.out);
    auto out = files.open("states.csv");
    csv::Writer w(out);
    w.row({"role", "sat_id", "epoch_iso", "t_s", "x_km", "y_km", "z_km", "vx_km_s", "vy_km_s", "vz_km_s", "lat_deg",
           "lon_deg", "alt_km"});
    const auto dump = [&](std::string_view role, const std::vector<Satellite>& sats) {
        for (const auto& s : sats) {
            const ScenarioPropagator prop(s.elements, sc.window.start);
            const auto n = static_cast<std::int64_t>(std::floor(sc.window.duration_s() / step_s + 1e-9));
            for (std::int64_t k = 0; k <= n; ++k) {
                const double t = static_cast<double>(k) * step_s;
                const EciState st = prop.state_at(t);
                const GeodeticPoint g = ecef_to_geodetic(eci_to_ecef(st.position, st.epoch));
                w.row({std::string(role), s.id, st.epoch.iso(), output::num(t, 3), output::num(st.position.x, 6),
                       output::num(st.position.y, 6), output::num(st.position.z, 6), output::num(st.velocity.x, 9),
                       output::num(st.velocity.y, 9), output::num(st.velocity.z, 9), output::num(g.latitude_deg, 6),
                       output::num(g.longitude_deg, 6), output::num(g.altitude_km, 6)});
            }
        }
    };
    dump("reference", sc.reference);
    dump("test", sc.test);
    output::close_checked(out, "states.csv");
    files.commit();
}

void cmd_access(const CommonArgs& a) {
    const Scenario sc = load_scenario(a.config);
    if (sc.sites.empty()) throw Error("access computation needs at least one site");
    const RunOptions opt = run_options(a);
    output::FileSet files(a.out);
    const auto emit = [&](std::string_view role, const std::vector<Satellite>& sats) {
        const auto events = compute_accesses(sats, sc.sites, sc.window, {opt.threads, ForceModel::j2_secular});
        output::write_access_events(files, fmt::format("access_events_{}.csv", role), events, sats, sc.sites);
        const auto intervals = accesses_to_intervals(events, sc.window.fine_step_s);
        output::write_intervals(files, fmt::format("access_intervals_{}.csv", role), intervals, sats, sc.sites,
                                sc.window.start);
    };
    emit("ref", sc.reference);
    emit("test", sc.test);
    files.commit();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-calibration opportunity planner"};
    app.require_subcommand(1);
    CommonArgs args;
    double step_s = 0.0;
    std::string report_in, report_out;

    auto* propagate = app.add_subcommand("propagate", "dump satellite states over the scenario window");
    add_common(propagate, args);
    propagate->add_option("--step", step_s, "sampling step in seconds (default: coarse step)");
    auto* access = app.add_subcommand("access", "compute access events and intervals over the sites");
    add_common(access, args);
    auto* run = app.add_subcommand("run", "plan in the mode given by the configuration");
    add_common(run, args);
    auto* vic = app.add_subcommand("plan-vicarious", "plan vicarious (site) opportunities");
    add_common(vic, args);
    auto* toa = app.add_subcommand("plan-toa", "plan top-of-atmosphere crossover opportunities");
    add_common(toa, args);
    auto* arch = app.add_subcommand("evaluate-arch", "sweep the six reference-constellation architectures");
    add_common(arch, args);
    auto* report = app.add_subcommand("report", "reshape counts tables into per-curve tables");
    report->add_option("--in", report_in, "directory holding counts.csv / arch_summary.csv")
        ->required()
        ->check(CLI::ExistingDirectory);
    report->add_option("--out", report_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*propagate) {
            cmd_propagate(args, step_s);
        } else if (*access) {
            cmd_access(args);
        } else if (*run || *vic || *toa) {
            const Scenario sc = load_scenario(args.config);
            const PlanMode mode = *vic ? PlanMode::vicarious : *toa ? PlanMode::toa : sc.mode;
            const std::string name = *vic ? "plan-vicarious" : *toa ? "plan-toa" : "run";
            if (wants_vicarious(mode) && sc.sites.empty()) throw Error("vicarious planning needs at least one site");
            run_plan(sc, sc.reference, mode, args.out, name, run_options(args));
        } else if (*arch) {
            evaluate_architectures(load_scenario(args.config), args.out, run_options(args));
        } else if (*report) {
            for (const auto& n : report::write_report(report_in, report_out)) std::cout << n << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "xcal: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
