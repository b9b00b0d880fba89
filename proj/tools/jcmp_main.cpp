#include <jcmp/cqm.hpp>
#include <jcmp/errors.hpp>
#include <jcmp/simcore.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <clocale>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

namespace {

using jcmp::simcore::Scenario;
using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Writes either to --out or to stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::trunc);
            if (!file_)
                throw jcmp::ConfigError("cannot open output file " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

void write_step_rows(std::ostream& os, const Scenario& s,
                     const jcmp::simcore::TrajectoryReport& rep) {
    os << "step,router_x,router_y,sense_x,sense_y,mode_sr,power_sr_W,per_budget_sr,"
          "mode_rb,power_rb_W,per_budget_rb,motion_J,comm_J,total_J,e2e_per\n";
    for (std::size_t t = 0; t < rep.steps.size(); ++t) {
        const auto& d = rep.steps[t];
        os << (t + 1) << ',' << fmt(d.router_pos.x()) << ','
           << fmt(d.router_pos.y()) << ',' << fmt(s.sense_traj[t].x()) << ','
           << fmt(s.sense_traj[t].y()) << ',' << (d.link_sr.mode_index + 1)
           << ',' << fmt(d.link_sr.tx_power) << ',' << fmt(d.link_sr.per_budget)
           << ',' << (d.link_rb.mode_index + 1) << ',' << fmt(d.link_rb.tx_power)
           << ',' << fmt(d.link_rb.per_budget) << ',' << fmt(d.motion_energy)
           << ',' << fmt(d.comm_energy) << ','
           << fmt(d.motion_energy + d.comm_energy) << ',' << fmt(rep.e2e_per[t])
           << '\n';
    }
}

json report_record(const jcmp::simcore::TrajectoryReport& rep) {
    json j;
    j["planner"] = jcmp::simcore::to_string(rep.kind);
    j["scenario_hash"] = rep.scenario_hash;
    j["motion_J"] = rep.motion_J;
    j["comm_J"] = rep.comm_J;
    j["total_J"] = rep.total_J;
    if (rep.savings_vs_baseline)
        j["savings_vs_baseline"] = *rep.savings_vs_baseline;
    json steps = json::array();
    for (std::size_t t = 0; t < rep.steps.size(); ++t) {
        const auto& d = rep.steps[t];
        steps.push_back({{"step", t + 1},
                         {"router", {d.router_pos.x(), d.router_pos.y()}},
                         {"mode_sr", d.link_sr.mode_index + 1},
                         {"power_sr_W", d.link_sr.tx_power},
                         {"per_budget_sr", d.link_sr.per_budget},
                         {"mode_rb", d.link_rb.mode_index + 1},
                         {"power_rb_W", d.link_rb.tx_power},
                         {"per_budget_rb", d.link_rb.per_budget},
                         {"motion_J", d.motion_energy},
                         {"comm_J", d.comm_energy},
                         {"e2e_per", rep.e2e_per[t]}});
    }
    j["steps"] = std::move(steps);
    return j;
}

int cmd_run(const std::string& scenario_path, const std::string& planner,
            const std::string& out_path, const std::string& format,
            const std::string& log_path) {
    const Scenario s = jcmp::simcore::load_scenario_file(scenario_path);
    const auto kind = jcmp::simcore::parse_planner_kind(planner);
    const auto rep = jcmp::simcore::run(s, kind);

    Output out(out_path);
    if (format == "csv") {
        write_step_rows(out.stream(), s, rep);
        out.stream() << "# totals: motion_J=" << fmt(rep.motion_J)
                     << " comm_J=" << fmt(rep.comm_J)
                     << " total_J=" << fmt(rep.total_J) << '\n';
    } else {
        out.stream() << report_record(rep).dump(2) << '\n';
    }
    if (!log_path.empty()) jcmp::simcore::persist_run(rep, log_path);
    return 0;
}

int cmd_compare(const std::string& scenario_path, const std::string& out_path,
                const std::string& format) {
    const Scenario s = jcmp::simcore::load_scenario_file(scenario_path);
    const auto rec = jcmp::simcore::compare(s);

    Output out(out_path);
    if (format == "csv") {
        out.stream() << "planner,motion_J,comm_J,total_J,savings_pct\n";
        for (const auto* rep : {&rec.baseline, &rec.single_stage, &rec.multi_stage}) {
            out.stream() << jcmp::simcore::to_string(rep->kind) << ','
                         << fmt(rep->motion_J) << ',' << fmt(rep->comm_J) << ','
                         << fmt(rep->total_J) << ','
                         << fmt(rep->savings_vs_baseline.value() * 100.0) << '\n';
        }
    } else {
        json j;
        j["baseline"] = report_record(rec.baseline);
        j["single"] = report_record(rec.single_stage);
        j["multi"] = report_record(rec.multi_stage);
        out.stream() << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_validate(const std::string& scenario_path, const std::string& out_path,
                 const std::string& format, std::uint64_t seed, long samples) {
    const Scenario s = jcmp::simcore::load_scenario_file(scenario_path);
    const auto rep = jcmp::simcore::run(s, jcmp::simcore::PlannerKind::kMultiStage);
    const auto rec = jcmp::simcore::monte_carlo_validate(s, rep, samples, seed);

    Output out(out_path);
    if (format == "csv") {
        out.stream() << "step,link,per_budget,closed_form,empirical,std_err,flagged\n";
        for (const auto& c : rec.checks) {
            out.stream() << c.step << ',' << c.link << ',' << fmt(c.budget) << ','
                         << fmt(c.closed_form) << ',' << fmt(c.empirical) << ','
                         << fmt(c.std_err) << ',' << (c.flagged ? 1 : 0) << '\n';
        }
        out.stream() << "# all_ok=" << (rec.all_ok ? 1 : 0) << " seed=" << rec.seed
                     << " n_samples=" << rec.n_samples << '\n';
    } else {
        json j;
        j["scenario_hash"] = rec.scenario_hash;
        j["planner"] = jcmp::simcore::to_string(rec.kind);
        j["seed"] = rec.seed;
        j["n_samples"] = rec.n_samples;
        j["all_ok"] = rec.all_ok;
        json checks = json::array();
        for (const auto& c : rec.checks)
            checks.push_back({{"step", c.step},
                              {"link", c.link},
                              {"per_budget", c.budget},
                              {"closed_form", c.closed_form},
                              {"empirical", c.empirical},
                              {"std_err", c.std_err},
                              {"flagged", c.flagged}});
        j["checks"] = std::move(checks);
        out.stream() << j.dump(2) << '\n';
    }
    return 0;
}

// Largest single-link distance still feasible under the power cap with the
// scenario's full PER budget on one hop.
double max_feasible_range(const Scenario& s) {
    auto feasible = [&](double d) {
        try {
            jcmp::channel::min_link_energy(d, s.eps_target, s.data_D, s.channel,
                                           s.modes, s.p_max);
            return true;
        } catch (const jcmp::InfeasibleError&) {
            return false;
        }
    };
    double lo = s.channel.ref_dist_d0 * 1e-6;
    if (!feasible(lo)) return 0.0;
    double hi = lo;
    int guard = 0;
    while (feasible(hi) && guard++ < 120) hi *= 2.0;
    if (guard >= 120) return hi;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        (feasible(mid) ? lo : hi) = mid;
        if (hi - lo <= 1e-9 * hi) break;
    }
    return lo;
}

int cmd_cqm(const std::string& scenario_path, const std::string& out_path,
            const std::string& format) {
    const Scenario s = jcmp::simcore::load_scenario_file(scenario_path);

    // Three-node topology at step 0: sensing robot, router start, base.
    const std::vector<jcmp::cqm::Vec2> pos = {s.sense_traj.front(),
                                              s.router_start, s.base_pos};
    const double x_th = max_feasible_range(s);
    const jcmp::cqm::StepWeightParams sw{x_th};
    const auto g = jcmp::cqm::build_graph(
        pos, [&](double d) { return jcmp::cqm::step_weight(d, sw); }, true);

    const double d_sr = (pos[0] - pos[1]).norm();
    const double d_rb = (pos[1] - pos[2]).norm();
    const double d_direct = (pos[0] - pos[2]).norm();
    const double noise_cap_B = s.channel.bandwidth_B;
    const double lambda2 = jcmp::cqm::algebraic_connectivity(g);
    const long long paths = jcmp::cqm::num_simple_paths(g, 0, 2);

    auto cap = [&](double d) {
        return jcmp::cqm::capacity(jcmp::channel::mean_snr(s.p_max, d, s.channel),
                                   noise_cap_B);
    };

    Output out(out_path);
    if (format == "csv") {
        out.stream() << "metric,value\n"
                     << "threshold_x_th_m," << fmt(x_th) << '\n'
                     << "dist_sense_router_m," << fmt(d_sr) << '\n'
                     << "dist_router_base_m," << fmt(d_rb) << '\n'
                     << "dist_sense_base_m," << fmt(d_direct) << '\n'
                     << "weight_sense_router," << fmt(g.weight(0, 1)) << '\n'
                     << "weight_router_base," << fmt(g.weight(1, 2)) << '\n'
                     << "weight_sense_base," << fmt(g.weight(0, 2)) << '\n'
                     << "algebraic_connectivity," << fmt(lambda2) << '\n'
                     << "simple_paths_sense_base," << paths << '\n'
                     << "capacity_sense_router_bps," << fmt(cap(d_sr)) << '\n'
                     << "capacity_router_base_bps," << fmt(cap(d_rb)) << '\n'
                     << "capacity_sense_base_bps," << fmt(cap(d_direct)) << '\n';
    } else {
        json j;
        j["threshold_x_th_m"] = x_th;
        j["distances_m"] = {{"sense_router", d_sr},
                            {"router_base", d_rb},
                            {"sense_base", d_direct}};
        j["weights"] = {{"sense_router", g.weight(0, 1)},
                        {"router_base", g.weight(1, 2)},
                        {"sense_base", g.weight(0, 2)}};
        j["algebraic_connectivity"] = lambda2;
        j["simple_paths_sense_base"] = paths;
        j["capacity_bps"] = {{"sense_router", cap(d_sr)},
                             {"router_base", cap(d_rb)},
                             {"sense_base", cap(d_direct)}};
        out.stream() << j.dump(2) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");

    CLI::App app{"Relay placement and transmission planning for a "
                 "sensing-robot / router-robot / base-station network"};
    app.require_subcommand(1);

    std::string scenario_path, out_path, log_path;
    std::string planner = "multi";
    std::string format = "csv";
    std::uint64_t seed = 0;
    long samples = 100000;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario_path, "Scenario JSON file")
            ->required();
        cmd->add_option("--out", out_path, "Output file (default: stdout)");
        cmd->add_option("--format", format, "Output format")
            ->check(CLI::IsMember({"csv", "record", "structured-record"}))
            ->capture_default_str();
    };

    auto* c_run = app.add_subcommand("run", "Run one planner over the scenario");
    add_common(c_run);
    c_run->add_option("--planner", planner, "baseline, single or multi")
        ->check(CLI::IsMember({"baseline", "single", "multi"}))
        ->capture_default_str();
    c_run->add_option("--log", log_path, "Append a run record to this file");

    auto* c_compare =
        app.add_subcommand("compare", "Run all three planners and report savings");
    add_common(c_compare);

    auto* c_validate = app.add_subcommand(
        "validate", "Monte-Carlo check of the multi-stage plan's PER budgets");
    add_common(c_validate);
    c_validate->add_option("--seed", seed, "RNG seed")->capture_default_str();
    c_validate->add_option("--samples", samples, "Fading samples per link")
        ->capture_default_str();

    auto* c_cqm = app.add_subcommand(
        "cqm", "Connectivity metrics for the step-0 topology");
    add_common(c_cqm);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    const std::string fmt_name = (format == "structured-record") ? "record" : format;
    try {
        if (c_run->parsed())
            return cmd_run(scenario_path, planner, out_path, fmt_name, log_path);
        if (c_compare->parsed())
            return cmd_compare(scenario_path, out_path, fmt_name);
        if (c_validate->parsed())
            return cmd_validate(scenario_path, out_path, fmt_name, seed, samples);
        if (c_cqm->parsed())
            return cmd_cqm(scenario_path, out_path, fmt_name);
    } catch (const jcmp::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 1;
    } catch (const jcmp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
