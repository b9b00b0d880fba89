#include <jcmp/simcore.hpp>

#include <jcmp/cqm.hpp>
#include <jcmp/errors.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace jcmp {
namespace simcore {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::domain_error(msg);
}

} // namespace

const char* to_string(PlannerKind kind) {
    switch (kind) {
        case PlannerKind::kBaseline: return "baseline";
        case PlannerKind::kSingleStage: return "single";
        case PlannerKind::kMultiStage: return "multi";
    }
    return "?";
}

PlannerKind parse_planner_kind(const std::string& name) {
    if (name == "baseline") return PlannerKind::kBaseline;
    if (name == "single") return PlannerKind::kSingleStage;
    if (name == "multi") return PlannerKind::kMultiStage;
    throw ConfigError("unknown planner \"" + name +
                      "\" (expected baseline, single or multi)");
}

void validate(const Scenario& s) {
    require(!s.sense_traj.empty(), "Scenario.sense_traj must not be empty");
    require(s.horizon == static_cast<int>(s.sense_traj.size()),
            "Scenario.horizon must equal the length of sense_traj");
    require(s.dt > 0.0, "Scenario.dt must be > 0");
    require(s.data_D > 0.0, "Scenario.data_D must be > 0");
    require(s.eps_target > 0.0 && s.eps_target < 1.0,
            "Scenario.eps_target must be in (0,1)");
    require(s.p_max > 0.0, "Scenario.p_max must be > 0");
    channel::validate(s.channel);
    channel::validate(s.modes);
    motion::validate(s.motion);
    planner::validate(s.grid);
    require(s.grid.contains(s.router_start),
            "Scenario.router_start must lie inside the grid bounds");
}

planner::PlannerContext planner_context(const Scenario& s) {
    planner::PlannerContext ctx;
    ctx.channel = s.channel;
    ctx.modes = s.modes;
    ctx.motion = s.motion;
    ctx.dt = s.dt;
    ctx.data_D = s.data_D;
    ctx.eps_e2e = s.eps_target;
    ctx.p_max = s.p_max;
    return ctx;
}

namespace {

const json& member(const json& j, const std::string& ctx, const char* key) {
    if (!j.contains(key))
        throw ConfigError("scenario: missing key \"" + ctx + key + "\"");
    return j.at(key);
}

double num_member(const json& j, const std::string& ctx, const char* key) {
    const json& v = member(j, ctx, key);
    if (!v.is_number())
        throw ConfigError("scenario: \"" + ctx + key + "\" must be a number");
    return v.get<double>();
}

Vec2 as_vec2(const json& v, const std::string& what) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError("scenario: \"" + what + "\" must be an [x, y] pair");
    return Vec2(v[0].get<double>(), v[1].get<double>());
}

void reject_unknown(const json& j, const std::string& ctx,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok)
            throw ConfigError("scenario: unknown key \"" + ctx + key + "\"");
    }
}

} // namespace

Scenario load_scenario(const std::string& json_text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");

    reject_unknown(j, "",
                   {"base_pos", "sense_traj", "router_start", "dt", "data_D",
                    "eps_target", "p_max", "channel", "modes", "motion", "grid",
                    "horizon"});

    Scenario s;
    s.base_pos = as_vec2(member(j, "", "base_pos"), "base_pos");
    s.router_start = as_vec2(member(j, "", "router_start"), "router_start");

    const json& traj = member(j, "", "sense_traj");
    if (!traj.is_array() || traj.empty())
        throw ConfigError("scenario: \"sense_traj\" must be a non-empty array");
    for (std::size_t i = 0; i < traj.size(); ++i)
        s.sense_traj.push_back(
            as_vec2(traj[i], "sense_traj[" + std::to_string(i) + "]"));

    s.dt = num_member(j, "", "dt");
    s.data_D = num_member(j, "", "data_D");
    s.eps_target = num_member(j, "", "eps_target");
    s.p_max = num_member(j, "", "p_max");

    const json& ch = member(j, "", "channel");
    if (!ch.is_object()) throw ConfigError("scenario: \"channel\" must be an object");
    reject_unknown(ch, "channel.",
                   {"ref_gain_K0", "ref_dist_d0", "pathloss_exp_beta",
                    "noise_psd_N0", "bandwidth_B"});
    s.channel.ref_gain_K0 = num_member(ch, "channel.", "ref_gain_K0");
    s.channel.ref_dist_d0 = num_member(ch, "channel.", "ref_dist_d0");
    s.channel.pathloss_exp_beta = num_member(ch, "channel.", "pathloss_exp_beta");
    // The file carries N0 in dBm/Hz; the in-memory value is W/Hz.
    s.channel.noise_psd_N0 =
        std::pow(10.0, (num_member(ch, "channel.", "noise_psd_N0") - 30.0) / 10.0);
    s.channel.bandwidth_B = num_member(ch, "channel.", "bandwidth_B");

    const json& mo = member(j, "", "motion");
    if (!mo.is_object()) throw ConfigError("scenario: \"motion\" must be an object");
    reject_unknown(mo, "motion.", {"k1", "k2", "v_max"});
    s.motion.k1 = num_member(mo, "motion.", "k1");
    s.motion.k2 = num_member(mo, "motion.", "k2");
    s.motion.v_max = num_member(mo, "motion.", "v_max");

    const json& gr = member(j, "", "grid");
    if (!gr.is_object()) throw ConfigError("scenario: \"grid\" must be an object");
    reject_unknown(gr, "grid.", {"xmin", "xmax", "ymin", "ymax", "spacing"});
    s.grid.xmin = num_member(gr, "grid.", "xmin");
    s.grid.xmax = num_member(gr, "grid.", "xmax");
    s.grid.ymin = num_member(gr, "grid.", "ymin");
    s.grid.ymax = num_member(gr, "grid.", "ymax");
    s.grid.spacing = num_member(gr, "grid.", "spacing");

    const json& modes = member(j, "", "modes");
    if (modes.is_string()) {
        const std::filesystem::path p(modes.get<std::string>());
        const auto resolved =
            p.is_absolute() ? p : std::filesystem::path(base_dir) / p;
        s.modes = channel::load_mode_table(resolved.string());
    } else if (modes.is_array()) {
        json wrapper;
        wrapper["modes"] = modes;
        s.modes = channel::parse_mode_table(wrapper.dump());
    } else {
        throw ConfigError(
            "scenario: \"modes\" must be a file path or an inline mode array");
    }

    s.horizon = static_cast<int>(s.sense_traj.size());
    if (j.contains("horizon")) {
        const double h = num_member(j, "", "horizon");
        if (h != static_cast<double>(s.horizon))
            throw ConfigError(
                "scenario: \"horizon\" must equal the length of sense_traj");
    }

    try {
        validate(s);
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str(),
                         std::filesystem::path(path).parent_path().string());
}

std::string scenario_hash(const Scenario& s) {
    json j;
    j["base_pos"] = {s.base_pos.x(), s.base_pos.y()};
    json traj = json::array();
    for (const auto& p : s.sense_traj) traj.push_back({p.x(), p.y()});
    j["sense_traj"] = std::move(traj);
    j["router_start"] = {s.router_start.x(), s.router_start.y()};
    j["dt"] = s.dt;
    j["data_D"] = s.data_D;
    j["eps_target"] = s.eps_target;
    j["p_max"] = s.p_max;
    j["horizon"] = s.horizon;
    j["channel"] = {{"ref_gain_K0", s.channel.ref_gain_K0},
                    {"ref_dist_d0", s.channel.ref_dist_d0},
                    {"pathloss_exp_beta", s.channel.pathloss_exp_beta},
                    {"noise_psd_N0", s.channel.noise_psd_N0},
                    {"bandwidth_B", s.channel.bandwidth_B}};
    j["motion"] = {{"k1", s.motion.k1}, {"k2", s.motion.k2}, {"v_max", s.motion.v_max}};
    j["grid"] = {{"xmin", s.grid.xmin},
                 {"xmax", s.grid.xmax},
                 {"ymin", s.grid.ymin},
                 {"ymax", s.grid.ymax},
                 {"spacing", s.grid.spacing}};
    json modes = json::array();
    for (const auto& m : s.modes.modes)
        modes.push_back({{"label", m.label},
                         {"rate", m.rate_Rn},
                         {"a", m.coef_a},
                         {"g", m.coef_g},
                         {"gamma_p", m.thresh_gamma_p}});
    j["modes"] = std::move(modes);

    // FNV-1a over the canonical dump (object keys serialize sorted).
    const std::string canon = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace {

// Recompute the committed step's end-to-end PER from positions and powers
// alone; the planner's own bookkeeping is deliberately not trusted here.
double committed_e2e_per(const Scenario& s, const Vec2& sense_pos,
                         const planner::StepDecision& d) {
    const double noise = channel::noise_power(s.channel);
    const double g_sr =
        channel::path_gain((sense_pos - d.router_pos).norm(), s.channel);
    const double g_rb =
        channel::path_gain((s.base_pos - d.router_pos).norm(), s.channel);
    const auto& m_sr = s.modes.modes.at(static_cast<std::size_t>(d.link_sr.mode_index));
    const auto& m_rb = s.modes.modes.at(static_cast<std::size_t>(d.link_rb.mode_index));
    const double per_sr =
        channel::per_rayleigh(d.link_sr.tx_power * g_sr / noise, m_sr);
    const double per_rb =
        channel::per_rayleigh(d.link_rb.tx_power * g_rb / noise, m_rb);
    return cqm::e2e_per(per_sr, per_rb);
}

double act_commit(const Scenario& s, const Vec2& x_prev, const Vec2& sense_pos,
                  const planner::StepDecision& d, int step) {
    const std::string at = " at step " + std::to_string(step);
    if (!(d.link_sr.tx_power > 0.0 && d.link_sr.tx_power <= s.p_max) ||
        !(d.link_rb.tx_power > 0.0 && d.link_rb.tx_power <= s.p_max))
        throw std::logic_error("run: committed plan violates the power cap" + at);
    if (!motion::reachable(x_prev, d.router_pos, s.dt, s.motion))
        throw std::logic_error("run: committed position is not reachable" + at);
    const double expect =
        motion::motion_energy((d.router_pos - x_prev).norm(), s.motion);
    if (std::abs(expect - d.motion_energy) > 1e-9 * std::max(1.0, expect))
        throw std::logic_error("run: motion energy does not match the move" + at);
    const double e2e = committed_e2e_per(s, sense_pos, d);
    if (e2e > s.eps_target + 1e-12)
        throw std::logic_error("run: committed plan violates the PER budget" + at);
    return e2e;
}

} // namespace

TrajectoryReport run(const Scenario& s, PlannerKind kind) {
    validate(s);
    const planner::PlannerContext ctx = planner_context(s);

    TrajectoryReport rep;
    rep.kind = kind;
    rep.scenario_hash = scenario_hash(s);

    // The multi-stage planner decides the full horizon before the loop; the
    // per-step body below then only commits its decisions.
    std::vector<planner::StepDecision> horizon_plan;
    if (kind == PlannerKind::kMultiStage)
        horizon_plan = planner::multi_stage_plan(s.router_start, s.sense_traj,
                                                 s.base_pos, s.grid, ctx)
                           .first;

    Vec2 x_prev = s.router_start;
    for (int t = 0; t < s.horizon; ++t) {
        // observe: this step's sensing position; base and channel are static
        const Vec2& sense_pos = s.sense_traj[t];

        // orient + decide: candidate cells are evaluated and one is chosen
        // by the selected planner
        planner::StepDecision d;
        try {
            switch (kind) {
                case PlannerKind::kBaseline:
                    d = planner::comm_baseline_step(x_prev, sense_pos,
                                                    s.base_pos, s.grid, ctx);
                    break;
                case PlannerKind::kSingleStage:
                    d = planner::single_stage_step(x_prev, sense_pos,
                                                   s.base_pos, s.grid, ctx);
                    break;
                case PlannerKind::kMultiStage:
                    d = horizon_plan[static_cast<std::size_t>(t)];
                    break;
            }
        } catch (const InfeasibleError& e) {
            throw InfeasibleError(std::string(e.what()) + " (step " +
                                      std::to_string(t + 1) + ")",
                                  e.shortfall_watts(), e.binding_link(), t + 1);
        }

        // act: re-check the commitment independently, then accrue it
        rep.e2e_per.push_back(act_commit(s, x_prev, sense_pos, d, t + 1));
        rep.motion_J += d.motion_energy;
        rep.comm_J += d.comm_energy;
        rep.steps.push_back(d);
        x_prev = d.router_pos;
    }

    rep.total_J = rep.motion_J + rep.comm_J;
    return rep;
}

ComparisonRecord compare(const Scenario& s) {
    ComparisonRecord rec{run(s, PlannerKind::kBaseline),
                         run(s, PlannerKind::kSingleStage),
                         run(s, PlannerKind::kMultiStage)};
    const double base = rec.baseline.total_J;
    rec.baseline.savings_vs_baseline = 0.0;
    rec.single_stage.savings_vs_baseline = 1.0 - rec.single_stage.total_J / base;
    rec.multi_stage.savings_vs_baseline = 1.0 - rec.multi_stage.total_J / base;
    return rec;
}

ValidationRecord monte_carlo_validate(const Scenario& s,
                                      const TrajectoryReport& report,
                                      long n_samples, std::uint64_t seed) {
    validate(s);
    require(n_samples >= 10000,
            "monte_carlo_validate: n_samples must be at least 10^4");
    require(report.steps.size() == s.sense_traj.size(),
            "monte_carlo_validate: report horizon does not match the scenario");

    ValidationRecord rec;
    rec.scenario_hash = report.scenario_hash;
    rec.kind = report.kind;
    rec.seed = seed;
    rec.n_samples = n_samples;

    std::mt19937_64 rng(seed);
    const double noise = channel::noise_power(s.channel);

    auto check_link = [&](int step, const char* name,
                          const channel::LinkPlan& lp, double dist) {
        const auto& m = s.modes.modes.at(static_cast<std::size_t>(lp.mode_index));
        const double gbar =
            lp.tx_power * channel::path_gain(dist, s.channel) / noise;
        double acc = 0.0;
        for (long i = 0; i < n_samples; ++i) {
            // inverse-CDF exponential draw from 53 uniform bits
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            const double gamma = -gbar * std::log1p(-u);
            acc += channel::per_instant(gamma, m);
        }
        const double emp = acc / static_cast<double>(n_samples);
        LinkCheck chk;
        chk.step = step;
        chk.link = name;
        chk.budget = lp.per_budget;
        chk.closed_form = channel::per_rayleigh(gbar, m);
        chk.empirical = emp;
        chk.std_err = std::sqrt(std::max(emp * (1.0 - emp), 0.0) /
                                static_cast<double>(n_samples));
        chk.flagged = emp > lp.per_budget + 3.0 * chk.std_err;
        rec.all_ok = rec.all_ok && !chk.flagged;
        rec.checks.push_back(std::move(chk));
    };

    for (std::size_t t = 0; t < report.steps.size(); ++t) {
        const auto& d = report.steps[t];
        check_link(static_cast<int>(t) + 1, "sense->router", d.link_sr,
                   (s.sense_traj[t] - d.router_pos).norm());
        check_link(static_cast<int>(t) + 1, "router->base", d.link_rb,
                   (s.base_pos - d.router_pos).norm());
    }
    return rec;
}

void persist_run(const TrajectoryReport& report, const std::string& path) {
    json j;
    j["scenario_hash"] = report.scenario_hash;
    j["planner"] = to_string(report.kind);
    j["steps"] = static_cast<long>(report.steps.size());
    j["motion_J"] = report.motion_J;
    j["comm_J"] = report.comm_J;
    j["total_J"] = report.total_J;

    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    j["timestamp"] = stamp;

    std::ofstream out(path, std::ios::app);
    if (!out)
        throw std::runtime_error("persist_run: cannot open " + path +
                                 " for appending");
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("persist_run: write to " + path + " failed");
}

std::vector<RunRecord> read_run_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_run_log: cannot open " + path);

    std::vector<RunRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = "run log line " + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ConfigError(where + ": " + e.what());
        }
        try {
            RunRecord r;
            r.scenario_hash = j.at("scenario_hash").get<std::string>();
            r.planner = j.at("planner").get<std::string>();
            r.steps = j.at("steps").get<long>();
            r.motion_J = j.at("motion_J").get<double>();
            r.comm_J = j.at("comm_J").get<double>();
            r.total_J = j.at("total_J").get<double>();
            r.timestamp = j.at("timestamp").get<std::string>();
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    return out;
}

} // namespace simcore
} // namespace jcmp
