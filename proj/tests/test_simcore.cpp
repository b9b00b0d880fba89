#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <jcmp/errors.hpp>
#include <jcmp/simcore.hpp>

#include "test_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

using namespace jcmp;
using nlohmann::json;

namespace {

// Self-contained scenario on the flat inverse-square lab channel with a
// single transmit mode. Feasible with lots of headroom at 10 W.
json lab_scenario() {
    return json{
        {"base_pos", {60.0, 20.0}},
        {"sense_traj", {{0.0, 40.0}, {4.0, 30.0}, {8.0, 20.0}}},
        {"router_start", {32.0, 28.0}},
        {"dt", 10.0},
        {"data_D", 1e8},
        {"eps_target", 0.01},
        {"p_max", 10.0},
        {"channel",
         {{"ref_gain_K0", 1.0},
          {"ref_dist_d0", 1.0},
          {"pathloss_exp_beta", 2.0},
          {"noise_psd_N0", -100.0},
          {"bandwidth_B", 2e7}}},
        {"motion", {{"k1", 7.4}, {"k2", 0.29}, {"v_max", 1.0}}},
        {"grid",
         {{"xmin", 0.0},
          {"xmax", 60.0},
          {"ymin", 0.0},
          {"ymax", 60.0},
          {"spacing", 4.0}}},
        {"modes",
         json::array({{{"label", "unit"},
                       {"rate", 1.0},
                       {"a", 2.718281828459045},
                       {"g", 1.0},
                       {"gamma_p_dB", 0.0}}})},
        {"horizon", 3},
    };
}

simcore::Scenario load_lab(const json& j) {
    return simcore::load_scenario(j.dump(), ".");
}

double point_segment_dist(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                          const Eigen::Vector2d& b) {
    const Eigen::Vector2d ab = b - a;
    const double t =
        std::clamp(ab.squaredNorm() > 0.0 ? (p - a).dot(ab) / ab.squaredNorm()
                                          : 0.0,
                   0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

std::filesystem::path temp_log_path(const std::string& tag) {
    return std::filesystem::temp_directory_path() /
           ("jcmp_test_" + tag + ".jsonl");
}

} // namespace

TEST_CASE("load_scenario_file reads the shipped default") {
    const auto s = simcore::load_scenario_file(testutil::data_path("default_scenario.json"));
    CHECK(s.horizon == 3);
    CHECK(s.sense_traj.size() == 3);
    CHECK(s.eps_target == 0.01);
    CHECK(s.p_max == 4.0);
    CHECK(s.dt == 10.0);
    CHECK(s.data_D == 1e8);
    CHECK(s.modes.modes.size() == 6);
    CHECK(s.base_pos == Eigen::Vector2d(0.0, 0.0));
    // -100 dBm/Hz is 1e-13 W/Hz
    CHECK(s.channel.noise_psd_N0 == doctest::Approx(1e-13).epsilon(1e-12));
    CHECK(s.grid.contains(s.router_start));
    CHECK_NOTHROW(planner::validate(s.grid));
}

TEST_CASE("load_scenario accepts inline mode tables") {
    const auto s = load_lab(lab_scenario());
    CHECK(s.modes.modes.size() == 1);
    CHECK(s.modes.modes[0].rate_Rn == 1.0);
    CHECK(s.modes.modes[0].thresh_gamma_p == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.channel.noise_psd_N0 == doctest::Approx(1e-13).epsilon(1e-12));
}

TEST_CASE("load_scenario rejects malformed input with the offending key") {
    auto expect_error = [](const json& j, const std::string& needle) {
        try {
            simcore::load_scenario(j.dump(), ".");
            FAIL("expected ConfigError for ", needle);
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            INFO(msg);
            CHECK(msg.find(needle) != std::string::npos);
        }
    };

    auto j = lab_scenario();
    j["eps_target"] = 1.5;
    expect_error(j, "eps_target");

    j = lab_scenario();
    j.erase("sense_traj");
    expect_error(j, "sense_traj");

    j = lab_scenario();
    j["surprise"] = 1;
    expect_error(j, "surprise");

    j = lab_scenario();
    j["channel"]["fading_margin"] = 3.0;
    expect_error(j, "fading_margin");

    j = lab_scenario();
    j["horizon"] = 2;
    expect_error(j, "horizon");

    j = lab_scenario();
    j["router_start"] = {500.0, 500.0};
    expect_error(j, "router_start");

    j = lab_scenario();
    j["modes"] = 3;
    expect_error(j, "modes");

    j = lab_scenario();
    j["sense_traj"] = {{0.0, 1.0, 2.0}};
    expect_error(j, "sense_traj");

    CHECK_THROWS_AS(simcore::load_scenario("{ not json", "."), ConfigError);
}

TEST_CASE("scenario_hash is stable and content-sensitive") {
    const auto a = load_lab(lab_scenario());
    const auto b = load_lab(lab_scenario());
    CHECK(simcore::scenario_hash(a) == simcore::scenario_hash(b));
    CHECK(simcore::scenario_hash(a).size() == 16);
    CHECK(simcore::scenario_hash(a).find_first_not_of("0123456789abcdef") ==
          std::string::npos);

    auto j = lab_scenario();
    j["p_max"] = 9.0;
    CHECK(simcore::scenario_hash(load_lab(j)) != simcore::scenario_hash(a));
}

TEST_CASE("baseline run hugs the sense-base segment and meets the budget") {
    const auto s = load_lab(lab_scenario());
    const auto rep = simcore::run(s, simcore::PlannerKind::kBaseline);
    REQUIRE(rep.steps.size() == 3);
    CHECK(rep.kind == simcore::PlannerKind::kBaseline);
    CHECK(rep.scenario_hash == simcore::scenario_hash(s));

    const double diag = s.grid.spacing * std::sqrt(2.0);
    for (std::size_t t = 0; t < rep.steps.size(); ++t) {
        CHECK(point_segment_dist(rep.steps[t].router_pos, s.sense_traj[t],
                                 s.base_pos) <= diag + 1e-9);
        CHECK(rep.e2e_per[t] <= s.eps_target + 1e-12);
    }

    double motion = 0.0, comm = 0.0;
    for (const auto& st : rep.steps) {
        motion += st.motion_energy;
        comm += st.comm_energy;
    }
    CHECK(rep.motion_J == doctest::Approx(motion).epsilon(1e-12));
    CHECK(rep.comm_J == doctest::Approx(comm).epsilon(1e-12));
    CHECK(rep.total_J == doctest::Approx(motion + comm).epsilon(1e-12));
}

TEST_CASE("planner hierarchy orders total energy") {
    const auto s = load_lab(lab_scenario());
    const auto base = simcore::run(s, simcore::PlannerKind::kBaseline);
    const auto single = simcore::run(s, simcore::PlannerKind::kSingleStage);
    const auto multi = simcore::run(s, simcore::PlannerKind::kMultiStage);
    CHECK(single.total_J <= base.total_J + 1e-9);
    CHECK(multi.total_J <= single.total_J + 1e-9);
}

TEST_CASE("horizon-1 single and multi stage agree") {
    auto j = lab_scenario();
    j["sense_traj"] = {{0.0, 40.0}};
    j["horizon"] = 1;
    const auto s = load_lab(j);
    const auto single = simcore::run(s, simcore::PlannerKind::kSingleStage);
    const auto multi = simcore::run(s, simcore::PlannerKind::kMultiStage);
    REQUIRE(single.steps.size() == 1);
    REQUIRE(multi.steps.size() == 1);
    CHECK(single.steps[0].router_pos == multi.steps[0].router_pos);
    CHECK(single.total_J == doctest::Approx(multi.total_J).epsilon(1e-12));
}

TEST_CASE("runs are deterministic") {
    const auto s = load_lab(lab_scenario());
    for (auto kind : {simcore::PlannerKind::kBaseline,
                      simcore::PlannerKind::kSingleStage,
                      simcore::PlannerKind::kMultiStage}) {
        const auto r1 = simcore::run(s, kind);
        const auto r2 = simcore::run(s, kind);
        REQUIRE(r1.steps.size() == r2.steps.size());
        CHECK(r1.total_J == r2.total_J);
        for (std::size_t t = 0; t < r1.steps.size(); ++t) {
            CHECK(r1.steps[t].router_pos == r2.steps[t].router_pos);
            CHECK(r1.steps[t].link_sr.tx_power == r2.steps[t].link_sr.tx_power);
            CHECK(r1.steps[t].link_rb.tx_power == r2.steps[t].link_rb.tx_power);
        }
    }
}

TEST_CASE("compare reports savings against the baseline") {
    const auto s = load_lab(lab_scenario());
    const auto rec = simcore::compare(s);
    REQUIRE(rec.baseline.savings_vs_baseline.has_value());
    CHECK(*rec.baseline.savings_vs_baseline == 0.0);
    REQUIRE(rec.single_stage.savings_vs_baseline.has_value());
    REQUIRE(rec.multi_stage.savings_vs_baseline.has_value());
    CHECK(*rec.single_stage.savings_vs_baseline ==
          doctest::Approx(1.0 - rec.single_stage.total_J / rec.baseline.total_J)
              .epsilon(1e-12));
    CHECK(*rec.multi_stage.savings_vs_baseline >=
          *rec.single_stage.savings_vs_baseline - 1e-12);
}

TEST_CASE("with free motion all planners coincide") {
    auto j = lab_scenario();
    j["motion"]["k1"] = 0.0;
    j["motion"]["k2"] = 0.0;
    const auto s = load_lab(j);
    const auto rec = simcore::compare(s);
    CHECK(rec.single_stage.total_J ==
          doctest::Approx(rec.baseline.total_J).epsilon(1e-12));
    CHECK(rec.multi_stage.total_J ==
          doctest::Approx(rec.baseline.total_J).epsilon(1e-12));
}

TEST_CASE("infeasible scenarios fail with the step spelled out") {
    auto j = lab_scenario();
    j["p_max"] = 1e-4;
    const auto s = load_lab(j);
    try {
        simcore::run(s, simcore::PlannerKind::kBaseline);
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        CHECK(e.step() == 1);
        CHECK(std::string(e.what()).find("step 1") != std::string::npos);
        CHECK(e.shortfall_watts() > 0.0);
    }
}

TEST_CASE("monte_carlo_validate agrees with the closed form") {
    const auto s = load_lab(lab_scenario());
    const auto rep = simcore::run(s, simcore::PlannerKind::kMultiStage);
    const auto v = simcore::monte_carlo_validate(s, rep, 40000, 7);

    CHECK(v.kind == simcore::PlannerKind::kMultiStage);
    CHECK(v.seed == 7);
    CHECK(v.n_samples == 40000);
    REQUIRE(v.checks.size() == 2 * rep.steps.size());

    bool any_flag = false;
    for (const auto& c : v.checks) {
        CHECK((c.link == "sense->router" || c.link == "router->base"));
        CHECK(c.step >= 1);
        CHECK(c.step <= static_cast<int>(rep.steps.size()));
        CHECK(c.closed_form <= c.budget + 1e-12);
        CHECK(c.std_err > 0.0);
        // generous envelope; the tight closed-form oracle lives elsewhere
        CHECK(std::abs(c.empirical - c.closed_form) <= 6.0 * c.std_err);
        CHECK(c.flagged == (c.empirical > c.budget + 3.0 * c.std_err));
        any_flag = any_flag || c.flagged;
    }
    CHECK(v.all_ok == !any_flag);
}

TEST_CASE("monte_carlo_validate is reproducible per seed") {
    const auto s = load_lab(lab_scenario());
    const auto rep = simcore::run(s, simcore::PlannerKind::kSingleStage);
    const auto a = simcore::monte_carlo_validate(s, rep, 10000, 42);
    const auto b = simcore::monte_carlo_validate(s, rep, 10000, 42);
    REQUIRE(a.checks.size() == b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        CHECK(a.checks[i].empirical == b.checks[i].empirical);
        CHECK(a.checks[i].std_err == b.checks[i].std_err);
    }

    const auto c = simcore::monte_carlo_validate(s, rep, 10000, 43);
    bool differs = false;
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        differs = differs || (a.checks[i].empirical != c.checks[i].empirical);
    }
    CHECK(differs);
}

TEST_CASE("monte_carlo_validate enforces its sample floor") {
    const auto s = load_lab(lab_scenario());
    const auto rep = simcore::run(s, simcore::PlannerKind::kBaseline);
    CHECK_THROWS_AS(simcore::monte_carlo_validate(s, rep, 9999, 1),
                    std::domain_error);
    CHECK_THROWS_AS(simcore::monte_carlo_validate(s, rep, 0, 1),
                    std::domain_error);

    auto truncated = rep;
    truncated.steps.pop_back();
    CHECK_THROWS_AS(simcore::monte_carlo_validate(s, truncated, 10000, 1),
                    std::domain_error);
}

TEST_CASE("persist_run appends and read_run_log round-trips") {
    const auto path = temp_log_path("roundtrip");
    std::filesystem::remove(path);

    const auto s = load_lab(lab_scenario());
    const auto base = simcore::run(s, simcore::PlannerKind::kBaseline);
    const auto multi = simcore::run(s, simcore::PlannerKind::kMultiStage);
    simcore::persist_run(base, path.string());
    simcore::persist_run(multi, path.string());

    const auto records = simcore::read_run_log(path.string());
    REQUIRE(records.size() == 2);
    CHECK(records[0].planner == "baseline");
    CHECK(records[1].planner == "multi");
    CHECK(records[0].scenario_hash == simcore::scenario_hash(s));
    CHECK(records[0].total_J == base.total_J);
    CHECK(records[1].total_J == multi.total_J);
    CHECK(records[0].steps == 3);
    CHECK(records[0].timestamp.find('T') != std::string::npos);

    std::filesystem::remove(path);
}

TEST_CASE("read_run_log points at the corrupt line") {
    const auto path = temp_log_path("corrupt");
    std::filesystem::remove(path);

    const auto s = load_lab(lab_scenario());
    const auto rep = simcore::run(s, simcore::PlannerKind::kBaseline);
    simcore::persist_run(rep, path.string());
    {
        std::ofstream out(path, std::ios::app);
        out << "this is not a record\n";
    }
    simcore::persist_run(rep, path.string());

    try {
        simcore::read_run_log(path.string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("persist_run surfaces unwritable destinations") {
    const auto s = load_lab(lab_scenario());
    const auto rep = simcore::run(s, simcore::PlannerKind::kBaseline);
    CHECK_THROWS_AS(
        simcore::persist_run(rep, "/nonexistent_dir_zz/log.jsonl"),
        std::runtime_error);
}

TEST_CASE("planner kind names round-trip") {
    for (auto kind : {simcore::PlannerKind::kBaseline,
                      simcore::PlannerKind::kSingleStage,
                      simcore::PlannerKind::kMultiStage}) {
        CHECK(simcore::parse_planner_kind(simcore::to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(simcore::parse_planner_kind("optimal"), ConfigError);
}
