#ifndef JCMP_SIMCORE_HPP
#define JCMP_SIMCORE_HPP

#include <jcmp/channel.hpp>
#include <jcmp/motion.hpp>
#include <jcmp/planner.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace jcmp {
namespace simcore {

using Vec2 = Eigen::Vector2d;

enum class PlannerKind { kBaseline, kSingleStage, kMultiStage };

const char* to_string(PlannerKind kind);
PlannerKind parse_planner_kind(const std::string& name); // throws ConfigError

// Fully validated simulation input. The horizon always equals the length of
// sense_traj after loading.
struct Scenario {
    Vec2 base_pos = Vec2::Zero();
    std::vector<Vec2> sense_traj;
    Vec2 router_start = Vec2::Zero();
    double dt = 1.0;       // s
    double data_D = 1.0;   // bits per step
    double eps_target = 0.01;
    double p_max = 1.0;    // W
    channel::ChannelParams channel;
    channel::ModeTable modes;
    motion::MotionParams motion;
    planner::GridSpec grid;
    int horizon = 0;
};

void validate(const Scenario& s);

// Everything the planners need from a scenario besides geometry.
planner::PlannerContext planner_context(const Scenario& s);

// Parse and validate a scenario from JSON text. A "modes" entry may be an
// inline mode array or a file path, resolved against base_dir.
Scenario load_scenario(const std::string& json_text,
                       const std::string& base_dir = ".");
Scenario load_scenario_file(const std::string& path);

// FNV-1a digest of the canonicalized scenario, as 16 hex digits. Stable
// across runs of the same loaded scenario, used to tag persisted runs.
std::string scenario_hash(const Scenario& s);

struct TrajectoryReport {
    PlannerKind kind = PlannerKind::kBaseline;
    std::string scenario_hash;
    std::vector<planner::StepDecision> steps;
    std::vector<double> e2e_per; // one per step, from the committed plans
    double motion_J = 0.0;
    double comm_J = 0.0;
    double total_J = 0.0;
    std::optional<double> savings_vs_baseline; // fraction, set by compare()
};

// Execute one scenario with the chosen planner. Steps follow an
// observe/orient/decide/act loop; the multi-stage planner decides the whole
// horizon up front and the loop only commits its decisions. Every committed
// step is re-checked against the PER budget, power cap and reachability
// independently of the planner's own arithmetic.
TrajectoryReport run(const Scenario& s, PlannerKind kind);

struct ComparisonRecord {
    TrajectoryReport baseline;
    TrajectoryReport single_stage;
    TrajectoryReport multi_stage;
};

// Run all three planners and fill savings_vs_baseline on each report.
ComparisonRecord compare(const Scenario& s);

// One empirical PER check of a committed link plan under sampled fading.
struct LinkCheck {
    int step = 0; // 1-based
    std::string link;      // "sense->router" or "router->base"
    double budget = 0.0;   // planned averaged PER
    double closed_form = 0.0;
    double empirical = 0.0;
    double std_err = 0.0;  // of the empirical mean
    bool flagged = false;  // empirical > budget + 3 * std_err
};

struct ValidationRecord {
    std::string scenario_hash;
    PlannerKind kind = PlannerKind::kBaseline;
    std::uint64_t seed = 0;
    long n_samples = 0;
    std::vector<LinkCheck> checks;
    bool all_ok = true;
};

// Draw n_samples exponential SNR realizations per committed link and compare
// the empirical mean of the instantaneous PER against the planned budget.
// Deterministic for a given seed; requires n_samples >= 10^4.
ValidationRecord monte_carlo_validate(const Scenario& s,
                                      const TrajectoryReport& report,
                                      long n_samples, std::uint64_t seed);

// Append-only run log, one JSON record per line.
struct RunRecord {
    std::string scenario_hash;
    std::string planner;
    long steps = 0;
    double motion_J = 0.0;
    double comm_J = 0.0;
    double total_J = 0.0;
    std::string timestamp; // ISO 8601 UTC
};

void persist_run(const TrajectoryReport& report, const std::string& path);
std::vector<RunRecord> read_run_log(const std::string& path);

} // namespace simcore
} // namespace jcmp

#endif
