#ifndef JCMP_PLANNER_HPP
#define JCMP_PLANNER_HPP

#include <jcmp/channel.hpp>
#include <jcmp/motion.hpp>

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace jcmp {
namespace planner {

using Vec2 = Eigen::Vector2d;

// Uniform rectangular search grid for the router position. Cells are indexed
// row-major: index = iy * nx() + ix, center at (xmin + ix*h, ymin + iy*h).
struct GridSpec {
    double xmin = 0.0;
    double xmax = 0.0;
    double ymin = 0.0;
    double ymax = 0.0;
    double spacing = 1.0;

    int nx() const;
    int ny() const;
    int num_cells() const { return nx() * ny(); }
    Vec2 cell_center(int index) const;
    bool contains(const Vec2& p) const;
};

void validate(const GridSpec& g);

// Everything the planners need from a scenario besides geometry.
struct PlannerContext {
    channel::ChannelParams channel;
    channel::ModeTable modes;
    motion::MotionParams motion;
    double dt = 1.0;      // step duration, s
    double data_D = 1.0;  // bits to deliver per step
    double eps_e2e = 0.01;
    double p_max = 1.0;   // W
};

void validate(const PlannerContext& ctx);

struct StepDecision {
    Vec2 router_pos = Vec2::Zero();
    channel::LinkPlan link_sr; // sensing robot -> router
    channel::LinkPlan link_rb; // router -> base station
    double motion_energy = 0.0;
    double comm_energy = 0.0;
    double total() const { return motion_energy + comm_energy; }
};

// One reachable grid cell with its communication plan. Cells where no mode
// pair meets the PER budget at p_max stay marked infeasible instead of
// carrying a penalty cost.
struct Candidate {
    int cell = -1;
    Vec2 pos = Vec2::Zero();
    bool feasible = false;
    channel::LinkPlan link_sr;
    channel::LinkPlan link_rb;
    double comm_energy = 0.0;
    double motion_energy = 0.0; // for the leg from x_prev
};

// Cost-to-go of the backward induction. values[t](c) is the optimal energy
// of steps t+1..T when the router starts step t+1 at cell c; values[T] is the
// all-zero terminal row. best_next[t](c) is the argmin cell for step t+1,
// -1 where no feasible continuation exists (value +inf).
struct ValueTable {
    std::vector<Eigen::VectorXd> values;    // T+1 rows of num_cells
    std::vector<Eigen::VectorXi> best_next; // T rows of num_cells
};

// Minimum-energy relay plan over (mode_sr, mode_rb, PER split). The split
// search runs golden-section on eps_sr with eps_rb = 1 - (1-eps_e2e)/(1-eps_sr)
// for every mode pair; ties go to the lowest (mode_sr, mode_rb) pair.
std::pair<channel::LinkPlan, channel::LinkPlan>
relay_allocation(double d_sr, double d_rb, double eps_e2e, double data_D,
                 const channel::ChannelParams& ch,
                 const channel::ModeTable& tbl, double p_max);

// All grid cells reachable from x_prev within one step, with relay plans
// where feasible. This is the candidate set the planners select from.
std::vector<Candidate> enumerate_candidates(const Vec2& x_prev,
                                            const Vec2& sense_pos,
                                            const Vec2& base_pos,
                                            const GridSpec& grid,
                                            const PlannerContext& ctx);

// Cheapest communication among reachable cells, motion ignored in the
// objective (still reported). Ties go to the cell closer to x_prev.
StepDecision comm_baseline_step(const Vec2& x_prev, const Vec2& sense_pos,
                                const Vec2& base_pos, const GridSpec& grid,
                                const PlannerContext& ctx);

// Greedy one-step minimizer of motion + communication energy.
StepDecision single_stage_step(const Vec2& x_prev, const Vec2& sense_pos,
                               const Vec2& base_pos, const GridSpec& grid,
                               const PlannerContext& ctx);

// Finite-horizon optimum via backward induction over the grid, then a
// forward pass from x0 (which need not be a grid cell).
std::pair<std::vector<StepDecision>, ValueTable>
multi_stage_plan(const Vec2& x0, const std::vector<Vec2>& sense_traj,
                 const Vec2& base_pos, const GridSpec& grid,
                 const PlannerContext& ctx);

} // namespace planner
} // namespace jcmp

#endif
