#include <jcmp/planner.hpp>

#include <jcmp/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace jcmp {
namespace planner {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* msg) {
    if (!ok) throw std::domain_error(msg);
}

} // namespace

int GridSpec::nx() const {
    return static_cast<int>(std::floor((xmax - xmin) / spacing + 1e-9)) + 1;
}

int GridSpec::ny() const {
    return static_cast<int>(std::floor((ymax - ymin) / spacing + 1e-9)) + 1;
}

Vec2 GridSpec::cell_center(int index) const {
    const int cols = nx();
    const int iy = index / cols;
    const int ix = index % cols;
    return Vec2(xmin + ix * spacing, ymin + iy * spacing);
}

bool GridSpec::contains(const Vec2& p) const {
    return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
}

void validate(const GridSpec& g) {
    require(g.spacing > 0.0, "GridSpec.spacing must be > 0");
    require(g.xmax >= g.xmin, "GridSpec x bounds are inverted");
    require(g.ymax >= g.ymin, "GridSpec y bounds are inverted");
}

void validate(const PlannerContext& ctx) {
    channel::validate(ctx.channel);
    channel::validate(ctx.modes);
    motion::validate(ctx.motion);
    require(ctx.dt > 0.0, "PlannerContext.dt must be > 0");
    require(ctx.data_D > 0.0, "PlannerContext.data_D must be > 0");
    require(ctx.eps_e2e > 0.0 && ctx.eps_e2e < 1.0,
            "PlannerContext.eps_e2e must be in (0,1)");
    require(ctx.p_max > 0.0, "PlannerContext.p_max must be > 0");
}

namespace {

// Per-link constants shared across the split search for one geometry.
struct LinkConst {
    double gain = 0.0;
    std::vector<double> per_floor;   // best achievable averaged PER at p_max
    std::vector<double> snr_at_eps;  // required mean SNR at the full budget
    std::vector<double> energy_coef; // energy = energy_coef * required SNR
};

LinkConst link_consts(double d, double eps_e2e, double data_D,
                      const channel::ChannelParams& ch,
                      const channel::ModeTable& tbl, double p_max,
                      double noise) {
    LinkConst lc;
    lc.gain = channel::path_gain(d, ch);
    const double snr_max = p_max * lc.gain / noise;
    lc.per_floor.reserve(tbl.modes.size());
    lc.snr_at_eps.reserve(tbl.modes.size());
    lc.energy_coef.reserve(tbl.modes.size());
    for (const auto& m : tbl.modes) {
        lc.per_floor.push_back(channel::per_rayleigh(snr_max, m));
        lc.snr_at_eps.push_back(channel::required_mean_snr(eps_e2e, m));
        lc.energy_coef.push_back(noise * data_D /
                                 (lc.gain * m.rate_Rn * ch.bandwidth_B));
    }
    return lc;
}

// Extra transmit power a link needs to carry half the e2e budget; used only
// to report which link was binding when no mode pair is feasible.
double even_split_shortfall(const LinkConst& lc, double eps_half,
                            const channel::ModeTable& tbl, double noise,
                            double p_max) {
    double p_min = kInf;
    for (const auto& m : tbl.modes)
        p_min = std::min(p_min,
                         channel::required_mean_snr(eps_half, m) * noise / lc.gain);
    return p_min - p_max;
}

} // namespace

std::pair<channel::LinkPlan, channel::LinkPlan>
relay_allocation(double d_sr, double d_rb, double eps_e2e, double data_D,
                 const channel::ChannelParams& ch,
                 const channel::ModeTable& tbl, double p_max) {
    require(d_sr > 0.0, "relay_allocation: d_sr must be > 0");
    require(d_rb > 0.0, "relay_allocation: d_rb must be > 0");
    require(eps_e2e > 0.0 && eps_e2e < 1.0,
            "relay_allocation: eps_e2e must be in (0,1)");
    require(data_D > 0.0, "relay_allocation: data_D must be > 0");
    require(p_max > 0.0, "relay_allocation: p_max must be > 0");

    const double noise = channel::noise_power(ch);
    const LinkConst sr = link_consts(d_sr, eps_e2e, data_D, ch, tbl, p_max, noise);
    const LinkConst rb = link_consts(d_rb, eps_e2e, data_D, ch, tbl, p_max, noise);
    const int n_modes = static_cast<int>(tbl.modes.size());

    // Split budgets stay strictly inside (0, eps_e2e) so required SNRs are
    // finite at both interval ends.
    const double lo_guard = eps_e2e * 1e-12;
    const double hi_guard = eps_e2e * (1.0 - 1e-12);

    double best_total = kInf;
    double best_eps1 = 0.0;
    int best_m1 = -1, best_m2 = -1;

    for (int i1 = 0; i1 < n_modes; ++i1) {
        for (int i2 = 0; i2 < n_modes; ++i2) {
            // Each split budget is below eps_e2e, so required SNRs exceed
            // the full-budget ones: a cheap lower bound to prune pairs.
            const double bound = sr.energy_coef[i1] * sr.snr_at_eps[i1] +
                                 rb.energy_coef[i2] * rb.snr_at_eps[i2];
            if (bound >= best_total) continue;

            // Feasible interval for eps_sr under the power cap on both
            // links; per_floor near 1 pushes hi below lo and the pair out.
            const double lo = std::max(sr.per_floor[i1], lo_guard);
            double hi = hi_guard;
            if (rb.per_floor[i2] > 0.0)
                hi = std::min(hi, 1.0 - (1.0 - eps_e2e) /
                                            (1.0 - rb.per_floor[i2]));
            if (!(lo < hi)) continue;

            const channel::TxMode& m1 = tbl.modes[i1];
            const channel::TxMode& m2 = tbl.modes[i2];
            auto energy_at = [&](double e1) {
                const double e2 = 1.0 - (1.0 - eps_e2e) / (1.0 - e1);
                if (!(e2 > 0.0 && e2 < 1.0)) return kInf;
                return sr.energy_coef[i1] * channel::required_mean_snr(e1, m1) +
                       rb.energy_coef[i2] * channel::required_mean_snr(e2, m2);
            };

            // Coarse scan locates the basin, golden-section refines it. The
            // search runs in log(eps_sr), making the 1e-8 termination width
            // a relative one.
            const double ulo = std::log(lo), uhi = std::log(hi);
            constexpr int kSeeds = 9;
            double seed_best_f = kInf;
            int seed_best_k = 0;
            for (int k = 0; k < kSeeds; ++k) {
                const double u = ulo + (uhi - ulo) * k / (kSeeds - 1);
                const double f = energy_at(std::exp(u));
                if (f < seed_best_f) {
                    seed_best_f = f;
                    seed_best_k = k;
                }
            }
            if (!(seed_best_f < kInf)) continue;

            double a = ulo + (uhi - ulo) * std::max(0, seed_best_k - 1) / (kSeeds - 1);
            double b = ulo + (uhi - ulo) * std::min(kSeeds - 1, seed_best_k + 1) / (kSeeds - 1);
            double u_best = ulo + (uhi - ulo) * seed_best_k / (kSeeds - 1);
            double f_best = seed_best_f;

            const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
            double x1 = b - invphi * (b - a);
            double x2 = a + invphi * (b - a);
            double f1 = energy_at(std::exp(x1));
            double f2 = energy_at(std::exp(x2));
            while (b - a > 1e-8) {
                if (f1 <= f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - invphi * (b - a);
                    f1 = energy_at(std::exp(x1));
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + invphi * (b - a);
                    f2 = energy_at(std::exp(x2));
                }
                if (f1 < f_best) { f_best = f1; u_best = x1; }
                if (f2 < f_best) { f_best = f2; u_best = x2; }
            }

            if (f_best < best_total) {
                best_total = f_best;
                best_eps1 = std::exp(u_best);
                best_m1 = i1;
                best_m2 = i2;
            }
        }
    }

    if (best_m1 < 0) {
        const double eps_half = 1.0 - std::sqrt(1.0 - eps_e2e);
        const double short_sr = even_split_shortfall(sr, eps_half, tbl, noise, p_max);
        const double short_rb = even_split_shortfall(rb, eps_half, tbl, noise, p_max);
        const bool sr_tighter = short_sr >= short_rb;
        throw InfeasibleError(
            "relay_allocation: no mode pair meets the PER budget at p_max; "
            "binding link " +
                std::string(sr_tighter ? "sense->router" : "router->base"),
            std::max(short_sr, short_rb),
            sr_tighter ? "sense->router" : "router->base");
    }

    const channel::TxMode& m1 = tbl.modes[best_m1];
    const channel::TxMode& m2 = tbl.modes[best_m2];
    const double e1 = best_eps1;
    const double e2 = 1.0 - (1.0 - eps_e2e) / (1.0 - e1);
    double p1 = channel::required_mean_snr(e1, m1) * noise / sr.gain;
    double p2 = channel::required_mean_snr(e2, m2) * noise / rb.gain;
    if (p1 > p_max * (1.0 + 1e-9) || p2 > p_max * (1.0 + 1e-9))
        throw std::logic_error("relay_allocation: split search left the feasible region");
    p1 = std::min(p1, p_max);
    p2 = std::min(p2, p_max);

    channel::LinkPlan plan_sr{best_m1, p1, e1,
                              p1 * data_D / (m1.rate_Rn * ch.bandwidth_B)};
    channel::LinkPlan plan_rb{best_m2, p2, e2,
                              p2 * data_D / (m2.rate_Rn * ch.bandwidth_B)};
    return {plan_sr, plan_rb};
}

std::vector<Candidate> enumerate_candidates(const Vec2& x_prev,
                                            const Vec2& sense_pos,
                                            const Vec2& base_pos,
                                            const GridSpec& grid,
                                            const PlannerContext& ctx) {
    validate(grid);
    validate(ctx);

    std::vector<Candidate> out;
    const int n = grid.num_cells();
    for (int c = 0; c < n; ++c) {
        const Vec2 pos = grid.cell_center(c);
        if (!motion::reachable(x_prev, pos, ctx.dt, ctx.motion)) continue;

        Candidate cand;
        cand.cell = c;
        cand.pos = pos;
        cand.motion_energy =
            motion::motion_energy((pos - x_prev).norm(), ctx.motion);

        const double d_sr = (sense_pos - pos).norm();
        const double d_rb = (base_pos - pos).norm();
        if (d_sr > 0.0 && d_rb > 0.0) {
            try {
                auto [link_sr, link_rb] = relay_allocation(
                    d_sr, d_rb, ctx.eps_e2e, ctx.data_D, ctx.channel,
                    ctx.modes, ctx.p_max);
                cand.feasible = true;
                cand.link_sr = link_sr;
                cand.link_rb = link_rb;
                cand.comm_energy = link_sr.energy + link_rb.energy;
            } catch (const InfeasibleError&) {
                // cell stays marked infeasible
            }
        }
        out.push_back(cand);
    }
    return out;
}

namespace {

// Re-derive the most informative infeasibility for a candidate set with no
// feasible member: re-run the allocation at the reachable cell with the
// shortest combined hop length and propagate its shortfall.
[[noreturn]] void throw_no_feasible_cell(const char* planner,
                                         const std::vector<Candidate>& cands,
                                         const Vec2& sense_pos,
                                         const Vec2& base_pos,
                                         const PlannerContext& ctx) {
    const std::string who(planner);
    if (cands.empty())
        throw InfeasibleError(who + ": no grid cell is reachable within one step");

    const Candidate* closest = nullptr;
    double best_span = kInf;
    for (const auto& c : cands) {
        const double span =
            (sense_pos - c.pos).norm() + (base_pos - c.pos).norm();
        const double d_sr = (sense_pos - c.pos).norm();
        const double d_rb = (base_pos - c.pos).norm();
        if (d_sr <= 0.0 || d_rb <= 0.0) continue;
        if (span < best_span) {
            best_span = span;
            closest = &c;
        }
    }
    if (!closest)
        throw InfeasibleError(who + ": every reachable cell is collocated with an endpoint");

    try {
        relay_allocation((sense_pos - closest->pos).norm(),
                         (base_pos - closest->pos).norm(), ctx.eps_e2e,
                         ctx.data_D, ctx.channel, ctx.modes, ctx.p_max);
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(who + ": no reachable cell meets the PER budget (" +
                                  e.what() + ")",
                              e.shortfall_watts(), e.binding_link());
    }
    throw InfeasibleError(who + ": no reachable cell meets the PER budget");
}

StepDecision decision_from(const Candidate& c) {
    StepDecision d;
    d.router_pos = c.pos;
    d.link_sr = c.link_sr;
    d.link_rb = c.link_rb;
    d.motion_energy = c.motion_energy;
    d.comm_energy = c.comm_energy;
    return d;
}

// Shared argmin over feasible candidates: strict ordering on (key, distance
// to the previous position, cell index) keeps every planner deterministic.
template <typename KeyFn>
const Candidate* select_candidate(const std::vector<Candidate>& cands,
                                  const Vec2& x_prev, KeyFn key) {
    const Candidate* best = nullptr;
    double best_key = kInf;
    double best_dist = kInf;
    for (const auto& c : cands) {
        if (!c.feasible) continue;
        const double k = key(c);
        const double dist = (c.pos - x_prev).norm();
        if (!best || k < best_key ||
            (k == best_key && dist < best_dist)) {
            best = &c;
            best_key = k;
            best_dist = dist;
        }
    }
    return best;
}

} // namespace

StepDecision comm_baseline_step(const Vec2& x_prev, const Vec2& sense_pos,
                                const Vec2& base_pos, const GridSpec& grid,
                                const PlannerContext& ctx) {
    const auto cands = enumerate_candidates(x_prev, sense_pos, base_pos, grid, ctx);
    const Candidate* best = select_candidate(
        cands, x_prev, [](const Candidate& c) { return c.comm_energy; });
    if (!best)
        throw_no_feasible_cell("comm_baseline_step", cands, sense_pos, base_pos, ctx);
    return decision_from(*best);
}

StepDecision single_stage_step(const Vec2& x_prev, const Vec2& sense_pos,
                               const Vec2& base_pos, const GridSpec& grid,
                               const PlannerContext& ctx) {
    const auto cands = enumerate_candidates(x_prev, sense_pos, base_pos, grid, ctx);
    const Candidate* best = select_candidate(
        cands, x_prev,
        [](const Candidate& c) { return c.motion_energy + c.comm_energy; });
    if (!best)
        throw_no_feasible_cell("single_stage_step", cands, sense_pos, base_pos, ctx);
    return decision_from(*best);
}

std::pair<std::vector<StepDecision>, ValueTable>
multi_stage_plan(const Vec2& x0, const std::vector<Vec2>& sense_traj,
                 const Vec2& base_pos, const GridSpec& grid,
                 const PlannerContext& ctx) {
    validate(grid);
    validate(ctx);
    require(!sense_traj.empty(), "multi_stage_plan: sense_traj must not be empty");

    const int T = static_cast<int>(sense_traj.size());
    const int n = grid.num_cells();

    std::vector<Vec2> centers(n);
    for (int c = 0; c < n; ++c) centers[c] = grid.cell_center(c);

    // One relay allocation per (stage, cell); cells collocated with either
    // endpoint have no usable link and stay infeasible.
    struct CellComm {
        bool feasible = false;
        channel::LinkPlan sr, rb;
        double energy = kInf;
    };
    std::vector<std::vector<CellComm>> comm(T, std::vector<CellComm>(n));
    for (int t = 0; t < T; ++t) {
        bool any = false;
        double min_short = kInf;
        std::string binding;
        for (int c = 0; c < n; ++c) {
            const double d_sr = (sense_traj[t] - centers[c]).norm();
            const double d_rb = (base_pos - centers[c]).norm();
            if (d_sr <= 0.0 || d_rb <= 0.0) continue;
            try {
                auto [sr, rb] = relay_allocation(d_sr, d_rb, ctx.eps_e2e,
                                                 ctx.data_D, ctx.channel,
                                                 ctx.modes, ctx.p_max);
                comm[t][c] = {true, sr, rb, sr.energy + rb.energy};
                any = true;
            } catch (const InfeasibleError& e) {
                if (e.shortfall_watts() < min_short) {
                    min_short = e.shortfall_watts();
                    binding = e.binding_link();
                }
            }
        }
        if (!any)
            throw InfeasibleError("multi_stage_plan: no feasible cell at step " +
                                      std::to_string(t + 1),
                                  min_short, binding, t + 1);
    }

    // Reachability between cell centers is stage-independent.
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (int c = 0; c < n; ++c) {
        for (int m = 0; m < n; ++m) {
            if (!motion::reachable(centers[c], centers[m], ctx.dt, ctx.motion))
                continue;
            adj[c].emplace_back(m, (centers[m] - centers[c]).norm());
        }
    }

    ValueTable vt;
    vt.values.assign(T + 1, Eigen::VectorXd::Constant(n, kInf));
    vt.values[T] = Eigen::VectorXd::Zero(n);
    vt.best_next.assign(T, Eigen::VectorXi::Constant(n, -1));

    for (int t = T - 1; t >= 0; --t) {
        for (int c = 0; c < n; ++c) {
            double best = kInf;
            int arg = -1;
            for (const auto& [m, dist] : adj[c]) {
                if (!comm[t][m].feasible) continue;
                const double tail = vt.values[t + 1](m);
                if (!(tail < kInf)) continue;
                const double cost = motion::motion_energy(dist, ctx.motion) +
                                    comm[t][m].energy + tail;
                if (cost < best) {
                    best = cost;
                    arg = m;
                }
            }
            vt.values[t](c) = best;
            vt.best_next[t](c) = arg;
        }
    }

    // Forward pass. The first step scans from x0 directly since the start
    // position need not sit on the grid.
    std::vector<StepDecision> steps;
    steps.reserve(T);
    double planned = kInf;
    int cur = -1;
    {
        double best = kInf;
        int arg = -1;
        double arg_motion = 0.0;
        for (int m = 0; m < n; ++m) {
            if (!comm[0][m].feasible) continue;
            if (!(vt.values[1](m) < kInf)) continue;
            if (!motion::reachable(x0, centers[m], ctx.dt, ctx.motion)) continue;
            const double mot =
                motion::motion_energy((centers[m] - x0).norm(), ctx.motion);
            const double cost = mot + comm[0][m].energy + vt.values[1](m);
            if (cost < best) {
                best = cost;
                arg = m;
                arg_motion = mot;
            }
        }
        if (arg < 0)
            throw InfeasibleError(
                "multi_stage_plan: no feasible plan from the start position at step 1",
                0.0, {}, 1);
        StepDecision d;
        d.router_pos = centers[arg];
        d.link_sr = comm[0][arg].sr;
        d.link_rb = comm[0][arg].rb;
        d.motion_energy = arg_motion;
        d.comm_energy = comm[0][arg].energy;
        steps.push_back(d);
        planned = best;
        cur = arg;
    }

    for (int t = 1; t < T; ++t) {
        const int nxt = vt.best_next[t](cur);
        if (nxt < 0)
            throw std::logic_error("multi_stage_plan: policy chain broke at step " +
                                   std::to_string(t + 1));
        StepDecision d;
        d.router_pos = centers[nxt];
        d.link_sr = comm[t][nxt].sr;
        d.link_rb = comm[t][nxt].rb;
        d.motion_energy =
            motion::motion_energy((centers[nxt] - centers[cur]).norm(), ctx.motion);
        d.comm_energy = comm[t][nxt].energy;
        steps.push_back(d);
        cur = nxt;
    }

    double total = 0.0;
    for (const auto& s : steps) total += s.motion_energy + s.comm_energy;
    if (std::abs(total - planned) > 1e-9 * std::max(1.0, std::abs(planned)))
        throw std::logic_error(
            "multi_stage_plan: forward pass diverged from the value table");

    return {std::move(steps), std::move(vt)};
}

} // namespace planner
} // namespace jcmp
