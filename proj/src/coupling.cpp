#include "idla/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "idla/idla_process.hpp"

namespace idla {

MaximalCouplingDraw maximal_coupling_sample(const std::vector<double>& p,
                                            const std::vector<double>& q, Rng& rng) {
    if (p.size() != q.size() || p.empty()) {
        throw std::invalid_argument("maximal_coupling_sample: mismatched supports");
    }
    const std::size_t n = p.size();
    double overlap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        overlap += std::min(p[i], q[i]);
    }
    MaximalCouplingDraw d;
    const double u = rng.unit();
    if (u < overlap) {
        // Draw from min(p,q)/overlap; reusing u keeps this a single uniform.
        const double target = u;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += std::min(p[i], q[i]);
            if (target < acc) {
                d.x = d.x2 = static_cast<int>(i);
                d.coupled = true;
                return d;
            }
        }
        d.x = d.x2 = static_cast<int>(n) - 1;
        d.coupled = true;
        return d;
    }
    // Residual draws: X from (p - min)^+, X' from (q - min)^+, independent.
    auto residual_draw = [&](const std::vector<double>& f, const std::vector<double>& o) {
        const double mass = 1.0 - overlap;
        double target = rng.unit() * mass;
        double acc = 0.0;
        int last = -1;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = f[i] - std::min(f[i], o[i]);
            if (r > 0.0) {
                acc += r;
                last = static_cast<int>(i);
                if (target < acc) {
                    return static_cast<int>(i);
                }
            }
        }
        return last;
    };
    d.x = residual_draw(p, q);
    d.x2 = residual_draw(q, p);
    d.coupled = false;
    return d;
}

SkeletonDraw sample_skeleton_to_level(long long y0, long long target, unsigned long long move_cap,
                                      Rng& rng) {
    SkeletonDraw d;
    long long y = y0;
    while (y != target) {
        if (d.vertical_moves >= move_cap) {
            d.capped = true;
            return d;
        }
        d.horizontal_steps += rng.geometric_half();
        y += rng.bit() ? 1 : -1;
        ++d.vertical_moves;
    }
    return d;
}

CouplingOutcome level_crossing_coupled_pair(const BaseGraph& g, const PowerCache& rows, int v,
                                            int v2, long long y0, long long target,
                                            unsigned long long move_cap, Rng& rng) {
    if (v < 0 || v >= g.n() || v2 < 0 || v2 >= g.n()) {
        throw std::invalid_argument("level_crossing_coupled_pair: vertex out of range");
    }
    if (target <= y0) {
        throw std::invalid_argument("level_crossing_coupled_pair: target must exceed start level");
    }
    CouplingOutcome out;
    out.skeleton = sample_skeleton_to_level(y0, target, move_cap, rng);
    if (out.skeleton.capped) {
        out.failure = "cap";
        return out;
    }
    const auto s = static_cast<long long>(out.skeleton.horizontal_steps);
    const MaximalCouplingDraw d =
        maximal_coupling_sample(rows.row(s, v), rows.row(s, v2), rng);
    out.arrival_v = d.x;
    out.arrival_v2 = d.x2;
    out.coupled = d.coupled;
    if (!d.coupled) {
        out.failure = "tv-miss";
    }
    return out;
}

AlignedPair mismatched_start_alignment(const BaseGraph& g, CylinderSite a, CylinderSite b,
                                       const WalkConfig& cfg, Rng& rng) {
    if (a.y == b.y) {
        return {a, b, 0, false};
    }
    const bool a_lower = a.y < b.y;
    const CylinderSite lower = a_lower ? a : b;
    const long long high = a_lower ? b.y : a.y;
    HitResult hr = hit_level(g, lower, high, cfg, rng);
    AlignedPair out;
    out.steps = hr.state.steps_total;
    out.aborted = hr.state.aborted;
    out.a = a_lower ? hr.arrival : a;
    out.b = a_lower ? b : hr.arrival;
    return out;
}

// ---------------------------------------------------------------------------

std::string couple_mode_name(CoupleMode mode) {
    return mode == CoupleMode::shared_stacks ? "shared_stacks" : "pairwise_maximal";
}

std::string CoalescenceRecord::csv_header() {
    return "seed,N,family,mode,coalescence_time_or_censored,tv_debt,stages_failed";
}

std::string CoalescenceRecord::csv_row() const {
    std::ostringstream os;
    os << seed << ',' << n << ',' << family << ',' << couple_mode_name(mode) << ',';
    if (censored) {
        os << "censored";
    } else {
        os << coalescence_time;
    }
    os << ',' << tv_debt << ',' << stages_failed;
    return os.str();
}

namespace {

struct PairRelease {
    CylinderSite exit_a;
    CylinderSite exit_b;
    long long epsilon_units = 0;  // each unit is one epsilon of TV debt
    bool aborted = false;
};

// One pairwise-coupled release: both walkers start at (drop_v, 0), share the
// vertical skeleton and, below the floor, are joined by maximal coupling of
// the exact s-step rows (or a shared stationary draw past the mixing
// horizon).  The first walker to settle leaves the other to finish solo.
PairRelease pairwise_release(const ClusterState& a, const ClusterState& b, int drop_v,
                             const BaseGraph& g, const PowerCache& rows, const DiscreteSampler& pi,
                             const PairOptions& opt, const WalkConfig& solo_cfg, Rng& shared,
                             Rng& ra, Rng& rb) {
    PairRelease out;
    int va = drop_v;
    int vb = drop_v;
    long long y = 0;
    bool act_a = true;
    bool act_b = true;
    unsigned long long steps = 0;
    while (act_a && act_b) {
        if (++steps > solo_cfg.step_cap) {
            out.aborted = true;
            return out;
        }
        if (shared.bit()) {
            if (shared.bit()) {
                const long long ny = y + 1;
                if (!a.occupied({va, ny})) {
                    out.exit_a = {va, ny};
                    act_a = false;
                }
                if (!b.occupied({vb, ny})) {
                    out.exit_b = {vb, ny};
                    act_b = false;
                }
                y = ny;
            } else if (y == 0) {
                // Joint below-floor dive on the shared skeleton.
                long long depth = -1;
                long long h = 0;
                bool truncated = false;
                unsigned long long moves = 0;
                while (depth < 0) {
                    if (++moves > opt.skeleton_move_cap) {
                        out.aborted = true;
                        return out;
                    }
                    if (shared.bit()) {
                        depth += shared.bit() ? 1 : -1;
                    } else if (++h > opt.tau_eps) {
                        truncated = true;
                        break;
                    }
                }
                if (truncated) {
                    va = vb = pi.sample(shared);
                    out.epsilon_units += 2;
                } else {
                    const MaximalCouplingDraw d =
                        maximal_coupling_sample(rows.row(h, va), rows.row(h, vb), shared);
                    va = d.x;
                    vb = d.x2;
                }
            } else {
                const long long ny = y - 1;
                if (!a.occupied({va, ny})) {
                    out.exit_a = {va, ny};
                    act_a = false;
                }
                if (!b.occupied({vb, ny})) {
                    out.exit_b = {vb, ny};
                    act_b = false;
                }
                y = ny;
            }
        } else if (va == vb) {
            // Identical positions share the horizontal draw and stay glued.
            if (shared.bit()) {
                const auto& nb = g.neighbors(va);
                const int w = nb[shared.below(static_cast<std::uint32_t>(nb.size()))];
                if (!a.occupied({w, y})) {
                    out.exit_a = {w, y};
                    act_a = false;
                }
                if (!b.occupied({w, y})) {
                    out.exit_b = {w, y};
                    act_b = false;
                }
                va = vb = w;
            }
        } else {
            if (ra.bit()) {
                const auto& nb = g.neighbors(va);
                const int w = nb[ra.below(static_cast<std::uint32_t>(nb.size()))];
                if (!a.occupied({w, y})) {
                    out.exit_a = {w, y};
                    act_a = false;
                }
                va = w;
            }
            if (rb.bit()) {
                const auto& nb = g.neighbors(vb);
                const int w = nb[rb.below(static_cast<std::uint32_t>(nb.size()))];
                if (!b.occupied({w, y})) {
                    out.exit_b = {w, y};
                    act_b = false;
                }
                vb = w;
            }
        }
    }
    if (act_a) {
        const ExitResult er = walk_until_exit(g, a, {va, y}, solo_cfg, pi, ra);
        if (er.state.aborted) {
            out.aborted = true;
            return out;
        }
        out.exit_a = er.exit;
        out.epsilon_units += static_cast<long long>(er.state.ff_shortcuts);
    }
    if (act_b) {
        const ExitResult er = walk_until_exit(g, b, {vb, y}, solo_cfg, pi, rb);
        if (er.state.aborted) {
            out.aborted = true;
            return out;
        }
        out.exit_b = er.exit;
        out.epsilon_units += static_cast<long long>(er.state.ff_shortcuts);
    }
    return out;
}

}  // namespace

CoalescenceRecord coupled_idla_pair(ClusterState a, ClusterState b, CoupleMode mode,
                                    std::uint64_t seed, long long budget, const PairOptions& opt) {
    if (opt.tau_eps < 0) {
        throw std::invalid_argument("coupled_idla_pair: tau_eps not set");
    }
    if (a.graph().n() != b.graph().n()) {
        throw std::invalid_argument("coupled_idla_pair: mismatched base graphs");
    }
    a.downshift();
    b.downshift();
    if (a.size_above() != b.size_above()) {
        throw std::invalid_argument("coupled_idla_pair: particle counts differ");
    }
    const auto g = a.graph_ptr();
    CoalescenceRecord rec;
    rec.seed = seed;
    rec.n = g->n();
    rec.family = g->family();
    rec.mode = mode;
    rec.budget = budget;

    InstructionStacks stacks(g, seed);
    const long long shift0_a = a.cumulative_shift();
    const long long shift0_b = b.cumulative_shift();
    auto identical = [&]() {
        return a.same_shape(b) &&
               (a.cumulative_shift() - shift0_a) == (b.cumulative_shift() - shift0_b);
    };

    long long t_co = identical() ? 0 : -1;
    if (t_co < 0 && mode == CoupleMode::shared_stacks) {
        const int cons_a = stacks.new_consumer();
        const int cons_b = stacks.new_consumer();
        const StackWalkConfig swc{true, opt.epsilon, opt.tau_eps, opt.read_cap};
        for (long long t = 1; t <= budget; ++t) {
            const int dv = stacks.drop_vertex(static_cast<std::uint64_t>(t));
            const StackStepResult sa =
                stack_walker(a, a.cumulative_shift() - shift0_a, stacks, cons_a,
                             static_cast<std::uint64_t>(t), dv, swc);
            if (sa.aborted) {
                ++rec.aborted_walkers;
                break;
            }
            a.settle(sa.settled);
            a.downshift();
            const StackStepResult sb =
                stack_walker(b, b.cumulative_shift() - shift0_b, stacks, cons_b,
                             static_cast<std::uint64_t>(t), dv, swc);
            if (sb.aborted) {
                ++rec.aborted_walkers;
                break;
            }
            b.settle(sb.settled);
            b.downshift();
            rec.tv_debt += static_cast<double>(sa.truncated_dives + sb.truncated_dives) * opt.epsilon;
            if (identical()) {
                t_co = t;
                break;
            }
        }
    } else if (t_co < 0) {
        const PowerCache rows(*g);
        const DiscreteSampler pi(stationary_distribution(*g).values());
        WalkConfig solo_cfg;
        solo_cfg.mode = WalkMode::fast_forward;
        solo_cfg.epsilon = opt.epsilon;
        solo_cfg.tau_eps = opt.tau_eps;
        solo_cfg.step_cap = opt.read_cap;
        Rng shared(derive_seed(seed, purpose_tag(StreamPurpose::coupling), 0));
        Rng ra(derive_seed(seed, purpose_tag(StreamPurpose::walker), 1));
        Rng rb(derive_seed(seed, purpose_tag(StreamPurpose::walker), 2));
        for (long long t = 1; t <= budget; ++t) {
            const int dv = stacks.drop_vertex(static_cast<std::uint64_t>(t));
            const PairRelease pr =
                pairwise_release(a, b, dv, *g, rows, pi, opt, solo_cfg, shared, ra, rb);
            if (pr.aborted) {
                ++rec.aborted_walkers;
                break;
            }
            a.settle(pr.exit_a);
            a.downshift();
            b.settle(pr.exit_b);
            b.downshift();
            rec.tv_debt += static_cast<double>(pr.epsilon_units) * opt.epsilon;
            if (identical()) {
                t_co = t;
                break;
            }
        }
    }
    rec.coalescence_time = t_co;
    rec.censored = t_co < 0;
    if (!rec.censored && opt.verify_window > 0) {
        // Drive both chains with identically seeded fresh streams; identical
        // states plus identical randomness must stay identical.
        const std::uint64_t vs = derive_seed(seed, purpose_tag(StreamPurpose::glue));
        Rng rga(vs);
        Rng rgb(vs);
        const DiscreteSampler pi(stationary_distribution(*g).values());
        WalkConfig cfg;
        cfg.mode = WalkMode::fast_forward;
        cfg.epsilon = opt.epsilon;
        cfg.tau_eps = opt.tau_eps;
        cfg.step_cap = opt.read_cap;
        bool stick = true;
        for (long long w = 0; w < opt.verify_window; ++w) {
            const int wa = pi.sample(rga);
            const int wb = pi.sample(rgb);
            const ExitResult ea = walk_until_exit(*g, a, {wa, a.k()}, cfg, pi, rga);
            const ExitResult eb = walk_until_exit(*g, b, {wb, b.k()}, cfg, pi, rgb);
            if (ea.state.aborted || eb.state.aborted) {
                ++rec.aborted_walkers;
                stick = false;
                break;
            }
            a.settle(ea.exit);
            a.downshift();
            b.settle(eb.exit);
            b.downshift();
            if (!identical()) {
                stick = false;
                break;
            }
        }
        rec.stick_verified = stick;
    }
    return rec;
}

ClusterState capture_typical_state(std::shared_ptr<const BaseGraph> g, std::uint64_t seed,
                                   const WalkConfig& cfg) {
    const int n = g->n();
    WalkContext ctx(g, cfg);
    Rng rng(derive_seed(seed, purpose_tag(StreamPurpose::release)));
    ClusterState c(std::move(g));
    const double ln = std::log(static_cast<double>(n));
    const long long burn = 5ll * n * static_cast<long long>(std::ceil(ln * ln));
    for (long long t = 0; t < burn; ++t) {
        shifted_step(c, ctx, rng);
    }
    // Continue until the captured state holds exactly N particles above the
    // rectangle, so states captured from different seeds are comparable.
    for (long long guard = 0; c.size_above() != n; ++guard) {
        if (guard > 1'000'000) {
            throw std::runtime_error("capture_typical_state: size target never reached");
        }
        shifted_step(c, ctx, rng);
    }
    return c;
}

WaterLevelRecord water_level_run(const BaseGraph& g, long long total_walkers,
                                 const WaterLevelOptions& opt, Rng& rng) {
    if (total_walkers < 1) {
        throw std::invalid_argument("water_level_run: need at least one walker");
    }
    double a = opt.a_coeff;
    if (a < 0.0) {
        a = (static_cast<double>(opt.gamma) + 1.0) / quasi_regularity(g).delta;
    }
    const int n = g.n();
    const double ln = std::log(static_cast<double>(n));
    const long long per_stage =
        std::max<long long>(1, static_cast<long long>(std::ceil(a * n * ln)));
    const long long stages = (total_walkers + per_stage - 1) / per_stage;

    const DiscreteSampler pi(stationary_distribution(g).values());
    WaterLevelRecord rec;
    rec.releases_per_stage = per_stage;
    std::vector<LevelMask> field;
    field.reserve(static_cast<std::size_t>(stages));
    long long remaining = total_walkers;
    for (long long ell = 1; ell <= stages; ++ell) {
        field.emplace_back(n);
        LevelMask& level = field.back();
        WaterStage stage;
        stage.level = ell;
        stage.releases = std::min(per_stage, remaining);
        remaining -= stage.releases;
        for (long long i = 0; i < stage.releases; ++i) {
            const int w = pi.sample(rng);
            const HitResult hr = hit_level(g, {w, 0}, ell, opt.walk, rng, 0);
            rec.tv_debt += hr.state.tv_debt();
            if (hr.state.aborted) {
                ++rec.aborted_walkers;
                continue;
            }
            const int v = hr.arrival.v;
            if (!level.test(v)) {
                level.set(v);
                ++stage.settled;
            } else {
                ++rec.frozen.counts[{ell, v}];
                ++rec.frozen.total;
                ++stage.frozen;
            }
        }
        stage.filled = stage.settled == n;
        if (!stage.filled) {
            ++rec.stages_failed;
        }
        rec.stages.push_back(stage);
    }
    rec.all_filled = rec.stages_failed == 0;
    return rec;
}

}  // namespace idla
