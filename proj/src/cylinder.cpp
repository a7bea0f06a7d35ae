#include "idla/cylinder.hpp"

#include <stdexcept>

#include "idla/cluster.hpp"

namespace idla {

StepDraw step_once(const BaseGraph& g, CylinderSite from, Rng& rng) {
    StepDraw d{from, false, false};
    if (rng.bit()) {
        d.vertical = true;
        d.to.y += rng.bit() ? 1 : -1;
    } else if (rng.bit()) {
        const auto& nb = g.neighbors(from.v);
        d.to.v = nb[rng.below(static_cast<std::uint32_t>(nb.size()))];
    } else {
        d.stayed = true;
    }
    return d;
}

void step_in_place(const BaseGraph& g, WalkState& st, Rng& rng) {
    StepDraw d = step_once(g, st.pos, rng);
    st.pos = d.to;
    ++st.steps_total;
    if (d.vertical) {
        ++st.steps_vertical;
    } else {
        ++st.steps_horizontal;
    }
}

HitResult hit_level(const BaseGraph& g, CylinderSite start, long long target, const WalkConfig& cfg,
                    Rng& rng, std::optional<long long> ff_floor) {
    const bool ff = cfg.mode == WalkMode::fast_forward && ff_floor.has_value();
    if (ff) {
        if (cfg.tau_eps < 0) {
            throw std::invalid_argument("hit_level: tau_eps not set for fast-forward mode");
        }
        if (target <= *ff_floor) {
            throw std::invalid_argument("hit_level: target must lie above the fast-forward floor");
        }
    }
    WalkState st;
    st.pos = start;
    st.ff_epsilon = cfg.epsilon;
    // The pi sampler is only needed on the fast-forward path.
    DiscreteSampler pi;
    if (ff) {
        pi = DiscreteSampler(stationary_distribution(g).values());
    }
    while (st.pos.y != target) {
        if (st.steps_total >= cfg.step_cap) {
            st.aborted = true;
            break;
        }
        if (ff && st.pos.y <= *ff_floor) {
            if (rng.bit()) {
                if (rng.bit()) {
                    ++st.pos.y;
                    ++st.steps_vertical;
                    ++st.steps_total;
                } else {
                    fast_forward_excursion(g, pi, st, st.pos.y, cfg, rng);
                    if (st.aborted) {
                        break;
                    }
                }
            } else {
                ++st.steps_horizontal;
                ++st.steps_total;
                if (rng.bit()) {
                    const auto& nb = g.neighbors(st.pos.v);
                    st.pos.v = nb[rng.below(static_cast<std::uint32_t>(nb.size()))];
                }
            }
            continue;
        }
        step_in_place(g, st, rng);
    }
    return {st.pos, st};
}

void fast_forward_excursion(const BaseGraph& g, const DiscreteSampler& pi, WalkState& st,
                            long long floor_b, const WalkConfig& cfg, Rng& rng) {
    if (cfg.tau_eps < 0) {
        throw std::invalid_argument("fast_forward_excursion: tau_eps not set");
    }
    if (st.pos.y != floor_b) {
        throw std::logic_error("fast_forward_excursion: walker not at the floor");
    }
    // The committed downward move.
    long long depth = -1;
    ++st.steps_vertical;
    ++st.steps_total;
    long long horizontal = 0;
    while (depth < 0) {
        if (st.steps_total >= cfg.step_cap) {
            st.aborted = true;
            return;
        }
        if (rng.bit()) {
            depth += rng.bit() ? 1 : -1;
            ++st.steps_vertical;
            ++st.steps_total;
        } else {
            ++horizontal;
            ++st.steps_horizontal;
            ++st.steps_total;
            if (horizontal > cfg.tau_eps) {
                // Past the mixing horizon the horizontal position at return
                // is within epsilon of pi in total variation regardless of
                // the rest of the excursion, and the return level is certain,
                // so nothing further can matter: resample and surface.
                st.pos.v = pi.sample(rng);
                st.pos.y = floor_b;
                ++st.ff_shortcuts;
                return;
            }
        }
    }
    // Excursion closed with `horizontal` lazy-chain steps to realize.
    for (long long i = 0; i < horizontal; ++i) {
        if (rng.bit()) {
            const auto& nb = g.neighbors(st.pos.v);
            st.pos.v = nb[rng.below(static_cast<std::uint32_t>(nb.size()))];
        }
    }
    st.pos.y = floor_b;
}

ExitResult walk_until_exit(const BaseGraph& g, const ClusterState& cluster, CylinderSite start,
                           const WalkConfig& cfg, const DiscreteSampler& pi, Rng& rng) {
    if (!cluster.occupied(start)) {
        throw std::invalid_argument("walk_until_exit: start must lie inside the cluster");
    }
    const bool ff = cfg.mode == WalkMode::fast_forward;
    if (ff && cfg.tau_eps < 0) {
        throw std::invalid_argument("walk_until_exit: tau_eps not set for fast-forward mode");
    }
    WalkState st;
    st.pos = start;
    st.ff_epsilon = cfg.epsilon;
    for (;;) {
        if (st.steps_total >= cfg.step_cap) {
            st.aborted = true;
            return {st.pos, st};
        }
        if (rng.bit()) {
            const bool up = rng.bit();
            if (!up && ff && st.pos.y <= cluster.k()) {
                // Everything at this level and below is occupied, so the
                // walker cannot exit before resurfacing.
                fast_forward_excursion(g, pi, st, st.pos.y, cfg, rng);
                if (st.aborted) {
                    return {st.pos, st};
                }
                continue;
            }
            st.pos.y += up ? 1 : -1;
            ++st.steps_vertical;
            ++st.steps_total;
            if (!cluster.occupied(st.pos)) {
                return {st.pos, st};
            }
        } else {
            ++st.steps_horizontal;
            ++st.steps_total;
            if (rng.bit()) {
                const auto& nb = g.neighbors(st.pos.v);
                st.pos.v = nb[rng.below(static_cast<std::uint32_t>(nb.size()))];
                if (!cluster.occupied(st.pos)) {
                    return {st.pos, st};
                }
            }
            // A stay leaves the site unchanged and cannot exit.
        }
    }
}

FirstReturnDraw sample_first_return_length(Rng& rng, unsigned long long cap) {
    long long depth = -1;
    unsigned long long length = 1;
    while (depth < 0) {
        if (length >= cap) {
            return {length, true};
        }
        depth += rng.bit() ? 1 : -1;
        ++length;
    }
    return {length, false};
}

}  // namespace idla
