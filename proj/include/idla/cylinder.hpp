// Random walk on the cylinder G x Z.  Each step is vertical with probability
// 1/2 (up/down equally likely) and horizontal with probability 1/2, where the
// horizontal move is one lazy-chain step (stay 1/2, uniform neighbor 1/2).
// Overall: P(up) = P(down) = P(stay) = 1/4, P(neighbor w) = 1/(4 deg v).
//
// Fast-forward mode replaces below-floor excursions whose horizontal move
// count exceeds tau_N(eps) by a pi_N-resampled return to the floor, adding
// eps to the walk's total-variation debt.  Once the threshold is passed the
// rest of the excursion influences nothing observable (the return level is
// certain and the horizontal law has been replaced), so the skeleton stops
// there; step counters count simulated steps only and the number of
// shortcuts is reported.

#pragma once

#include <cstdint>
#include <optional>

#include "idla/base_graph.hpp"
#include "idla/rng.hpp"

namespace idla {

class ClusterState;  // cluster.hpp

struct CylinderSite {
    int v = 0;
    long long y = 0;
    friend bool operator==(const CylinderSite&, const CylinderSite&) = default;
};

struct CylinderSiteHash {
    std::size_t operator()(const CylinderSite& s) const {
        return static_cast<std::size_t>(mix64((static_cast<std::uint64_t>(s.y) << 20) ^
                                              static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.v))));
    }
};

enum class WalkMode { exact, fast_forward };

struct WalkConfig {
    WalkMode mode = WalkMode::exact;
    double epsilon = 1e-3;        // fast-forward TV budget per shortcut
    long long tau_eps = -1;       // tau_N(epsilon); required in fast_forward mode
    unsigned long long step_cap = 1'000'000'000ull;  // per-walk abort guard
};

struct WalkState {
    CylinderSite pos;
    unsigned long long steps_total = 0;
    unsigned long long steps_vertical = 0;
    unsigned long long steps_horizontal = 0;
    unsigned long long ff_shortcuts = 0;
    double ff_epsilon = 0.0;
    bool aborted = false;

    // Exact by construction: each shortcut contributes exactly epsilon.
    double tv_debt() const { return static_cast<double>(ff_shortcuts) * ff_epsilon; }
};

// One walk step from a site; returns the new site.  For unit-level law tests.
struct StepDraw {
    CylinderSite to;
    bool vertical;
    bool stayed;
};
StepDraw step_once(const BaseGraph& g, CylinderSite from, Rng& rng);

// Advances the state by one step, maintaining counters.
void step_in_place(const BaseGraph& g, WalkState& st, Rng& rng);

// First hitting time of level `target` (tau_n^Z).  Aborts at the step cap
// with the flag set (callers exclude and report).  In fast_forward mode a
// floor must be given (with target above it); below-floor excursions are then
// fast-forwarded, which is sound whenever the caller only observes the walk
// at and above the floor, since an excursion influences the future only
// through its surfacing vertex.
struct HitResult {
    CylinderSite arrival;
    WalkState state;
};
HitResult hit_level(const BaseGraph& g, CylinderSite start, long long target, const WalkConfig& cfg,
                    Rng& rng, std::optional<long long> ff_floor = std::nullopt);

// Pre: st.pos.y == floor_b, the caller has committed a downward move, and
// every site at level <= floor_b is occupied.  Simulates the below-floor
// first-return excursion; on return st.pos.y == floor_b again (unless the
// step cap hit).  pi is the stationary sampler used for resampling.
void fast_forward_excursion(const BaseGraph& g, const DiscreteSampler& pi, WalkState& st,
                            long long floor_b, const WalkConfig& cfg, Rng& rng);

// Walk from a site inside the cluster until the first visit to a site
// outside it.  In fast_forward mode, below-floor excursions (floor = the
// cluster's full-rectangle height) are fast-forwarded.
struct ExitResult {
    CylinderSite exit;
    WalkState state;
};
ExitResult walk_until_exit(const BaseGraph& g, const ClusterState& cluster, CylinderSite start,
                           const WalkConfig& cfg, const DiscreteSampler& pi, Rng& rng);

// Vertical first-return excursion length in vertical moves (initial down-move
// and final return included); cap guards the heavy tail.  Exposed for
// distribution tests of the skeleton sampler.
struct FirstReturnDraw {
    unsigned long long length;
    bool capped;
};
FirstReturnDraw sample_first_return_length(Rng& rng, unsigned long long cap);

}  // namespace idla
