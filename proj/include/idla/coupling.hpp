// Coupling constructions: maximal coupling of two horizontal distributions,
// the level-crossing coupling (shared vertical skeleton + exact s-step rows),
// coupled shifted-IDLA pairs with coalescence detection, and the staged
// water-level release.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "idla/cluster.hpp"
#include "idla/cylinder.hpp"
#include "idla/mixing.hpp"
#include "idla/rng.hpp"
#include "idla/stacks.hpp"

namespace idla {

struct MaximalCouplingDraw {
    int x = -1;
    int x2 = -1;
    bool coupled = false;
};

// X ~ p, X' ~ q marginally with P(X != X') = tv_distance(p, q) exactly:
// couple on the overlap measure min(p, q), draw residuals independently.
MaximalCouplingDraw maximal_coupling_sample(const std::vector<double>& p,
                                            const std::vector<double>& q, Rng& rng);

// Shared vertical skeleton from y0 to the first visit of `target`: vertical
// moves form a simple random walk, and each vertical move is preceded by a
// Geometric(1/2) count of horizontal steps (mean 1), so total steps split as
// steps = vertical_moves + horizontal_steps.
struct SkeletonDraw {
    unsigned long long vertical_moves = 0;   // tau^Y minus the horizontal steps
    unsigned long long horizontal_steps = 0; // s = tau^X
    bool capped = false;
};
SkeletonDraw sample_skeleton_to_level(long long y0, long long target, unsigned long long move_cap,
                                      Rng& rng);

struct CouplingOutcome {
    int arrival_v = -1;
    int arrival_v2 = -1;
    bool coupled = false;
    SkeletonDraw skeleton;
    std::string failure;  // empty, "tv-miss" (residual draw) or "cap"
};

// Two walkers from (v, y0) and (v2, y0) run to level `target` with one
// shared vertical skeleton; conditional on s horizontal steps each arrival
// vertex is P^s of its start, and the pair is drawn by maximal coupling of
// the exact rows.  Marginals therefore equal the plain hit_level law.
CouplingOutcome level_crossing_coupled_pair(const BaseGraph& g, const PowerCache& rows, int v,
                                            int v2, long long y0, long long target,
                                            unsigned long long move_cap, Rng& rng);

// When two walkers sit at different levels, the lower one walks (exact
// cylinder steps) until first hitting the higher level while the other
// waits.  Equal levels are a no-op.
struct AlignedPair {
    CylinderSite a;
    CylinderSite b;
    unsigned long long steps = 0;
    bool aborted = false;
};
AlignedPair mismatched_start_alignment(const BaseGraph& g, CylinderSite a, CylinderSite b,
                                       const WalkConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Coupled shifted-IDLA pairs.

enum class CoupleMode { shared_stacks, pairwise_maximal };

std::string couple_mode_name(CoupleMode mode);

struct PairOptions {
    double epsilon = 1e-5;       // fast-forward budget for dives
    long long tau_eps = -1;      // tau_N(epsilon), required
    long long verify_window = 50;  // post-coalescence identity checks
    unsigned long long read_cap = 1'000'000'000ull;
    unsigned long long skeleton_move_cap = 100'000'000ull;  // pairwise dives
};

struct CoalescenceRecord {
    std::uint64_t seed = 0;
    int n = 0;
    std::string family;
    CoupleMode mode = CoupleMode::shared_stacks;
    long long coalescence_time = -1;  // releases until identical; -1 if censored
    bool censored = false;
    long long budget = 0;
    double tv_debt = 0.0;             // both processes combined
    long long stages_failed = 0;      // 0 for pair runs; used by water-level CSV
    bool stick_verified = false;      // identity held over the verify window
    long long aborted_walkers = 0;

    std::string csv_row() const;
    static std::string csv_header();
};

// Runs two shifted chains from A and B until their clusters agree as subsets
// of the cylinder (same shape and same shift accrued since the start) or the
// release budget runs out.  shared_stacks consumes one common instruction
// field (keyed by absolute coordinates); pairwise_maximal couples each
// release pair through shared skeletons and maximal-coupling dives.  After
// coalescence both chains are driven by identical randomness, so identity is
// permanent; the verify window re-checks this dynamically.
CoalescenceRecord coupled_idla_pair(ClusterState a, ClusterState b, CoupleMode mode,
                                    std::uint64_t seed, long long budget, const PairOptions& opt);

// A "typical" start for coalescence experiments: from flat, run a shifted
// burn-in of 5N(log N)^2 releases, then continue until size_above == N so
// all captured states hold equally many particles.
ClusterState capture_typical_state(std::shared_ptr<const BaseGraph> g, std::uint64_t seed,
                                   const WalkConfig& cfg);

// ---------------------------------------------------------------------------
// Staged water-level release: total walkers in groups of ceil(a * N * log N),
// group ell stopped at its first visit to level ell.  A stopped walker
// settles if its site is empty, otherwise it freezes there (the site keeps
// its occupant; freezing is bookkeeping only).  Stages run to completion
// regardless of earlier failures.

struct WaterStage {
    long long level = 0;
    long long releases = 0;
    long long settled = 0;
    long long frozen = 0;
    bool filled = false;  // settled == N
};

struct FrozenField {
    std::map<std::pair<long long, int>, long long> counts;  // (level, vertex) -> walkers
    long long total = 0;
};

struct WaterLevelRecord {
    std::vector<WaterStage> stages;
    bool all_filled = false;
    long long stages_failed = 0;
    FrozenField frozen;
    double tv_debt = 0.0;
    long long aborted_walkers = 0;
    long long releases_per_stage = 0;
};

struct WaterLevelOptions {
    double a_coeff = -1.0;  // releases coefficient; < 0 means (gamma + 1) / delta
    int gamma = 1;
    WalkConfig walk;        // mode/epsilon/tau_eps for the underlying walks
};

WaterLevelRecord water_level_run(const BaseGraph& g, long long total_walkers,
                                 const WaterLevelOptions& opt, Rng& rng);

}  // namespace idla
