// The IDLA growth process: release a walker at a stationary vertex on the
// cluster's full-rectangle top level, run it to the first site outside the
// cluster, settle it there.  The shifted variant renormalizes (downshift)
// after every settle so the full-rectangle height stays at 0 between steps.

#pragma once

#include <memory>
#include <vector>

#include "idla/cluster.hpp"
#include "idla/cylinder.hpp"
#include "idla/rng.hpp"

namespace idla {

// Everything a release needs besides the cluster and the RNG.
struct WalkContext {
    std::shared_ptr<const BaseGraph> g;
    DiscreteSampler pi;  // stationary distribution of the lazy chain
    WalkConfig cfg;

    explicit WalkContext(std::shared_ptr<const BaseGraph> graph, WalkConfig wc = {});
};

struct StepRecord {
    CylinderSite settled;      // in the cluster's coordinates before any shift
    long long shift_applied = 0;
    bool aborted = false;      // step cap hit; the cluster was left unchanged
    unsigned long long walk_steps = 0;
    unsigned long long shortcuts = 0;
    double tv_debt = 0.0;
};

// One growth step; settles exactly one site unless aborted.
StepRecord idla_step(ClusterState& cluster, const WalkContext& ctx, Rng& rng);

// Growth step followed by renormalization.
StepRecord shifted_step(ClusterState& cluster, const WalkContext& ctx, Rng& rng);

struct ProcessRecordPoint {
    long long t = 0;
    ClusterStats stats;
    long long cumulative_shift = 0;
};

struct ProcessResult {
    std::vector<ProcessRecordPoint> records;
    long long aborted_walkers = 0;
    unsigned long long total_shortcuts = 0;
    double tv_debt = 0.0;
    ClusterState final_state;
};

// Runs T growth steps from the given initial state, recording stats at the
// listed times (t counts settles; t = 0 records the initial state).
ProcessResult run_process(ClusterState initial, long long steps, const WalkContext& ctx,
                          const std::vector<long long>& record_at, Rng& rng, bool shifted = true);

}  // namespace idla
