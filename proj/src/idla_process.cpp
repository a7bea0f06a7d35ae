#include "idla/idla_process.hpp"

#include <algorithm>
#include <stdexcept>

namespace idla {

WalkContext::WalkContext(std::shared_ptr<const BaseGraph> graph, WalkConfig wc)
    : g(std::move(graph)), pi(stationary_distribution(*g).values()), cfg(wc) {}

StepRecord idla_step(ClusterState& cluster, const WalkContext& ctx, Rng& rng) {
    StepRecord rec;
    const int w = ctx.pi.sample(rng);
    const CylinderSite start{w, cluster.k()};
    ExitResult exit = walk_until_exit(*ctx.g, cluster, start, ctx.cfg, ctx.pi, rng);
    rec.walk_steps = exit.state.steps_total;
    rec.shortcuts = exit.state.ff_shortcuts;
    rec.tv_debt = exit.state.tv_debt();
    if (exit.state.aborted) {
        rec.aborted = true;
        return rec;
    }
    cluster.settle(exit.exit);
    rec.settled = exit.exit;
    return rec;
}

StepRecord shifted_step(ClusterState& cluster, const WalkContext& ctx, Rng& rng) {
    StepRecord rec = idla_step(cluster, ctx, rng);
    if (!rec.aborted) {
        rec.shift_applied = cluster.downshift();
    }
    return rec;
}

ProcessResult run_process(ClusterState initial, long long steps, const WalkContext& ctx,
                          const std::vector<long long>& record_at, Rng& rng, bool shifted) {
    std::vector<long long> schedule = record_at;
    std::sort(schedule.begin(), schedule.end());
    schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());

    ProcessResult res{{}, 0, 0, 0.0, std::move(initial)};
    auto next_record = schedule.begin();
    auto record = [&](long long t) {
        while (next_record != schedule.end() && *next_record == t) {
            res.records.push_back({t, res.final_state.stats(), res.final_state.cumulative_shift()});
            ++next_record;
        }
    };
    record(0);
    for (long long t = 1; t <= steps; ++t) {
        StepRecord rec = shifted ? shifted_step(res.final_state, ctx, rng)
                                 : idla_step(res.final_state, ctx, rng);
        if (rec.aborted) {
            ++res.aborted_walkers;
        }
        res.total_shortcuts += rec.shortcuts;
        res.tv_debt += rec.tv_debt;
        record(t);
    }
    return res;
}

}  // namespace idla
