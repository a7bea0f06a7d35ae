#include "idla/stacks.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <stdexcept>

namespace idla {

InstructionStacks::InstructionStacks(std::shared_ptr<const BaseGraph> g, std::uint64_t master_seed)
    : g_(std::move(g)),
      master_seed_(master_seed),
      field_(derive_seed(master_seed, purpose_tag(StreamPurpose::stacks))),
      drops_(derive_seed(master_seed, purpose_tag(StreamPurpose::drops))),
      resample_(derive_seed(master_seed, purpose_tag(StreamPurpose::ff_resample))),
      pi_(stationary_distribution(*g_).values()) {}

Instruction InstructionStacks::at(CylinderSite site, std::uint64_t slot) const {
    const std::uint64_t r =
        field_(static_cast<std::uint64_t>(static_cast<std::uint32_t>(site.v)),
               static_cast<std::uint64_t>(site.y), slot);
    // Top two bits pick the kind (each exactly 1/4); low 32 bits pick the
    // neighbor, so the choices are independent.
    Instruction ins{static_cast<InstrKind>(r >> 62), -1};
    if (ins.kind == InstrKind::jump) {
        const auto deg = static_cast<std::uint64_t>(g_->degree(site.v));
        ins.neighbor_slot = static_cast<int>(((r & 0xffffffffull) * deg) >> 32);
    }
    return ins;
}

CylinderSite InstructionStacks::apply(Instruction ins, CylinderSite site) const {
    switch (ins.kind) {
        case InstrKind::up:
            return {site.v, site.y + 1};
        case InstrKind::down:
            return {site.v, site.y - 1};
        case InstrKind::stay:
            return site;
        case InstrKind::jump:
            return {g_->neighbors(site.v)[static_cast<std::size_t>(ins.neighbor_slot)], site.y};
    }
    throw std::logic_error("apply: bad instruction");
}

int InstructionStacks::new_consumer() {
    counts_.emplace_back();
    return static_cast<int>(counts_.size()) - 1;
}

Instruction InstructionStacks::next(int consumer, CylinderSite site) {
    auto& slot = counts_[static_cast<std::size_t>(consumer)][site];
    return at(site, slot++);
}

std::uint64_t InstructionStacks::consumed(int consumer, CylinderSite site) const {
    const auto& m = counts_[static_cast<std::size_t>(consumer)];
    auto it = m.find(site);
    return it == m.end() ? 0 : it->second;
}

int InstructionStacks::drop_vertex(std::uint64_t index) const {
    return pi_.sample_word(drops_(index));
}

int InstructionStacks::resample_vertex(std::uint64_t release_index, std::uint64_t dive_ordinal) const {
    return pi_.sample_word(resample_(release_index, dive_ordinal));
}

// ---------------------------------------------------------------------------

long long ParticleConfig::occupancy(CylinderSite s) const {
    long long base = s.y <= 0 ? 1 : 0;
    auto it = extra_.find(s);
    return base + (it == extra_.end() ? 0 : it->second);
}

void ParticleConfig::add(CylinderSite s, long long count) {
    if (count <= 0) {
        throw std::invalid_argument("ParticleConfig::add: count must be positive");
    }
    extra_[s] += count;
    total_extra_ += count;
}

std::vector<std::tuple<long long, int, long long>> ParticleConfig::canonical() const {
    std::vector<std::tuple<long long, int, long long>> out;
    for (const auto& [site, c] : extra_) {
        if (c != 0) {
            out.emplace_back(site.y, site.v, c);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

ClusterState ParticleConfig::to_cluster() const {
    std::vector<CylinderSite> above;
    for (const auto& [site, c] : extra_) {
        if (c == 0) {
            continue;
        }
        if (unstable(site)) {
            throw std::logic_error("to_cluster: config is not stable");
        }
        if (site.y < 1) {
            // Stable with the implicit particle means c == 0 below level 1.
            throw std::logic_error("to_cluster: explicit particle at or below level 0");
        }
        above.push_back(site);
    }
    return ClusterState::from_sites(g_, above);
}

CylinderSite topple(ParticleConfig& config, InstructionStacks& stacks, int consumer,
                    CylinderSite site) {
    auto it = config.extra_.find(site);
    const long long extra = it == config.extra_.end() ? 0 : it->second;
    if ((site.y <= 0 ? 1 : 0) + extra < 2) {
        throw std::logic_error("topple: site is stable");
    }
    const Instruction ins = stacks.next(consumer, site);
    const CylinderSite target = stacks.apply(ins, site);
    if (--(it->second) == 0) {
        config.extra_.erase(it);
    }
    ++config.extra_[target];
    return target;
}

void write_odometer_csv(const Odometer& odom, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_odometer_csv: cannot open " + path);
    }
    out << "v,y,topplings\n";
    for (const auto& [site, count] : odom) {
        out << site.second << ',' << site.first << ',' << count << '\n';
    }
}

StabilizeResult stabilize(ParticleConfig& config, InstructionStacks& stacks, int consumer,
                          const StabilizeOptions& opts) {
    StabilizeResult res;
    // Topple counts accumulate unordered (the hot path) and convert to the
    // ordered odometer on return.
    std::unordered_map<CylinderSite, unsigned long long, CylinderSiteHash> counts;
    std::deque<CylinderSite> work;
    for (const auto& [y, v, c] : config.canonical()) {
        CylinderSite s{v, y};
        if (config.unstable(s)) {
            work.push_back(s);
        }
    }
    Rng policy_rng(derive_seed(opts.policy_seed, 0xabcdull));
    while (!work.empty()) {
        CylinderSite site;
        switch (opts.policy) {
            case TopplePolicy::fifo:
                site = work.front();
                work.pop_front();
                break;
            case TopplePolicy::lifo:
                site = work.back();
                work.pop_back();
                break;
            case TopplePolicy::random: {
                const auto i = policy_rng.below(static_cast<std::uint32_t>(work.size()));
                site = work[i];
                work[i] = work.back();
                work.pop_back();
                break;
            }
            case TopplePolicy::lowest_first: {
                std::size_t best = 0;
                for (std::size_t i = 1; i < work.size(); ++i) {
                    if (std::tie(work[i].y, work[i].v) < std::tie(work[best].y, work[best].v)) {
                        best = i;
                    }
                }
                site = work[best];
                work.erase(work.begin() + static_cast<std::ptrdiff_t>(best));
                break;
            }
        }
        // The worklist may hold duplicates or sites stabilized meanwhile.
        if (!config.unstable(site)) {
            continue;
        }
        if (res.topplings >= opts.topple_cap) {
            res.capped = true;
            break;
        }
        const CylinderSite target = topple(config, stacks, consumer, site);
        ++res.topplings;
        ++counts[site];
        if (config.unstable(site)) {
            work.push_back(site);
        }
        if (!(target == site) && config.unstable(target)) {
            work.push_back(target);
        }
    }
    for (const auto& [site, c] : counts) {
        res.odometer[{site.y, site.v}] = c;
    }
    return res;
}

BulkDropResult idla_via_stacks(InstructionStacks& stacks, int consumer, long long n_particles,
                               const StabilizeOptions& opts) {
    if (n_particles < 0) {
        throw std::invalid_argument("idla_via_stacks: negative particle count");
    }
    BulkDropResult res{ParticleConfig(stacks.graph_ptr()), {}, std::nullopt};
    for (long long i = 1; i <= n_particles; ++i) {
        res.config.add({stacks.drop_vertex(static_cast<std::uint64_t>(i)), 0});
    }
    res.stabilization = stabilize(res.config, stacks, consumer, opts);
    if (!res.stabilization.capped) {
        res.cluster = res.config.to_cluster();
    }
    return res;
}

// ---------------------------------------------------------------------------

StackStepResult stack_walker(const ClusterState& cluster, long long shift_rel,
                             InstructionStacks& stacks, int consumer, std::uint64_t release_index,
                             int drop_vertex, const StackWalkConfig& cfg) {
    if (cfg.fast_forward && cfg.tau_eps < 0) {
        throw std::invalid_argument("stack_walker: tau_eps not set for fast-forward mode");
    }
    const BaseGraph& g = stacks.graph();
    StackStepResult res;
    int v = drop_vertex;
    long long y = cluster.k();
    const long long floor = cluster.k();
    for (;;) {
        if (res.reads >= cfg.read_cap) {
            res.aborted = true;
            return res;
        }
        const Instruction ins = stacks.next(consumer, {v, y + shift_rel});
        ++res.reads;
        switch (ins.kind) {
            case InstrKind::up:
                if (!cluster.occupied({v, y + 1})) {
                    res.settled = {v, y + 1};
                    return res;
                }
                ++y;
                break;
            case InstrKind::down:
                if (y == floor) {
                    // Below-floor dive, consumed from the shared field so a
                    // partner process rereading these sites sees the same
                    // moves.
                    ++res.dives;
                    long long depth = -1;
                    long long horizontal = 0;
                    int dv = v;
                    bool truncated = false;
                    while (depth < 0) {
                        if (res.reads >= cfg.read_cap) {
                            res.aborted = true;
                            return res;
                        }
                        const Instruction dins = stacks.next(consumer, {dv, floor + depth + shift_rel});
                        ++res.reads;
                        switch (dins.kind) {
                            case InstrKind::up:
                                ++depth;
                                break;
                            case InstrKind::down:
                                --depth;
                                break;
                            case InstrKind::stay:
                                ++horizontal;
                                break;
                            case InstrKind::jump:
                                ++horizontal;
                                dv = g.neighbors(dv)[static_cast<std::size_t>(dins.neighbor_slot)];
                                break;
                        }
                        if (cfg.fast_forward && horizontal > cfg.tau_eps) {
                            truncated = true;
                            break;
                        }
                    }
                    if (truncated) {
                        ++res.truncated_dives;
                        v = stacks.resample_vertex(release_index,
                                                   static_cast<std::uint64_t>(res.dives));
                    } else {
                        v = dv;
                    }
                    y = floor;
                } else {
                    if (!cluster.occupied({v, y - 1})) {
                        res.settled = {v, y - 1};
                        return res;
                    }
                    --y;
                }
                break;
            case InstrKind::stay:
                break;
            case InstrKind::jump: {
                const int w = g.neighbors(v)[static_cast<std::size_t>(ins.neighbor_slot)];
                if (!cluster.occupied({w, y})) {
                    res.settled = {w, y};
                    return res;
                }
                v = w;
                break;
            }
        }
    }
}

StackProcessResult run_stack_process(ClusterState initial, long long steps,
                                     InstructionStacks& stacks, const StackWalkConfig& cfg) {
    StackProcessResult res{std::move(initial), 0, 0, 0.0};
    const long long shift0 = res.final_state.cumulative_shift();
    const int consumer = stacks.new_consumer();
    for (long long t = 1; t <= steps; ++t) {
        const long long rel = res.final_state.cumulative_shift() - shift0;
        const int dv = stacks.drop_vertex(static_cast<std::uint64_t>(t));
        StackStepResult step = stack_walker(res.final_state, rel, stacks, consumer,
                                            static_cast<std::uint64_t>(t), dv, cfg);
        res.truncated_dives += step.truncated_dives;
        res.tv_debt += static_cast<double>(step.truncated_dives) * cfg.epsilon;
        if (step.aborted) {
            ++res.aborted_walkers;
            continue;
        }
        res.final_state.settle(step.settled);
        res.final_state.downshift();
    }
    return res;
}

}  // namespace idla
