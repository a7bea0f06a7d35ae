// Instruction-stack (abelian) representation of the dynamics.  Every cylinder
// site carries an infinite stack of moves; the instruction at (site, slot) is
// a pure function of the field seed, so the whole field is re-derivable and
// two processes can consume one common field.  Instruction law per slot:
// up 1/4, down 1/4, stay 1/4, each neighbor 1/(4 deg v).
//
// Sites are keyed by absolute coordinates.  Processes that renormalize
// (downshift) translate their shifted positions back to absolute ones before
// reading, so the field stays common even when the processes' shifts differ.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "idla/cluster.hpp"
#include "idla/cylinder.hpp"
#include "idla/rng.hpp"

namespace idla {

enum class InstrKind : std::uint8_t { up, down, stay, jump };

struct Instruction {
    InstrKind kind;
    int neighbor_slot = -1;  // index into the adjacency list for jump
};

class InstructionStacks {
  public:
    InstructionStacks(std::shared_ptr<const BaseGraph> g, std::uint64_t master_seed);

    const BaseGraph& graph() const { return *g_; }
    std::shared_ptr<const BaseGraph> graph_ptr() const { return g_; }
    std::uint64_t master_seed() const { return master_seed_; }

    // Pure random access: the value never depends on consumption history.
    Instruction at(CylinderSite site, std::uint64_t slot) const;

    // Applies an instruction to a site (stay returns the site itself).
    CylinderSite apply(Instruction ins, CylinderSite site) const;

    // Consumers read sequentially; each holds its own per-site counters over
    // the shared field.
    int new_consumer();
    Instruction next(int consumer, CylinderSite site);
    std::uint64_t consumed(int consumer, CylinderSite site) const;

    // Shared auxiliary streams derived from the same master seed.
    int drop_vertex(std::uint64_t index) const;           // ~ pi_N, shared
    int resample_vertex(std::uint64_t release_index, std::uint64_t dive_ordinal) const;  // ~ pi_N

  private:
    std::shared_ptr<const BaseGraph> g_;
    std::uint64_t master_seed_;
    KeyedPrf field_;
    KeyedPrf drops_;
    KeyedPrf resample_;
    DiscreteSampler pi_;
    std::vector<std::unordered_map<CylinderSite, std::uint64_t, CylinderSiteHash>> counts_;
};

// ---------------------------------------------------------------------------
// Pure particle model: counts of particles per site on top of the implicit
// settled particle at every level <= 0.  A site is unstable when it holds at
// least two particles; toppling moves one of them by the site's next
// instruction.

class ParticleConfig {
  public:
    explicit ParticleConfig(std::shared_ptr<const BaseGraph> g) : g_(std::move(g)) {}

    long long occupancy(CylinderSite s) const;
    bool unstable(CylinderSite s) const { return occupancy(s) >= 2; }
    void add(CylinderSite s, long long count = 1);
    long long extra_particles() const { return total_extra_; }

    // Sorted (y, v, count) triples of the explicit particles; equal configs
    // have equal canonical forms.
    std::vector<std::tuple<long long, int, long long>> canonical() const;
    friend bool operator==(const ParticleConfig& a, const ParticleConfig& b) {
        return a.canonical() == b.canonical();
    }

    // A stable config with all particles above level 0 at distinct sites is a
    // cluster; throws if unstable or disconnected.
    ClusterState to_cluster() const;

    const BaseGraph& graph() const { return *g_; }

  private:
    friend CylinderSite topple(ParticleConfig&, InstructionStacks&, int, CylinderSite);
    std::shared_ptr<const BaseGraph> g_;
    std::unordered_map<CylinderSite, long long, CylinderSiteHash> extra_;
    long long total_extra_ = 0;
};

// Moves one particle off an unstable site by its next instruction; returns
// where the particle went (possibly the same site for a stay).
CylinderSite topple(ParticleConfig& config, InstructionStacks& stacks, int consumer,
                    CylinderSite site);

enum class TopplePolicy { fifo, lifo, random, lowest_first };

struct StabilizeOptions {
    TopplePolicy policy = TopplePolicy::fifo;
    unsigned long long topple_cap = 1'000'000'000ull;
    std::uint64_t policy_seed = 0;  // random policy only
};

// Per-site toppling counts of one stabilization, ordered by (y, v).
using Odometer = std::map<std::pair<long long, int>, unsigned long long>;

struct StabilizeResult {
    unsigned long long topplings = 0;
    bool capped = false;
    Odometer odometer;
};

void write_odometer_csv(const Odometer& odom, const std::string& path);

// Topples until no site is unstable (or the cap is hit, leaving the config
// mid-stabilization with `capped` set).
StabilizeResult stabilize(ParticleConfig& config, InstructionStacks& stacks, int consumer,
                          const StabilizeOptions& opts = {});

// Bulk stack-driven growth: particles 1..n drop at level 0 at the shared
// drop-stream vertices, then the whole configuration is stabilized under the
// given policy.  By order-independence the result is a function of the field
// and the drops alone.  `cluster` is absent when the cap was hit.
struct BulkDropResult {
    ParticleConfig config;
    StabilizeResult stabilization;
    std::optional<ClusterState> cluster;
};

BulkDropResult idla_via_stacks(InstructionStacks& stacks, int consumer, long long n_particles,
                               const StabilizeOptions& opts = {});

// ---------------------------------------------------------------------------
// Sequential stack-driven growth: at step t a particle drops on the floor at
// the shared drop vertex and is walked by instruction consumption until it
// settles; the cluster is then renormalized.  With fast_forward set,
// below-floor dives stop once their horizontal instruction count passes
// tau_eps and resample the surfacing vertex from the shared resample stream
// (epsilon TV debt per truncation), exactly as the trajectory walker does.

struct StackWalkConfig {
    bool fast_forward = true;
    double epsilon = 1e-5;
    long long tau_eps = -1;  // required when fast_forward
    unsigned long long read_cap = 1'000'000'000ull;
};

struct StackStepResult {
    CylinderSite settled;        // in the cluster's shifted coordinates
    bool aborted = false;
    long long dives = 0;
    long long truncated_dives = 0;
    unsigned long long reads = 0;
};

// One walker through the shared field.  `shift_rel` is the process's
// cumulative shift relative to the start of the run (added to shifted levels
// to recover absolute field coordinates).
StackStepResult stack_walker(const ClusterState& cluster, long long shift_rel,
                             InstructionStacks& stacks, int consumer, std::uint64_t release_index,
                             int drop_vertex, const StackWalkConfig& cfg);

struct StackProcessResult {
    ClusterState final_state;
    long long aborted_walkers = 0;
    long long truncated_dives = 0;
    double tv_debt = 0.0;
};

// Runs `steps` sequential stack releases on a fresh consumer, renormalizing
// after each settle.
StackProcessResult run_stack_process(ClusterState initial, long long steps,
                                     InstructionStacks& stacks, const StackWalkConfig& cfg);

}  // namespace idla
