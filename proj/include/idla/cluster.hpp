// Cluster state for IDLA on the cylinder, stored in shifted coordinates:
// everything at level <= 0 is occupied implicitly, and only the partial
// levels between the full-rectangle height k and the top h are stored
// explicitly.  Sites never vacate, so this representation is exact.
//
// `cumulative_shift` records how far the representation has been pushed down
// relative to absolute coordinates: absolute level = stored level + shift.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "idla/base_graph.hpp"
#include "idla/cylinder.hpp"

namespace idla {

// Occupancy bitmask for one level of the base graph.
class LevelMask {
  public:
    explicit LevelMask(int n) : n_(n), words_((n + 63) / 64, 0) {}
    bool test(int v) const { return (words_[v >> 6] >> (v & 63)) & 1u; }
    void set(int v) {
        if (!test(v)) {
            words_[v >> 6] |= (std::uint64_t{1} << (v & 63));
            ++count_;
        }
    }
    int count() const { return count_; }
    bool full() const { return count_ == n_; }
    int size() const { return n_; }
    friend bool operator==(const LevelMask&, const LevelMask&) = default;

  private:
    int n_ = 0;
    int count_ = 0;
    std::vector<std::uint64_t> words_;
};

struct ClusterStats {
    long long h = 0;           // top occupied level (0 if nothing above 0)
    long long k = 0;           // largest level with R_k fully occupied
    long long size_above = 0;  // occupied sites at levels >= 1
    double excess = 0.0;       // E = h - size_above / N, always >= 0
    std::vector<long long> level_counts;  // occupancy of levels 1..h
};

class ClusterState {
  public:
    // Flat cluster: exactly the levels <= 0.
    explicit ClusterState(std::shared_ptr<const BaseGraph> g);

    // Cluster with the given sites above level 0 added to the flat base.
    // Sites must be distinct, have y >= 1, and the resulting set must be
    // connected (every site must reach level 0 through occupied sites).
    static ClusterState from_sites(std::shared_ptr<const BaseGraph> g,
                                   const std::vector<CylinderSite>& above);

    const BaseGraph& graph() const { return *g_; }
    std::shared_ptr<const BaseGraph> graph_ptr() const { return g_; }

    bool occupied(CylinderSite s) const;
    long long k() const { return k_; }
    long long h() const { return h_; }
    long long size_above() const { return size_above_; }
    long long cumulative_shift() const { return shift_; }

    // Adds a currently-unoccupied site at level >= k+1; promotes k through
    // any levels this completes.
    void settle(CylinderSite s);

    // Renormalizes so that k becomes 0; returns the shift applied (= old k).
    long long downshift();

    ClusterStats stats() const;

    // Shape comparison ignores the cumulative shift (it compares the stored
    // shifted representation: k, h and the partial levels).
    bool same_shape(const ClusterState& other) const;

    // Occupied sites at levels >= 1, sorted by (y, v).
    std::vector<CylinderSite> sites_above() const;

    // Snapshot of {n, k, shift, partial levels}; the graph itself is not
    // serialized and must be supplied on load (n is cross-checked).
    nlohmann::json to_json() const;
    static ClusterState from_json(std::shared_ptr<const BaseGraph> g, const nlohmann::json& j);

    // Recomputes k/h/size_above from the stored levels and throws
    // std::logic_error on any mismatch with the cached values.
    void validate_cache() const;

  private:
    std::shared_ptr<const BaseGraph> g_;
    long long k_ = 0;
    long long h_ = 0;
    long long size_above_ = 0;
    long long shift_ = 0;
    // Partial levels, keyed by level, for k < level <= h only.
    std::map<long long, LevelMask> levels_;
};

}  // namespace idla
