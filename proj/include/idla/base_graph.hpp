// Finite connected base graphs G and the horizontal ingredients of the
// cylinder walk: stationary distribution pi_N(v) = deg(v)/2|E|, the
// quasi-regularity constants (delta, delta'), lazy transition rows, and
// total-variation distance between distributions on V(G).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace idla {

// Probability vector over the vertex set; entries nonnegative, sum within
// 1e-12 of 1 (validated on construction).
class ProbabilityVector {
  public:
    ProbabilityVector() = default;
    explicit ProbabilityVector(std::vector<double> p);

    double operator[](std::size_t i) const { return p_[i]; }
    std::size_t size() const { return p_.size(); }
    const std::vector<double>& values() const { return p_; }

  private:
    std::vector<double> p_;
};

// Total variation distance (1/2) * sum_v |p(v) - q(v)|.
double tv_distance(const ProbabilityVector& p, const ProbabilityVector& q);
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

struct QuasiRegularity {
    double delta;        // N * min_v pi_N(v)
    double delta_prime;  // N * max_v pi_N(v)
};

class BaseGraph {
  public:
    // Builds from a symmetric edge list; validates simplicity, symmetry and
    // connectivity.  Use the family helpers below for the standard graphs.
    BaseGraph(int n, const std::vector<std::pair<int, int>>& edges, std::string family);

    int n() const { return n_; }
    long long edge_count() const { return edge_count_; }
    int degree(int v) const { return static_cast<int>(adj_[v].size()); }
    const std::vector<int>& neighbors(int v) const { return adj_[v]; }
    const std::string& family() const { return family_; }
    bool regular() const;

  private:
    int n_;
    long long edge_count_;
    std::vector<std::vector<int>> adj_;
    std::string family_;
};

BaseGraph make_cycle(int n);      // n >= 3
BaseGraph make_complete(int n);   // n >= 2
BaseGraph make_torus(int a, int b);  // both sides >= 3
BaseGraph make_hypercube(int d);  // d >= 1, n = 2^d
BaseGraph make_path(int n);       // n >= 2 (handy irregular test graph)
BaseGraph make_custom(int n, const std::vector<std::pair<int, int>>& edges);

// Dispatcher used by the CLI: family in {cycle, complete, torus, hypercube,
// path, custom}; params as produced by the flag parser (sizes, or edge-list
// path for custom).
BaseGraph build_graph(const std::string& family, const std::vector<int>& params);

// Edge-list file: one "u v" pair per line, 0-indexed; '#' comments allowed.
BaseGraph load_edge_list(const std::string& path);

ProbabilityVector stationary_distribution(const BaseGraph& g);
QuasiRegularity quasi_regularity(const BaseGraph& g);

// One row of the lazy horizontal chain: mass 1/2 on v, 1/(2 deg v) on each
// neighbor.  This is the chain all mixing times refer to.
ProbabilityVector lazy_transition_row(const BaseGraph& g, int v);

// Dense lazy transition matrix, row-major n x n.
std::vector<double> lazy_transition_matrix(const BaseGraph& g);

}  // namespace idla
