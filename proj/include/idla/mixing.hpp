// Mixing times of the lazy horizontal chain.
//
// tau_N(eps) = inf{ k : max_{v,v'} || P^k(v,.) - P^k(v',.) ||_TV <= eps },
// tau_N = tau_N(1/2).  Exact mode iterates all rows of the lazy chain and
// scans pairs; Monte Carlo mode estimates the same curve from simulated
// walkers with per-k uncertainties.  A binary-power row cache serves the
// couplings that need exact s-step rows for large s.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idla/base_graph.hpp"
#include "idla/rng.hpp"

namespace idla {

enum class MixingMethod { exact, monte_carlo };

struct MixingOptions {
    std::vector<double> extra_eps;   // merged with the default grid
    MixingMethod method = MixingMethod::exact;
    int exact_vertex_cap = 4096;     // exact mode refuses larger graphs
    long long step_cap = 10'000'000; // safety guard on curve length
    // Monte Carlo parameters.
    long long samples_per_start = 20'000;
    int mc_k_max = 64;               // curve estimated for k = 0..mc_k_max
    std::uint64_t seed = 1;
};

// Default epsilon grid: {1/2} plus N^-gamma for gamma in {1,2,3}.
std::vector<double> default_eps_grid(int n);

struct MixingProfile {
    MixingMethod method = MixingMethod::exact;
    std::vector<double> eps_grid;          // sorted descending
    std::vector<long long> tau;            // tau[i] for eps_grid[i]
    std::vector<long long> curve_k;        // abscissa of the curves below
    std::vector<double> max_pair_tv;       // raw estimates (exact values in exact mode)
    std::vector<double> max_pair_tv_monotone;  // running minimum of the above
    // Monte Carlo only: conservative per-k uncertainty = delta-method SE of
    // the plug-in TV estimator plus its bias allowance 0.5*sqrt(2N/M).
    std::vector<double> se;

    long long tau_half() const;                 // tau at eps = 1/2
    std::optional<long long> tau_for(double eps) const;

    // CSV exports: (k, max_pair_tv) and (epsilon, tau).
    void write_curve_csv(const std::string& path) const;
    void write_tau_csv(const std::string& path) const;
};

// Computes the profile.  Exact mode errors on graphs above the vertex cap
// with a diagnostic directing to Monte Carlo mode.
MixingProfile mixing_time(const BaseGraph& g, const MixingOptions& opts = {});

// ceil(3 * gamma * tau * log N): the step budget that eq-style bounds give
// for reaching accuracy N^-gamma.
long long three_gamma_tau_log_n(long long tau_half, int gamma, int n);

// Exact s-step rows of the lazy chain via binary powers: row(s, v) costs
// O(n^2 log s) after O(n^3 log s) one-time setup per new power-of-two.
class PowerCache {
  public:
    explicit PowerCache(const BaseGraph& g);

    // Row of P^s from start vertex v.  s >= 0.
    std::vector<double> row(long long s, int v) const;
    int n() const { return n_; }

    // Extends the power table to cover exponents up to max_s.  row() calls
    // mutate the table lazily, so concurrent readers must prewarm first.
    void prewarm(long long max_s) const;

  private:
    int n_;
    mutable std::vector<std::vector<double>> powers_;  // powers_[i] = P^(2^i)
    void ensure_bits(int bits) const;
};

}  // namespace idla
