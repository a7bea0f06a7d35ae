// Experiment harness: named experiments with defaults, replica farming with
// derived seeds, and serialized records.  Records are deterministic functions
// of (spec, seed) — byte-identical across repeated runs and thread counts —
// except for the wall-clock field, which the canonical form excludes.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "idla/cluster.hpp"
#include "idla/idla_process.hpp"

namespace idla {

enum class OutFormat { csv, json };

struct ExperimentSpec {
    std::string id;
    std::string family = "complete";
    std::vector<int> sizes;       // empty -> per-experiment default
    int gamma = 1;
    int m = 1;
    // Scaling constants; negatives mean "use the stated default":
    // a_gamma -> (gamma+1)/delta, b_gamma_m -> 10(gamma+m+1).
    double a_gamma = -1.0;
    double b_gamma_m = -1.0;
    double C_gamma_m = 1.0;
    double c_gamma = 1.0;
    double d_gamma = 1.0;
    double C_E = 0.5;
    long long replicas = -1;      // <0 -> per-experiment default
    long long samples = -1;
    long long steps = -1;
    long long budget = -1;
    std::string mode = "fastforward";  // exact | fastforward
    std::string couple_mode = "shared_stacks";
    double epsilon = 1e-4;
    std::uint64_t seed = 20240801;
    int threads = 0;              // 0 -> hardware concurrency
    std::string out_path;
    OutFormat format = OutFormat::json;

    nlohmann::json to_json() const;
    static ExperimentSpec from_json(const nlohmann::json& j);
    void validate() const;
};

struct ExperimentRecord {
    int schema_version = 1;
    ExperimentSpec spec;
    std::string statement;        // the quantitative claim being measured
    nlohmann::json observations;  // per-size / per-replica data
    nlohmann::json summary;       // derived statistics and bound checks
    bool passed = false;
    double tv_debt = 0.0;
    long long censored = 0;
    double wall_seconds = 0.0;    // excluded from the canonical form

    nlohmann::json canonical_json() const;
    nlohmann::json full_json() const;
    std::string canonical_bytes() const;
    std::string csv_summary() const;  // flattened key,value table
    void write(const std::string& path) const;
};

// Known experiment ids, in canonical order.
const std::vector<std::string>& experiment_ids();

// One-line statement of what each experiment measures.
std::string experiment_statement(const std::string& id);

ExperimentRecord run_experiment(const ExperimentSpec& spec);

// ---------------------------------------------------------------------------
// Building blocks shared with tests and the CLI.

// Tall mostly-full cluster whose sparse ("bad") levels sit `spacing` apart:
// every level up to bad_levels*spacing is full except levels spacing, 2*spacing,
// ..., which miss `missing` vertices each.  Used for drift experiments.
ClusterState make_comb_cluster(std::shared_ptr<const BaseGraph> g, int bad_levels, int spacing,
                               int missing = 1);

struct StationarySample {
    long long h = 0;
    long long size_above = 0;
    double excess = 0.0;
};

// Post-burn-in thinned samples of the shifted chain started flat.
std::vector<StationarySample> stationary_sampler(std::shared_ptr<const BaseGraph> g,
                                                 const WalkConfig& cfg, long long burn_in,
                                                 long long thin, long long count, Rng& rng);

}  // namespace idla
