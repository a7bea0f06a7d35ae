// Command-line front end: simulate | mix | couple | abelian-check |
// experiment <id> | stationary.  Exit codes: 0 = all declared checks pass,
// 1 = a check failed (or a runtime error), 2 = usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "idla/coupling.hpp"
#include "idla/experiment.hpp"
#include "idla/idla_process.hpp"
#include "idla/mixing.hpp"
#include "idla/stacks.hpp"

namespace {

using idla::ExperimentSpec;
using nlohmann::json;

// Shared flag set; every subcommand maps the relevant ones onto an
// ExperimentSpec so runs through the CLI and through config files agree.
struct GlobalArgs {
    std::string graph = "complete";
    std::vector<int> n;
    std::uint64_t seed = 20240801;
    long long replicas = -1;
    long long samples = -1;
    long long steps = -1;
    long long budget = -1;
    std::string mode = "fastforward";
    double epsilon = 1e-4;
    int gamma = 1;
    int threads = 0;
    std::string out;
    std::string format = "json";
};

void add_global_flags(CLI::App* cmd, GlobalArgs& a) {
    cmd->add_option("--graph", a.graph,
                    "base graph family: cycle|complete|torus|hypercube|path");
    cmd->add_option("--n", a.n, "graph size(s); repeat for several sizes");
    cmd->add_option("--seed", a.seed, "master seed");
    cmd->add_option("--replicas", a.replicas, "replica count (experiment-specific default if unset)");
    cmd->add_option("--samples", a.samples, "sample count (experiment-specific default if unset)");
    cmd->add_option("--steps", a.steps, "step budget (experiment-specific default if unset)");
    cmd->add_option("--budget", a.budget, "release budget for coupled runs");
    cmd->add_option("--mode", a.mode, "walk mode: exact|fastforward")
        ->check(CLI::IsMember({"exact", "fastforward"}));
    cmd->add_option("--epsilon", a.epsilon, "fast-forward TV budget per shortcut");
    cmd->add_option("--gamma", a.gamma, "probability exponent gamma");
    cmd->add_option("--threads", a.threads, "worker threads (0 = hardware)");
    cmd->add_option("--out", a.out, "output path");
    cmd->add_option("--format", a.format, "output format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
}

ExperimentSpec spec_from_args(const GlobalArgs& a, const std::string& id) {
    ExperimentSpec spec;
    spec.id = id;
    spec.family = a.graph;
    spec.sizes = a.n;
    spec.seed = a.seed;
    spec.replicas = a.replicas;
    spec.samples = a.samples;
    spec.steps = a.steps;
    spec.budget = a.budget;
    spec.mode = a.mode;
    spec.epsilon = a.epsilon;
    spec.gamma = a.gamma;
    spec.threads = a.threads;
    spec.out_path = a.out;
    spec.format = a.format == "csv" ? idla::OutFormat::csv : idla::OutFormat::json;
    return spec;
}

int report(const idla::ExperimentRecord& rec) {
    std::printf("%s: %s  (tv_debt=%.6g, censored=%lld, %.2fs)\n", rec.spec.id.c_str(),
                rec.passed ? "PASS" : "FAIL", rec.tv_debt, rec.censored, rec.wall_seconds);
    if (!rec.spec.out_path.empty())
        std::printf("record written to %s\n", rec.spec.out_path.c_str());
    return rec.passed ? 0 : 1;
}

std::shared_ptr<const idla::BaseGraph> single_graph(const GlobalArgs& a) {
    int size = a.n.empty() ? 8 : a.n.front();
    if (a.graph == "torus")
        return std::make_shared<idla::BaseGraph>(idla::make_torus(size, size));
    return std::make_shared<idla::BaseGraph>(idla::build_graph(a.graph, {size}));
}

// ---------------------------------------------------------------------------

int cmd_simulate(const GlobalArgs& a, bool shifted, const std::string& snapshot_path) {
    auto g = single_graph(a);
    idla::WalkConfig cfg;
    if (a.mode == "fastforward") {
        cfg.mode = idla::WalkMode::fast_forward;
        cfg.epsilon = a.epsilon;
        idla::MixingOptions mo;
        mo.extra_eps = {a.epsilon};
        cfg.tau_eps = idla::mixing_time(*g, mo).tau_for(a.epsilon).value();
    }
    long long steps = a.steps > 0 ? a.steps : 1000;
    idla::WalkContext ctx(g, cfg);
    idla::Rng rng(idla::derive_seed(a.seed, 0x51u));
    std::vector<long long> record_at;
    long long stride = std::max<long long>(1, steps / 20);
    for (long long t = stride; t < steps; t += stride) record_at.push_back(t);
    record_at.push_back(steps);
    auto res = idla::run_process(idla::ClusterState(g), steps, ctx, record_at, rng, shifted);

    std::printf("t,h,k,size_above,excess,shift\n");
    for (const auto& p : res.records)
        std::printf("%lld,%lld,%lld,%lld,%.6g,%lld\n", p.t, p.stats.h, p.stats.k,
                    p.stats.size_above, p.stats.excess, p.cumulative_shift);
    std::printf("# aborted=%lld shortcuts=%llu tv_debt=%.6g\n", res.aborted_walkers,
                static_cast<unsigned long long>(res.total_shortcuts), res.tv_debt);
    if (!a.out.empty()) {
        std::ofstream f(a.out);
        if (!f) throw std::runtime_error("cannot open output file: " + a.out);
        if (a.format == "csv") {
            f << "t,h,k,size_above,excess,shift\n";
            for (const auto& p : res.records)
                f << p.t << ',' << p.stats.h << ',' << p.stats.k << ',' << p.stats.size_above
                  << ',' << p.stats.excess << ',' << p.cumulative_shift << "\n";
        } else {
            json j;
            j["schema_version"] = 1;
            j["timeline"] = json::array();
            for (const auto& p : res.records)
                j["timeline"].push_back(json{{"t", p.t},
                                             {"h", p.stats.h},
                                             {"k", p.stats.k},
                                             {"size_above", p.stats.size_above},
                                             {"excess", p.stats.excess},
                                             {"shift", p.cumulative_shift}});
            j["aborted_walkers"] = res.aborted_walkers;
            j["tv_debt"] = res.tv_debt;
            j["final_cluster"] = res.final_state.to_json();
            f << j.dump(2) << "\n";
        }
    }
    if (!snapshot_path.empty()) {
        std::ofstream f(snapshot_path);
        if (!f) throw std::runtime_error("cannot open snapshot file: " + snapshot_path);
        f << res.final_state.to_json().dump(2) << "\n";
    }
    return res.aborted_walkers == 0 ? 0 : 1;
}

int cmd_mix(const GlobalArgs& a, bool monte_carlo, std::vector<double> extra_eps) {
    auto g = single_graph(a);
    idla::MixingOptions mo;
    mo.extra_eps = std::move(extra_eps);
    mo.method = monte_carlo ? idla::MixingMethod::monte_carlo : idla::MixingMethod::exact;
    mo.seed = a.seed;
    if (a.samples > 0) mo.samples_per_start = a.samples;
    auto prof = idla::mixing_time(*g, mo);
    std::printf("graph=%s n=%d method=%s\n", g->family().c_str(), g->n(),
                monte_carlo ? "monte_carlo" : "exact");
    std::printf("eps,tau\n");
    for (std::size_t i = 0; i < prof.eps_grid.size(); ++i)
        std::printf("%.10g,%lld\n", prof.eps_grid[i], prof.tau[i]);
    bool ok = true;
    if (!monte_carlo) {
        for (int gm = 1; gm <= 3; ++gm) {
            double eps = std::pow(static_cast<double>(g->n()), -gm);
            auto te = prof.tau_for(eps);
            long long bound = idla::three_gamma_tau_log_n(prof.tau_half(), gm, g->n());
            bool line_ok = te.has_value() && *te <= bound;
            ok = ok && line_ok;
            std::printf("# tau(N^-%d)=%lld <= ceil(3*%d*tau*logN)=%lld : %s\n", gm,
                        te ? *te : -1, gm, bound, line_ok ? "ok" : "VIOLATED");
        }
    }
    if (!a.out.empty()) {
        prof.write_curve_csv(a.out + "_curve.csv");
        prof.write_tau_csv(a.out + "_tau.csv");
        std::printf("wrote %s_curve.csv and %s_tau.csv\n", a.out.c_str(), a.out.c_str());
    }
    return ok ? 0 : 1;
}

int cmd_couple(const GlobalArgs& a, const std::string& couple_mode) {
    auto g = single_graph(a);
    long long pairs = a.replicas > 0 ? a.replicas : 10;
    idla::MixingOptions mo;
    mo.extra_eps = {a.epsilon};
    auto prof = idla::mixing_time(*g, mo);
    double ln_n = std::log(static_cast<double>(g->n()));
    double scale = g->n() * std::sqrt(static_cast<double>(prof.tau_half())) * ln_n * ln_n;
    long long budget = a.budget > 0 ? a.budget : static_cast<long long>(std::ceil(20.0 * scale));
    idla::WalkConfig capture_cfg;
    capture_cfg.mode = idla::WalkMode::fast_forward;
    capture_cfg.epsilon = a.epsilon;
    capture_cfg.tau_eps = prof.tau_for(a.epsilon).value();
    idla::PairOptions opt;
    opt.epsilon = a.epsilon;
    opt.tau_eps = capture_cfg.tau_eps;
    idla::CoupleMode mode = couple_mode == "pairwise_maximal"
                                ? idla::CoupleMode::pairwise_maximal
                                : idla::CoupleMode::shared_stacks;

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!a.out.empty()) {
        file.open(a.out);
        if (!file) throw std::runtime_error("cannot open output file: " + a.out);
        os = &file;
    }
    *os << idla::CoalescenceRecord::csv_header() << "\n";
    bool all_ok = true;
    for (long long p = 0; p < pairs; ++p) {
        auto s1 = idla::derive_seed(a.seed, 0xC0u, p, 1);
        auto s2 = idla::derive_seed(a.seed, 0xC0u, p, 2);
        auto sp = idla::derive_seed(a.seed, 0xC0u, p, 3);
        auto rec = idla::coupled_idla_pair(idla::capture_typical_state(g, s1, capture_cfg),
                                           idla::capture_typical_state(g, s2, capture_cfg), mode,
                                           sp, budget, opt);
        *os << rec.csv_row() << "\n";
        all_ok = all_ok && !rec.censored && rec.stick_verified;
    }
    if (!a.out.empty()) std::printf("wrote %s (%lld pairs)\n", a.out.c_str(), pairs);
    return all_ok ? 0 : 1;
}

int cmd_abelian(const GlobalArgs& a, const std::string& odometer_path) {
    ExperimentSpec spec = spec_from_args(a, "abelian_check");
    auto rec = idla::run_experiment(spec);
    if (!odometer_path.empty()) {
        auto g = single_graph(a);
        idla::InstructionStacks stacks(g, idla::derive_seed(a.seed, 0xA0u));
        int consumer = stacks.new_consumer();
        long long particles = a.steps > 0 ? a.steps : 20;
        auto out = idla::idla_via_stacks(stacks, consumer, particles);
        idla::write_odometer_csv(out.stabilization.odometer, odometer_path);
        std::printf("odometer written to %s\n", odometer_path.c_str());
    }
    return report(rec);
}

int cmd_experiment(const GlobalArgs& a, const CLI::App* cmd, const std::string& id,
                   const std::string& config_path) {
    ExperimentSpec spec;
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw std::runtime_error("cannot open config file: " + config_path);
        spec = ExperimentSpec::from_json(json::parse(f));
    }
    if (!id.empty()) spec.id = id;
    // Explicit flags override config-file values.
    auto given = [&](const char* name) { return cmd->count(name) > 0; };
    if (given("--graph")) spec.family = a.graph;
    if (given("--n")) spec.sizes = a.n;
    if (given("--seed")) spec.seed = a.seed;
    if (given("--replicas")) spec.replicas = a.replicas;
    if (given("--samples")) spec.samples = a.samples;
    if (given("--steps")) spec.steps = a.steps;
    if (given("--budget")) spec.budget = a.budget;
    if (given("--mode")) spec.mode = a.mode;
    if (given("--epsilon")) spec.epsilon = a.epsilon;
    if (given("--gamma")) spec.gamma = a.gamma;
    if (given("--threads")) spec.threads = a.threads;
    if (given("--out")) spec.out_path = a.out;
    if (given("--format"))
        spec.format = a.format == "csv" ? idla::OutFormat::csv : idla::OutFormat::json;
    return report(idla::run_experiment(spec));
}

int cmd_stationary(const GlobalArgs& a) {
    ExperimentSpec spec = spec_from_args(a, "stationary_height");
    auto rec = idla::run_experiment(spec);
    for (const auto& entry : rec.summary.at("per_size")) {
        std::printf("n=%d  h_q50=%.4g h_q99=%.4g  (h_q99/scale=%.4g)  E_q99=%.4g  flat=%.4g\n",
                    entry.at("n").get<int>(), entry.at("height_q50").get<double>(),
                    entry.at("height_q99").get<double>(),
                    entry.at("height_q99").get<double>() / entry.at("height_norm").get<double>(),
                    entry.at("excess_q99").get<double>(), entry.at("flat_fraction").get<double>());
    }
    return report(rec);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IDLA on cylinder graphs: simulation, mixing, couplings, experiments"};
    app.require_subcommand(1);

    GlobalArgs args;

    auto* simulate = app.add_subcommand("simulate", "grow a cluster and print its stats timeline");
    bool no_shift = false;
    std::string snapshot_path;
    add_global_flags(simulate, args);
    simulate->add_flag("--no-shift", no_shift, "skip renormalization after settles");
    simulate->add_option("--snapshot-out", snapshot_path, "write final cluster JSON here");

    auto* mix = app.add_subcommand("mix", "mixing profile tau_N(eps) of the horizontal chain");
    bool monte_carlo = false;
    std::vector<double> extra_eps;
    add_global_flags(mix, args);
    mix->add_flag("--monte-carlo", monte_carlo, "estimate the curve by simulation");
    mix->add_option("--eps", extra_eps, "extra epsilon values for the tau table");

    auto* couple = app.add_subcommand("couple", "coupled shifted pairs until coalescence (CSV)");
    std::string couple_mode = "shared_stacks";
    add_global_flags(couple, args);
    couple->add_option("--couple-mode", couple_mode, "shared_stacks|pairwise_maximal")
        ->check(CLI::IsMember({"shared_stacks", "pairwise_maximal"}));

    auto* abelian = app.add_subcommand("abelian-check", "stabilization order independence");
    std::string odometer_path;
    add_global_flags(abelian, args);
    abelian->add_option("--odometer-out", odometer_path, "write a reference odometer CSV here");

    auto* experiment = app.add_subcommand("experiment", "run a named experiment");
    std::string experiment_id;
    std::string config_path;
    add_global_flags(experiment, args);
    std::string id_help = "experiment id (";
    for (std::size_t i = 0; i < idla::experiment_ids().size(); ++i)
        id_help += (i ? ", " : "") + idla::experiment_ids()[i];
    id_help += ")";
    experiment->add_option("id", experiment_id, id_help);
    experiment->add_option("--config", config_path, "JSON file mirroring the experiment spec");

    auto* stationary = app.add_subcommand("stationary", "post-burn-in height/excess quantiles");
    add_global_flags(stationary, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e);
            return 0;
        }
        std::cerr << "usage error: " << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(args, !no_shift, snapshot_path);
        if (mix->parsed()) return cmd_mix(args, monte_carlo, extra_eps);
        if (couple->parsed()) return cmd_couple(args, couple_mode);
        if (abelian->parsed()) return cmd_abelian(args, odometer_path);
        if (experiment->parsed()) {
            if (experiment_id.empty() && config_path.empty()) {
                std::cerr << "usage error: experiment needs an id or --config\n";
                return 2;
            }
            return cmd_experiment(args, experiment, experiment_id, config_path);
        }
        if (stationary->parsed()) return cmd_stationary(args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
