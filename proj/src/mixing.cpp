#include "idla/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace idla {

std::vector<double> default_eps_grid(int n) {
    std::vector<double> eps = {0.5};
    double p = 1.0;
    for (int gamma = 1; gamma <= 3; ++gamma) {
        p /= n;
        eps.push_back(p);
    }
    return eps;
}

long long MixingProfile::tau_half() const {
    auto t = tau_for(0.5);
    if (!t) throw std::logic_error("MixingProfile: eps = 1/2 missing from grid");
    return *t;
}

std::optional<long long> MixingProfile::tau_for(double eps) const {
    for (std::size_t i = 0; i < eps_grid.size(); ++i)
        if (std::abs(eps_grid[i] - eps) <= 1e-15 * std::max(1.0, std::abs(eps)))
            return tau[i];
    return std::nullopt;
}

void MixingProfile::write_curve_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "k,max_pair_tv";
    if (!se.empty()) out << ",se";
    out << "\n";
    for (std::size_t i = 0; i < curve_k.size(); ++i) {
        out << curve_k[i] << "," << max_pair_tv[i];
        if (!se.empty()) out << "," << se[i];
        out << "\n";
    }
}

void MixingProfile::write_tau_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "epsilon,tau\n";
    for (std::size_t i = 0; i < eps_grid.size(); ++i) out << eps_grid[i] << "," << tau[i] << "\n";
}

namespace {

double max_pair_tv_of_rows(const std::vector<double>& rows, int n) {
    double worst = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const double* ra = rows.data() + static_cast<std::size_t>(a) * n;
            const double* rb = rows.data() + static_cast<std::size_t>(b) * n;
            double s = 0.0;
            for (int w = 0; w < n; ++w) s += std::abs(ra[w] - rb[w]);
            worst = std::max(worst, 0.5 * s);
        }
    return worst;
}

MixingProfile mixing_exact(const BaseGraph& g, const MixingOptions& opts,
                           std::vector<double> grid) {
    int n = g.n();
    if (n > opts.exact_vertex_cap)
        throw std::runtime_error(
            "mixing_time: exact mode supports up to " + std::to_string(opts.exact_vertex_cap) +
            " vertices (got " + std::to_string(n) + "); use Monte Carlo mode");

    std::vector<double> P = lazy_transition_matrix(g);
    // rows[k] starts as the identity (k = 0: point masses).
    std::vector<double> rows(static_cast<std::size_t>(n) * n, 0.0);
    for (int v = 0; v < n; ++v) rows[static_cast<std::size_t>(v) * n + v] = 1.0;

    MixingProfile prof;
    prof.method = MixingMethod::exact;
    prof.eps_grid = grid;
    prof.tau.assign(grid.size(), -1);

    double eps_min = grid.back();
    std::vector<double> next(rows.size());
    for (long long k = 0;; ++k) {
        double d = max_pair_tv_of_rows(rows, n);
        prof.curve_k.push_back(k);
        prof.max_pair_tv.push_back(d);
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (prof.tau[i] < 0 && d <= grid[i]) prof.tau[i] = k;
        if (d <= eps_min) break;
        if (k >= opts.step_cap)
            throw std::runtime_error("mixing_time: step cap exceeded before reaching smallest epsilon");
        // rows <- rows * P
        std::fill(next.begin(), next.end(), 0.0);
        for (int v = 0; v < n; ++v) {
            const double* rv = rows.data() + static_cast<std::size_t>(v) * n;
            double* nv = next.data() + static_cast<std::size_t>(v) * n;
            for (int a = 0; a < n; ++a) {
                double rva = rv[a];
                if (rva == 0.0) continue;
                nv[a] += rva * 0.5;
                double share = rva * 0.5 / g.degree(a);
                for (int w : g.neighbors(a)) nv[w] += share;
            }
        }
        rows.swap(next);
    }
    prof.max_pair_tv_monotone = prof.max_pair_tv;
    for (std::size_t i = 1; i < prof.max_pair_tv_monotone.size(); ++i)
        prof.max_pair_tv_monotone[i] =
            std::min(prof.max_pair_tv_monotone[i], prof.max_pair_tv_monotone[i - 1]);
    return prof;
}

MixingProfile mixing_monte_carlo(const BaseGraph& g, const MixingOptions& opts,
                                 std::vector<double> grid) {
    int n = g.n();
    long long M = opts.samples_per_start;
    if (M < 2) throw std::invalid_argument("mixing_time: need at least 2 samples per start");

    // counts[k][start][vertex]
    std::vector<std::vector<std::vector<long long>>> counts(
        opts.mc_k_max + 1,
        std::vector<std::vector<long long>>(n, std::vector<long long>(n, 0)));

    Rng rng(derive_seed(opts.seed, purpose_tag(StreamPurpose::walker)));
    for (int start = 0; start < n; ++start) {
        for (long long s = 0; s < M; ++s) {
            int v = start;
            counts[0][start][v] += 1;
            for (int k = 1; k <= opts.mc_k_max; ++k) {
                if (rng.bit()) {  // move half: uniform neighbor
                    const auto& nb = g.neighbors(v);
                    v = nb[rng.below(static_cast<std::uint32_t>(nb.size()))];
                }
                counts[k][start][v] += 1;
            }
        }
    }

    MixingProfile prof;
    prof.method = MixingMethod::monte_carlo;
    prof.eps_grid = grid;
    prof.tau.assign(grid.size(), -1);
    double bias_allow = 0.5 * std::sqrt(2.0 * n / static_cast<double>(M));

    for (int k = 0; k <= opts.mc_k_max; ++k) {
        double worst = 0.0, worst_se = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) {
                double s = 0.0, pa = 0.0, pb = 0.0;
                for (int w = 0; w < n; ++w) {
                    double x = counts[k][a][w] / static_cast<double>(M);
                    double y = counts[k][b][w] / static_cast<double>(M);
                    s += std::abs(x - y);
                    if (x >= y) {
                        pa += x;
                        pb += y;
                    } else {
                        pa -= x;
                        pb -= y;
                    }
                }
                double tv = 0.5 * s;
                // delta-method variance of 0.5*(sum_w sign_w (p_w - q_w))
                double var = 0.25 * ((1.0 - pa * pa) + (1.0 - pb * pb)) / static_cast<double>(M);
                if (tv > worst) {
                    worst = tv;
                    worst_se = std::sqrt(std::max(0.0, var));
                }
            }
        prof.curve_k.push_back(k);
        prof.max_pair_tv.push_back(worst);
        prof.se.push_back(worst_se + bias_allow);
    }
    prof.max_pair_tv_monotone = prof.max_pair_tv;
    for (std::size_t i = 1; i < prof.max_pair_tv_monotone.size(); ++i)
        prof.max_pair_tv_monotone[i] =
            std::min(prof.max_pair_tv_monotone[i], prof.max_pair_tv_monotone[i - 1]);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < prof.max_pair_tv_monotone.size(); ++j)
            if (prof.max_pair_tv_monotone[j] <= grid[i]) {
                prof.tau[i] = prof.curve_k[j];
                break;
            }
    return prof;
}

}  // namespace

MixingProfile mixing_time(const BaseGraph& g, const MixingOptions& opts) {
    std::vector<double> grid = default_eps_grid(g.n());
    grid.insert(grid.end(), opts.extra_eps.begin(), opts.extra_eps.end());
    std::sort(grid.begin(), grid.end(), std::greater<>());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-15; }),
               grid.end());
    for (double e : grid)
        if (e <= 0.0 || e >= 1.0) throw std::invalid_argument("mixing_time: eps must lie in (0,1)");

    if (opts.method == MixingMethod::exact) return mixing_exact(g, opts, std::move(grid));
    return mixing_monte_carlo(g, opts, std::move(grid));
}

long long three_gamma_tau_log_n(long long tau_half, int gamma, int n) {
    return static_cast<long long>(std::ceil(3.0 * gamma * static_cast<double>(tau_half) * std::log(static_cast<double>(n))));
}

PowerCache::PowerCache(const BaseGraph& g) : n_(g.n()) {
    powers_.push_back(lazy_transition_matrix(g));
}

void PowerCache::ensure_bits(int bits) const {
    while (static_cast<int>(powers_.size()) < bits) {
        const auto& A = powers_.back();
        std::vector<double> B(static_cast<std::size_t>(n_) * n_, 0.0);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k) {
                double a = A[static_cast<std::size_t>(i) * n_ + k];
                if (a == 0.0) continue;
                const double* Ak = A.data() + static_cast<std::size_t>(k) * n_;
                double* Bi = B.data() + static_cast<std::size_t>(i) * n_;
                for (int j = 0; j < n_; ++j) Bi[j] += a * Ak[j];
            }
        powers_.push_back(std::move(B));
    }
}

void PowerCache::prewarm(long long max_s) const {
    if (max_s <= 0) return;
    ensure_bits(64 - std::countl_zero(static_cast<std::uint64_t>(max_s)));
}

std::vector<double> PowerCache::row(long long s, int v) const {
    if (s < 0) throw std::invalid_argument("PowerCache::row: negative exponent");
    if (v < 0 || v >= n_) throw std::invalid_argument("PowerCache::row: vertex out of range");
    std::vector<double> r(n_, 0.0);
    r[v] = 1.0;
    if (s == 0) return r;
    int bits = 64 - std::countl_zero(static_cast<std::uint64_t>(s));
    ensure_bits(bits);
    std::vector<double> tmp(n_);
    for (int i = 0; i < bits; ++i) {
        if (!(s & (1ll << i))) continue;
        const auto& A = powers_[i];
        std::fill(tmp.begin(), tmp.end(), 0.0);
        for (int k = 0; k < n_; ++k) {
            double rk = r[k];
            if (rk == 0.0) continue;
            const double* Ak = A.data() + static_cast<std::size_t>(k) * n_;
            for (int j = 0; j < n_; ++j) tmp[j] += rk * Ak[j];
        }
        r.swap(tmp);
    }
    return r;
}

}  // namespace idla
