#include "idla/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace idla {

MeanSe mean_se(const std::vector<double>& xs) {
    MeanSe r;
    r.n = static_cast<long long>(xs.size());
    if (r.n == 0) {
        return r;
    }
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    r.mean = sum / static_cast<double>(r.n);
    if (r.n < 2) {
        return r;
    }
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - r.mean) * (x - r.mean);
    }
    const double var = ss / static_cast<double>(r.n - 1);
    r.se = std::sqrt(var / static_cast<double>(r.n));
    return r;
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) {
        throw std::invalid_argument("quantile: empty sample");
    }
    if (q < 0.0 || q > 1.0) {
        throw std::invalid_argument("quantile: q outside [0, 1]");
    }
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= xs.size()) {
        return xs.back();
    }
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

// Series expansion for P(a, x), x < a + 1.
static double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 10'000; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), x >= a + 1.
static double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 10'000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        c = b + an / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) {
            break;
        }
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double regularized_gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) {
        throw std::invalid_argument("regularized_gamma_p: need a > 0, x >= 0");
    }
    if (x == 0.0) {
        return 0.0;
    }
    return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double chi2_sf(double stat, long long dof) {
    if (dof <= 0) {
        return 1.0;
    }
    if (stat <= 0.0) {
        return 1.0;
    }
    const double p = regularized_gamma_p(static_cast<double>(dof) / 2.0, stat / 2.0);
    return std::clamp(1.0 - p, 0.0, 1.0);
}

namespace {

// Merges adjacent cells until each merged cell's expected count reaches the
// floor; a deficient tail is folded into the last emitted cell.
struct PooledCells {
    std::vector<double> obs;
    std::vector<double> exp;
    long long merged = 0;
};

PooledCells pool_cells(const std::vector<double>& obs, const std::vector<double>& exp,
                       double min_expected) {
    PooledCells out;
    double o = 0.0;
    double e = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        o += obs[i];
        e += exp[i];
        if (e >= min_expected) {
            out.obs.push_back(o);
            out.exp.push_back(e);
            o = 0.0;
            e = 0.0;
        } else {
            ++out.merged;
        }
    }
    if (e > 0.0 || o > 0.0) {
        if (out.exp.empty()) {
            out.obs.push_back(o);
            out.exp.push_back(e);
        } else {
            out.obs.back() += o;
            out.exp.back() += e;
        }
    }
    return out;
}

}  // namespace

Chi2Result chi2_goodness(const std::vector<long long>& counts, const std::vector<double>& probs,
                         double min_expected) {
    if (counts.size() != probs.size()) {
        throw std::invalid_argument("chi2_goodness: size mismatch");
    }
    long long total = 0;
    for (long long c : counts) {
        total += c;
    }
    if (total == 0) {
        throw std::invalid_argument("chi2_goodness: empty sample");
    }
    std::vector<double> obs(counts.begin(), counts.end());
    std::vector<double> exp(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        exp[i] = probs[i] * static_cast<double>(total);
    }
    PooledCells p = pool_cells(obs, exp, min_expected);
    Chi2Result r;
    r.pooled_cells = p.merged;
    for (std::size_t i = 0; i < p.obs.size(); ++i) {
        if (p.exp[i] <= 0.0) {
            if (p.obs[i] > 0.0) {
                r.stat = std::numeric_limits<double>::infinity();
            }
            continue;
        }
        const double d = p.obs[i] - p.exp[i];
        r.stat += d * d / p.exp[i];
    }
    r.dof = static_cast<long long>(p.obs.size()) - 1;
    r.p_value = chi2_sf(r.stat, r.dof);
    return r;
}

Chi2Result chi2_two_sample(const std::vector<long long>& a, const std::vector<long long>& b,
                           double min_expected) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("chi2_two_sample: size mismatch");
    }
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += static_cast<double>(a[i]);
        nb += static_cast<double>(b[i]);
    }
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("chi2_two_sample: empty sample");
    }
    // Pool on the smaller sample's expected counts so both sides meet the
    // floor after merging.
    const double scale = std::min(na, nb) / (na + nb);
    std::vector<double> oa(a.begin(), a.end());
    std::vector<double> ob(b.begin(), b.end());
    std::vector<double> combined(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        combined[i] = (oa[i] + ob[i]) * scale;
    }
    PooledCells guide = pool_cells(combined, combined, min_expected);
    // Re-apply the same merge boundaries to both observed vectors.
    std::vector<double> pa;
    std::vector<double> pb;
    {
        double sa = 0.0;
        double sb = 0.0;
        double e = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            sa += oa[i];
            sb += ob[i];
            e += combined[i];
            if (e >= min_expected) {
                pa.push_back(sa);
                pb.push_back(sb);
                sa = sb = e = 0.0;
            }
        }
        if (sa > 0.0 || sb > 0.0) {
            if (pa.empty()) {
                pa.push_back(sa);
                pb.push_back(sb);
            } else {
                pa.back() += sa;
                pb.back() += sb;
            }
        }
    }
    Chi2Result r;
    r.pooled_cells = guide.merged;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double rowsum = pa[i] + pb[i];
        if (rowsum <= 0.0) {
            continue;
        }
        const double ea = rowsum * na / (na + nb);
        const double eb = rowsum * nb / (na + nb);
        r.stat += (pa[i] - ea) * (pa[i] - ea) / ea + (pb[i] - eb) * (pb[i] - eb) / eb;
    }
    r.dof = static_cast<long long>(pa.size()) - 1;
    r.p_value = chi2_sf(r.stat, r.dof);
    return r;
}

EmpiricalTv empirical_tv(const std::map<std::uint64_t, long long>& a,
                         const std::map<std::uint64_t, long long>& b) {
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [k, c] : a) {
        na += static_cast<double>(c);
    }
    for (const auto& [k, c] : b) {
        nb += static_cast<double>(c);
    }
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("empirical_tv: empty sample");
    }
    std::set<std::uint64_t> keys;
    for (const auto& [k, c] : a) {
        keys.insert(k);
    }
    for (const auto& [k, c] : b) {
        keys.insert(k);
    }
    double tv = 0.0;
    double mass_a_over = 0.0;  // P_a of the set where p_a > p_b
    double mass_b_over = 0.0;
    for (std::uint64_t k : keys) {
        auto ita = a.find(k);
        auto itb = b.find(k);
        const double pa = (ita == a.end() ? 0.0 : static_cast<double>(ita->second)) / na;
        const double pb = (itb == b.end() ? 0.0 : static_cast<double>(itb->second)) / nb;
        tv += std::abs(pa - pb);
        if (pa > pb) {
            mass_a_over += pa;
            mass_b_over += pb;
        }
    }
    EmpiricalTv r;
    r.tv = 0.5 * tv;
    // TV = P_a(S) - P_b(S) on the optimal set S: delta-method variance of the
    // two binomial masses, plus the plug-in upward bias allowance
    // 0.5 * (sqrt(K/na) + sqrt(K/nb)) (Cauchy-Schwarz on E|p_hat - p|).
    const double var = mass_a_over * (1.0 - mass_a_over) / na + mass_b_over * (1.0 - mass_b_over) / nb;
    const double kcells = static_cast<double>(keys.size());
    r.se = std::sqrt(std::max(var, 0.0)) + 0.5 * (std::sqrt(kcells / na) + std::sqrt(kcells / nb));
    return r;
}

ScalingFit scaling_fit(const std::vector<double>& observable, const std::vector<double>& scale,
                       double flag_threshold) {
    if (observable.size() != scale.size()) {
        throw std::invalid_argument("scaling_fit: need matching vectors");
    }
    if (observable.size() < 3) {
        throw std::invalid_argument("scaling_fit: need at least 3 sizes to judge stability");
    }
    ScalingFit f;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < observable.size(); ++i) {
        if (scale[i] <= 0.0) {
            throw std::invalid_argument("scaling_fit: scale entries must be positive");
        }
        const double c = observable[i] / scale[i];
        f.constants.push_back(c);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    if (lo <= 0.0) {
        f.spread = std::numeric_limits<double>::infinity();
    } else {
        f.spread = hi / lo;
    }
    f.flagged = f.spread > flag_threshold;
    return f;
}

}  // namespace idla
