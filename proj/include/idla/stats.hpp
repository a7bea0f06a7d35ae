// Small statistics toolbox for the experiment harness: summary statistics,
// chi-square goodness-of-fit with automatic tail pooling, empirical
// total-variation distances with conservative uncertainties, and the
// constant-extraction helper for scaling claims.

#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace idla {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    long long n = 0;
};

MeanSe mean_se(const std::vector<double>& xs);

// Linearly interpolated empirical quantile, q in [0, 1].  Sorts a copy.
double quantile(std::vector<double> xs, double q);

// Regularized lower incomplete gamma P(a, x); series + continued fraction.
double regularized_gamma_p(double a, double x);

// Upper tail of the chi-square distribution with dof degrees of freedom.
double chi2_sf(double stat, long long dof);

struct Chi2Result {
    double stat = 0.0;
    long long dof = 0;
    double p_value = 1.0;
    long long pooled_cells = 0;  // cells merged to meet the expected-count floor
};

// One-sample test of observed counts against a discrete law.  Cells whose
// expected count falls below min_expected are pooled into the previous cell.
Chi2Result chi2_goodness(const std::vector<long long>& counts, const std::vector<double>& probs,
                         double min_expected = 5.0);

// Two-sample homogeneity test on aligned count vectors (same pooling rule,
// applied to the combined expected counts).
Chi2Result chi2_two_sample(const std::vector<long long>& a, const std::vector<long long>& b,
                           double min_expected = 5.0);

// Plug-in TV distance between two empirical distributions given as count
// maps, with a conservative uncertainty: delta-method SE plus the upward
// bias allowance 0.5 * sqrt(2K / M) for K observed cells.
struct EmpiricalTv {
    double tv = 0.0;
    double se = 0.0;  // includes the bias allowance
};

EmpiricalTv empirical_tv(const std::map<std::uint64_t, long long>& a,
                         const std::map<std::uint64_t, long long>& b);

// Per-size constants C_i = observable_i / scale_i and their spread
// max C / min C; flagged when the spread exceeds the threshold.
struct ScalingFit {
    std::vector<double> constants;
    double spread = 0.0;
    bool flagged = false;
};

ScalingFit scaling_fit(const std::vector<double>& observable, const std::vector<double>& scale,
                       double flag_threshold);

}  // namespace idla
