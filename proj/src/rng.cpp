#include "idla/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace idla {

DiscreteSampler::DiscreteSampler(const std::vector<double>& weights) {
    if (weights.empty()) throw std::invalid_argument("DiscreteSampler: empty weights");
    cdf_.resize(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) throw std::invalid_argument("DiscreteSampler: negative weight");
        acc += weights[i];
        cdf_[i] = acc;
    }
    if (acc <= 0.0) throw std::invalid_argument("DiscreteSampler: zero total mass");
    for (double& c : cdf_) c /= acc;
    cdf_.back() = 1.0;
}

int DiscreteSampler::sample_unit(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<int>(it - cdf_.begin());
}

}  // namespace idla
