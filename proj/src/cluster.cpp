#include "idla/cluster.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>

namespace idla {

ClusterState::ClusterState(std::shared_ptr<const BaseGraph> g) : g_(std::move(g)) {
    if (!g_) {
        throw std::invalid_argument("ClusterState: null graph");
    }
}

ClusterState ClusterState::from_sites(std::shared_ptr<const BaseGraph> g,
                                      const std::vector<CylinderSite>& above) {
    ClusterState c(std::move(g));
    const int n = c.g_->n();
    std::set<std::pair<long long, int>> seen;
    for (const auto& s : above) {
        if (s.v < 0 || s.v >= n) {
            throw std::invalid_argument("from_sites: vertex out of range");
        }
        if (s.y < 1) {
            throw std::invalid_argument("from_sites: sites must lie above level 0");
        }
        if (!seen.insert({s.y, s.v}).second) {
            throw std::invalid_argument("from_sites: duplicate site");
        }
    }
    // Connectivity: every site must reach level 0 through occupied sites.
    // Seeds are the sites at level 1, which touch the full level 0.
    std::set<std::pair<long long, int>> reached;
    std::deque<std::pair<long long, int>> queue;
    for (const auto& s : seen) {
        if (s.first == 1) {
            reached.insert(s);
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        auto [y, v] = queue.front();
        queue.pop_front();
        std::vector<std::pair<long long, int>> nbrs{{y - 1, v}, {y + 1, v}};
        for (int w : c.g_->neighbors(v)) {
            nbrs.push_back({y, w});
        }
        for (const auto& nb : nbrs) {
            if (seen.count(nb) && reached.insert(nb).second) {
                queue.push_back(nb);
            }
        }
    }
    if (reached.size() != seen.size()) {
        throw std::invalid_argument("from_sites: site set is not connected to level 0");
    }
    for (const auto& [y, v] : seen) {
        auto it = c.levels_.find(y);
        if (it == c.levels_.end()) {
            it = c.levels_.emplace(y, LevelMask(n)).first;
        }
        it->second.set(v);
        c.h_ = std::max(c.h_, y);
        ++c.size_above_;
    }
    // Promote k through any fully occupied levels.
    while (true) {
        auto it = c.levels_.find(c.k_ + 1);
        if (it == c.levels_.end() || !it->second.full()) {
            break;
        }
        c.levels_.erase(it);
        ++c.k_;
    }
    c.h_ = std::max(c.h_, c.k_);
    return c;
}

bool ClusterState::occupied(CylinderSite s) const {
    if (s.y <= k_) {
        return true;
    }
    auto it = levels_.find(s.y);
    return it != levels_.end() && it->second.test(s.v);
}

void ClusterState::settle(CylinderSite s) {
    if (s.v < 0 || s.v >= g_->n()) {
        throw std::invalid_argument("settle: vertex out of range");
    }
    if (occupied(s)) {
        throw std::logic_error("settle: site already occupied");
    }
    auto it = levels_.find(s.y);
    if (it == levels_.end()) {
        it = levels_.emplace(s.y, LevelMask(g_->n())).first;
    }
    it->second.set(s.v);
    ++size_above_;
    h_ = std::max(h_, s.y);
    while (true) {
        auto next = levels_.find(k_ + 1);
        if (next == levels_.end() || !next->second.full()) {
            break;
        }
        levels_.erase(next);
        ++k_;
    }
    h_ = std::max(h_, k_);
}

long long ClusterState::downshift() {
    const long long d = k_;
    if (d == 0) {
        return 0;
    }
    std::map<long long, LevelMask> shifted;
    for (auto& [y, mask] : levels_) {
        shifted.emplace(y - d, std::move(mask));
    }
    levels_ = std::move(shifted);
    k_ = 0;
    h_ -= d;
    size_above_ -= d * g_->n();
    shift_ += d;
    return d;
}

ClusterStats ClusterState::stats() const {
    ClusterStats st;
    st.h = h_;
    st.k = k_;
    st.size_above = size_above_;
    st.excess = static_cast<double>(h_) - static_cast<double>(size_above_) / g_->n();
    if (st.excess < 0) {
        throw std::logic_error("stats: negative excess height");
    }
    st.level_counts.assign(static_cast<std::size_t>(std::max<long long>(h_, 0)), 0);
    for (long long y = 1; y <= h_; ++y) {
        if (y <= k_) {
            st.level_counts[static_cast<std::size_t>(y - 1)] = g_->n();
        } else {
            auto it = levels_.find(y);
            st.level_counts[static_cast<std::size_t>(y - 1)] = it == levels_.end() ? 0 : it->second.count();
        }
    }
    return st;
}

bool ClusterState::same_shape(const ClusterState& other) const {
    return g_->n() == other.g_->n() && k_ == other.k_ && h_ == other.h_ &&
           size_above_ == other.size_above_ && levels_ == other.levels_;
}

std::vector<CylinderSite> ClusterState::sites_above() const {
    std::vector<CylinderSite> out;
    for (long long y = 1; y <= k_; ++y) {
        for (int v = 0; v < g_->n(); ++v) {
            out.push_back({v, y});
        }
    }
    for (const auto& [y, mask] : levels_) {
        for (int v = 0; v < g_->n(); ++v) {
            if (mask.test(v)) {
                out.push_back({v, y});
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const CylinderSite& a, const CylinderSite& b) { return std::tie(a.y, a.v) < std::tie(b.y, b.v); });
    return out;
}

nlohmann::json ClusterState::to_json() const {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& [y, mask] : levels_) {
        nlohmann::json verts = nlohmann::json::array();
        for (int v = 0; v < g_->n(); ++v) {
            if (mask.test(v)) {
                verts.push_back(v);
            }
        }
        levels.push_back({{"y", y}, {"vertices", verts}});
    }
    return {{"n", g_->n()}, {"k", k_}, {"h", h_}, {"shift", shift_}, {"partial_levels", levels}};
}

ClusterState ClusterState::from_json(std::shared_ptr<const BaseGraph> g, const nlohmann::json& j) {
    ClusterState c(std::move(g));
    if (j.at("n").get<int>() != c.g_->n()) {
        throw std::invalid_argument("from_json: snapshot base size does not match the graph");
    }
    c.k_ = j.at("k").get<long long>();
    c.h_ = j.at("h").get<long long>();
    c.shift_ = j.at("shift").get<long long>();
    c.size_above_ = c.k_ * c.g_->n();
    for (const auto& lvl : j.at("partial_levels")) {
        const long long y = lvl.at("y").get<long long>();
        if (y <= c.k_ || y > c.h_) {
            throw std::invalid_argument("from_json: partial level outside (k, h]");
        }
        LevelMask mask(c.g_->n());
        for (int v : lvl.at("vertices")) {
            if (v < 0 || v >= c.g_->n()) {
                throw std::invalid_argument("from_json: vertex out of range");
            }
            mask.set(v);
        }
        if (mask.count() == 0) {
            throw std::invalid_argument("from_json: empty level stored");
        }
        c.size_above_ += mask.count();
        c.levels_.emplace(y, std::move(mask));
    }
    c.validate_cache();
    return c;
}

void ClusterState::validate_cache() const {
    long long size = k_ * g_->n();
    long long top = k_;
    for (const auto& [y, mask] : levels_) {
        if (y <= k_) {
            throw std::logic_error("validate_cache: stored level at or below k");
        }
        if (y == k_ + 1 && mask.full()) {
            // A full level directly above k means the promotion cascade was
            // missed; full levels above a gap are legitimate.
            throw std::logic_error("validate_cache: k not maximal");
        }
        if (mask.count() == 0) {
            throw std::logic_error("validate_cache: empty level stored");
        }
        size += mask.count();
        top = std::max(top, y);
    }
    if (size != size_above_) {
        throw std::logic_error("validate_cache: size_above mismatch");
    }
    if (top != h_) {
        throw std::logic_error("validate_cache: h mismatch");
    }
}

}  // namespace idla
