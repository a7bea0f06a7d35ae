#include "idla/base_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace idla {

ProbabilityVector::ProbabilityVector(std::vector<double> p) : p_(std::move(p)) {
    double sum = 0.0;
    for (double x : p_) {
        if (x < 0.0) throw std::invalid_argument("ProbabilityVector: negative entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("ProbabilityVector: entries sum to " + std::to_string(sum));
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw std::invalid_argument("tv_distance: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

double tv_distance(const ProbabilityVector& p, const ProbabilityVector& q) {
    return tv_distance(p.values(), q.values());
}

BaseGraph::BaseGraph(int n, const std::vector<std::pair<int, int>>& edges, std::string family)
    : n_(n), edge_count_(0), adj_(static_cast<std::size_t>(std::max(n, 0))), family_(std::move(family)) {
    if (n < 2) throw std::invalid_argument("BaseGraph: need at least 2 vertices");
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw std::invalid_argument("BaseGraph: edge endpoint out of range");
        if (u == v) throw std::invalid_argument("BaseGraph: self-loop");
        auto key = std::minmax(u, v);
        if (!seen.insert(key).second) throw std::invalid_argument("BaseGraph: duplicate edge");
        adj_[u].push_back(v);
        adj_[v].push_back(u);
        ++edge_count_;
    }
    for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
    // connectivity (BFS) and minimum degree
    std::vector<char> vis(n, 0);
    std::queue<int> q;
    q.push(0);
    vis[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int w : adj_[u])
            if (!vis[w]) {
                vis[w] = 1;
                ++reached;
                q.push(w);
            }
    }
    if (reached != n) throw std::invalid_argument("BaseGraph: not connected");
    for (int v = 0; v < n; ++v)
        if (adj_[v].empty()) throw std::invalid_argument("BaseGraph: isolated vertex");
}

bool BaseGraph::regular() const {
    for (int v = 1; v < n_; ++v)
        if (degree(v) != degree(0)) return false;
    return true;
}

BaseGraph make_cycle(int n) {
    if (n < 3) throw std::invalid_argument("make_cycle: need n >= 3 (n = 2 duplicates the edge; use complete(2))");
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return BaseGraph(n, e, "cycle");
}

BaseGraph make_complete(int n) {
    if (n < 2) throw std::invalid_argument("make_complete: need n >= 2");
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return BaseGraph(n, e, "complete");
}

BaseGraph make_torus(int a, int b) {
    if (a < 3 || b < 3)
        throw std::invalid_argument("make_torus: sides must be >= 3 to stay a simple graph");
    std::vector<std::pair<int, int>> e;
    auto id = [b](int x, int y) { return x * b + y; };
    for (int x = 0; x < a; ++x)
        for (int y = 0; y < b; ++y) {
            e.emplace_back(id(x, y), id((x + 1) % a, y));
            e.emplace_back(id(x, y), id(x, (y + 1) % b));
        }
    return BaseGraph(a * b, e, "torus");
}

BaseGraph make_hypercube(int d) {
    if (d < 1 || d > 20) throw std::invalid_argument("make_hypercube: need 1 <= d <= 20");
    int n = 1 << d;
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
        for (int bt = 0; bt < d; ++bt) {
            int j = i ^ (1 << bt);
            if (i < j) e.emplace_back(i, j);
        }
    return BaseGraph(n, e, "hypercube");
}

BaseGraph make_path(int n) {
    if (n < 2) throw std::invalid_argument("make_path: need n >= 2");
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return BaseGraph(n, e, "path");
}

BaseGraph make_custom(int n, const std::vector<std::pair<int, int>>& edges) {
    return BaseGraph(n, edges, "custom");
}

BaseGraph build_graph(const std::string& family, const std::vector<int>& params) {
    auto need = [&](std::size_t k) {
        if (params.size() != k)
            throw std::invalid_argument("build_graph: family '" + family + "' expects " +
                                        std::to_string(k) + " parameter(s)");
    };
    if (family == "cycle") {
        need(1);
        return make_cycle(params[0]);
    }
    if (family == "complete") {
        need(1);
        return make_complete(params[0]);
    }
    if (family == "torus") {
        need(2);
        return make_torus(params[0], params[1]);
    }
    if (family == "hypercube") {
        need(1);
        return make_hypercube(params[0]);
    }
    if (family == "path") {
        need(1);
        return make_path(params[0]);
    }
    throw std::invalid_argument("build_graph: unknown family '" + family + "'");
}

BaseGraph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
    std::vector<std::pair<int, int>> edges;
    int maxv = -1;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        int u, v;
        if (ls >> u >> v) {
            edges.emplace_back(u, v);
            maxv = std::max({maxv, u, v});
        }
    }
    if (edges.empty()) throw std::runtime_error("load_edge_list: no edges in " + path);
    return BaseGraph(maxv + 1, edges, "custom");
}

ProbabilityVector stationary_distribution(const BaseGraph& g) {
    std::vector<double> pi(g.n());
    double denom = 2.0 * static_cast<double>(g.edge_count());
    for (int v = 0; v < g.n(); ++v) pi[v] = g.degree(v) / denom;
    return ProbabilityVector(pi);
}

QuasiRegularity quasi_regularity(const BaseGraph& g) {
    ProbabilityVector pi = stationary_distribution(g);
    double lo = 1.0, hi = 0.0;
    for (std::size_t v = 0; v < pi.size(); ++v) {
        lo = std::min(lo, pi[v]);
        hi = std::max(hi, pi[v]);
    }
    return {g.n() * lo, g.n() * hi};
}

ProbabilityVector lazy_transition_row(const BaseGraph& g, int v) {
    if (v < 0 || v >= g.n()) throw std::invalid_argument("lazy_transition_row: vertex out of range");
    std::vector<double> row(g.n(), 0.0);
    row[v] = 0.5;
    double share = 0.5 / g.degree(v);
    for (int w : g.neighbors(v)) row[w] += share;
    return ProbabilityVector(row);
}

std::vector<double> lazy_transition_matrix(const BaseGraph& g) {
    int n = g.n();
    std::vector<double> P(static_cast<std::size_t>(n) * n, 0.0);
    for (int v = 0; v < n; ++v) {
        P[static_cast<std::size_t>(v) * n + v] = 0.5;
        double share = 0.5 / g.degree(v);
        for (int w : g.neighbors(v)) P[static_cast<std::size_t>(v) * n + w] += share;
    }
    return P;
}

}  // namespace idla
