#include "beta/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stack>

#include <nlohmann/json.hpp>

#include "beta/errors.hpp"
#include "beta/io.hpp"
#include "beta/kernels.hpp"

namespace beta {

using json = nlohmann::json;

SensorGraph SensorGraph::from_edges(
    std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges,
    std::size_t max_in) {
    for (const auto& [src, dst] : edges) {
        if (src >= n || dst >= n) throw dim_error("graph edge endpoint out of range");
        if (src == dst) throw dim_error("graph has a self loop");
    }
    std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    SensorGraph g;
    g.n = n;
    g.max_in = max_in;
    g.edges = std::move(edges);
    g.in_offsets.assign(n + 1, 0);
    for (const auto& e : g.edges) g.in_offsets[e.second + 1]++;
    for (std::size_t i = 0; i < n; ++i) g.in_offsets[i + 1] += g.in_offsets[i];
    for (std::size_t i = 0; i < n; ++i)
        if (g.in_degree(i) > max_in)
            throw dim_error("node " + std::to_string(i) + " exceeds max in-degree");
    return g;
}

std::vector<std::size_t> SensorGraph::in_neighbors(std::size_t dst) const {
    auto [first, last] = in_range(dst);
    std::vector<std::size_t> out;
    out.reserve(last - first);
    for (std::size_t e = first; e < last; ++e) out.push_back(edges[e].first);
    return out;
}

bool SensorGraph::has_edge(std::size_t src, std::size_t dst) const {
    auto [first, last] = in_range(dst);
    for (std::size_t e = first; e < last; ++e)
        if (edges[e].first == src) return true;
    return false;
}

std::vector<std::vector<std::size_t>> SensorGraph::undirected() const {
    std::vector<std::set<std::size_t>> adj(n);
    for (const auto& [src, dst] : edges) {
        adj[src].insert(dst);
        adj[dst].insert(src);
    }
    std::vector<std::vector<std::size_t>> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i].assign(adj[i].begin(), adj[i].end());
    return out;
}

SensorGraph learn_adjacency(const Tensor& embeddings,
                            const std::vector<std::vector<std::size_t>>& candidates,
                            std::size_t max_in) {
    if (embeddings.rank() != 2) throw dim_error("learn_adjacency: N x d embeddings");
    const std::size_t n = embeddings.rows();
    const std::size_t d = embeddings.cols();
    if (max_in >= n) throw config_error("learn_adjacency: M must be < N");
    if (!candidates.empty() && candidates.size() != n)
        throw dim_error("learn_adjacency: candidate list size mismatch");

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* v = embeddings.data() + i * d;
        norms[i] = std::sqrt(kern::ops().dot4(v, v, d));
        if (norms[i] == 0.0)
            throw numeric_error("learn_adjacency: zero-norm embedding at node " +
                                std::to_string(i));
    }

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> cand;
        if (candidates.empty()) {
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) cand.push_back(j);
        } else {
            for (std::size_t j : candidates[i]) {
                if (j >= n) throw dim_error("learn_adjacency: candidate out of range");
                if (j != i) cand.push_back(j);
            }
            std::sort(cand.begin(), cand.end());
            cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        }
        std::vector<std::pair<double, std::size_t>> scored;
        scored.reserve(cand.size());
        const double* vi = embeddings.data() + i * d;
        for (std::size_t j : cand) {
            const double* vj = embeddings.data() + j * d;
            const double cos = kern::ops().dot4(vi, vj, d) / (norms[i] * norms[j]);
            scored.emplace_back(cos, j);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        const std::size_t keep = std::min(max_in, scored.size());
        for (std::size_t k = 0; k < keep; ++k)
            edges.emplace_back(scored[k].second, i);  // j -> i
    }
    return SensorGraph::from_edges(n, std::move(edges), max_in);
}

const char* to_string(CentralityMeasure m) {
    switch (m) {
        case CentralityMeasure::eigenvector: return "eigenvector";
        case CentralityMeasure::degree: return "degree";
        case CentralityMeasure::closeness: return "closeness";
        case CentralityMeasure::betweenness: return "betweenness";
        case CentralityMeasure::clustering: return "clustering";
        case CentralityMeasure::avg_neighbor_degree: return "avg_neighbor_degree";
    }
    return "?";
}

CentralityMeasure centrality_from_string(const std::string& name) {
    if (name == "eigenvector") return CentralityMeasure::eigenvector;
    if (name == "degree") return CentralityMeasure::degree;
    if (name == "closeness") return CentralityMeasure::closeness;
    if (name == "betweenness") return CentralityMeasure::betweenness;
    if (name == "clustering") return CentralityMeasure::clustering;
    if (name == "avg_neighbor_degree") return CentralityMeasure::avg_neighbor_degree;
    throw config_error("unknown centrality measure: " + name);
}

namespace {

std::vector<double> eigenvector_scores(
    const std::vector<std::vector<std::size_t>>& adj) {
    const std::size_t n = adj.size();
    std::size_t edge_count = 0;
    for (const auto& nb : adj) edge_count += nb.size();
    if (edge_count == 0)
        throw config_error("eigenvector centrality needs at least one edge");

    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> next(n);
    const double tol = 1e-10;
    const int max_iters = 10000;
    double resid = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        // Power iteration on A + I; same eigenvectors as A, but the shifted
        // spectrum cannot oscillate on bipartite graphs.
        for (std::size_t i = 0; i < n; ++i) {
            double s = x[i];
            for (std::size_t j : adj[i]) s += x[j];
            next[i] = s;
        }
        double norm = std::sqrt(kern::ops().dot4(next.data(), next.data(), n));
        for (std::size_t i = 0; i < n; ++i) next[i] /= norm;
        resid = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dlt = next[i] - x[i];
            resid += dlt * dlt;
        }
        resid = std::sqrt(resid);
        x.swap(next);
        if (resid <= tol) {
            for (double& v : x)
                if (v < 0.0) v = 0.0;  // clip tiny negative round-off
            double norm2 = std::sqrt(kern::ops().dot4(x.data(), x.data(), n));
            for (double& v : x) v /= norm2;
            return x;
        }
    }
    throw numeric_error("eigenvector centrality did not converge, residual " +
                        std::to_string(resid));
}

// BFS distances, -1 for unreachable.
std::vector<int> bfs_dist(const std::vector<std::vector<std::size_t>>& adj,
                          std::size_t s) {
    std::vector<int> dist(adj.size(), -1);
    std::queue<std::size_t> q;
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
        std::size_t v = q.front();
        q.pop();
        for (std::size_t w : adj[v])
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                q.push(w);
            }
    }
    return dist;
}

std::vector<double> closeness_scores(const std::vector<std::vector<std::size_t>>& adj) {
    const std::size_t n = adj.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;

    bool connected = true;
    {
        auto d0 = bfs_dist(adj, 0);
        for (int d : d0)
            if (d < 0) {
                connected = false;
                break;
            }
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto dist = bfs_dist(adj, i);
        if (connected) {
            long total = 0;
            for (std::size_t j = 0; j < n; ++j) total += dist[j];
            out[i] = total > 0 ? static_cast<double>(n - 1) / static_cast<double>(total)
                               : 0.0;
        } else {
            // Harmonic variant; unreachable nodes contribute 0.
            double h = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && dist[j] > 0) h += 1.0 / static_cast<double>(dist[j]);
            out[i] = h / static_cast<double>(n - 1);
        }
    }
    return out;
}

std::vector<double> betweenness_scores(
    const std::vector<std::vector<std::size_t>>& adj) {
    const std::size_t n = adj.size();
    std::vector<double> cb(n, 0.0);
    if (n < 3) return cb;

    // Brandes for unweighted graphs.
    for (std::size_t s = 0; s < n; ++s) {
        std::stack<std::size_t> order;
        std::vector<std::vector<std::size_t>> pred(n);
        std::vector<double> sigma(n, 0.0);
        std::vector<int> dist(n, -1);
        sigma[s] = 1.0;
        dist[s] = 0;
        std::queue<std::size_t> q;
        q.push(s);
        while (!q.empty()) {
            std::size_t v = q.front();
            q.pop();
            order.push(v);
            for (std::size_t w : adj[v]) {
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    q.push(w);
                }
                if (dist[w] == dist[v] + 1) {
                    sigma[w] += sigma[v];
                    pred[w].push_back(v);
                }
            }
        }
        std::vector<double> delta(n, 0.0);
        while (!order.empty()) {
            std::size_t w = order.top();
            order.pop();
            for (std::size_t v : pred[w])
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            if (w != s) cb[w] += delta[w];
        }
    }
    // Each unordered pair was counted twice; normalize by the pair count.
    const double pairs = static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0;
    for (double& v : cb) v = v / 2.0 / pairs;
    return cb;
}

std::vector<double> clustering_scores(const std::vector<std::vector<std::size_t>>& adj) {
    const std::size_t n = adj.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nb = adj[i];
        if (nb.size() < 2) continue;
        std::size_t links = 0;
        for (std::size_t a = 0; a < nb.size(); ++a)
            for (std::size_t b = a + 1; b < nb.size(); ++b)
                if (std::binary_search(adj[nb[a]].begin(), adj[nb[a]].end(), nb[b]))
                    ++links;
        out[i] = 2.0 * static_cast<double>(links) /
                 (static_cast<double>(nb.size()) * static_cast<double>(nb.size() - 1));
    }
    return out;
}

}  // namespace

CentralityVector centrality(const SensorGraph& g, CentralityMeasure measure) {
    if (g.n == 0) throw dim_error("centrality of an empty graph");
    const auto adj = g.undirected();
    CentralityVector out;
    out.measure = measure;
    switch (measure) {
        case CentralityMeasure::eigenvector:
            out.scores = eigenvector_scores(adj);
            break;
        case CentralityMeasure::degree: {
            out.scores.resize(g.n);
            for (std::size_t i = 0; i < g.n; ++i)
                out.scores[i] = g.n > 1 ? static_cast<double>(adj[i].size()) /
                                              static_cast<double>(g.n - 1)
                                        : 0.0;
            break;
        }
        case CentralityMeasure::closeness:
            out.scores = closeness_scores(adj);
            break;
        case CentralityMeasure::betweenness:
            out.scores = betweenness_scores(adj);
            break;
        case CentralityMeasure::clustering:
            out.scores = clustering_scores(adj);
            break;
        case CentralityMeasure::avg_neighbor_degree: {
            out.scores.assign(g.n, 0.0);
            for (std::size_t i = 0; i < g.n; ++i) {
                if (adj[i].empty()) continue;
                double s = 0.0;
                for (std::size_t j : adj[i]) s += static_cast<double>(adj[j].size());
                out.scores[i] = s / static_cast<double>(adj[i].size());
            }
            break;
        }
    }
    return out;
}

std::vector<std::size_t> select_top_nodes(const std::vector<std::size_t>& candidates,
                                          std::size_t budget,
                                          const CentralityVector& scores,
                                          std::size_t target) {
    const std::size_t n = scores.scores.size();
    if (budget < 1) throw config_error("select_top_nodes: budget must be >= 1");
    if (budget >= n)
        throw config_error("select_top_nodes: budget " + std::to_string(budget) +
                           " exceeds graph of " + std::to_string(n) + " nodes");
    if (target >= n) throw dim_error("select_top_nodes: target out of range");

    auto ranked = [&](std::vector<std::size_t> pool) {
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
        std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
            if (scores.scores[a] != scores.scores[b])
                return scores.scores[a] > scores.scores[b];
            return a < b;
        });
        return pool;
    };

    std::vector<std::size_t> pool;
    for (std::size_t c : candidates) {
        if (c >= n) throw dim_error("select_top_nodes: candidate out of range");
        if (c != target) pool.push_back(c);
    }
    pool = ranked(std::move(pool));

    std::vector<std::size_t> chosen;
    for (std::size_t c : pool) {
        if (chosen.size() == budget) break;
        chosen.push_back(c);
    }
    if (chosen.size() < budget) {
        std::vector<std::size_t> fill;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == target) continue;
            if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
            fill.push_back(i);
        }
        fill = ranked(std::move(fill));
        for (std::size_t c : fill) {
            if (chosen.size() == budget) break;
            chosen.push_back(c);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

void save_graph(const std::filesystem::path& prefix, const SensorGraph& g,
                const Tensor& embeddings) {
    json j;
    j["n"] = g.n;
    j["max_in"] = g.max_in;
    json edges = json::array();
    for (const auto& [src, dst] : g.edges) edges.push_back({src, dst});
    j["edges"] = std::move(edges);
    j["embedding_dim"] = embeddings.rank() == 2 ? embeddings.cols() : 0;
    std::filesystem::path sidecar = prefix;
    sidecar += ".embeddings.bin";
    j["embeddings_file"] = sidecar.filename().string();
    std::filesystem::path main = prefix;
    main += ".json";
    io::atomic_write_text(main, j.dump(2) + "\n");
    io::atomic_write_f64_blob(sidecar,
                              std::span(embeddings.data(), embeddings.size()));
}

std::pair<SensorGraph, Tensor> load_graph(const std::filesystem::path& prefix) {
    std::filesystem::path main = prefix;
    main += ".json";
    json j = json::parse(io::read_text_file(main));
    const std::size_t n = j.at("n").get<std::size_t>();
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& e : j.at("edges"))
        edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    SensorGraph g =
        SensorGraph::from_edges(n, std::move(edges), j.at("max_in").get<std::size_t>());
    const std::size_t d = j.at("embedding_dim").get<std::size_t>();
    std::filesystem::path sidecar = main.parent_path() /
                                    j.at("embeddings_file").get<std::string>();
    std::vector<double> vals = io::read_f64_blob(sidecar);
    if (vals.size() != n * d) throw parse_error("embedding sidecar size mismatch");
    return {std::move(g), Tensor::matrix(n, d, std::move(vals))};
}

}  // namespace beta
