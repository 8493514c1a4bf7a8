#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "beta/tensor.hpp"

namespace beta {

// Learned binary sensor adjacency. Edge (src, dst) means A[src][dst] > 0:
// src is an in-neighbor of dst and contributes to dst's attention sum.
// Edges are kept sorted by (dst, src) with a CSR index over destinations.
struct SensorGraph {
    std::size_t n = 0;
    std::size_t max_in = 0;  // M, maximum in-neighbors per node
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // (src, dst)
    std::vector<std::size_t> in_offsets;                     // size n+1

    static SensorGraph from_edges(std::size_t n,
                                  std::vector<std::pair<std::size_t, std::size_t>> edges,
                                  std::size_t max_in);

    // [first, last) range into `edges` holding dst's in-edges, src ascending.
    std::pair<std::size_t, std::size_t> in_range(std::size_t dst) const {
        return {in_offsets[dst], in_offsets[dst + 1]};
    }
    std::size_t in_degree(std::size_t dst) const {
        return in_offsets[dst + 1] - in_offsets[dst];
    }
    std::vector<std::size_t> in_neighbors(std::size_t dst) const;
    bool has_edge(std::size_t src, std::size_t dst) const;

    // Undirected view (A or A^T), no self loops; adjacency lists sorted.
    std::vector<std::vector<std::size_t>> undirected() const;
};

// Top-M selection by cosine similarity of embeddings (Eq. g_ji over the
// candidate set); ties broken toward the lower node index. `candidates[i]`
// lists allowed in-neighbors of node i; empty outer vector means "all except
// self" for every node.
SensorGraph learn_adjacency(const Tensor& embeddings,
                            const std::vector<std::vector<std::size_t>>& candidates,
                            std::size_t max_in);

enum class CentralityMeasure {
    eigenvector,
    degree,
    closeness,
    betweenness,
    clustering,
    avg_neighbor_degree,
};

const char* to_string(CentralityMeasure m);
CentralityMeasure centrality_from_string(const std::string& name);

struct CentralityVector {
    CentralityMeasure measure;
    std::vector<double> scores;
};

// All measures are computed on the undirected view of the graph and are
// fully deterministic. Eigenvector centrality runs power iteration on A+I
// (the shift avoids oscillation on bipartite graphs without changing the
// eigenvectors), tolerance 1e-10, at most 10000 iterations, all-ones start;
// the result has unit Euclidean norm and nonnegative entries.
CentralityVector centrality(const SensorGraph& g, CentralityMeasure measure);

// Top-budget nodes from `candidates` ranked by centrality score (ties toward
// the lower index), never containing `target`; shortfall is filled from all
// other non-target nodes under the same ranking. Result is sorted and has
// exactly min(budget, n-1) elements.
std::vector<std::size_t> select_top_nodes(const std::vector<std::size_t>& candidates,
                                          std::size_t budget,
                                          const CentralityVector& scores,
                                          std::size_t target);

// JSON edge list + little-endian f64 embedding sidecar (<prefix>.json /
// <prefix>.embeddings.bin).
void save_graph(const std::filesystem::path& prefix, const SensorGraph& g,
                const Tensor& embeddings);
std::pair<SensorGraph, Tensor> load_graph(const std::filesystem::path& prefix);

}  // namespace beta
