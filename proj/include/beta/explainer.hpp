#pragma once

#include <cstdint>
#include <vector>

#include "beta/data.hpp"
#include "beta/graph.hpp"
#include "beta/surrogate.hpp"
#include "beta/tape.hpp"

namespace beta {

struct ExplainerConfig {
    std::size_t proj_dim = 16;
    std::size_t edge_hidden = 16;
    double tau_start = 0.5;  // binary-concrete temperature, annealed linearly
    double tau_end = 0.1;
    double sparsity = 0.005;
    double entropy_coef = 0.01;
    std::size_t iters = 150;
    std::size_t batch = 8;
    double lr = 0.01;
    std::size_t max_segments = 64;
    std::uint64_t seed = 0;
};

// Edge-mask explanation network over the surrogate: node attribute
// augmentation (neighbor attention), fusion of augmented features with the
// surrogate's layer-wise embeddings, and an edge-weight generator producing
// one logit per directed edge of A.
struct ExplainerNet {
    Tensor aug_attn;  // 2w
    Tensor fuse_w;    // (2w + 3d) x p
    Tensor fuse_b;    // p
    Tensor edge_w1;   // 2p x h
    Tensor edge_b1;   // h
    Tensor edge_w2;   // h x 1
    Tensor edge_b2;   // 1
    double tau = 0.1;

    std::vector<Tensor*> all();
    std::vector<const Tensor*> all() const;
};

struct ExplanationResult {
    std::vector<double> edge_mask;        // eval-mode, graph.edges order
    std::vector<std::size_t> top_edges;   // indices into graph.edges, best first
    std::vector<std::size_t> candidates;  // endpoint union of top edges (sorted)
    double fidelity = 0.0;                // |masked - unmasked| target score
};

// Attention-weighted neighbor aggregation concatenated with own features
// (N x 2w). Isolated nodes aggregate to zeros.
NodeId augment_attributes(Tape& tape, NodeId x_leaf, NodeId aug_attn_leaf,
                          const std::vector<std::vector<std::size_t>>& und_adj);

// Binary concrete: sigmoid((logits + noise)/tau) where noise holds
// log(u) - log(1-u) per edge; pass noise = -1 for the deterministic
// evaluation mode sigmoid(logits/tau). tau must be positive.
NodeId sample_mask(Tape& tape, NodeId logits, double tau, NodeId noise);

// Minimizes squared difference of normalized target scores between the masked
// and unmasked surrogate plus sparsity/entropy regularizers.
ExplainerNet train_explainer(const Surrogate& surrogate,
                             const std::vector<Segment>& segments, std::size_t target,
                             const ExplainerConfig& cfg);

// Deterministic evaluation-mode mask for a segment.
std::vector<double> eval_edge_mask(const ExplainerNet& net, const Surrogate& surrogate,
                                   const Segment& seg);

// Top-E edges by mask value (ties toward the lexicographically smaller edge
// in canonical order); candidates are their endpoints, target not excluded.
ExplanationResult extract_candidates(const std::vector<double>& mask,
                                     const SensorGraph& graph, std::size_t top_edges);

// Surrogate target score with attention messages scaled by a fixed edge mask.
double masked_target_score(const Surrogate& surrogate, const Segment& seg,
                           const std::vector<double>& edge_mask);

// Mask + extraction + fidelity of the hard top-E subgraph on this segment.
ExplanationResult explain_segment(const ExplainerNet& net, const Surrogate& surrogate,
                                  const Segment& seg, std::size_t top_edges);

// Checkpoint: <prefix>.json header + <prefix>.bin parameter blob.
void save_explainer(const std::filesystem::path& prefix, const ExplainerNet& net,
                    const std::string& config_hash, std::uint64_t seed);
ExplainerNet load_explainer(const std::filesystem::path& prefix);

}  // namespace beta
