#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beta/data.hpp"
#include "beta/explainer.hpp"
#include "beta/graph.hpp"
#include "beta/rng.hpp"
#include "beta/surrogate.hpp"
#include "beta/tensor.hpp"

namespace beta {

enum class SelectionStrategy {
    gaf_centrality,     // explainer candidates pruned by centrality
    nettack_heuristic,  // linearized two-hop margin scores
    random_nodes,
    centrality_only,
    all_nodes,          // unbudgeted
};

enum class PerturbStrategy {
    pgd,
    nettack_feature,  // greedy coordinate edits
    uniform_random,   // in-range replacement, not epsilon-bounded
};

struct AttackSpec {
    std::size_t budget = 5;
    double epsilon = 0.1;  // l-inf radius, normalized units
    double alpha = 0.01;
    std::size_t iters = 10;
    std::size_t restarts = 5;
    std::size_t target = 0;
    std::size_t explainer_edges = 0;  // 0 means budget - 1
    SelectionStrategy selection = SelectionStrategy::gaf_centrality;
    PerturbStrategy perturbation = PerturbStrategy::pgd;
    CentralityMeasure centrality_measure = CentralityMeasure::eigenvector;
    bool early_stop = false;          // off by default; K iterations run fully
    std::size_t nettack_edits = 0;    // 0 means budget * w / 10
    std::uint64_t seed = 0;

    void validate(std::size_t n) const;
};

struct AttackResult {
    Tensor perturbed;                                // X'
    std::vector<std::size_t> influencers;            // V-bar, sorted
    std::vector<std::vector<double>> restart_traces; // loss per iteration
    std::size_t best_restart = 0;
    double best_loss = 0.0;
    bool success = false;       // victim decision flipped
    double delta_linf = 0.0;
    std::size_t changed_rows = 0;
};

struct AttackContext {
    const Surrogate* surrogate = nullptr;
    const DecisionOracle* victim = nullptr;   // decide-only victim surface
    const SensorGraph* graph = nullptr;       // grey-box known adjacency
    const ExplainerNet* explainer = nullptr;  // optional; fallback is centrality
    std::vector<double> feat_min, feat_max;   // per-sensor bounds (random attack)
};

// Per-sensor min/max of the normalized values across the whole dataset.
void fill_feature_bounds(AttackContext& ctx, const TimeSeriesDataset& ds);

// Uniform draw inside the l-inf ball on influencer rows; other rows exact.
Tensor init_perturbation(const Tensor& x, double epsilon,
                         const std::vector<std::size_t>& rows, Rng& rng);

// One projected sign step confined to influencer rows; non-influencer rows are
// restored to x_orig exactly and results are clipped to the feature range.
Tensor pgd_step(const Tensor& x_k, const Tensor& grad, double alpha, double epsilon,
                const Tensor& x_orig, const std::vector<std::size_t>& rows);

// Nettack's attacker-node scores from a linearized two-hop surrogate; the B
// lowest-scoring candidates win. Falls back to centrality ranking (with a
// warning) for isolated targets.
std::vector<std::size_t> nettack_select(const SensorGraph& graph,
                                        const Surrogate& surrogate, const Tensor& x,
                                        std::size_t target, std::size_t budget,
                                        bool true_label);

std::vector<std::size_t> select_influencers(const AttackContext& ctx,
                                            const Segment& seg, const AttackSpec& spec);

// Full attack on one segment; `true_label` is the ground truth for the target
// node at the segment's predicted step.
AttackResult run_attack(const AttackContext& ctx, const Segment& seg, bool true_label,
                        const AttackSpec& spec);

// Canonical strategy tags: beta, pgd_heuristics, nettack_gaf, nettack, random,
// beta_unbudgeted, beta_centrality_only. Sets selection/perturbation and, for
// the unbudgeted variant, budget = n-1.
AttackSpec apply_strategy(AttackSpec base, const std::string& tag, std::size_t n);
const std::vector<std::string>& known_strategy_tags();

}  // namespace beta
