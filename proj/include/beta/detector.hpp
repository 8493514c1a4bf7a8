#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beta/data.hpp"
#include "beta/graph.hpp"
#include "beta/tape.hpp"
#include "beta/tensor.hpp"

namespace beta {

struct MultiScaleConfig {
    bool enabled = false;
    std::vector<std::size_t> kernel_sizes;  // each in [1, w]
    enum class Pool { max, avg } pool = Pool::max;
};

struct GdnHyper {
    std::size_t n = 0;       // sensors
    std::size_t d = 16;      // embedding dim
    std::size_t w = 100;     // window
    std::size_t max_in = 5;  // M
    std::vector<std::size_t> head_hidden = {64};
    double leaky_slope = 0.2;
    MultiScaleConfig multiscale;
};

// Trainable state. Attention scores follow rho_ij = LeakyReLU(omega . (v_i ⊕
// W x_i ⊕ v_j ⊕ W x_j)) with i the destination node; feat_proj stores W
// transposed (w x d) so q = x . feat_proj.
struct GdnParams {
    Tensor embeddings;  // N x d
    Tensor feat_proj;   // w x d
    Tensor attn;        // 4d
    std::vector<Tensor> head_w;
    std::vector<Tensor> head_b;
    std::vector<Tensor> conv_filters;

    std::vector<Tensor*> all();
    std::vector<const Tensor*> all() const;
    std::vector<std::string> names() const;
};

GdnParams init_gdn_params(const GdnHyper& hyper, std::uint64_t seed);

struct GdnLeaves {
    NodeId embeddings = -1;
    NodeId feat_proj = -1;
    NodeId attn = -1;
    std::vector<NodeId> head_w, head_b, conv_filters;
};

GdnLeaves register_params(Tape& tape, const GdnParams& params, bool requires_grad);

struct ForwardResult {
    NodeId predictions = -1;            // rank-1, length N
    std::vector<NodeId> beta_rows;      // per node; -1 for empty neighborhoods
    std::vector<std::vector<std::size_t>> beta_edge_indices;  // graph edge ids
};

// Full GDN forward on an existing tape. x_leaf must be an N x w leaf.
// edge_mask (optional, rank-1 over graph.edges) scales attention messages
// multiplicatively after the softmax.
ForwardResult gdn_forward(Tape& tape, const GdnHyper& hyper, const GdnLeaves& leaves,
                          NodeId x_leaf, const SensorGraph& graph,
                          NodeId edge_mask = -1);

NodeId mse_loss(Tape& tape, NodeId predictions, const std::vector<double>& target);

struct GdnModel;

// Normalized anomaly score of one node as a differentiable tape node:
// (|observed - prediction| - median) * (1/iqr). Requires calibration.
NodeId target_score_node(Tape& tape, const GdnModel& model, std::size_t target,
                         NodeId x_leaf, double observed, NodeId edge_mask = -1);

struct ScoreCalibration {
    std::vector<double> median;  // per sensor, validation errors
    std::vector<double> iqr;     // floored at 1e-9
    double lambda = 0.0;         // max normalized validation score
    bool fitted = false;
};

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

struct GdnModel {
    GdnHyper hyper;
    GdnParams params;
    SensorGraph graph;
    ScoreCalibration calib;
    std::vector<double> train_loss;  // per-epoch means
};

// Minimizes forecasting MSE with Adam. The adjacency is re-learned from the
// current embeddings at every epoch start unless `fixed_graph` pins it
// (grey-box surrogate case). Loss divergence raises numeric_error with the
// last finite loss.
GdnModel train_gdn(const GdnHyper& hyper, const TimeSeriesDataset& ds,
                   const TrainConfig& cfg, const SensorGraph* fixed_graph = nullptr);

// Per-sensor median/IQR of |x - x_hat| on the validation split and the
// validation-max threshold lambda.
void calibrate(GdnModel& model, const TimeSeriesDataset& ds);

// Plain forward pass (no gradients).
std::vector<double> predict(const GdnModel& model, const Tensor& features);

// Normalized anomaly scores xi~ = (|x - x_hat| - median) / iqr.
std::vector<double> anomaly_scores(const GdnModel& model, const Tensor& features,
                                   const std::vector<double>& observed);

bool detect_node(const std::vector<double>& scores, double lambda, std::size_t node);
bool detect_global(const std::vector<double>& scores, double lambda);

// Per-node [q_i | r_i | v_i] embedding matrix (N x 3d) for the explainer.
Tensor node_embeddings(const GdnModel& model, const Tensor& features);

// Checkpoint: <prefix>.json header (hyper, shapes, calibration, graph,
// provenance) + <prefix>.bin little-endian f64 parameter blob.
void save_model(const std::filesystem::path& prefix, const GdnModel& model,
                const std::string& config_hash, std::uint64_t seed);
GdnModel load_model(const std::filesystem::path& prefix);

}  // namespace beta
