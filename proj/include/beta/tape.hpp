#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "beta/tensor.hpp"

namespace beta {

using NodeId = int;

// Reverse-mode autodiff tape. Nodes are appended in execution order, which is
// therefore a topological order; backward() sweeps ids in reverse and visits
// each reached node exactly once. A tape is single-threaded; run independent
// tapes for parallel work (e.g. PGD restarts).
//
// Only the op set needed by this project is provided: arithmetic, matmul,
// concat/gather, elementwise activations, reductions, masked softmax and a
// few fused ops (bias add, 1-D convolution, binary cross-entropy on logits).
class Tape {
public:
    NodeId leaf(Tensor value, bool requires_grad = false);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);           // elementwise, same shape
    NodeId add_scalar(NodeId a, double c);
    NodeId scale(NodeId a, double c);

    // (m x k)(k x n), (k)(k x n), (m x k)(k) all supported.
    NodeId matmul(NodeId a, NodeId b);
    NodeId dot(NodeId a, NodeId b);           // rank-1 x rank-1 -> scalar

    NodeId concat(const std::vector<NodeId>& parts);       // rank-1 pieces
    NodeId concat_cols(NodeId a, NodeId b);                // rank-2, equal rows
    NodeId stack_rows(const std::vector<NodeId>& parts);   // rank-1 rows -> matrix
    NodeId gather_rows(NodeId x, std::vector<std::size_t> idx);
    NodeId gather_elems(NodeId x, std::vector<std::size_t> idx);

    NodeId relu(NodeId x);
    NodeId leaky_relu(NodeId x, double slope);
    NodeId sigmoid(NodeId x);
    NodeId log_(NodeId x);                    // requires strictly positive input
    NodeId abs_(NodeId x);
    NodeId sum(NodeId x);                     // -> scalar

    // Softmax over the entries where mask is true; zero elsewhere.
    // Stabilized by max subtraction. All-false mask raises dim_error.
    NodeId masked_softmax(NodeId scores, const std::vector<bool>& mask);

    NodeId add_bias(NodeId x, NodeId bias);   // (m x n) + (n) broadcast over rows

    // Same-length 1-D convolution per row, forward-looking with zero padding:
    // y[i][s] = sum_l x[i][s+l] * f[l] for s+l < w.
    NodeId conv1d_same(NodeId x, NodeId f);

    NodeId emax(NodeId a, NodeId b);          // elementwise max; ties route grad to a

    // Same data, new shape (sizes must agree).
    NodeId reshape(NodeId x, std::vector<std::size_t> shape);

    // Elementwise -[m ln m + (1-m) ln(1-m)], with m clamped away from {0,1}
    // so saturated sigmoids stay finite.
    NodeId binary_entropy(NodeId m);

    // Numerically stable BCE between sigmoid(logit) and a constant target.
    NodeId bce_with_logits(NodeId logit, double target);

    // Seeds d(loss)/d(loss) = 1 and accumulates gradients for every node that
    // requires them. `loss` must be scalar.
    void backward(NodeId loss);

    const Tensor& value(NodeId id) const;
    // Gradient accumulated by the last backward(); zeros if the node was not
    // reached. Throws state_error for ids not on this tape or nodes that do
    // not require gradients.
    const Tensor& grad(NodeId id);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;     // empty until first accumulation
        bool requires_grad = false;
        const char* op = "leaf";
        std::function<void(Tape&, NodeId)> backward;
    };

    NodeId push(Tensor value, bool requires_grad, const char* op,
                std::function<void(Tape&, NodeId)> backward);
    void check_id(NodeId id, const char* what) const;
    bool rg(NodeId id) const { return nodes_[id].requires_grad; }

    // Accumulate `g` into the node's gradient if it participates in autodiff.
    void accum(NodeId id, const double* g, std::size_t n);
    Tensor& ensure_grad(NodeId id);

    std::vector<Node> nodes_;
    Tensor zero_grad_dummy_;
};

}  // namespace beta
