#include "beta/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "beta/errors.hpp"
#include "beta/io.hpp"
#include "beta/optim.hpp"
#include "beta/rng.hpp"

namespace beta {

std::vector<Tensor*> ExplainerNet::all() {
    return {&aug_attn, &fuse_w, &fuse_b, &edge_w1, &edge_b1, &edge_w2, &edge_b2};
}

std::vector<const Tensor*> ExplainerNet::all() const {
    return {&aug_attn, &fuse_w, &fuse_b, &edge_w1, &edge_b1, &edge_w2, &edge_b2};
}

NodeId augment_attributes(Tape& tape, NodeId x_leaf, NodeId aug_attn_leaf,
                          const std::vector<std::vector<std::size_t>>& und_adj) {
    const Tensor& x = tape.value(x_leaf);
    const std::size_t n = x.rows();
    const std::size_t w = x.cols();
    if (und_adj.size() != n) throw dim_error("augment_attributes: adjacency mismatch");

    std::vector<NodeId> agg_rows(n);
    NodeId zero_row = -1;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nbrs = und_adj[i];
        if (nbrs.empty()) {
            if (zero_row < 0) zero_row = tape.leaf(Tensor::zeros({w}), false);
            agg_rows[i] = zero_row;
            continue;
        }
        NodeId own = tape.gather_rows(x_leaf, std::vector<std::size_t>(nbrs.size(), i));
        NodeId nbr = tape.gather_rows(x_leaf, nbrs);
        NodeId cat = tape.concat_cols(own, nbr);  // deg x 2w, rows [x_i | x_j]
        NodeId sc = tape.leaky_relu(tape.matmul(cat, aug_attn_leaf), 0.2);
        NodeId alpha = tape.masked_softmax(sc, std::vector<bool>(nbrs.size(), true));
        agg_rows[i] = tape.matmul(alpha, nbr);
    }
    NodeId agg = tape.stack_rows(agg_rows);
    return tape.concat_cols(x_leaf, agg);  // N x 2w
}

NodeId sample_mask(Tape& tape, NodeId logits, double tau, NodeId noise) {
    if (tau <= 0.0) throw config_error("sample_mask: tau must be positive");
    NodeId s = noise >= 0 ? tape.add(logits, noise) : logits;
    NodeId m = tape.sigmoid(tape.scale(s, 1.0 / tau));
    // Affine epsilon guard keeps masks strictly inside (0,1) even when the
    // scaled sigmoid saturates in double precision.
    const double eps = 1e-9;
    return tape.add_scalar(tape.scale(m, 1.0 - 2.0 * eps), eps);
}

namespace {

struct ExplainerLeaves {
    NodeId aug_attn, fuse_w, fuse_b, edge_w1, edge_b1, edge_w2, edge_b2;
};

ExplainerLeaves register_explainer(Tape& tape, const ExplainerNet& net, bool rg) {
    return {tape.leaf(net.aug_attn, rg),  tape.leaf(net.fuse_w, rg),
            tape.leaf(net.fuse_b, rg),    tape.leaf(net.edge_w1, rg),
            tape.leaf(net.edge_b1, rg),   tape.leaf(net.edge_w2, rg),
            tape.leaf(net.edge_b2, rg)};
}

// Edge logits for one segment: augmentation -> fusion -> per-edge generator.
NodeId edge_logits(Tape& tape, const ExplainerLeaves& el, const Surrogate& sur,
                   const Segment& seg, NodeId x_leaf) {
    const SensorGraph& graph = sur.model.graph;
    NodeId aug = augment_attributes(tape, x_leaf, el.aug_attn, graph.undirected());
    NodeId semb = tape.leaf(node_embeddings(sur.model, seg.features), false);
    NodeId cat = tape.concat_cols(aug, semb);
    NodeId z = tape.relu(tape.add_bias(tape.matmul(cat, el.fuse_w), el.fuse_b));

    std::vector<std::size_t> srcs, dsts;
    for (const auto& [s, t] : graph.edges) {
        srcs.push_back(s);
        dsts.push_back(t);
    }
    NodeId zc = tape.concat_cols(tape.gather_rows(z, srcs), tape.gather_rows(z, dsts));
    NodeId h1 = tape.relu(tape.add_bias(tape.matmul(zc, el.edge_w1), el.edge_b1));
    NodeId lg = tape.add_bias(tape.matmul(h1, el.edge_w2), el.edge_b2);
    return tape.reshape(lg, {graph.edges.size()});
}

// Normalized target score of the masked surrogate as a tape node.
NodeId masked_score_node(Tape& tape, const Surrogate& sur, const Segment& seg,
                         NodeId x_leaf, NodeId mask) {
    return target_score_node(tape, sur.model, sur.target, x_leaf,
                             seg.target[sur.target], mask);
}

Tensor glorot2(std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t = Tensor::zeros({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

ExplainerNet train_explainer(const Surrogate& surrogate,
                             const std::vector<Segment>& segments, std::size_t target,
                             const ExplainerConfig& cfg) {
    if (segments.empty()) throw state_error("train_explainer: no training segments");
    if (!surrogate.model.calib.fitted)
        throw state_error("train_explainer: surrogate not calibrated");
    if (target != surrogate.target)
        throw config_error("train_explainer: target differs from surrogate target");
    const std::size_t w = surrogate.model.hyper.w;
    const std::size_t d = surrogate.model.hyper.d;
    const std::size_t p = cfg.proj_dim;
    const std::size_t eh = cfg.edge_hidden;
    const std::size_t n_edges = surrogate.model.graph.edges.size();
    if (n_edges == 0) throw config_error("train_explainer: graph has no edges");

    Rng rng(cfg.seed);
    ExplainerNet net;
    {
        const double bound = 1.0 / std::sqrt(static_cast<double>(2 * w));
        net.aug_attn = Tensor::zeros({2 * w});
        for (std::size_t i = 0; i < 2 * w; ++i)
            net.aug_attn.data()[i] = rng.uniform(-bound, bound);
    }
    net.fuse_w = glorot2(2 * w + 3 * d, p, rng);
    net.fuse_b = Tensor::zeros({p});
    net.edge_w1 = glorot2(2 * p, eh, rng);
    net.edge_b1 = Tensor::zeros({eh});
    net.edge_w2 = glorot2(eh, 1, rng);
    // Mild positive bias starts masks high (fidelity term near 0) while
    // keeping the sigmoid un-saturated so sparsity gradients stay alive.
    net.edge_b2 = Tensor::vec({1.0});
    net.tau = cfg.tau_end;

    std::vector<std::size_t> pool(segments.size());
    std::iota(pool.begin(), pool.end(), 0);
    if (pool.size() > cfg.max_segments) {
        for (std::size_t k = 0; k < cfg.max_segments; ++k) {
            const std::size_t pick = k + rng.uniform_index(pool.size() - k);
            std::swap(pool[k], pool[pick]);
        }
        pool.resize(cfg.max_segments);
        std::sort(pool.begin(), pool.end());
    }

    // Unmasked reference scores are constants during training.
    std::vector<double> ref(pool.size());
    for (std::size_t k = 0; k < pool.size(); ++k) {
        const auto sc = anomaly_scores(surrogate.model, segments[pool[k]].features,
                                       segments[pool[k]].target);
        ref[k] = sc[surrogate.target];
    }

    AdamConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    AdamState opt_state;

    for (std::size_t iter = 0; iter < cfg.iters; ++iter) {
        const double frac =
            cfg.iters > 1 ? static_cast<double>(iter) / static_cast<double>(cfg.iters - 1)
                          : 1.0;
        const double tau = cfg.tau_start + (cfg.tau_end - cfg.tau_start) * frac;

        Tape tape;
        ExplainerLeaves el = register_explainer(tape, net, true);
        NodeId total = -1;
        const std::size_t bsz = std::min(cfg.batch, pool.size());
        for (std::size_t b = 0; b < bsz; ++b) {
            const std::size_t k = bsz == pool.size()
                                      ? b
                                      : rng.uniform_index(pool.size());
            const Segment& seg = segments[pool[k]];
            NodeId x = tape.leaf(seg.features, false);
            NodeId logits = edge_logits(tape, el, surrogate, seg, x);
            Tensor noise = Tensor::zeros({n_edges});
            for (std::size_t e = 0; e < n_edges; ++e) {
                const double u = rng.uniform_open();
                noise.data()[e] = std::log(u) - std::log(1.0 - u);
            }
            NodeId mask = sample_mask(tape, logits, tau, tape.leaf(noise, false));
            NodeId score = masked_score_node(tape, surrogate, seg, x, mask);
            NodeId dlt = tape.add_scalar(score, -ref[k]);
            NodeId fid = tape.sum(tape.mul(dlt, dlt));
            NodeId reg = tape.scale(tape.sum(mask), cfg.sparsity);
            NodeId ent = tape.scale(tape.sum(tape.binary_entropy(mask)),
                                    cfg.entropy_coef);
            NodeId seg_loss = tape.add(tape.add(fid, reg), ent);
            total = total < 0 ? seg_loss : tape.add(total, seg_loss);
        }
        NodeId loss = tape.scale(total, 1.0 / static_cast<double>(bsz));
        tape.backward(loss);

        std::vector<NodeId> ids = {el.aug_attn, el.fuse_w,  el.fuse_b, el.edge_w1,
                                   el.edge_b1,  el.edge_w2, el.edge_b2};
        std::vector<Tensor> grads;
        grads.reserve(ids.size());
        for (NodeId id : ids) grads.push_back(tape.grad(id));
        std::vector<const Tensor*> gp;
        for (const auto& g : grads) gp.push_back(&g);
        adam_step(net.all(), gp, opt_state, opt_cfg);
    }
    return net;
}

std::vector<double> eval_edge_mask(const ExplainerNet& net, const Surrogate& surrogate,
                                   const Segment& seg) {
    Tape tape;
    ExplainerLeaves el = register_explainer(tape, net, false);
    NodeId x = tape.leaf(seg.features, false);
    NodeId logits = edge_logits(tape, el, surrogate, seg, x);
    NodeId mask = sample_mask(tape, logits, net.tau, -1);
    return tape.value(mask).values();
}

ExplanationResult extract_candidates(const std::vector<double>& mask,
                                     const SensorGraph& graph, std::size_t top_edges) {
    if (top_edges < 1) throw config_error("extract_candidates: need E >= 1");
    if (mask.size() != graph.edges.size())
        throw dim_error("extract_candidates: mask/edge count mismatch");
    ExplanationResult res;
    res.edge_mask = mask;

    std::size_t e = top_edges;
    if (e > graph.edges.size()) {
        std::cerr << "[explainer] warning: E=" << e << " clipped to "
                  << graph.edges.size() << " edges\n";
        e = graph.edges.size();
    }
    std::vector<std::size_t> order(mask.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (mask[a] != mask[b]) return mask[a] > mask[b];
        return a < b;  // canonical (dst, src) order is the lexicographic edge id
    });
    order.resize(e);
    res.top_edges = order;
    for (std::size_t idx : order) {
        res.candidates.push_back(graph.edges[idx].first);
        res.candidates.push_back(graph.edges[idx].second);
    }
    std::sort(res.candidates.begin(), res.candidates.end());
    res.candidates.erase(std::unique(res.candidates.begin(), res.candidates.end()),
                         res.candidates.end());
    return res;
}

double masked_target_score(const Surrogate& surrogate, const Segment& seg,
                           const std::vector<double>& edge_mask) {
    Tape tape;
    NodeId x = tape.leaf(seg.features, false);
    NodeId mask = tape.leaf(Tensor::vec(edge_mask), false);
    NodeId score = masked_score_node(tape, surrogate, seg, x, mask);
    return tape.value(score).item();
}

ExplanationResult explain_segment(const ExplainerNet& net, const Surrogate& surrogate,
                                  const Segment& seg, std::size_t top_edges) {
    const auto mask = eval_edge_mask(net, surrogate, seg);
    ExplanationResult res = extract_candidates(mask, surrogate.model.graph, top_edges);

    std::vector<double> hard(mask.size(), 0.0);
    for (std::size_t idx : res.top_edges) hard[idx] = 1.0;
    const double masked = masked_target_score(surrogate, seg, hard);
    const auto ref =
        anomaly_scores(surrogate.model, seg.features, seg.target)[surrogate.target];
    res.fidelity = std::fabs(masked - ref);
    return res;
}

void save_explainer(const std::filesystem::path& prefix, const ExplainerNet& net,
                    const std::string& config_hash, std::uint64_t seed) {
    nlohmann::json j;
    j["format"] = "explainer-checkpoint-v1";
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["tau"] = net.tau;
    nlohmann::json shapes = nlohmann::json::array();
    std::vector<double> blob;
    for (const Tensor* t : net.all()) {
        shapes.push_back(t->shape());
        blob.insert(blob.end(), t->values().begin(), t->values().end());
    }
    j["shapes"] = std::move(shapes);
    std::filesystem::path bin = prefix;
    bin += ".bin";
    j["blob"] = bin.filename().string();
    std::filesystem::path header = prefix;
    header += ".json";
    io::atomic_write_text(header, j.dump(2) + "\n");
    io::atomic_write_f64_blob(bin, blob);
}

ExplainerNet load_explainer(const std::filesystem::path& prefix) {
    std::filesystem::path header = prefix;
    header += ".json";
    nlohmann::json j = nlohmann::json::parse(io::read_text_file(header));
    if (j.at("format") != "explainer-checkpoint-v1")
        throw parse_error("unknown explainer checkpoint format");
    ExplainerNet net;
    net.tau = j.at("tau").get<double>();
    const auto shapes = j.at("shapes").get<std::vector<std::vector<std::size_t>>>();
    auto tensors = net.all();
    if (shapes.size() != tensors.size())
        throw parse_error("explainer checkpoint shape count mismatch");
    std::vector<double> blob =
        io::read_f64_blob(header.parent_path() / j.at("blob").get<std::string>());
    std::size_t off = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        std::size_t count = 1;
        for (std::size_t d : shapes[i]) count *= d;
        if (off + count > blob.size()) throw parse_error("explainer blob too short");
        *tensors[i] = Tensor(shapes[i],
                             std::vector<double>(blob.begin() + static_cast<long>(off),
                                                 blob.begin() +
                                                     static_cast<long>(off + count)));
        off += count;
    }
    if (off != blob.size()) throw parse_error("explainer blob too long");
    return net;
}

}  // namespace beta
