#include "beta/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "beta/errors.hpp"
#include "beta/io.hpp"
#include "beta/optim.hpp"
#include "beta/rng.hpp"

namespace beta {

using json = nlohmann::json;

std::vector<Tensor*> GdnParams::all() {
    std::vector<Tensor*> out = {&embeddings, &feat_proj, &attn};
    for (auto& t : head_w) out.push_back(&t);
    for (auto& t : head_b) out.push_back(&t);
    for (auto& t : conv_filters) out.push_back(&t);
    return out;
}

std::vector<const Tensor*> GdnParams::all() const {
    std::vector<const Tensor*> out = {&embeddings, &feat_proj, &attn};
    for (const auto& t : head_w) out.push_back(&t);
    for (const auto& t : head_b) out.push_back(&t);
    for (const auto& t : conv_filters) out.push_back(&t);
    return out;
}

std::vector<std::string> GdnParams::names() const {
    std::vector<std::string> out = {"embeddings", "feat_proj", "attn"};
    for (std::size_t i = 0; i < head_w.size(); ++i)
        out.push_back("head_w" + std::to_string(i));
    for (std::size_t i = 0; i < head_b.size(); ++i)
        out.push_back("head_b" + std::to_string(i));
    for (std::size_t i = 0; i < conv_filters.size(); ++i)
        out.push_back("conv_f" + std::to_string(i));
    return out;
}

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t = Tensor::zeros({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i)
        t.data()[i] = rng.uniform(-bound, bound);
    return t;
}

void validate_hyper(const GdnHyper& h) {
    if (h.n < 1 || h.d < 1 || h.w < 1) throw config_error("invalid GDN dimensions");
    if (h.max_in >= h.n) throw config_error("GDN: M must be < N");
    if (h.multiscale.enabled) {
        if (h.multiscale.kernel_sizes.empty())
            throw config_error("multi-scale enabled with no kernels");
        for (std::size_t k : h.multiscale.kernel_sizes)
            if (k < 1 || k > h.w)
                throw config_error("multi-scale kernel size " + std::to_string(k) +
                                   " outside [1, w]");
    }
}

}  // namespace

GdnParams init_gdn_params(const GdnHyper& hyper, std::uint64_t seed) {
    validate_hyper(hyper);
    Rng rng(seed);
    GdnParams p;
    {
        Tensor v = Tensor::zeros({hyper.n, hyper.d});
        for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
        p.embeddings = std::move(v);
    }
    p.feat_proj = glorot(hyper.w, hyper.d, rng);
    // Window features are nonnegative (min-max normalized), so a column with
    // a biased sum drives that q dimension to one sign for every node and can
    // leave its ReLU dead from the start. Center each column.
    for (std::size_t c = 0; c < hyper.d; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < hyper.w; ++r) mean += p.feat_proj.at(r, c);
        mean /= static_cast<double>(hyper.w);
        for (std::size_t r = 0; r < hyper.w; ++r)
            p.feat_proj.data()[r * hyper.d + c] -= mean;
    }
    {
        const std::size_t len = 4 * hyper.d;
        const double bound = 1.0 / std::sqrt(static_cast<double>(len));
        Tensor a = Tensor::zeros({len});
        for (std::size_t i = 0; i < len; ++i) a.data()[i] = rng.uniform(-bound, bound);
        p.attn = std::move(a);
    }
    std::vector<std::size_t> widths;
    widths.push_back(hyper.d);
    for (std::size_t h : hyper.head_hidden) widths.push_back(h);
    widths.push_back(1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        p.head_w.push_back(glorot(widths[l], widths[l + 1], rng));
        p.head_b.push_back(Tensor::zeros({widths[l + 1]}));
    }
    if (hyper.multiscale.enabled) {
        for (std::size_t k : hyper.multiscale.kernel_sizes) {
            // Near-identity init: impulse at lag 0 plus small noise, so the
            // variant starts close to the plain model.
            Tensor f = Tensor::zeros({k});
            f.data()[0] = 1.0;
            for (std::size_t i = 0; i < k; ++i) f.data()[i] += 0.01 * rng.normal();
            p.conv_filters.push_back(std::move(f));
        }
    }
    return p;
}

GdnLeaves register_params(Tape& tape, const GdnParams& params, bool requires_grad) {
    GdnLeaves l;
    l.embeddings = tape.leaf(params.embeddings, requires_grad);
    l.feat_proj = tape.leaf(params.feat_proj, requires_grad);
    l.attn = tape.leaf(params.attn, requires_grad);
    for (const auto& t : params.head_w) l.head_w.push_back(tape.leaf(t, requires_grad));
    for (const auto& t : params.head_b) l.head_b.push_back(tape.leaf(t, requires_grad));
    for (const auto& t : params.conv_filters)
        l.conv_filters.push_back(tape.leaf(t, requires_grad));
    return l;
}

ForwardResult gdn_forward(Tape& tape, const GdnHyper& hyper, const GdnLeaves& leaves,
                          NodeId x_leaf, const SensorGraph& graph, NodeId edge_mask) {
    const std::size_t n = hyper.n;
    const std::size_t d = hyper.d;
    if (graph.n != n) throw dim_error("gdn_forward: graph/hyper node count mismatch");
    const Tensor& x = tape.value(x_leaf);
    if (x.rank() != 2 || x.rows() != n || x.cols() != hyper.w)
        throw dim_error("gdn_forward: segment shape " + x.shape_str() +
                        " does not match N=" + std::to_string(n) +
                        " w=" + std::to_string(hyper.w));

    NodeId feat = x_leaf;
    if (hyper.multiscale.enabled) {
        NodeId pooled = -1;
        for (std::size_t h = 0; h < leaves.conv_filters.size(); ++h) {
            NodeId z = tape.conv1d_same(x_leaf, leaves.conv_filters[h]);
            if (pooled < 0) {
                pooled = z;
            } else if (hyper.multiscale.pool == MultiScaleConfig::Pool::max) {
                pooled = tape.emax(pooled, z);
            } else {
                pooled = tape.add(pooled, z);
            }
        }
        if (hyper.multiscale.pool == MultiScaleConfig::Pool::avg)
            pooled = tape.scale(pooled,
                                1.0 / static_cast<double>(leaves.conv_filters.size()));
        feat = pooled;
    }

    // q_j = W x_j for every node at once.
    NodeId q = tape.matmul(feat, leaves.feat_proj);  // N x d

    ForwardResult res;
    res.beta_rows.assign(n, -1);
    res.beta_edge_indices.assign(n, {});

    // Attention scores for all edges: rho_e = LeakyReLU(omega . (v_i|q_i|v_j|q_j)).
    NodeId rho = -1;
    if (!graph.edges.empty()) {
        std::vector<std::size_t> srcs, dsts;
        srcs.reserve(graph.edges.size());
        dsts.reserve(graph.edges.size());
        for (const auto& [s, t] : graph.edges) {
            srcs.push_back(s);
            dsts.push_back(t);
        }
        NodeId vd = tape.gather_rows(leaves.embeddings, dsts);
        NodeId qd = tape.gather_rows(q, dsts);
        NodeId vs = tape.gather_rows(leaves.embeddings, srcs);
        NodeId qs = tape.gather_rows(q, srcs);
        NodeId cat = tape.concat_cols(tape.concat_cols(vd, qd),
                                      tape.concat_cols(vs, qs));  // E x 4d
        rho = tape.leaky_relu(tape.matmul(cat, leaves.attn), hyper.leaky_slope);
    }

    std::vector<NodeId> out_rows(n);
    NodeId zero_rep = -1;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [first, last] = graph.in_range(i);
        NodeId r_i;
        if (first == last) {
            // Empty neighborhood: the aggregation sum is empty, r_i = 0.
            if (zero_rep < 0) zero_rep = tape.leaf(Tensor::zeros({d}), false);
            r_i = zero_rep;
        } else {
            std::vector<std::size_t> eidx;
            std::vector<std::size_t> nbrs;
            for (std::size_t e = first; e < last; ++e) {
                eidx.push_back(e);
                nbrs.push_back(graph.edges[e].first);
            }
            NodeId sc = tape.gather_elems(rho, eidx);
            NodeId beta = tape.masked_softmax(sc, std::vector<bool>(eidx.size(), true));
            res.beta_rows[i] = beta;
            res.beta_edge_indices[i] = eidx;
            NodeId msg_w = beta;
            if (edge_mask >= 0)
                msg_w = tape.mul(beta, tape.gather_elems(edge_mask, eidx));
            NodeId qn = tape.gather_rows(q, nbrs);
            r_i = tape.relu(tape.matmul(msg_w, qn));
        }
        NodeId v_i = tape.reshape(tape.gather_rows(leaves.embeddings, {i}), {d});
        out_rows[i] = tape.mul(v_i, r_i);
    }

    NodeId h = tape.stack_rows(out_rows);  // N x d
    for (std::size_t l = 0; l < leaves.head_w.size(); ++l) {
        h = tape.add_bias(tape.matmul(h, leaves.head_w[l]), leaves.head_b[l]);
        if (l + 1 < leaves.head_w.size()) h = tape.relu(h);
    }
    res.predictions = tape.reshape(h, {n});
    return res;
}

NodeId mse_loss(Tape& tape, NodeId predictions, const std::vector<double>& target) {
    const Tensor& p = tape.value(predictions);
    if (p.rank() != 1 || p.size() != target.size())
        throw dim_error("mse_loss: prediction/target mismatch");
    NodeId tgt = tape.leaf(Tensor::vec(target), false);
    NodeId diff = tape.sub(predictions, tgt);
    return tape.scale(tape.sum(tape.mul(diff, diff)),
                      1.0 / static_cast<double>(target.size()));
}

NodeId target_score_node(Tape& tape, const GdnModel& model, std::size_t target,
                         NodeId x_leaf, double observed, NodeId edge_mask) {
    if (!model.calib.fitted) throw state_error("target_score_node: not calibrated");
    if (target >= model.hyper.n)
        throw dim_error("target_score_node: target out of range");
    GdnLeaves leaves = register_params(tape, model.params, false);
    ForwardResult fwd =
        gdn_forward(tape, model.hyper, leaves, x_leaf, model.graph, edge_mask);
    NodeId pred_u = tape.gather_elems(fwd.predictions, {target});
    NodeId obs_u = tape.leaf(Tensor::vec({observed}), false);
    NodeId err = tape.abs_(tape.sub(obs_u, pred_u));
    NodeId centered = tape.add_scalar(err, -model.calib.median[target]);
    return tape.scale(centered, 1.0 / model.calib.iqr[target]);
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) throw dim_error("quantile of empty vector");
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}  // namespace

GdnModel train_gdn(const GdnHyper& hyper, const TimeSeriesDataset& ds,
                   const TrainConfig& cfg, const SensorGraph* fixed_graph) {
    validate_hyper(hyper);
    for (std::size_t t = ds.train_range.begin; t < ds.train_range.end; ++t)
        for (std::size_t i = 0; i < ds.n_sensors(); ++i)
            if (ds.label_at(t, i))
                throw policy_error("train split contains labeled anomalies");

    GdnModel model;
    model.hyper = hyper;
    model.params = init_gdn_params(hyper, cfg.seed);
    auto windows = sliding_windows(ds, Split::train);

    AdamConfig opt_cfg;
    opt_cfg.lr = cfg.lr;
    AdamState opt_state;

    double last_finite_loss = 0.0;
    try {
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            model.graph =
                fixed_graph ? *fixed_graph
                            : learn_adjacency(model.params.embeddings, {}, hyper.max_in);

            std::vector<std::size_t> order(windows.size());
            std::iota(order.begin(), order.end(), 0);
            Rng shuffle_rng(Rng::derive(cfg.seed, 1000 + epoch));
            for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                const std::size_t pick = k + shuffle_rng.uniform_index(order.size() - k);
                std::swap(order[k], order[pick]);
            }

            double epoch_loss = 0.0;
            std::size_t seen = 0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
                const std::size_t stop = std::min(start + cfg.batch, order.size());
                std::vector<Tensor> grad_acc;
                for (const Tensor* p : model.params.all())
                    grad_acc.push_back(Tensor::zeros(p->shape()));

                for (std::size_t k = start; k < stop; ++k) {
                    const Segment& seg = windows[order[k]];
                    Tape tape;
                    GdnLeaves leaves = register_params(tape, model.params, true);
                    NodeId x = tape.leaf(seg.features, false);
                    ForwardResult fwd = gdn_forward(tape, hyper, leaves, x, model.graph);
                    NodeId loss = mse_loss(tape, fwd.predictions, seg.target);
                    tape.backward(loss);
                    epoch_loss += tape.value(loss).item();
                    ++seen;

                    std::vector<NodeId> leaf_ids = {leaves.embeddings, leaves.feat_proj,
                                                    leaves.attn};
                    for (NodeId id : leaves.head_w) leaf_ids.push_back(id);
                    for (NodeId id : leaves.head_b) leaf_ids.push_back(id);
                    for (NodeId id : leaves.conv_filters) leaf_ids.push_back(id);
                    for (std::size_t pi = 0; pi < leaf_ids.size(); ++pi) {
                        const Tensor& g = tape.grad(leaf_ids[pi]);
                        for (std::size_t j = 0; j < g.size(); ++j)
                            grad_acc[pi].data()[j] += g.at(j);
                    }
                }
                const double inv = 1.0 / static_cast<double>(stop - start);
                std::vector<const Tensor*> grad_ptrs;
                for (auto& g : grad_acc) {
                    for (std::size_t j = 0; j < g.size(); ++j) g.data()[j] *= inv;
                    grad_ptrs.push_back(&g);
                }
                adam_step(model.params.all(), grad_ptrs, opt_state, opt_cfg);
            }
            epoch_loss /= static_cast<double>(seen);
            model.train_loss.push_back(epoch_loss);
            last_finite_loss = epoch_loss;
        }
    } catch (const numeric_error& e) {
        throw numeric_error("training diverged (" + std::string(e.what()) +
                            "); last finite epoch loss " +
                            std::to_string(last_finite_loss));
    }

    model.graph = fixed_graph
                      ? *fixed_graph
                      : learn_adjacency(model.params.embeddings, {}, hyper.max_in);
    return model;
}

void calibrate(GdnModel& model, const TimeSeriesDataset& ds) {
    if (ds.val_range.size() == 0)
        throw state_error("calibrate: empty validation split");
    auto windows = sliding_windows(ds, Split::val);
    const std::size_t n = model.hyper.n;

    std::vector<std::vector<double>> errors(n);
    for (const Segment& seg : windows) {
        const auto pred = predict(model, seg.features);
        for (std::size_t i = 0; i < n; ++i)
            errors[i].push_back(std::fabs(seg.target[i] - pred[i]));
    }

    model.calib.median.assign(n, 0.0);
    model.calib.iqr.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v = errors[i];
        std::sort(v.begin(), v.end());
        model.calib.median[i] = quantile_sorted(v, 0.5);
        const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
        model.calib.iqr[i] = std::max(iqr, 1e-9);
    }

    double lambda = -1e300;
    for (const Segment& seg : windows) {
        // Recompute normalized scores with the fitted statistics.
        const auto pred = predict(model, seg.features);
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::fabs(seg.target[i] - pred[i]);
            const double s = (e - model.calib.median[i]) * (1.0 / model.calib.iqr[i]);
            lambda = std::max(lambda, s);
        }
    }
    model.calib.lambda = lambda;
    model.calib.fitted = true;
}

std::vector<double> predict(const GdnModel& model, const Tensor& features) {
    Tape tape;
    GdnLeaves leaves = register_params(tape, model.params, false);
    NodeId x = tape.leaf(features, false);
    ForwardResult fwd = gdn_forward(tape, model.hyper, leaves, x, model.graph);
    return tape.value(fwd.predictions).values();
}

std::vector<double> anomaly_scores(const GdnModel& model, const Tensor& features,
                                   const std::vector<double>& observed) {
    if (!model.calib.fitted) throw state_error("model is not calibrated");
    const auto pred = predict(model, features);
    if (observed.size() != pred.size())
        throw dim_error("anomaly_scores: observation length mismatch");
    std::vector<double> out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        // Multiply by the reciprocal so taped score paths (which use scale)
        // produce bit-identical values.
        const double e = std::fabs(observed[i] - pred[i]);
        out[i] = (e - model.calib.median[i]) * (1.0 / model.calib.iqr[i]);
    }
    return out;
}

bool detect_node(const std::vector<double>& scores, double lambda, std::size_t node) {
    if (node >= scores.size()) throw dim_error("detect_node: node out of range");
    return scores[node] > lambda;  // strict exceedance
}

bool detect_global(const std::vector<double>& scores, double lambda) {
    double mx = -1e300;
    for (double s : scores) mx = std::max(mx, s);
    return mx > lambda;
}

Tensor node_embeddings(const GdnModel& model, const Tensor& features) {
    Tape tape;
    GdnLeaves leaves = register_params(tape, model.params, false);
    NodeId x = tape.leaf(features, false);

    const std::size_t n = model.hyper.n, d = model.hyper.d;
    NodeId q = tape.matmul(x, leaves.feat_proj);
    ForwardResult fwd = gdn_forward(tape, model.hyper, leaves, x, model.graph);

    Tensor out = Tensor::zeros({n, 3 * d});
    const Tensor& qv = tape.value(q);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) out.data()[i * 3 * d + j] = qv.at(i, j);
        for (std::size_t j = 0; j < d; ++j)
            out.data()[i * 3 * d + 2 * d + j] = model.params.embeddings.at(i, j);
    }
    // Aggregated representations from the forward pass outputs: v_i ⊙ r_i is
    // already multiplied into the head input, so recompute r_i from beta.
    for (std::size_t i = 0; i < n; ++i) {
        if (fwd.beta_rows[i] < 0) continue;
        const Tensor& beta = tape.value(fwd.beta_rows[i]);
        const auto& eidx = fwd.beta_edge_indices[i];
        std::vector<double> r(d, 0.0);
        for (std::size_t k = 0; k < eidx.size(); ++k) {
            const std::size_t src = model.graph.edges[eidx[k]].first;
            for (std::size_t j = 0; j < d; ++j) r[j] += beta.at(k) * qv.at(src, j);
        }
        for (std::size_t j = 0; j < d; ++j) {
            const double relu_r = r[j] > 0.0 ? r[j] : 0.0;
            out.data()[i * 3 * d + d + j] = relu_r;
        }
    }
    return out;
}

void save_model(const std::filesystem::path& prefix, const GdnModel& model,
                const std::string& config_hash, std::uint64_t seed) {
    json j;
    j["format"] = "gdn-checkpoint-v1";
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["hyper"] = {{"n", model.hyper.n},
                  {"d", model.hyper.d},
                  {"w", model.hyper.w},
                  {"max_in", model.hyper.max_in},
                  {"head_hidden", model.hyper.head_hidden},
                  {"leaky_slope", model.hyper.leaky_slope},
                  {"multiscale",
                   {{"enabled", model.hyper.multiscale.enabled},
                    {"kernel_sizes", model.hyper.multiscale.kernel_sizes},
                    {"pool", model.hyper.multiscale.pool == MultiScaleConfig::Pool::max
                                 ? "max"
                                 : "avg"}}}};
    json params = json::array();
    auto names = model.params.names();
    auto tensors = model.params.all();
    std::vector<double> blob;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        params.push_back({{"name", names[i]}, {"shape", tensors[i]->shape()}});
        blob.insert(blob.end(), tensors[i]->values().begin(),
                    tensors[i]->values().end());
    }
    j["params"] = std::move(params);
    j["calibration"] = {{"fitted", model.calib.fitted},
                        {"median", model.calib.median},
                        {"iqr", model.calib.iqr},
                        {"lambda", model.calib.lambda}};
    json edges = json::array();
    for (const auto& [src, dst] : model.graph.edges) edges.push_back({src, dst});
    j["graph"] = {{"n", model.graph.n}, {"max_in", model.graph.max_in},
                  {"edges", std::move(edges)}};
    j["train_loss"] = model.train_loss;

    std::filesystem::path blob_path = prefix;
    blob_path += ".bin";
    j["blob"] = blob_path.filename().string();
    std::filesystem::path header = prefix;
    header += ".json";
    io::atomic_write_text(header, j.dump(2) + "\n");
    io::atomic_write_f64_blob(blob_path, blob);
}

GdnModel load_model(const std::filesystem::path& prefix) {
    std::filesystem::path header = prefix;
    header += ".json";
    json j = json::parse(io::read_text_file(header));
    if (j.at("format") != "gdn-checkpoint-v1")
        throw parse_error("unknown checkpoint format in " + header.string());

    GdnModel model;
    const json& h = j.at("hyper");
    model.hyper.n = h.at("n").get<std::size_t>();
    model.hyper.d = h.at("d").get<std::size_t>();
    model.hyper.w = h.at("w").get<std::size_t>();
    model.hyper.max_in = h.at("max_in").get<std::size_t>();
    model.hyper.head_hidden = h.at("head_hidden").get<std::vector<std::size_t>>();
    model.hyper.leaky_slope = h.at("leaky_slope").get<double>();
    const json& ms = h.at("multiscale");
    model.hyper.multiscale.enabled = ms.at("enabled").get<bool>();
    model.hyper.multiscale.kernel_sizes =
        ms.at("kernel_sizes").get<std::vector<std::size_t>>();
    model.hyper.multiscale.pool = ms.at("pool").get<std::string>() == "max"
                                      ? MultiScaleConfig::Pool::max
                                      : MultiScaleConfig::Pool::avg;

    std::filesystem::path blob_path =
        header.parent_path() / j.at("blob").get<std::string>();
    std::vector<double> blob = io::read_f64_blob(blob_path);

    model.params = init_gdn_params(model.hyper, 0);
    auto tensors = model.params.all();
    auto names = model.params.names();
    const json& params = j.at("params");
    if (params.size() != tensors.size())
        throw parse_error("checkpoint parameter count mismatch");
    std::size_t off = 0;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (params[i].at("name").get<std::string>() != names[i])
            throw parse_error("checkpoint parameter order mismatch");
        const auto shape = params[i].at("shape").get<std::vector<std::size_t>>();
        if (shape != tensors[i]->shape())
            throw parse_error("checkpoint shape mismatch for " + names[i]);
        if (off + tensors[i]->size() > blob.size())
            throw parse_error("checkpoint blob too short");
        std::copy(blob.begin() + static_cast<std::ptrdiff_t>(off),
                  blob.begin() + static_cast<std::ptrdiff_t>(off + tensors[i]->size()),
                  tensors[i]->data());
        off += tensors[i]->size();
    }
    if (off != blob.size()) throw parse_error("checkpoint blob too long");

    const json& c = j.at("calibration");
    model.calib.fitted = c.at("fitted").get<bool>();
    model.calib.median = c.at("median").get<std::vector<double>>();
    model.calib.iqr = c.at("iqr").get<std::vector<double>>();
    model.calib.lambda = c.at("lambda").get<double>();

    const json& g = j.at("graph");
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& e : g.at("edges"))
        edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    model.graph = SensorGraph::from_edges(g.at("n").get<std::size_t>(),
                                          std::move(edges),
                                          g.at("max_in").get<std::size_t>());
    model.train_loss = j.at("train_loss").get<std::vector<double>>();
    return model;
}

}  // namespace beta
