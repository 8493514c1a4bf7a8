#include "beta/attack.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "beta/errors.hpp"
#include "beta/kernels.hpp"

namespace beta {

void AttackSpec::validate(std::size_t n) const {
    if (epsilon <= 0.0) throw config_error("attack: epsilon must be > 0");
    if (alpha <= 0.0) throw config_error("attack: alpha must be > 0");
    if (iters < 1) throw config_error("attack: iterations must be >= 1");
    if (restarts < 1) throw config_error("attack: restarts must be >= 1");
    if (budget < 1 || budget > n - 1)
        throw config_error("attack: budget must be in [1, N-1]");
    if (target >= n) throw config_error("attack: target node outside the graph");
}

void fill_feature_bounds(AttackContext& ctx, const TimeSeriesDataset& ds) {
    if (!ds.normalized_ready) throw state_error("feature bounds need normalized data");
    const std::size_t n = ds.n_sensors();
    ctx.feat_min.assign(n, 0.0);
    ctx.feat_max.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double mn = ds.norm_at(0, i), mx = mn;
        for (std::size_t t = 0; t < ds.n_steps(); ++t) {
            mn = std::min(mn, ds.norm_at(t, i));
            mx = std::max(mx, ds.norm_at(t, i));
        }
        if (ds.clip_normalized) {
            // Bounds describe the model input domain, which is clamped.
            mn = std::clamp(mn, 0.0, 1.0);
            mx = std::clamp(mx, 0.0, 1.0);
        }
        ctx.feat_min[i] = mn;
        ctx.feat_max[i] = mx;
    }
}

Tensor init_perturbation(const Tensor& x, double epsilon,
                         const std::vector<std::size_t>& rows, Rng& rng) {
    Tensor out = x;
    const std::size_t w = x.cols();
    for (std::size_t r : rows) {
        if (r >= x.rows()) throw dim_error("init_perturbation: row out of range");
        for (std::size_t s = 0; s < w; ++s) {
            const double v = x.at(r, s);
            out.data()[r * w + s] = rng.uniform(v - epsilon, v + epsilon);
        }
    }
    return out;
}

Tensor pgd_step(const Tensor& x_k, const Tensor& grad, double alpha, double epsilon,
                const Tensor& x_orig, const std::vector<std::size_t>& rows) {
    if (!x_k.same_shape(grad) || !x_k.same_shape(x_orig))
        throw dim_error("pgd_step: shape mismatch");
    Tensor out = x_orig;  // non-influencer rows restored exactly
    const std::size_t w = x_k.cols();
    for (std::size_t r : rows) {
        kern::ops().pgd_sign_step(x_k.data() + r * w, grad.data() + r * w,
                                  x_orig.data() + r * w, alpha, epsilon,
                                  out.data() + r * w, w);
    }
    return out;
}

namespace {

// Surrogate attack loss: BCE between sigmoid(score_u - lambda_u) and the true
// label; PGD ascends it.
struct LossEval {
    double loss;
    Tensor grad;  // wrt the segment, empty when not requested
};

LossEval surrogate_loss(const Surrogate& sur, const Tensor& x, double observed_u,
                        bool true_label, bool want_grad) {
    Tape tape;
    NodeId x_leaf = tape.leaf(x, want_grad);
    NodeId score = target_score_node(tape, sur.model, sur.target, x_leaf, observed_u);
    NodeId logit = tape.add_scalar(score, -sur.target_lambda);
    NodeId logit_s = tape.reshape(logit, {});
    NodeId loss = tape.bce_with_logits(logit_s, true_label ? 1.0 : 0.0);
    LossEval out;
    out.loss = tape.value(loss).item();
    if (want_grad) {
        tape.backward(loss);
        out.grad = tape.grad(x_leaf);
    }
    return out;
}

std::vector<std::size_t> all_but_target(std::size_t n, std::size_t target) {
    std::vector<std::size_t> out;
    out.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        if (i != target) out.push_back(i);
    return out;
}

}  // namespace

std::vector<std::size_t> nettack_select(const SensorGraph& graph,
                                        const Surrogate& surrogate, const Tensor& x,
                                        std::size_t target, std::size_t budget,
                                        bool true_label) {
    const std::size_t n = graph.n;
    const auto und = graph.undirected();
    if (und[target].empty()) {
        std::cerr << "[nettack] warning: isolated target, falling back to "
                     "centrality ranking\n";
        return select_top_nodes(all_but_target(n, target), budget,
                                centrality(graph, CentralityMeasure::eigenvector),
                                target);
    }

    // Row-normalized (A v A^T + I), squared: two-hop propagation weights.
    std::vector<double> p(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double inv = 1.0 / static_cast<double>(und[i].size() + 1);
        p[i * n + i] = inv;
        for (std::size_t j : und[i]) p[i * n + j] = inv;
    }
    std::vector<double> p2(n * n, 0.0);
    kern::ops().matmul(n, n, n, p.data(), p.data(), p2.data());

    // Linearized feature weights: feat_proj composed with the head chain.
    const GdnParams& par = surrogate.model.params;
    Tensor chain = par.head_w[0];
    for (std::size_t l = 1; l < par.head_w.size(); ++l) {
        Tensor next = Tensor::zeros({chain.rows(), par.head_w[l].cols()});
        kern::ops().matmul(chain.rows(), chain.cols(), par.head_w[l].cols(),
                           chain.data(), par.head_w[l].data(), next.data());
        chain = std::move(next);
    }
    // theta = feat_proj (w x d) * chain (d x 1)
    Tensor theta = Tensor::zeros({par.feat_proj.rows()});
    kern::ops().matmul(par.feat_proj.rows(), par.feat_proj.cols(), 1,
                       par.feat_proj.data(), chain.data(), theta.data());

    auto margin_score = [&](std::size_t c) {
        const double lin = kern::ops().dot4(x.data() + c * x.cols(), theta.data(),
                                            x.cols());
        const double anom_logit = p2[target * n + c] * lin;
        double logits[2] = {-anom_logit, anom_logit};
        const std::size_t truth = true_label ? 1 : 0;
        double suppressed[2] = {logits[0], logits[1]};
        suppressed[truth] -= 1e6;  // keep the true class out of the max
        const double best_other = std::max(suppressed[0], suppressed[1]);
        return logits[truth] - best_other;
    };

    auto ranked = [&](std::vector<std::size_t> pool) {
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t c : pool) scored.emplace_back(margin_score(c), c);
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first < b.first : a.second < b.second;
        });
        std::vector<std::size_t> out;
        for (const auto& [s, c] : scored) out.push_back(c);
        return out;
    };

    std::vector<std::size_t> chosen;
    auto take = [&](const std::vector<std::size_t>& pool) {
        for (std::size_t c : pool) {
            if (chosen.size() == budget) return;
            if (c == target) continue;
            if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
            chosen.push_back(c);
        }
    };
    take(ranked(und[target]));
    if (chosen.size() < budget) {
        std::vector<std::size_t> two_hop;
        for (std::size_t j : und[target])
            for (std::size_t k : und[j])
                if (k != target &&
                    std::find(und[target].begin(), und[target].end(), k) ==
                        und[target].end())
                    two_hop.push_back(k);
        std::sort(two_hop.begin(), two_hop.end());
        two_hop.erase(std::unique(two_hop.begin(), two_hop.end()), two_hop.end());
        take(ranked(two_hop));
    }
    if (chosen.size() < budget) {
        std::cerr << "[nettack] warning: filling beyond two-hop set by centrality\n";
        auto cv = centrality(graph, CentralityMeasure::eigenvector);
        auto rest = select_top_nodes(all_but_target(n, target), n - 1, cv, target);
        take(rest);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<std::size_t> select_influencers(const AttackContext& ctx,
                                            const Segment& seg,
                                            const AttackSpec& spec) {
    const SensorGraph& graph = *ctx.graph;
    const std::size_t n = graph.n;
    switch (spec.selection) {
        case SelectionStrategy::all_nodes:
            return all_but_target(n, spec.target);
        case SelectionStrategy::random_nodes: {
            Rng rng(Rng::derive(spec.seed, 0x5eed + seg.target_time));
            std::vector<std::size_t> pool = all_but_target(n, spec.target);
            for (std::size_t k = 0; k < spec.budget; ++k) {
                const std::size_t pick = k + rng.uniform_index(pool.size() - k);
                std::swap(pool[k], pool[pick]);
            }
            pool.resize(spec.budget);
            std::sort(pool.begin(), pool.end());
            return pool;
        }
        case SelectionStrategy::nettack_heuristic:
            return nettack_select(graph, *ctx.surrogate, seg.features, spec.target,
                                  spec.budget,
                                  seg.labels_at_t[spec.target] != 0);
        case SelectionStrategy::centrality_only:
            return select_top_nodes(all_but_target(n, spec.target), spec.budget,
                                    centrality(graph, spec.centrality_measure),
                                    spec.target);
        case SelectionStrategy::gaf_centrality: {
            std::vector<std::size_t> cands;
            const std::size_t top_e =
                spec.explainer_edges > 0 ? spec.explainer_edges
                                         : (spec.budget > 1 ? spec.budget - 1 : 0);
            if (ctx.explainer != nullptr && top_e >= 1) {
                try {
                    const auto mask =
                        eval_edge_mask(*ctx.explainer, *ctx.surrogate, seg);
                    cands = extract_candidates(mask, graph, top_e).candidates;
                } catch (const std::exception& e) {
                    std::cerr << "[beta] warning: explainer failed (" << e.what()
                              << "), falling back to centrality-only selection\n";
                    cands.clear();
                }
            }
            return select_top_nodes(cands, spec.budget,
                                    centrality(graph, spec.centrality_measure),
                                    spec.target);
        }
    }
    throw config_error("unknown selection strategy");
}

AttackResult run_attack(const AttackContext& ctx, const Segment& seg, bool true_label,
                        const AttackSpec& spec) {
    if (!ctx.surrogate || !ctx.victim || !ctx.graph)
        throw state_error("run_attack: incomplete attack context");
    const std::size_t n = ctx.graph->n;
    spec.validate(n);

    AttackResult res;
    res.influencers = select_influencers(ctx, seg, spec);
    const Tensor& x_orig = seg.features;
    const double obs_u = seg.target[spec.target];

    switch (spec.perturbation) {
        case PerturbStrategy::pgd: {
            double best_loss = -1e300;
            Tensor best_x = x_orig;
            std::size_t best_r = 0;
            for (std::size_t r = 0; r < spec.restarts; ++r) {
                Rng rng(Rng::derive(spec.seed, 7919 * (r + 1) + seg.target_time));
                Tensor x = init_perturbation(x_orig, spec.epsilon, res.influencers, rng);
                std::vector<double> trace;
                bool stopped = false;
                for (std::size_t k = 0; k < spec.iters; ++k) {
                    LossEval ev = surrogate_loss(*ctx.surrogate, x, obs_u, true_label,
                                                 true);
                    trace.push_back(ev.loss);
                    x = pgd_step(x, ev.grad, spec.alpha, spec.epsilon, x_orig,
                                 res.influencers);
                    if (spec.early_stop) {
                        const bool dec =
                            surrogate_decide(*ctx.surrogate, x, seg.target);
                        if (dec != true_label) {
                            trace.push_back(surrogate_loss(*ctx.surrogate, x, obs_u,
                                                           true_label, false)
                                                .loss);
                            stopped = true;
                            break;
                        }
                    }
                }
                if (!stopped)
                    trace.push_back(
                        surrogate_loss(*ctx.surrogate, x, obs_u, true_label, false)
                            .loss);
                const double final_loss = trace.back();
                res.restart_traces.push_back(std::move(trace));
                if (final_loss > best_loss) {
                    best_loss = final_loss;
                    best_x = x;
                    best_r = r;
                }
            }
            res.perturbed = std::move(best_x);
            res.best_loss = best_loss;
            res.best_restart = best_r;
            break;
        }
        case PerturbStrategy::nettack_feature: {
            const std::size_t w = x_orig.cols();
            std::size_t edits = spec.nettack_edits > 0 ? spec.nettack_edits
                                                       : spec.budget * w / 10;
            edits = std::max<std::size_t>(edits, 1);
            Tensor x = x_orig;
            std::vector<std::uint8_t> edited(x.size(), 0);
            std::vector<double> trace;
            trace.push_back(
                surrogate_loss(*ctx.surrogate, x, obs_u, true_label, false).loss);
            for (std::size_t e = 0; e < edits; ++e) {
                LossEval ev =
                    surrogate_loss(*ctx.surrogate, x, obs_u, true_label, true);
                double best_mag = 0.0;
                std::size_t best_cell = x.size();
                for (std::size_t r : res.influencers) {
                    for (std::size_t s = 0; s < w; ++s) {
                        const std::size_t cell = r * w + s;
                        if (edited[cell]) continue;
                        const double mag = std::fabs(ev.grad.at(r, s));
                        if (mag > best_mag) {
                            best_mag = mag;
                            best_cell = cell;
                        }
                    }
                }
                if (best_cell == x.size()) break;  // no informative coordinate left
                const double xo = x_orig.data()[best_cell];
                const double rlo = std::min(xo, 0.0);
                const double rhi = std::max(xo, 1.0);
                const double lo = std::max(xo - spec.epsilon, rlo);
                const double hi = std::min(xo + spec.epsilon, rhi);
                x.data()[best_cell] = ev.grad.data()[best_cell] > 0.0 ? hi : lo;
                edited[best_cell] = 1;
                trace.push_back(
                    surrogate_loss(*ctx.surrogate, x, obs_u, true_label, false).loss);
            }
            res.restart_traces.push_back(std::move(trace));
            res.best_loss = res.restart_traces[0].back();
            res.perturbed = std::move(x);
            break;
        }
        case PerturbStrategy::uniform_random: {
            if (ctx.feat_min.size() != n)
                throw state_error("run_attack: feature bounds not filled");
            Rng rng(Rng::derive(spec.seed, 0xbeef + seg.target_time));
            Tensor x = x_orig;
            const std::size_t w = x_orig.cols();
            for (std::size_t r : res.influencers)
                for (std::size_t s = 0; s < w; ++s)
                    x.data()[r * w + s] = rng.uniform(ctx.feat_min[r], ctx.feat_max[r]);
            res.restart_traces.push_back(
                {surrogate_loss(*ctx.surrogate, x, obs_u, true_label, false).loss});
            res.best_loss = res.restart_traces[0].back();
            res.perturbed = std::move(x);
            break;
        }
    }

    // Delta statistics and the victim-side success flag.
    const std::size_t w = x_orig.cols();
    for (std::size_t i = 0; i < n; ++i) {
        bool row_changed = false;
        for (std::size_t s = 0; s < w; ++s) {
            const double d = std::fabs(res.perturbed.at(i, s) - x_orig.at(i, s));
            if (d > 0.0) row_changed = true;
            res.delta_linf = std::max(res.delta_linf, d);
        }
        if (row_changed) ++res.changed_rows;
    }
    const bool before = ctx.victim->decide(x_orig, seg.target, spec.target);
    const bool after = ctx.victim->decide(res.perturbed, seg.target, spec.target);
    res.success = before != after;
    return res;
}

namespace {
struct StrategyRow {
    const char* tag;
    SelectionStrategy sel;
    PerturbStrategy pert;
    bool unbudgeted;
};
constexpr StrategyRow kStrategies[] = {
    {"beta", SelectionStrategy::gaf_centrality, PerturbStrategy::pgd, false},
    {"pgd_heuristics", SelectionStrategy::nettack_heuristic, PerturbStrategy::pgd,
     false},
    {"nettack_gaf", SelectionStrategy::gaf_centrality,
     PerturbStrategy::nettack_feature, false},
    {"nettack", SelectionStrategy::nettack_heuristic, PerturbStrategy::nettack_feature,
     false},
    {"random", SelectionStrategy::random_nodes, PerturbStrategy::uniform_random,
     false},
    {"beta_unbudgeted", SelectionStrategy::all_nodes, PerturbStrategy::pgd, true},
    {"beta_centrality_only", SelectionStrategy::centrality_only, PerturbStrategy::pgd,
     false},
};
}  // namespace

AttackSpec apply_strategy(AttackSpec base, const std::string& tag, std::size_t n) {
    for (const auto& row : kStrategies) {
        if (tag == row.tag) {
            base.selection = row.sel;
            base.perturbation = row.pert;
            if (row.unbudgeted) base.budget = n - 1;
            return base;
        }
    }
    throw config_error("unknown attack strategy tag: " + tag);
}

const std::vector<std::string>& known_strategy_tags() {
    static const std::vector<std::string> tags = [] {
        std::vector<std::string> out;
        for (const auto& row : kStrategies) out.emplace_back(row.tag);
        return out;
    }();
    return tags;
}

}  // namespace beta
