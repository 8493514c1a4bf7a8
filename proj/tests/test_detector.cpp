#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "beta/data.hpp"
#include "beta/detector.hpp"
#include "beta/errors.hpp"
#include "beta/rng.hpp"
#include "testutil.hpp"

using namespace beta;

namespace {

GdnHyper toy_hyper(std::size_t n, std::size_t d = 4, std::size_t w = 8) {
    GdnHyper h;
    h.n = n;
    h.d = d;
    h.w = w;
    h.max_in = n > 2 ? 2 : 1;
    h.head_hidden = {8};
    return h;
}

SensorGraph chain_graph(std::size_t n, std::size_t max_in) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 1; i < n; ++i) edges.emplace_back(i - 1, i);
    return SensorGraph::from_edges(n, std::move(edges), max_in);
}

TimeSeriesDataset small_dataset(std::size_t n, std::size_t t, std::uint64_t seed,
                                std::size_t w = 8, std::size_t stride = 2) {
    SynthesisConfig cfg;
    cfg.n_sensors = n;
    cfg.n_steps = t;
    cfg.coupling = 0.7;
    cfg.seed = seed;
    TimeSeriesDataset ds = synthesize_network(cfg);
    ds.window = w;
    ds.stride = stride;
    assign_splits(ds, 0.7, 0.1);
    min_max_normalize(ds);
    return ds;
}

}  // namespace

TEST_CASE("forward: single node with no edges predicts from r = 0") {
    GdnHyper h = toy_hyper(1);
    h.max_in = 0;
    GdnParams p = init_gdn_params(h, 1);
    SensorGraph g = SensorGraph::from_edges(1, {}, 0);
    Rng rng(4);
    Tensor x = testutil::random_tensor({1, h.w}, rng, 0.0, 1.0);

    Tape tape;
    GdnLeaves leaves = register_params(tape, p, false);
    auto fwd = gdn_forward(tape, h, leaves, tape.leaf(x, false), g);
    // r = 0 so the output is the head applied to the zero vector
    const double expect_hidden = 0.0;  // v ⊙ 0 = 0 regardless of embeddings
    (void)expect_hidden;
    Tape ref;
    GdnLeaves rl = register_params(ref, p, false);
    NodeId zero = ref.leaf(Tensor::zeros({1, h.d}), false);
    NodeId hh = zero;
    for (std::size_t l = 0; l < rl.head_w.size(); ++l) {
        hh = ref.add_bias(ref.matmul(hh, rl.head_w[l]), rl.head_b[l]);
        if (l + 1 < rl.head_w.size()) hh = ref.relu(hh);
    }
    CHECK(tape.value(fwd.predictions).at(0) ==
          doctest::Approx(ref.value(hh).at(0)).epsilon(1e-12));
}

TEST_CASE("forward: singleton softmax gives attention 1") {
    GdnHyper h = toy_hyper(2);
    h.max_in = 1;
    GdnParams p = init_gdn_params(h, 2);
    SensorGraph g = SensorGraph::from_edges(2, {{0, 1}}, 1);
    Rng rng(5);
    Tensor x = testutil::random_tensor({2, h.w}, rng, 0.0, 1.0);
    Tape tape;
    GdnLeaves leaves = register_params(tape, p, false);
    auto fwd = gdn_forward(tape, h, leaves, tape.leaf(x, false), g);
    REQUIRE(fwd.beta_rows[1] >= 0);
    CHECK(tape.value(fwd.beta_rows[1]).item() == 1.0);
}

TEST_CASE("forward: attention rows sum to 1 and match the direct formula") {
    const std::size_t n = 5;
    GdnHyper h = toy_hyper(n);
    h.max_in = 3;
    GdnParams p = init_gdn_params(h, 7);
    SensorGraph g = learn_adjacency(p.embeddings, {}, 3);
    Rng rng(8);
    Tensor x = testutil::random_tensor({n, h.w}, rng, 0.0, 1.0);

    Tape tape;
    GdnLeaves leaves = register_params(tape, p, false);
    auto fwd = gdn_forward(tape, h, leaves, tape.leaf(x, false), g);

    // Direct evaluation of the attention formulas.
    auto qvec = [&](std::size_t j) {
        std::vector<double> q(h.d, 0.0);
        for (std::size_t c = 0; c < h.d; ++c)
            for (std::size_t s = 0; s < h.w; ++s)
                q[c] += x.at(j, s) * p.feat_proj.at(s, c);
        return q;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto nbrs = g.in_neighbors(i);
        if (nbrs.empty()) continue;
        std::vector<double> rho;
        for (std::size_t j : nbrs) {
            std::vector<double> cat;
            for (std::size_t c = 0; c < h.d; ++c) cat.push_back(p.embeddings.at(i, c));
            for (double v : qvec(i)) cat.push_back(v);
            for (std::size_t c = 0; c < h.d; ++c) cat.push_back(p.embeddings.at(j, c));
            for (double v : qvec(j)) cat.push_back(v);
            double dot = 0.0;
            for (std::size_t k = 0; k < cat.size(); ++k) dot += cat[k] * p.attn.at(k);
            rho.push_back(dot > 0 ? dot : h.leaky_slope * dot);
        }
        double mx = *std::max_element(rho.begin(), rho.end());
        double z = 0.0;
        for (double r : rho) z += std::exp(r - mx);
        const Tensor& beta = tape.value(fwd.beta_rows[i]);
        double sum = 0.0;
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
            const double expect = std::exp(rho[k] - mx) / z;
            CHECK(std::fabs(beta.at(k) - expect) < 1e-10);
            CHECK(beta.at(k) >= 0.0);
            sum += beta.at(k);
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("forward rejects mismatched shapes") {
    GdnHyper h = toy_hyper(3);
    GdnParams p = init_gdn_params(h, 1);
    SensorGraph g = chain_graph(4, 2);  // wrong N
    Tape tape;
    GdnLeaves leaves = register_params(tape, p, false);
    NodeId x = tape.leaf(Tensor::zeros({3, h.w}), false);
    CHECK_THROWS_AS(gdn_forward(tape, h, leaves, x, g), dim_error);
}

TEST_CASE("full-model gradients match finite differences on a 4-node toy") {
    const std::size_t n = 4;
    GdnHyper h = toy_hyper(n, 3, 6);
    h.max_in = 2;
    GdnParams p = init_gdn_params(h, 11);
    SensorGraph g = learn_adjacency(p.embeddings, {}, 2);
    Rng rng(13);
    Tensor x0 = testutil::random_tensor({n, h.w}, rng, 0.05, 0.95);
    std::vector<double> target(n);
    for (double& v : target) v = rng.uniform(0.0, 1.0);

    auto eval = [&](const std::vector<double>& vals) {
        Tape t;
        GdnLeaves leaves = register_params(t, p, false);
        NodeId x = t.leaf(Tensor({n, h.w}, vals), true);
        auto fwd = gdn_forward(t, h, leaves, x, g);
        return t.value(mse_loss(t, fwd.predictions, target)).item();
    };

    Tape t;
    GdnLeaves leaves = register_params(t, p, true);
    NodeId x = t.leaf(x0, true);
    auto fwd = gdn_forward(t, h, leaves, x, g);
    NodeId loss = mse_loss(t, fwd.predictions, target);
    t.backward(loss);

    const auto fd = testutil::finite_diff(eval, x0.values());
    const Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < fd.size(); ++i)
        CHECK(testutil::rel_err(gx.at(i), fd[i]) < 1e-4);
}

TEST_CASE("training fits a noiseless shared signal and is deterministic") {
    // every sensor carries the same smooth wave, so the forecast target is a
    // deterministic function of any neighbor's window
    TimeSeriesDataset ds;
    const std::size_t n = 4, t_total = 600;
    ds.sensor_ids = {"a", "b", "c", "d"};
    for (std::size_t t = 0; t < t_total; ++t) {
        const double v = 50.0 + 5.0 * std::sin(2.0 * M_PI * t / 40.0);
        for (std::size_t i = 0; i < n; ++i) ds.raw.push_back(v);
    }
    ds.labels.assign(t_total * n, 0);
    ds.window = 8;
    ds.stride = 2;
    assign_splits(ds, 0.7, 0.15);
    min_max_normalize(ds);

    GdnHyper h = toy_hyper(n);
    TrainConfig tc;
    tc.epochs = 120;
    tc.batch = 16;
    tc.lr = 5e-3;
    tc.seed = 5;
    GdnModel m1 = train_gdn(h, ds, tc);
    CHECK(m1.train_loss.back() < 1e-4);

    GdnModel m2 = train_gdn(h, ds, tc);
    CHECK(m1.params.embeddings.values() == m2.params.embeddings.values());
    CHECK(m1.params.feat_proj.values() == m2.params.feat_proj.values());
    CHECK(m1.train_loss == m2.train_loss);
}

TEST_CASE("training beats the persistence forecaster on the coupled dataset") {
    // the N=12, T=10000 synthetic instance
    SynthesisConfig cfg;
    cfg.n_sensors = 12;
    cfg.n_steps = 10000;
    cfg.coupling = 0.9;
    cfg.seed = 0;
    TimeSeriesDataset ds = synthesize_network(cfg);
    ds.window = 100;
    ds.stride = 10;
    ds.clip_normalized = true;
    assign_splits(ds, 0.7, 0.1);
    min_max_normalize(ds);

    GdnHyper h;
    h.n = 12;
    h.d = 16;
    h.w = 100;
    h.max_in = 5;
    h.head_hidden = {64};
    TrainConfig tc;
    tc.epochs = 30;
    tc.batch = 32;
    tc.lr = 3e-3;
    tc.seed = 9;
    GdnModel model = train_gdn(h, ds, tc);

    auto windows = sliding_windows(ds, Split::val);
    double mse_model = 0.0, mse_naive = 0.0;
    std::size_t count = 0;
    for (const auto& seg : windows) {
        const auto pred = predict(model, seg.features);
        for (std::size_t i = 0; i < 12; ++i) {
            const double last = seg.features.at(i, seg.features.cols() - 1);
            mse_model += (pred[i] - seg.target[i]) * (pred[i] - seg.target[i]);
            mse_naive += (last - seg.target[i]) * (last - seg.target[i]);
            ++count;
        }
    }
    CHECK(mse_model / count < mse_naive / count);
}

TEST_CASE("calibration, scoring and detection rules") {
    TimeSeriesDataset ds = small_dataset(5, 2000, 33, 10, 5);
    GdnHyper h = toy_hyper(5, 4, 10);
    TrainConfig tc;
    tc.epochs = 8;
    tc.seed = 2;
    GdnModel model = train_gdn(h, ds, tc);
    calibrate(model, ds);
    REQUIRE(model.calib.fitted);
    for (double iqr : model.calib.iqr) CHECK(iqr >= 1e-9);

    // validation scores never exceed lambda (max rule, strict comparison)
    auto windows = sliding_windows(ds, Split::val);
    for (const auto& seg : windows) {
        const auto sc = anomaly_scores(model, seg.features, seg.target);
        for (std::size_t i = 0; i < sc.size(); ++i) {
            CHECK(sc[i] <= model.calib.lambda);
            CHECK(!detect_node(sc, model.calib.lambda, i));
        }
        CHECK(!detect_global(sc, model.calib.lambda));
    }

    // error exactly at the median scores 0; score at lambda is not detected
    const auto& seg = windows.front();
    auto sc = anomaly_scores(model, seg.features, seg.target);
    sc[0] = model.calib.lambda;
    CHECK(!detect_node(sc, model.calib.lambda, 0));
    sc[0] = model.calib.lambda + 1e-9;
    CHECK(detect_node(sc, model.calib.lambda, 0));
    CHECK(detect_global(sc, model.calib.lambda));

    // detect_global == OR over detect_node
    Rng rng(6);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> scores(5);
        for (double& s : scores) s = rng.uniform(-2.0, 2.0);
        bool any = false;
        for (std::size_t i = 0; i < 5; ++i) any = any || detect_node(scores, 1.0, i);
        CHECK(detect_global(scores, 1.0) == any);
    }

    // score monotonicity in |x - x_hat|
    const auto pred = predict(model, seg.features);
    std::vector<double> obs = seg.target;
    auto s1 = anomaly_scores(model, seg.features, obs);
    obs[2] = pred[2] + 0.5;  // larger error than observed
    auto s2 = anomaly_scores(model, seg.features, obs);
    obs[2] = pred[2] + 0.9;
    auto s3 = anomaly_scores(model, seg.features, obs);
    CHECK(s3[2] > s2[2]);
    (void)s1;
}

TEST_CASE("multi-scale convolution variant") {
    // H=1, unit kernel, weight 1 -> identity front end
    GdnHyper h = toy_hyper(3, 3, 6);
    h.max_in = 1;
    h.multiscale.enabled = true;
    h.multiscale.kernel_sizes = {1};
    GdnParams p = init_gdn_params(h, 4);
    p.conv_filters[0] = Tensor::vec({1.0});
    SensorGraph g = chain_graph(3, 1);
    Rng rng(5);
    Tensor x = testutil::random_tensor({3, 6}, rng, 0.0, 1.0);

    GdnHyper h_plain = h;
    h_plain.multiscale.enabled = false;
    GdnParams p_plain = p;
    p_plain.conv_filters.clear();

    Tape t1, t2;
    auto f1 = gdn_forward(t1, h, register_params(t1, p, false), t1.leaf(x, false), g);
    auto f2 = gdn_forward(t2, h_plain, register_params(t2, p_plain, false),
                          t2.leaf(x, false), g);
    CHECK(t1.value(f1.predictions).values() == t2.value(f2.predictions).values());

    // max-pool of identical branches equals either branch
    GdnHyper h2 = h;
    h2.multiscale.kernel_sizes = {3, 3};
    GdnParams p2 = init_gdn_params(h2, 4);
    p2.conv_filters[0] = Tensor::vec({0.5, 0.3, 0.2});
    p2.conv_filters[1] = p2.conv_filters[0];
    GdnHyper h3 = h;
    h3.multiscale.kernel_sizes = {3};
    GdnParams p3 = p2;
    p3.conv_filters.pop_back();
    Tape t3, t4;
    auto f3 =
        gdn_forward(t3, h2, register_params(t3, p2, false), t3.leaf(x, false), g);
    auto f4 =
        gdn_forward(t4, h3, register_params(t4, p3, false), t4.leaf(x, false), g);
    CHECK(t3.value(f3.predictions).values() == t4.value(f4.predictions).values());

    // direct convolution oracle on a ramp
    Tape t5;
    NodeId sig = t5.leaf(Tensor::matrix(1, 6, {0, 1, 2, 3, 4, 5}), false);
    NodeId ker = t5.leaf(Tensor::vec({0.5, 0.25, 0.125}), false);
    const Tensor& z = t5.value(t5.conv1d_same(sig, ker));
    for (std::size_t s = 0; s < 6; ++s) {
        double expect = 0.0;
        for (std::size_t l = 0; l < 3 && s + l < 6; ++l)
            expect += static_cast<double>(s + l) * (l == 0 ? 0.5 : l == 1 ? 0.25
                                                                          : 0.125);
        CHECK(z.at(0, s) == doctest::Approx(expect));
    }

    // kernel larger than the window is a config error
    GdnHyper bad = toy_hyper(3, 3, 6);
    bad.multiscale.enabled = true;
    bad.multiscale.kernel_sizes = {7};
    CHECK_THROWS_AS(init_gdn_params(bad, 1), config_error);
}

TEST_CASE("forward pass is permutation-equivariant") {
    const std::size_t n = 5;
    GdnHyper h = toy_hyper(n, 3, 6);
    h.max_in = 2;
    GdnParams p = init_gdn_params(h, 19);
    SensorGraph g = learn_adjacency(p.embeddings, {}, 2);
    Rng rng(20);
    Tensor x = testutil::random_tensor({n, h.w}, rng, 0.0, 1.0);

    std::vector<std::size_t> perm = {2, 0, 4, 1, 3};
    GdnParams pp = p;
    Tensor xp = Tensor::zeros({n, h.w});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < h.d; ++c)
            pp.embeddings.data()[perm[i] * h.d + c] = p.embeddings.at(i, c);
        for (std::size_t s = 0; s < h.w; ++s)
            xp.data()[perm[i] * h.w + s] = x.at(i, s);
    }
    std::vector<std::pair<std::size_t, std::size_t>> pe;
    for (const auto& [src, dst] : g.edges) pe.emplace_back(perm[src], perm[dst]);
    SensorGraph gp = SensorGraph::from_edges(n, pe, g.max_in);

    Tape t1, t2;
    auto f1 = gdn_forward(t1, h, register_params(t1, p, false), t1.leaf(x, false), g);
    auto f2 =
        gdn_forward(t2, h, register_params(t2, pp, false), t2.leaf(xp, false), gp);
    const Tensor& y1 = t1.value(f1.predictions);
    const Tensor& y2 = t2.value(f2.predictions);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(y1.at(i) == doctest::Approx(y2.at(perm[i])).epsilon(1e-12));
}

TEST_CASE("checkpoint save/load round-trips the model") {
    TimeSeriesDataset ds = small_dataset(4, 1500, 44, 8, 4);
    GdnHyper h = toy_hyper(4);
    TrainConfig tc;
    tc.epochs = 3;
    tc.seed = 8;
    GdnModel model = train_gdn(h, ds, tc);
    calibrate(model, ds);

    auto dir = std::filesystem::temp_directory_path() / "beta_ckpt_test";
    std::filesystem::create_directories(dir);
    save_model(dir / "m", model, "deadbeef", 8);
    GdnModel back = load_model(dir / "m");
    CHECK(back.params.embeddings.values() == model.params.embeddings.values());
    CHECK(back.params.attn.values() == model.params.attn.values());
    CHECK(back.calib.lambda == model.calib.lambda);
    CHECK(back.graph.edges == model.graph.edges);

    // decisions are identical through the oracle surface
    auto windows = sliding_windows(ds, Split::val);
    const auto s1 = anomaly_scores(model, windows[0].features, windows[0].target);
    const auto s2 = anomaly_scores(back, windows[0].features, windows[0].target);
    CHECK(s1 == s2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("training refuses labeled anomalies in the train split") {
    TimeSeriesDataset ds = small_dataset(4, 1500, 55, 8, 4);
    ds.labels[5 * 4 + 2] = 1;  // poison one train step
    GdnHyper h = toy_hyper(4);
    TrainConfig tc;
    tc.epochs = 1;
    CHECK_THROWS_AS(train_gdn(h, ds, tc), policy_error);
}
