#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "beta/data.hpp"
#include "beta/errors.hpp"
#include "beta/explainer.hpp"
#include "testutil.hpp"

using namespace beta;

namespace {

// Hand-built surrogate on a fixed 4-node graph: edges 1->0, 2->0, 3->2.
// Feature rows of node 2 are zeroed in the segments, so only edge (1->0)
// carries signal into the target 0.
struct PlantedFixture {
    Surrogate s;
    std::vector<Segment> segments;

    PlantedFixture() {
        GdnHyper h;
        h.n = 4;
        h.d = 3;
        h.w = 6;
        h.max_in = 2;
        h.head_hidden = {8};
        s.model.hyper = h;
        s.model.params = init_gdn_params(h, 42);
        s.model.graph =
            SensorGraph::from_edges(4, {{1, 0}, {2, 0}, {3, 2}}, 2);
        s.model.calib.median.assign(4, 0.01);
        s.model.calib.iqr.assign(4, 0.05);
        s.model.calib.lambda = 3.0;
        s.model.calib.fitted = true;
        s.target = 0;
        s.target_lambda = 3.0;

        Rng rng(7);
        for (int k = 0; k < 24; ++k) {
            Segment seg;
            Tensor x = testutil::random_tensor({4, 6}, rng, 0.0, 1.0);
            for (std::size_t t = 0; t < 6; ++t) x.data()[2 * 6 + t] = 0.0;
            seg.features = std::move(x);
            seg.target_time = 100 + k;
            seg.target = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                          rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
            seg.labels_at_t.assign(4, 0);
            segments.push_back(std::move(seg));
        }
    }
};

}  // namespace

TEST_CASE("sample_mask follows the binary concrete formula") {
    // logit 0, u = 0.5 -> 0.5 for any tau
    for (double tau : {0.1, 0.5, 2.0}) {
        Tape t;
        NodeId logits = t.leaf(Tensor::vec({0.0}), false);
        const double u = 0.5;
        NodeId noise = t.leaf(Tensor::vec({std::log(u) - std::log(1 - u)}), false);
        CHECK(t.value(sample_mask(t, logits, tau, noise)).item() ==
              doctest::Approx(0.5));
    }
    // logit +20, tau 0.1 -> mask > 0.999 for all u in [0.01, 0.99]
    for (double u : {0.01, 0.25, 0.5, 0.75, 0.99}) {
        Tape t;
        NodeId logits = t.leaf(Tensor::vec({20.0}), false);
        NodeId noise = t.leaf(Tensor::vec({std::log(u) - std::log(1 - u)}), false);
        CHECK(t.value(sample_mask(t, logits, 0.1, noise)).item() > 0.999);
    }
    // tau -> 0.01 with logit +-5 gives near-binary masks
    for (double logit : {5.0, -5.0}) {
        Tape t;
        NodeId logits = t.leaf(Tensor::vec({logit}), false);
        const double m = t.value(sample_mask(t, logits, 0.01, -1)).item();
        if (logit > 0) CHECK(m > 1.0 - 1e-3);
        else CHECK(m < 1e-3);
    }
    Tape t;
    NodeId logits = t.leaf(Tensor::vec({0.0}), false);
    CHECK_THROWS_AS(sample_mask(t, logits, 0.0, -1), config_error);
}

TEST_CASE("augment_attributes handles isolated nodes and convexity") {
    Rng rng(3);
    Tensor x = testutil::random_tensor({3, 4}, rng);
    Tensor attn = testutil::random_tensor({8}, rng);

    // node 0 isolated; nodes 1,2 mutual neighbors
    std::vector<std::vector<std::size_t>> adj = {{}, {2}, {1}};
    Tape t;
    NodeId xa = t.leaf(x, false);
    NodeId aw = t.leaf(attn, false);
    const Tensor& out = t.value(augment_attributes(t, xa, aw, adj));
    REQUIRE(out.rows() == 3);
    REQUIRE(out.cols() == 8);
    // isolated node: own features then zeros
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(out.at(0, c) == x.at(0, c));
        CHECK(out.at(0, 4 + c) == 0.0);
    }
    // single neighbor aggregates to exactly that neighbor (softmax of one)
    for (std::size_t c = 0; c < 4; ++c) CHECK(out.at(1, 4 + c) == x.at(2, c));

    // two identical neighbors: aggregation equals either one (convexity)
    Tensor x2 = x;
    for (std::size_t c = 0; c < 4; ++c) x2.data()[2 * 4 + c] = x2.at(1, c);
    std::vector<std::vector<std::size_t>> adj2 = {{1, 2}, {0}, {0}};
    Tape t2;
    const Tensor& out2 =
        t2.value(augment_attributes(t2, t2.leaf(x2, false), t2.leaf(attn, false), adj2));
    for (std::size_t c = 0; c < 4; ++c)
        CHECK(out2.at(0, 4 + c) == doctest::Approx(x2.at(1, c)));
}

TEST_CASE("mask of all ones reproduces the unmasked score bit-for-bit") {
    PlantedFixture f;
    for (const auto& seg : f.segments) {
        std::vector<double> ones(f.s.model.graph.edges.size(), 1.0);
        const double masked = masked_target_score(f.s, seg, ones);
        const double ref =
            anomaly_scores(f.s.model, seg.features, seg.target)[f.s.target];
        CHECK(std::memcmp(&masked, &ref, sizeof(double)) == 0);
    }
}

TEST_CASE("training finds the planted influential edge") {
    PlantedFixture f;
    ExplainerConfig cfg;
    cfg.iters = 120;
    cfg.batch = 8;
    cfg.seed = 11;
    cfg.sparsity = 0.02;
    ExplainerNet net = train_explainer(f.s, f.segments, 0, cfg);

    // edge order: sorted by (dst, src): (1->0), (2->0), (3->2)
    const auto mask = eval_edge_mask(net, f.s, f.segments.front());
    REQUIRE(mask.size() == 3);
    CHECK(mask[0] > mask[1]);  // live parent beats the zeroed parent

    // determinism across reruns
    ExplainerNet net2 = train_explainer(f.s, f.segments, 0, cfg);
    const auto mask2 = eval_edge_mask(net2, f.s, f.segments.front());
    CHECK(mask == mask2);

    // mask values stay strictly inside (0,1) in evaluation mode
    for (double m : mask) {
        CHECK(m > 0.0);
        CHECK(m < 1.0);
    }
}

TEST_CASE("extract_candidates ranking, ties and bounds") {
    SensorGraph g = SensorGraph::from_edges(5, {{1, 0}, {2, 0}, {3, 0}, {4, 3}}, 3);
    {
        // E=1: exactly the two endpoints of the strongest edge
        std::vector<double> mask = {0.1, 0.9, 0.3, 0.2};
        auto res = extract_candidates(mask, g, 1);
        CHECK(res.top_edges == std::vector<std::size_t>{1});
        CHECK(res.candidates == std::vector<std::size_t>({0, 2}));
    }
    {
        // all equal: lexicographically smallest edges win
        std::vector<double> mask = {0.5, 0.5, 0.5, 0.5};
        auto res = extract_candidates(mask, g, 2);
        CHECK(res.top_edges == std::vector<std::size_t>({0, 1}));
    }
    {
        // E > edge count clips with a warning
        std::vector<double> mask = {0.5, 0.4, 0.3, 0.2};
        auto res = extract_candidates(mask, g, 10);
        CHECK(res.top_edges.size() == 4);
    }
    {
        // |V_S| <= 2E always
        std::vector<double> mask = {0.9, 0.8, 0.7, 0.6};
        for (std::size_t e = 1; e <= 4; ++e) {
            auto res = extract_candidates(mask, g, e);
            CHECK(res.candidates.size() <= 2 * e);
        }
    }
}

TEST_CASE("explainer fidelity beats random subgraphs on planted instances") {
    // Aggregated over seeds: the trained explainer's top-1 subgraph should
    // track the original score at least as well as a random 1-edge subgraph.
    double trained_total = 0.0, random_total = 0.0;
    int n_seeds = 10;
    for (int seed = 0; seed < n_seeds; ++seed) {
        PlantedFixture f;
        ExplainerConfig cfg;
        cfg.iters = 80;
        cfg.batch = 8;
        cfg.seed = 1000 + seed;
        cfg.sparsity = 0.02;
        ExplainerNet net = train_explainer(f.s, f.segments, 0, cfg);

        Rng rng(seed);
        for (int k = 0; k < 4; ++k) {
            const Segment& seg = f.segments[k];
            auto res = explain_segment(net, f.s, seg, 1);
            trained_total += res.fidelity;

            std::vector<double> rnd(f.s.model.graph.edges.size(), 0.0);
            rnd[rng.uniform_index(rnd.size())] = 1.0;
            const double ref =
                anomaly_scores(f.s.model, seg.features, seg.target)[f.s.target];
            random_total += std::fabs(masked_target_score(f.s, seg, rnd) - ref);
        }
    }
    CHECK(trained_total <= random_total);
}

TEST_CASE("explainer checkpoint round-trips") {
    PlantedFixture f;
    ExplainerConfig cfg;
    cfg.iters = 10;
    cfg.seed = 2;
    ExplainerNet net = train_explainer(f.s, f.segments, 0, cfg);
    auto dir = std::filesystem::temp_directory_path() / "beta_expl_ckpt";
    std::filesystem::create_directories(dir);
    save_explainer(dir / "e", net, "cafe", 2);
    ExplainerNet back = load_explainer(dir / "e");
    CHECK(back.tau == net.tau);
    const auto m1 = eval_edge_mask(net, f.s, f.segments.front());
    const auto m2 = eval_edge_mask(back, f.s, f.segments.front());
    CHECK(m1 == m2);
    std::filesystem::remove_all(dir);
}
