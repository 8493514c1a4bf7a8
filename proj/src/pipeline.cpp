#include "beta/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "beta/attack.hpp"
#include "beta/errors.hpp"
#include "beta/io.hpp"
#include "beta/metrics.hpp"
#include "beta/rng.hpp"
#include "beta/surrogate.hpp"

namespace beta {

using json = nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Stage s) {
    switch (s) {
        case Stage::generate: return "generate";
        case Stage::victim: return "victim";
        case Stage::surrogate: return "surrogate";
        case Stage::explain: return "explain";
        case Stage::attack: return "attack";
        case Stage::evaluate: return "evaluate";
        case Stage::report: return "report";
    }
    return "?";
}

Stage stage_from_string(const std::string& name) {
    for (Stage s : {Stage::generate, Stage::victim, Stage::surrogate, Stage::explain,
                    Stage::attack, Stage::evaluate, Stage::report})
        if (name == to_string(s)) return s;
    throw config_error("unknown stage: " + name);
}

namespace {

std::string hash_of(const std::string& data) {
    return io::hex64(io::fnv1a64(data)).substr(0, 12);
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

void require_file(const fs::path& path, const char* needed_by, const char* producer) {
    if (!fs::exists(path))
        throw dependency_error(std::string(needed_by) + " requires missing file " +
                               path.string() + " (run the " + producer +
                               " stage first)");
}

json read_manifest(const fs::path& dir) {
    return json::parse(io::read_text_file(dir / "manifest.json"));
}

void write_manifest(const fs::path& dir, json manifest) {
    io::atomic_write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

bool stage_done(const fs::path& dir) { return fs::exists(dir / "manifest.json"); }

std::string dataset_name(const ExperimentConfig& cfg) {
    if (cfg.dataset.source == "csv")
        return fs::path(cfg.dataset.csv_path).filename().string();
    return "synthetic";
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string stage_hash(const ExperimentConfig& cfg, Stage stage, std::uint64_t seed) {
    const json c = cfg.canonical();
    const std::string seed_s = std::to_string(seed);
    switch (stage) {
        case Stage::generate:
            return hash_of("generate|" + c["dataset"].dump() + "|w" +
                           std::to_string(cfg.model.window) + "|s" +
                           std::to_string(cfg.model.stride) + "|" + seed_s);
        case Stage::victim:
            return hash_of("victim|" + stage_hash(cfg, Stage::generate, seed) + "|" +
                           c["model"].dump() + "|" + seed_s);
        case Stage::surrogate:
            return hash_of("surrogate|" + stage_hash(cfg, Stage::victim, seed) + "|" +
                           c["surrogate"].dump() + "|t" +
                           std::to_string(cfg.attack.target) + "|" + seed_s);
        case Stage::explain:
            return hash_of("explain|" + stage_hash(cfg, Stage::surrogate, seed) + "|" +
                           c["explainer"].dump() + "|" + seed_s);
        case Stage::attack:
            return hash_of("attack|" + stage_hash(cfg, Stage::explain, seed) + "|" +
                           c["attack"].dump() + "|" + seed_s);
        case Stage::evaluate:
            return hash_of("evaluate|" + stage_hash(cfg, Stage::attack, seed) + "|" +
                           seed_s);
        case Stage::report: {
            std::string acc = "report";
            for (std::uint64_t s : cfg.run.seeds)
                acc += "|" + stage_hash(cfg, Stage::evaluate, s);
            return hash_of(acc);
        }
    }
    throw config_error("bad stage");
}

fs::path stage_dir(const fs::path& out, const ExperimentConfig& cfg, Stage stage,
                   std::uint64_t seed) {
    return out / (std::string(to_string(stage)) + "-" + stage_hash(cfg, stage, seed));
}

std::size_t resolve_target(const ExperimentConfig& cfg, std::size_t n_sensors) {
    if (cfg.attack.target < 0) return n_sensors - 1;
    const auto t = static_cast<std::size_t>(cfg.attack.target);
    if (t >= n_sensors) throw config_error("attack.target outside the sensor set");
    return t;
}

namespace {

TimeSeriesDataset build_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
    TimeSeriesDataset ds;
    if (cfg.dataset.source == "synthetic") {
        SynthesisConfig syn = cfg.dataset.synthetic;
        syn.seed = seed;
        ds = synthesize_network(syn);
    } else {
        CsvSchema schema;
        schema.timestamp_column = cfg.dataset.timestamp_column;
        schema.forward_fill_missing = cfg.dataset.forward_fill_missing;
        ds = load_csv(cfg.dataset.csv_path, schema);
    }
    if (ds.n_steps() < 20 * cfg.model.window)
        throw config_error("dataset too short: need at least 20 windows of data");
    ds.window = cfg.model.window;
    ds.stride = cfg.model.stride;
    ds.clip_normalized = cfg.dataset.clip_normalized;
    assign_splits(ds, cfg.dataset.train_frac, cfg.dataset.val_frac);
    if (cfg.dataset.injection.rate > 0.0) {
        InjectionConfig inj = cfg.dataset.injection;
        inj.seed = Rng::derive(seed, 17);
        inject_anomalies(ds, Split::test, inj);
    }
    min_max_normalize(ds);
    return ds;
}

TimeSeriesDataset load_dataset_artifact(const ExperimentConfig& cfg,
                                        std::uint64_t seed, const fs::path& out) {
    const fs::path dir = stage_dir(out, cfg, Stage::generate, seed);
    require_file(dir / "dataset.csv", "this stage", "generate");
    require_file(dir / "manifest.json", "this stage", "generate");
    CsvSchema schema;  // generated CSVs use the canonical layout
    TimeSeriesDataset ds = load_csv(dir / "dataset.csv", schema);
    const json m = read_manifest(dir);
    ds.window = m.at("window").get<std::size_t>();
    ds.stride = m.at("stride").get<std::size_t>();
    ds.clip_normalized = m.at("clip_normalized").get<bool>();
    const json& splits = m.at("splits");
    ds.train_range = {splits.at("train").at(0), splits.at("train").at(1)};
    ds.val_range = {splits.at("val").at(0), splits.at("val").at(1)};
    ds.test_range = {splits.at("test").at(0), splits.at("test").at(1)};
    for (const auto& e : m.at("planted_edges"))
        ds.planted_edges.emplace_back(e.at(0).get<std::size_t>(),
                                      e.at(1).get<std::size_t>());
    min_max_normalize(ds);
    return ds;
}

Surrogate load_surrogate_artifact(const ExperimentConfig& cfg, std::uint64_t seed,
                                  const fs::path& out) {
    const fs::path dir = stage_dir(out, cfg, Stage::surrogate, seed);
    require_file(dir / "surrogate.json", "this stage", "surrogate");
    Surrogate s;
    s.model = load_model(dir / "surrogate");
    const json meta = json::parse(io::read_text_file(dir / "meta.json"));
    s.target = meta.at("target").get<std::size_t>();
    s.target_lambda = meta.at("target_lambda").get<double>();
    s.fit_agreement = meta.at("fit_agreement").get<double>();
    s.threshold_from_fallback = meta.at("threshold_from_fallback").get<bool>();
    return s;
}

}  // namespace

void run_generate(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& out,
                  bool force) {
    const fs::path dir = stage_dir(out, cfg, Stage::generate, seed);
    if (!force && stage_done(dir)) return;
    fs::create_directories(dir);
    const std::string h = stage_hash(cfg, Stage::generate, seed);

    TimeSeriesDataset ds = build_dataset(cfg, seed);
    write_csv(ds, dir / "dataset.csv",
              "config=" + h + " seed=" + std::to_string(seed));

    json manifest;
    manifest["stage"] = "generate";
    manifest["config_hash"] = h;
    manifest["seed"] = seed;
    manifest["dataset"] = dataset_name(cfg);
    manifest["sensor_ids"] = ds.sensor_ids;
    manifest["n_steps"] = ds.n_steps();
    manifest["window"] = ds.window;
    manifest["stride"] = ds.stride;
    manifest["clip_normalized"] = ds.clip_normalized;
    manifest["splits"] = {
        {"train", {ds.train_range.begin, ds.train_range.end}},
        {"val", {ds.val_range.begin, ds.val_range.end}},
        {"test", {ds.test_range.begin, ds.test_range.end}}};
    manifest["normalization"] = {{"min", ds.norm_min}, {"max", ds.norm_max}};
    json inj = json::array();
    for (const auto& r : ds.injections)
        inj.push_back({{"sensor", r.sensor}, {"start", r.start}, {"length", r.length}});
    manifest["injections"] = std::move(inj);
    json planted = json::array();
    for (const auto& [p, c] : ds.planted_edges) planted.push_back({p, c});
    manifest["planted_edges"] = std::move(planted);
    write_manifest(dir, std::move(manifest));
}

void run_train_victim(const ExperimentConfig& cfg, std::uint64_t seed,
                      const fs::path& out, bool force) {
    const fs::path dir = stage_dir(out, cfg, Stage::victim, seed);
    if (!force && stage_done(dir)) return;
    TimeSeriesDataset ds = load_dataset_artifact(cfg, seed, out);
    fs::create_directories(dir);
    const std::string h = stage_hash(cfg, Stage::victim, seed);

    GdnHyper hyper;
    hyper.n = ds.n_sensors();
    hyper.d = cfg.model.d;
    hyper.w = cfg.model.window;
    hyper.max_in = cfg.model.max_in;
    hyper.head_hidden = cfg.model.head_hidden;
    hyper.leaky_slope = cfg.model.leaky_slope;
    hyper.multiscale = cfg.model.multiscale;

    TrainConfig tc;
    tc.epochs = cfg.model.epochs;
    tc.batch = cfg.model.batch;
    tc.lr = cfg.model.lr;
    tc.seed = Rng::derive(seed, 1);

    GdnModel model = train_gdn(hyper, ds, tc);
    calibrate(model, ds);
    save_model(dir / "victim", model, h, seed);
    save_graph(dir / "graph", model.graph, model.params.embeddings);

    json manifest;
    manifest["stage"] = "victim";
    manifest["config_hash"] = h;
    manifest["seed"] = seed;
    manifest["inputs"] = {{"generate", stage_hash(cfg, Stage::generate, seed)}};
    manifest["lambda"] = model.calib.lambda;
    manifest["final_train_loss"] =
        model.train_loss.empty() ? 0.0 : model.train_loss.back();
    write_manifest(dir, std::move(manifest));
}

void run_train_surrogate(const ExperimentConfig& cfg, std::uint64_t seed,
                         const fs::path& out, bool force) {
    const fs::path dir = stage_dir(out, cfg, Stage::surrogate, seed);
    if (!force && stage_done(dir)) return;
    TimeSeriesDataset ds = load_dataset_artifact(cfg, seed, out);
    const fs::path victim_dir = stage_dir(out, cfg, Stage::victim, seed);
    require_file(victim_dir / "victim.json", "train-surrogate", "train-victim");
    GdnModel victim = load_model(victim_dir / "victim");
    fs::create_directories(dir);
    const std::string h = stage_hash(cfg, Stage::surrogate, seed);

    const std::size_t target = resolve_target(cfg, ds.n_sensors());
    VictimOracle oracle(victim);
    auto val_windows = sliding_windows(ds, Split::val);
    auto test_windows = sliding_windows(ds, Split::test);
    QueryLog log = query_victim(
        oracle, {{"val", &val_windows}, {"test", &test_windows}}, target, h);
    save_query_log(dir / "queries.jsonl", log);

    // Even records fit the threshold, odd records are held out.
    std::vector<Segment> all_segments;
    for (const auto& rec : log.records) {
        const auto& pool = rec.split == "val" ? val_windows : test_windows;
        all_segments.push_back(pool[rec.window_index]);
    }
    QueryLog fit_log, holdout_log;
    fit_log.target = holdout_log.target = target;
    fit_log.victim_id = holdout_log.victim_id = h;
    std::vector<Segment> fit_segments, holdout_segments;
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        if (i % 2 == 0) {
            fit_log.records.push_back(log.records[i]);
            fit_segments.push_back(all_segments[i]);
        } else {
            holdout_log.records.push_back(log.records[i]);
            holdout_segments.push_back(all_segments[i]);
        }
    }

    SurrogateConfig sc;
    sc.hyper.n = ds.n_sensors();
    sc.hyper.d = cfg.surrogate.d;
    sc.hyper.w = cfg.model.window;
    sc.hyper.max_in = cfg.surrogate.max_in;
    sc.hyper.head_hidden = cfg.surrogate.head_hidden;
    sc.train.epochs = cfg.surrogate.epochs;
    sc.train.batch = cfg.surrogate.batch;
    sc.train.lr = cfg.surrogate.lr;
    sc.train.seed = Rng::derive(seed, 2);
    sc.use_own_graph = cfg.surrogate.use_own_graph;

    Surrogate s = train_surrogate(fit_log, fit_segments, ds, victim.graph, sc);
    const double holdout = agreement(s, holdout_log, holdout_segments);
    save_model(dir / "surrogate", s.model, h, seed);

    json meta;
    meta["target"] = s.target;
    meta["target_lambda"] = s.target_lambda;
    meta["fit_agreement"] = s.fit_agreement;
    meta["holdout_agreement"] = holdout;
    meta["threshold_from_fallback"] = s.threshold_from_fallback;
    meta["query_count"] = log.records.size();
    io::atomic_write_text(dir / "meta.json", meta.dump(2) + "\n");

    json manifest;
    manifest["stage"] = "surrogate";
    manifest["config_hash"] = h;
    manifest["seed"] = seed;
    manifest["inputs"] = {{"victim", stage_hash(cfg, Stage::victim, seed)}};
    manifest["holdout_agreement"] = holdout;
    write_manifest(dir, std::move(manifest));
}

void run_explain(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& out,
                 bool force) {
    const fs::path dir = stage_dir(out, cfg, Stage::explain, seed);
    if (!force && stage_done(dir)) return;
    TimeSeriesDataset ds = load_dataset_artifact(cfg, seed, out);
    Surrogate s = load_surrogate_artifact(cfg, seed, out);
    fs::create_directories(dir);
    const std::string h = stage_hash(cfg, Stage::explain, seed);

    auto train_windows = sliding_windows(ds, Split::train);
    ExplainerConfig ec;
    ec.proj_dim = cfg.explainer.proj_dim;
    ec.edge_hidden = cfg.explainer.edge_hidden;
    ec.tau_start = cfg.explainer.tau_start;
    ec.tau_end = cfg.explainer.tau_end;
    ec.sparsity = cfg.explainer.sparsity;
    ec.entropy_coef = cfg.explainer.entropy_coef;
    ec.iters = cfg.explainer.iters;
    ec.batch = cfg.explainer.batch;
    ec.lr = cfg.explainer.lr;
    ec.max_segments = cfg.explainer.max_segments;
    ec.seed = Rng::derive(seed, 3);

    ExplainerNet net = train_explainer(s, train_windows, s.target, ec);
    save_explainer(dir / "explainer", net, h, seed);

    // Export an explanation for the first test window as the stage artifact.
    auto test_windows = sliding_windows(ds, Split::test);
    const std::size_t budget = cfg.attack.budgets.empty() ? 5 : cfg.attack.budgets[0];
    const std::size_t top_e = cfg.attack.explainer_edges > 0
                                  ? cfg.attack.explainer_edges
                                  : std::max<std::size_t>(1, budget - 1);
    ExplanationResult res = explain_segment(net, s, test_windows.front(), top_e);
    json expl;
    expl["config_hash"] = h;
    expl["seed"] = seed;
    expl["target"] = s.target;
    expl["window_t"] = test_windows.front().target_time;
    json ranked = json::array();
    for (std::size_t idx : res.top_edges)
        ranked.push_back({{"src", s.model.graph.edges[idx].first},
                          {"dst", s.model.graph.edges[idx].second},
                          {"mask", res.edge_mask[idx]}});
    expl["top_edges"] = std::move(ranked);
    expl["candidates"] = res.candidates;
    expl["fidelity"] = res.fidelity;
    io::atomic_write_text(dir / "explanation.json", expl.dump(2) + "\n");

    json manifest;
    manifest["stage"] = "explain";
    manifest["config_hash"] = h;
    manifest["seed"] = seed;
    manifest["inputs"] = {{"surrogate", stage_hash(cfg, Stage::surrogate, seed)}};
    write_manifest(dir, std::move(manifest));
}

namespace {

struct WindowOutcome {
    std::size_t t = 0;
    bool truth = false;
    bool success = false;
    double delta_linf = 0.0;
    std::size_t changed_rows = 0;
    double best_loss = 0.0;
    std::size_t best_restart = 0;
    std::vector<std::size_t> influencers;
    std::vector<double> post_scores;
    std::vector<std::vector<double>> traces;  // kept for the first few windows
};

}  // namespace

void run_attack_stage(const ExperimentConfig& cfg, std::uint64_t seed,
                      const fs::path& out, bool force) {
    const fs::path dir = stage_dir(out, cfg, Stage::attack, seed);
    if (!force && stage_done(dir)) return;
    TimeSeriesDataset ds = load_dataset_artifact(cfg, seed, out);
    const fs::path victim_dir = stage_dir(out, cfg, Stage::victim, seed);
    require_file(victim_dir / "victim.json", "attack", "train-victim");
    GdnModel victim = load_model(victim_dir / "victim");
    Surrogate surrogate = load_surrogate_artifact(cfg, seed, out);
    const fs::path explain_dir = stage_dir(out, cfg, Stage::explain, seed);
    require_file(explain_dir / "explainer.json", "attack", "explain");
    ExplainerNet net = load_explainer(explain_dir / "explainer");
    fs::create_directories(dir);
    const std::string h = stage_hash(cfg, Stage::attack, seed);

    const std::size_t target = resolve_target(cfg, ds.n_sensors());
    auto test_windows = sliding_windows(ds, Split::test);
    std::vector<std::size_t> widx(test_windows.size());
    std::iota(widx.begin(), widx.end(), 0);
    if (cfg.attack.max_windows > 0 && widx.size() > cfg.attack.max_windows) {
        std::vector<std::size_t> picked;
        const double step = static_cast<double>(widx.size()) /
                            static_cast<double>(cfg.attack.max_windows);
        for (std::size_t k = 0; k < cfg.attack.max_windows; ++k)
            picked.push_back(widx[static_cast<std::size_t>(k * step)]);
        widx = std::move(picked);
    }

    VictimOracle oracle(victim);
    AttackContext ctx;
    ctx.surrogate = &surrogate;
    ctx.victim = &oracle;
    ctx.graph = &victim.graph;  // grey-box: attacker knows A
    ctx.explainer = &net;
    fill_feature_bounds(ctx, ds);

    json results;
    results["stage"] = "attack";
    results["config_hash"] = h;
    results["seed"] = seed;
    results["dataset"] = dataset_name(cfg);
    results["target"] = target;
    results["lambda"] = victim.calib.lambda;
    json windows_meta = json::array();
    for (std::size_t k : widx) {
        const Segment& seg = test_windows[k];
        json wm;
        wm["t"] = seg.target_time;
        wm["truth"] = seg.labels_at_t[target] != 0;
        json pres = json::array();
        const auto pre = anomaly_scores(victim, seg.features, seg.target);
        for (double v : pre) pres.push_back(v);
        wm["pre_scores"] = std::move(pres);
        windows_meta.push_back(std::move(wm));
    }
    results["windows"] = std::move(windows_meta);

    json combos = json::array();
    std::size_t combo_idx = 0;
    for (const std::string& tag : cfg.attack.strategies) {
        AttackSpec base;
        base.epsilon = cfg.attack.epsilon;
        base.alpha = cfg.attack.alpha;
        base.iters = cfg.attack.iters;
        base.restarts = cfg.attack.restarts;
        base.target = target;
        base.explainer_edges = cfg.attack.explainer_edges;
        base.nettack_edits = cfg.attack.nettack_edits;
        base.early_stop = cfg.attack.early_stop;

        AttackSpec tagged = apply_strategy(base, tag, ds.n_sensors());
        const bool uses_centrality =
            tagged.selection == SelectionStrategy::gaf_centrality ||
            tagged.selection == SelectionStrategy::centrality_only;
        const bool unbudgeted = tagged.selection == SelectionStrategy::all_nodes;
        std::vector<std::size_t> budgets =
            unbudgeted ? std::vector<std::size_t>{ds.n_sensors() - 1}
                       : cfg.attack.budgets;
        std::vector<std::string> measures =
            uses_centrality ? cfg.attack.centrality_measures
                            : std::vector<std::string>{"eigenvector"};

        for (std::size_t budget : budgets) {
            for (const std::string& measure : measures) {
                AttackSpec spec = tagged;
                if (!unbudgeted) spec.budget = budget;
                spec.centrality_measure = centrality_from_string(measure);
                spec.seed = Rng::derive(seed, 100000 + combo_idx);
                spec.validate(ds.n_sensors());

                std::vector<WindowOutcome> outcomes(widx.size());
                parallel_for(widx.size(), cfg.run.threads, [&](std::size_t i) {
                    const Segment& seg = test_windows[widx[i]];
                    const bool truth = seg.labels_at_t[target] != 0;
                    AttackResult r = run_attack(ctx, seg, truth, spec);
                    WindowOutcome& o = outcomes[i];
                    o.t = seg.target_time;
                    o.truth = truth;
                    o.success = r.success;
                    o.delta_linf = r.delta_linf;
                    o.changed_rows = r.changed_rows;
                    o.best_loss = r.best_loss;
                    o.best_restart = r.best_restart;
                    o.influencers = r.influencers;
                    o.post_scores = anomaly_scores(victim, r.perturbed, seg.target);
                    if (i < cfg.attack.trace_windows) o.traces = r.restart_traces;
                    if (cfg.attack.export_segments && i == 0) {
                        std::string csv = "step";
                        for (const auto& sid : ds.sensor_ids)
                            csv += ",orig_" + sid + ",pert_" + sid;
                        csv += "\n";
                        const std::size_t w = seg.features.cols();
                        for (std::size_t stp = 0; stp < w; ++stp) {
                            csv += std::to_string(stp);
                            for (std::size_t sn = 0; sn < ds.n_sensors(); ++sn) {
                                csv += "," + fmt_double(seg.features.at(sn, stp));
                                csv += "," + fmt_double(r.perturbed.at(sn, stp));
                            }
                            csv += "\n";
                        }
                        io::atomic_write_text(dir / ("segment-" + tag + "-b" +
                                                     std::to_string(spec.budget) +
                                                     ".csv"),
                                              csv);
                    }
                });

                json combo;
                combo["strategy"] = tag;
                combo["budget"] = spec.budget;
                combo["centrality"] = measure;
                combo["epsilon"] = spec.epsilon;
                combo["alpha"] = spec.alpha;
                combo["iters"] = spec.iters;
                combo["restarts"] = spec.restarts;
                combo["attack_seed"] = spec.seed;
                json wjs = json::array();
                for (const auto& o : outcomes) {
                    json wj;
                    wj["t"] = o.t;
                    wj["truth"] = o.truth;
                    wj["success"] = o.success;
                    wj["delta_linf"] = o.delta_linf;
                    wj["changed_rows"] = o.changed_rows;
                    wj["best_loss"] = o.best_loss;
                    wj["best_restart"] = o.best_restart;
                    wj["influencers"] = o.influencers;
                    wj["post_scores"] = o.post_scores;
                    if (!o.traces.empty()) wj["restart_traces"] = o.traces;
                    wjs.push_back(std::move(wj));
                }
                combo["windows"] = std::move(wjs);
                combos.push_back(std::move(combo));
                ++combo_idx;
            }
        }
    }
    results["combos"] = std::move(combos);
    io::atomic_write_text(dir / "results.json", results.dump() + "\n");

    json manifest;
    manifest["stage"] = "attack";
    manifest["config_hash"] = h;
    manifest["seed"] = seed;
    manifest["inputs"] = {{"victim", stage_hash(cfg, Stage::victim, seed)},
                          {"surrogate", stage_hash(cfg, Stage::surrogate, seed)},
                          {"explain", stage_hash(cfg, Stage::explain, seed)}};
    manifest["n_windows"] = widx.size();
    write_manifest(dir, std::move(manifest));
}

void run_evaluate(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& out,
                  bool force) {
    const fs::path dir = stage_dir(out, cfg, Stage::evaluate, seed);
    if (!force && stage_done(dir)) return;
    TimeSeriesDataset ds = load_dataset_artifact(cfg, seed, out);
    const fs::path attack_dir = stage_dir(out, cfg, Stage::attack, seed);
    require_file(attack_dir / "results.json", "evaluate", "attack");
    const json results = json::parse(io::read_text_file(attack_dir / "results.json"));
    fs::create_directories(dir);
    const std::string h = stage_hash(cfg, Stage::evaluate, seed);

    const double lambda = results.at("lambda").get<double>();
    const std::size_t target = results.at("target").get<std::size_t>();
    const std::string dname = results.at("dataset").get<std::string>();
    const std::size_t n = ds.n_sensors();

    // Ground-truth labels per evaluated window.
    const json& wins = results.at("windows");
    std::vector<std::size_t> times;
    std::vector<std::vector<double>> pre_scores;
    for (const auto& w : wins) {
        times.push_back(w.at("t").get<std::size_t>());
        pre_scores.push_back(w.at("pre_scores").get<std::vector<double>>());
    }

    auto row_metrics = [&](const std::vector<std::vector<double>>& score_rows) {
        std::vector<bool> target_dec, target_truth;
        std::vector<bool> all_dec, all_truth;
        std::vector<double> all_scores;
        for (std::size_t k = 0; k < times.size(); ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                const bool truth = ds.label_at(times[k], i);
                const bool dec = score_rows[k][i] > lambda;
                all_dec.push_back(dec);
                all_truth.push_back(truth);
                all_scores.push_back(score_rows[k][i]);
                if (i == target) {
                    target_dec.push_back(dec);
                    target_truth.push_back(truth);
                }
            }
        }
        ConfusionCounts counts;
        for (std::size_t i = 0; i < all_dec.size(); ++i)
            counts.add(all_dec[i], all_truth[i]);
        std::string auc = "";
        try {
            auc = fmt_double(auc_pr(all_scores, all_truth));
        } catch (const metric_error&) {
            auc = "";  // undefined without positives
        }
        return std::make_tuple(fta(target_dec, target_truth), f1(counts), auc);
    };

    std::string csv =
        "strategy,budget,centrality,dataset,seed,target,lambda,fta,f1,auc_pr,"
        "config_hash\n";
    auto add_row = [&](const std::string& strategy, std::size_t budget,
                       const std::string& centrality_name, double fta_v, double f1_v,
                       const std::string& auc_v) {
        csv += strategy + "," + std::to_string(budget) + "," + centrality_name + "," +
               dname + "," + std::to_string(seed) + "," + std::to_string(target) +
               "," + fmt_double(lambda) + "," + fmt_double(fta_v) + "," +
               fmt_double(f1_v) + "," + auc_v + "," + h + "\n";
    };

    {
        auto [fta_v, f1_v, auc_v] = row_metrics(pre_scores);
        add_row("none", 0, "", fta_v, f1_v, auc_v);
    }
    for (const auto& combo : results.at("combos")) {
        std::vector<std::vector<double>> post;
        for (const auto& w : combo.at("windows"))
            post.push_back(w.at("post_scores").get<std::vector<double>>());
        auto [fta_v, f1_v, auc_v] = row_metrics(post);
        add_row(combo.at("strategy").get<std::string>(),
                combo.at("budget").get<std::size_t>(),
                combo.at("centrality").get<std::string>(), fta_v, f1_v, auc_v);
    }
    io::atomic_write_text(dir / "metrics.csv", csv);

    json manifest;
    manifest["stage"] = "evaluate";
    manifest["config_hash"] = h;
    manifest["seed"] = seed;
    manifest["inputs"] = {{"attack", stage_hash(cfg, Stage::attack, seed)}};
    write_manifest(dir, std::move(manifest));
}

void run_report(const ExperimentConfig& cfg, const fs::path& out, bool force) {
    const fs::path dir = out / ("report-" + stage_hash(cfg, Stage::report, 0));
    if (!force && stage_done(dir)) return;

    struct Key {
        std::string strategy;
        std::size_t budget;
        std::string centrality;
        bool operator<(const Key& o) const {
            if (strategy != o.strategy) return strategy < o.strategy;
            if (budget != o.budget) return budget < o.budget;
            return centrality < o.centrality;
        }
    };
    struct Acc {
        std::vector<double> fta, f1, auc;
    };
    std::map<Key, Acc> table;
    std::string dname;

    for (std::uint64_t seed : cfg.run.seeds) {
        const fs::path edir = stage_dir(out, cfg, Stage::evaluate, seed);
        require_file(edir / "metrics.csv", "report", "evaluate");
        std::istringstream in(io::read_text_file(edir / "metrics.csv"));
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::string cur;
            for (char c : line) {
                if (c == ',') {
                    cells.push_back(cur);
                    cur.clear();
                } else {
                    cur.push_back(c);
                }
            }
            cells.push_back(cur);
            if (cells.size() != 11) throw parse_error("bad metrics.csv row");
            Key key{cells[0], std::stoul(cells[1]), cells[2]};
            Acc& acc = table[key];
            dname = cells[3];
            acc.fta.push_back(std::stod(cells[7]));
            acc.f1.push_back(std::stod(cells[8]));
            if (!cells[9].empty()) acc.auc.push_back(std::stod(cells[9]));
        }
    }
    fs::create_directories(dir);
    const std::string h = stage_hash(cfg, Stage::report, 0);

    auto mean_std = [](const std::vector<double>& v) {
        if (v.empty()) return std::make_pair(0.0, 0.0);
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s2 = 0.0;
        for (double x : v) s2 += (x - m) * (x - m);
        const double sd = v.size() > 1
                              ? std::sqrt(s2 / static_cast<double>(v.size() - 1))
                              : 0.0;
        return std::make_pair(m, sd);
    };

    std::string csv = "strategy,budget,centrality,metric,mean,std,n,config_hash\n";
    json plot;
    plot["config_hash"] = h;
    plot["dataset"] = dname;
    plot["seeds"] = cfg.run.seeds;
    json fta_vs_budget = json::object();
    json strategy_table = json::array();
    for (const auto& [key, acc] : table) {
        const auto [fta_m, fta_s] = mean_std(acc.fta);
        const auto [f1_m, f1_s] = mean_std(acc.f1);
        const auto [auc_m, auc_s] = mean_std(acc.auc);
        auto row = [&](const char* metric, double m, double s, std::size_t cnt) {
            csv += key.strategy + "," + std::to_string(key.budget) + "," +
                   key.centrality + "," + metric + "," + fmt_double(m) + "," +
                   fmt_double(s) + "," + std::to_string(cnt) + "," + h + "\n";
        };
        row("fta", fta_m, fta_s, acc.fta.size());
        row("f1", f1_m, f1_s, acc.f1.size());
        if (!acc.auc.empty()) row("auc_pr", auc_m, auc_s, acc.auc.size());

        json entry = {{"strategy", key.strategy}, {"budget", key.budget},
                      {"centrality", key.centrality}, {"fta_mean", fta_m},
                      {"fta_std", fta_s},           {"f1_mean", f1_m},
                      {"f1_std", f1_s},             {"n_seeds", acc.fta.size()}};
        if (!acc.auc.empty()) {
            entry["auc_pr_mean"] = auc_m;
            entry["auc_pr_std"] = auc_s;
        }
        strategy_table.push_back(entry);
        if (key.strategy != "none") {
            json& arr = fta_vs_budget[key.strategy];
            if (arr.is_null()) arr = json::array();
            arr.push_back({{"budget", key.budget}, {"centrality", key.centrality},
                           {"mean", fta_m}, {"std", fta_s}});
        }
    }
    plot["fta_vs_budget"] = std::move(fta_vs_budget);
    plot["strategy_table"] = std::move(strategy_table);
    io::atomic_write_text(dir / "report.csv", csv);
    io::atomic_write_text(dir / "plot_data.json", plot.dump(2) + "\n");

    json manifest;
    manifest["stage"] = "report";
    manifest["config_hash"] = h;
    manifest["seed"] = 0;
    json inputs = json::object();
    for (std::uint64_t seed : cfg.run.seeds)
        inputs["evaluate-" + std::to_string(seed)] =
            stage_hash(cfg, Stage::evaluate, seed);
    manifest["inputs"] = std::move(inputs);
    write_manifest(dir, std::move(manifest));
}

void run_pipeline_for_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                           const fs::path& out, bool force) {
    run_generate(cfg, seed, out, force);
    run_train_victim(cfg, seed, out, force);
    run_train_surrogate(cfg, seed, out, force);
    run_explain(cfg, seed, out, force);
    run_attack_stage(cfg, seed, out, force);
    run_evaluate(cfg, seed, out, force);
}

}  // namespace beta
