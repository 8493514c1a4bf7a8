#include "beta/config.hpp"

#include <set>

#include "beta/errors.hpp"
#include "beta/io.hpp"

namespace beta {

using json = nlohmann::json;

namespace {

// Strict object reader: every key must be consumed exactly once.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object())
            throw config_error("config: " + path_ + " must be an object");
    }
    ~Section() = default;

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw config_error("config: bad value type at " + path_ + "." + key);
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key()))
                throw config_error("config: unknown key " + path_ + "." + it.key());
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void parse_dataset(const json& j, DatasetSection& out) {
    Section s(j, "dataset");
    s.get("source", out.source);
    s.get("csv_path", out.csv_path);
    s.get("timestamp_column", out.timestamp_column);
    s.get("forward_fill_missing", out.forward_fill_missing);
    if (const json* syn = s.child("synthetic")) {
        Section ss(*syn, "dataset.synthetic");
        ss.get("n_sensors", out.synthetic.n_sensors);
        ss.get("n_steps", out.synthetic.n_steps);
        ss.get("coupling", out.synthetic.coupling);
        ss.get("decoy_cluster", out.synthetic.decoy_cluster);
        ss.finish();
    }
    if (const json* inj = s.child("injection")) {
        Section si(*inj, "dataset.injection");
        si.get("zeta", out.injection.zeta);
        si.get("lambda_var", out.injection.lambda_var);
        si.get("rate", out.injection.rate);
        si.finish();
    }
    s.get("train_frac", out.train_frac);
    s.get("val_frac", out.val_frac);
    s.get("clip_normalized", out.clip_normalized);
    s.finish();
    if (out.source != "synthetic" && out.source != "csv")
        throw config_error("config: dataset.source must be 'synthetic' or 'csv'");
    if (out.source == "csv" && out.csv_path.empty())
        throw config_error("config: dataset.csv_path required for csv source");
}

void parse_model(const json& j, ModelSection& out) {
    Section s(j, "model");
    s.get("d", out.d);
    s.get("max_in", out.max_in);
    s.get("window", out.window);
    s.get("stride", out.stride);
    s.get("head_hidden", out.head_hidden);
    s.get("leaky_slope", out.leaky_slope);
    s.get("epochs", out.epochs);
    s.get("batch", out.batch);
    s.get("lr", out.lr);
    if (const json* ms = s.child("multiscale")) {
        Section sm(*ms, "model.multiscale");
        sm.get("enabled", out.multiscale.enabled);
        sm.get("kernel_sizes", out.multiscale.kernel_sizes);
        std::string pool = out.multiscale.pool == MultiScaleConfig::Pool::max ? "max"
                                                                              : "avg";
        sm.get("pool", pool);
        if (pool != "max" && pool != "avg")
            throw config_error("config: model.multiscale.pool must be max|avg");
        out.multiscale.pool = pool == "max" ? MultiScaleConfig::Pool::max
                                            : MultiScaleConfig::Pool::avg;
        sm.finish();
    }
    s.finish();
}

void parse_surrogate(const json& j, SurrogateSection& out) {
    Section s(j, "surrogate");
    s.get("d", out.d);
    s.get("max_in", out.max_in);
    s.get("head_hidden", out.head_hidden);
    s.get("epochs", out.epochs);
    s.get("batch", out.batch);
    s.get("lr", out.lr);
    s.get("use_own_graph", out.use_own_graph);
    s.finish();
}

void parse_explainer(const json& j, ExplainerSection& out) {
    Section s(j, "explainer");
    s.get("proj_dim", out.proj_dim);
    s.get("edge_hidden", out.edge_hidden);
    s.get("tau_start", out.tau_start);
    s.get("tau_end", out.tau_end);
    s.get("sparsity", out.sparsity);
    s.get("entropy_coef", out.entropy_coef);
    s.get("iters", out.iters);
    s.get("batch", out.batch);
    s.get("lr", out.lr);
    s.get("max_segments", out.max_segments);
    s.finish();
}

void parse_attack(const json& j, AttackSection& out) {
    Section s(j, "attack");
    s.get("target", out.target);
    s.get("epsilon", out.epsilon);
    s.get("alpha", out.alpha);
    s.get("iters", out.iters);
    s.get("restarts", out.restarts);
    s.get("strategies", out.strategies);
    s.get("budgets", out.budgets);
    s.get("centrality_measures", out.centrality_measures);
    s.get("explainer_edges", out.explainer_edges);
    s.get("nettack_edits", out.nettack_edits);
    s.get("early_stop", out.early_stop);
    s.get("max_windows", out.max_windows);
    s.get("trace_windows", out.trace_windows);
    s.get("export_segments", out.export_segments);
    s.finish();
    for (const auto& m : out.centrality_measures) centrality_from_string(m);
}

void parse_run(const json& j, RunSection& out) {
    Section s(j, "run");
    s.get("seeds", out.seeds);
    s.get("out_dir", out.out_dir);
    s.get("threads", out.threads);
    s.finish();
    if (out.seeds.empty()) throw config_error("config: run.seeds must not be empty");
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw config_error("config: top level must be an object");
    ExperimentConfig cfg;
    static const std::set<std::string> known = {"dataset", "model",  "surrogate",
                                                "explainer", "attack", "run"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw config_error("config: unknown section '" + it.key() + "'");
    if (j.contains("dataset")) parse_dataset(j.at("dataset"), cfg.dataset);
    if (j.contains("model")) parse_model(j.at("model"), cfg.model);
    if (j.contains("surrogate")) parse_surrogate(j.at("surrogate"), cfg.surrogate);
    if (j.contains("explainer")) parse_explainer(j.at("explainer"), cfg.explainer);
    if (j.contains("attack")) parse_attack(j.at("attack"), cfg.attack);
    if (j.contains("run")) parse_run(j.at("run"), cfg.run);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(io::read_text_file(path));
    } catch (const json::exception& e) {
        throw config_error("config: cannot parse " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

json ExperimentConfig::canonical() const {
    json j;
    j["dataset"] = {{"source", dataset.source},
                    {"csv_path", dataset.csv_path},
                    {"timestamp_column", dataset.timestamp_column},
                    {"forward_fill_missing", dataset.forward_fill_missing},
                    {"synthetic",
                     {{"n_sensors", dataset.synthetic.n_sensors},
                      {"n_steps", dataset.synthetic.n_steps},
                      {"coupling", dataset.synthetic.coupling},
                      {"decoy_cluster", dataset.synthetic.decoy_cluster}}},
                    {"injection",
                     {{"zeta", dataset.injection.zeta},
                      {"lambda_var", dataset.injection.lambda_var},
                      {"rate", dataset.injection.rate}}},
                    {"train_frac", dataset.train_frac},
                    {"val_frac", dataset.val_frac},
                    {"clip_normalized", dataset.clip_normalized}};
    j["model"] = {{"d", model.d},
                  {"max_in", model.max_in},
                  {"window", model.window},
                  {"stride", model.stride},
                  {"head_hidden", model.head_hidden},
                  {"leaky_slope", model.leaky_slope},
                  {"epochs", model.epochs},
                  {"batch", model.batch},
                  {"lr", model.lr},
                  {"multiscale",
                   {{"enabled", model.multiscale.enabled},
                    {"kernel_sizes", model.multiscale.kernel_sizes},
                    {"pool", model.multiscale.pool == MultiScaleConfig::Pool::max
                                 ? "max"
                                 : "avg"}}}};
    j["surrogate"] = {{"d", surrogate.d},
                      {"max_in", surrogate.max_in},
                      {"head_hidden", surrogate.head_hidden},
                      {"epochs", surrogate.epochs},
                      {"batch", surrogate.batch},
                      {"lr", surrogate.lr},
                      {"use_own_graph", surrogate.use_own_graph}};
    j["explainer"] = {{"proj_dim", explainer.proj_dim},
                      {"edge_hidden", explainer.edge_hidden},
                      {"tau_start", explainer.tau_start},
                      {"tau_end", explainer.tau_end},
                      {"sparsity", explainer.sparsity},
                      {"entropy_coef", explainer.entropy_coef},
                      {"iters", explainer.iters},
                      {"batch", explainer.batch},
                      {"lr", explainer.lr},
                      {"max_segments", explainer.max_segments}};
    j["attack"] = {{"target", attack.target},
                   {"epsilon", attack.epsilon},
                   {"alpha", attack.alpha},
                   {"iters", attack.iters},
                   {"restarts", attack.restarts},
                   {"strategies", attack.strategies},
                   {"budgets", attack.budgets},
                   {"centrality_measures", attack.centrality_measures},
                   {"explainer_edges", attack.explainer_edges},
                   {"nettack_edits", attack.nettack_edits},
                   {"early_stop", attack.early_stop},
                   {"max_windows", attack.max_windows},
                   {"trace_windows", attack.trace_windows},
                   {"export_segments", attack.export_segments}};
    j["run"] = {{"seeds", run.seeds},
                {"out_dir", run.out_dir},
                {"threads", run.threads}};
    return j;
}

}  // namespace beta
