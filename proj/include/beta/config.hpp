#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beta/data.hpp"
#include "beta/detector.hpp"
#include "beta/explainer.hpp"

namespace beta {

struct DatasetSection {
    std::string source = "synthetic";  // "synthetic" | "csv"
    std::string csv_path;
    std::string timestamp_column = "timestamp";
    bool forward_fill_missing = false;
    SynthesisConfig synthetic;  // seed filled per run
    InjectionConfig injection;
    double train_frac = 0.7;
    double val_frac = 0.1;
    bool clip_normalized = false;
};

struct ModelSection {
    std::size_t d = 16;
    std::size_t max_in = 5;
    std::size_t window = 100;
    std::size_t stride = 10;
    std::vector<std::size_t> head_hidden = {64};
    double leaky_slope = 0.2;
    std::size_t epochs = 30;
    std::size_t batch = 32;
    double lr = 1e-3;
    MultiScaleConfig multiscale;
};

struct SurrogateSection {
    std::size_t d = 8;
    std::size_t max_in = 5;
    std::vector<std::size_t> head_hidden = {32};
    std::size_t epochs = 30;
    std::size_t batch = 32;
    double lr = 1e-3;
    bool use_own_graph = false;  // default: victim graph injected (grey-box)
};

struct ExplainerSection {
    std::size_t proj_dim = 16;
    std::size_t edge_hidden = 16;
    double tau_start = 0.5;
    double tau_end = 0.1;
    double sparsity = 0.005;
    double entropy_coef = 0.01;
    std::size_t iters = 150;
    std::size_t batch = 8;
    double lr = 0.01;
    std::size_t max_segments = 64;
};

struct AttackSection {
    long target = -1;  // -1 means last sensor
    double epsilon = 0.1;
    double alpha = 0.01;
    std::size_t iters = 10;
    std::size_t restarts = 5;
    std::vector<std::string> strategies = {"beta", "nettack_gaf", "nettack", "random"};
    std::vector<std::size_t> budgets = {5};
    std::vector<std::string> centrality_measures = {"eigenvector"};
    std::size_t explainer_edges = 0;  // 0 -> budget-1
    std::size_t nettack_edits = 0;    // 0 -> budget*w/10
    bool early_stop = false;
    std::size_t max_windows = 0;   // 0 -> all test windows
    std::size_t trace_windows = 3; // full traces kept for this many windows
    bool export_segments = false;
};

struct RunSection {
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::string out_dir = "runs";
    std::size_t threads = 0;  // 0 -> hardware
};

struct ExperimentConfig {
    DatasetSection dataset;
    ModelSection model;
    SurrogateSection surrogate;
    ExplainerSection explainer;
    AttackSection attack;
    RunSection run;

    // Fully materialized (defaults included) canonical JSON; stable across
    // reruns, used for stage hashing.
    nlohmann::json canonical() const;
};

// Strict parse: unknown keys raise config_error with their dotted path.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace beta
