#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "beta/tensor.hpp"

namespace beta {

enum class Split { train, val, test };
const char* to_string(Split s);

struct SplitRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    std::size_t size() const { return end - begin; }
};

struct InjectionRecord {
    std::size_t sensor;
    std::size_t start;
    std::size_t length;
};

// Multivariate series in time-major layout (step t, sensor i -> t*N + i).
// Raw values are in sensor units; `normalized` is filled by
// min_max_normalize() using train-split statistics only.
struct TimeSeriesDataset {
    std::vector<std::string> sensor_ids;
    std::vector<double> raw;
    std::vector<double> normalized;
    std::vector<std::uint8_t> labels;
    SplitRange train_range, val_range, test_range;
    std::size_t window = 100;
    std::size_t stride = 10;
    std::vector<double> norm_min, norm_max;  // per sensor, train split
    bool clip_normalized = false;
    bool normalized_ready = false;
    std::vector<InjectionRecord> injections;
    // Planted dependency edges (parent -> child) from synthesis; diagnostics
    // only, never visible to models.
    std::vector<std::pair<std::size_t, std::size_t>> planted_edges;

    std::size_t n_sensors() const { return sensor_ids.size(); }
    std::size_t n_steps() const {
        return sensor_ids.empty() ? 0 : raw.size() / sensor_ids.size();
    }
    double raw_at(std::size_t t, std::size_t i) const {
        return raw[t * n_sensors() + i];
    }
    double norm_at(std::size_t t, std::size_t i) const {
        return normalized[t * n_sensors() + i];
    }
    bool label_at(std::size_t t, std::size_t i) const {
        return labels[t * n_sensors() + i] != 0;
    }
    const SplitRange& split_range(Split s) const;

    // Inverse of min-max normalization for one sensor.
    double denormalize(std::size_t sensor, double value) const;
};

struct CsvSchema {
    std::string timestamp_column = "timestamp";
    bool forward_fill_missing = false;  // otherwise missing cells are rejected
};

// Reads timestamp + one numeric column per sensor + optional label_<sensor>
// boolean columns. '#'-prefixed lines are comments. Rows must be strictly
// increasing in time; ragged rows, duplicate timestamps and non-numeric cells
// raise parse_error naming the line.
TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

void write_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path,
               const std::string& header_comment);

// Time-ordered disjoint train/val/test split by fractions.
void assign_splits(TimeSeriesDataset& ds, double train_frac, double val_frac);

// x' = (x - min_train) / (max_train - min_train) per sensor, statistics from
// the train split only and applied everywhere. Constant train sensors raise
// numeric_error naming the sensor. Values outside [0,1] on val/test are kept
// unless ds.clip_normalized is set.
void min_max_normalize(TimeSeriesDataset& ds);

// One forecasting instance: features are steps t-w .. t-1 for all sensors,
// the target step is t.
struct Segment {
    Tensor features;  // N x w, normalized units
    std::size_t target_time = 0;
    std::vector<double> target;             // x^{(t)}, length N
    std::vector<std::uint8_t> labels_at_t;  // length N
};

// Segments at t = begin+w, begin+w+stride, ... while the target step stays
// inside the split; requires split length > window.
std::vector<Segment> sliding_windows(const TimeSeriesDataset& ds, Split split);
std::size_t sliding_window_count(std::size_t split_len, std::size_t window,
                                 std::size_t stride);

struct SynthesisConfig {
    std::size_t n_sensors = 12;
    std::size_t n_steps = 10000;
    double coupling = 0.7;  // in [0,1]
    double meas_noise = 1.0;  // scale on per-reading observation noise
    std::uint64_t seed = 0;
    // When > 0, the last `decoy_cluster` nodes form a densely inter-coupled
    // group that is decoupled from the rest (used by planted-dependency
    // experiments to create high-centrality nodes irrelevant to a target).
    std::size_t decoy_cluster = 0;
};

// Correlated sinusoid + AR(1) sensors over a planted parent DAG; every
// non-root mixes 2-3 parents. Deterministic in the seed.
TimeSeriesDataset synthesize_network(const SynthesisConfig& cfg);

struct InjectionConfig {
    double zeta = 10.0;       // burst noise stddev, raw units
    double lambda_var = 7.0;  // Poisson mean burst length (0 is resampled)
    double rate = 0.002;      // burst starts per sensor-step
    std::uint64_t seed = 0;
};

// Adds labeled Gaussian noise bursts to the raw test-split values. Must run
// before normalization; any other split raises policy_error.
void inject_anomalies(TimeSeriesDataset& ds, Split split, const InjectionConfig& cfg);

}  // namespace beta
