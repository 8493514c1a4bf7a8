#include "beta/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "beta/errors.hpp"
#include "beta/io.hpp"
#include "beta/rng.hpp"

namespace beta {

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

const SplitRange& TimeSeriesDataset::split_range(Split s) const {
    switch (s) {
        case Split::train: return train_range;
        case Split::val: return val_range;
        default: return test_range;
    }
}

double TimeSeriesDataset::denormalize(std::size_t sensor, double value) const {
    if (!normalized_ready) throw state_error("dataset is not normalized");
    return value * (norm_max[sensor] - norm_min[sensor]) + norm_min[sensor];
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e;
}

bool parse_bool(const std::string& s, bool& out) {
    if (s == "0" || s == "false") {
        out = false;
        return true;
    }
    if (s == "1" || s == "true") {
        out = true;
        return true;
    }
    return false;
}

}  // namespace

TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    const std::string text = io::read_text_file(path);
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;

    // Header (first non-comment line).
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        header = split_line(line);
        break;
    }
    if (header.empty()) throw parse_error(path.string() + ": missing header");

    std::size_t ts_col = header.size();
    std::vector<std::size_t> sensor_cols;
    std::vector<std::string> sensor_names;
    std::vector<std::pair<std::string, std::size_t>> label_cols;  // sensor name -> col
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name == schema.timestamp_column) {
            ts_col = c;
        } else if (name.rfind("label_", 0) == 0) {
            label_cols.emplace_back(name.substr(6), c);
        } else {
            sensor_cols.push_back(c);
            sensor_names.push_back(name);
        }
    }
    if (ts_col == header.size())
        throw parse_error(path.string() + ": no timestamp column '" +
                          schema.timestamp_column + "'");
    if (sensor_names.empty()) throw parse_error(path.string() + ": no sensor columns");

    std::vector<std::size_t> label_for_sensor(sensor_names.size(), header.size());
    for (const auto& [sname, col] : label_cols) {
        auto it = std::find(sensor_names.begin(), sensor_names.end(), sname);
        if (it == sensor_names.end())
            throw parse_error(path.string() + ": label column for unknown sensor '" +
                              sname + "'");
        label_for_sensor[static_cast<std::size_t>(it - sensor_names.begin())] = col;
    }

    TimeSeriesDataset ds;
    ds.sensor_ids = sensor_names;
    const std::size_t n = sensor_names.size();
    double prev_ts = 0.0;
    bool have_prev = false;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw parse_error(path.string() + ":" + std::to_string(lineno) +
                              ": expected " + std::to_string(header.size()) +
                              " cells, got " + std::to_string(cells.size()));
        double ts;
        if (!parse_double(cells[ts_col], ts))
            throw parse_error(path.string() + ":" + std::to_string(lineno) +
                              ": non-numeric timestamp '" + cells[ts_col] + "'");
        if (have_prev) {
            if (ts == prev_ts)
                throw parse_error(path.string() + ":" + std::to_string(lineno) +
                                  ": duplicate timestamp");
            if (ts < prev_ts)
                throw parse_error(path.string() + ":" + std::to_string(lineno) +
                                  ": timestamps not sorted");
        }
        prev_ts = ts;
        have_prev = true;

        const std::size_t t = ds.raw.size() / n;
        for (std::size_t k = 0; k < n; ++k) {
            const std::string& cell = cells[sensor_cols[k]];
            double v;
            if (cell.empty()) {
                if (!schema.forward_fill_missing || t == 0)
                    throw parse_error(path.string() + ":" + std::to_string(lineno) +
                                      ": missing value in column '" + sensor_names[k] +
                                      "'");
                v = ds.raw[(t - 1) * n + k];
            } else if (!parse_double(cell, v)) {
                throw parse_error(path.string() + ":" + std::to_string(lineno) +
                                  ": non-numeric cell in column '" + sensor_names[k] +
                                  "'");
            }
            ds.raw.push_back(v);
            bool lab = false;
            if (label_for_sensor[k] < header.size()) {
                const std::string& lc = cells[label_for_sensor[k]];
                if (!parse_bool(lc, lab))
                    throw parse_error(path.string() + ":" + std::to_string(lineno) +
                                      ": bad boolean in column 'label_" +
                                      sensor_names[k] + "'");
            }
            ds.labels.push_back(lab ? 1 : 0);
        }
    }
    if (ds.raw.empty()) throw parse_error(path.string() + ": no data rows");
    return ds;
}

void write_csv(const TimeSeriesDataset& ds, const std::filesystem::path& path,
               const std::string& header_comment) {
    std::string out;
    out.reserve(ds.raw.size() * 20);
    if (!header_comment.empty()) out += "# " + header_comment + "\n";
    out += "timestamp";
    for (const auto& s : ds.sensor_ids) out += "," + s;
    for (const auto& s : ds.sensor_ids) out += ",label_" + s;
    out += "\n";
    const std::size_t n = ds.n_sensors();
    char buf[32];
    for (std::size_t t = 0; t < ds.n_steps(); ++t) {
        out += std::to_string(t);
        for (std::size_t i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.raw_at(t, i));
            out += ',';
            out += buf;
        }
        for (std::size_t i = 0; i < n; ++i) out += ds.label_at(t, i) ? ",1" : ",0";
        out += "\n";
    }
    io::atomic_write_text(path, out);
}

void assign_splits(TimeSeriesDataset& ds, double train_frac, double val_frac) {
    if (train_frac <= 0.0 || val_frac < 0.0 || train_frac + val_frac >= 1.0)
        throw config_error("invalid split fractions");
    const std::size_t t = ds.n_steps();
    const auto t1 = static_cast<std::size_t>(std::floor(t * train_frac));
    const auto t2 = static_cast<std::size_t>(std::floor(t * (train_frac + val_frac)));
    ds.train_range = {0, t1};
    ds.val_range = {t1, t2};
    ds.test_range = {t2, t};
}

void min_max_normalize(TimeSeriesDataset& ds) {
    const std::size_t n = ds.n_sensors();
    if (ds.train_range.size() == 0) throw state_error("normalize before splits");
    ds.norm_min.assign(n, 0.0);
    ds.norm_max.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double mn = ds.raw_at(ds.train_range.begin, i);
        double mx = mn;
        for (std::size_t t = ds.train_range.begin; t < ds.train_range.end; ++t) {
            mn = std::min(mn, ds.raw_at(t, i));
            mx = std::max(mx, ds.raw_at(t, i));
        }
        if (mx <= mn)
            throw numeric_error("degenerate sensor '" + ds.sensor_ids[i] +
                                "': constant on the train split");
        ds.norm_min[i] = mn;
        ds.norm_max[i] = mx;
    }
    // The normalized array always keeps true values (val/test may leave
    // [0,1]); clip_normalized only clamps model inputs at window-build time.
    ds.normalized.resize(ds.raw.size());
    for (std::size_t t = 0; t < ds.n_steps(); ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            ds.normalized[t * n + i] = (ds.raw_at(t, i) - ds.norm_min[i]) /
                                       (ds.norm_max[i] - ds.norm_min[i]);
        }
    }
    ds.normalized_ready = true;
}

std::size_t sliding_window_count(std::size_t split_len, std::size_t window,
                                 std::size_t stride) {
    if (window == 0 || stride == 0) throw config_error("window and stride must be > 0");
    if (split_len <= window)
        throw dim_error("split of length " + std::to_string(split_len) +
                        " leaves no predicted step for window " +
                        std::to_string(window));
    return (split_len - 1 - window) / stride + 1;
}

std::vector<Segment> sliding_windows(const TimeSeriesDataset& ds, Split split) {
    if (!ds.normalized_ready) throw state_error("sliding_windows needs normalized data");
    const SplitRange& r = ds.split_range(split);
    const std::size_t w = ds.window;
    const std::size_t count = sliding_window_count(r.size(), w, ds.stride);
    const std::size_t n = ds.n_sensors();

    std::vector<Segment> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t t = r.begin + w + k * ds.stride;
        Segment seg;
        seg.target_time = t;
        Tensor feat = Tensor::zeros({n, w});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t s = 0; s < w; ++s) {
                double v = ds.norm_at(t - w + s, i);
                // Model inputs are clamped to the trained range when the clip
                // flag is set; targets below keep true normalized values, so
                // scores always reflect the actual deviation.
                if (ds.clip_normalized) v = std::clamp(v, 0.0, 1.0);
                feat.data()[i * w + s] = v;
            }
        }
        seg.features = std::move(feat);
        seg.target.resize(n);
        seg.labels_at_t.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            seg.target[i] = ds.norm_at(t, i);
            seg.labels_at_t[i] = ds.label_at(t, i) ? 1 : 0;
        }
        out.push_back(std::move(seg));
    }
    return out;
}

TimeSeriesDataset synthesize_network(const SynthesisConfig& cfg) {
    const std::size_t n = cfg.n_sensors;
    const std::size_t t_total = cfg.n_steps;
    if (n < 4) throw config_error("synthesize_network: need at least 4 sensors");
    // The consumer-facing T >= 20*w precondition is enforced where the window
    // is known (pipeline); this floor only guards degenerate lengths.
    if (t_total < 200)
        throw config_error("synthesize_network: series too short");
    if (cfg.coupling < 0.0 || cfg.coupling > 1.0)
        throw config_error("synthesize_network: coupling outside [0,1]");
    if (cfg.decoy_cluster > 0 && (cfg.decoy_cluster < 3 || cfg.decoy_cluster > n - 3))
        throw config_error("synthesize_network: decoy cluster size out of range");

    Rng rng(cfg.seed);
    const std::size_t periphery = n - cfg.decoy_cluster;
    const std::size_t n_roots = std::max<std::size_t>(2, periphery / 3);

    struct NodeParams {
        double period, phase, offset, amp, ar_sigma, meas_sigma;
        std::vector<std::size_t> parents;
        std::vector<double> weights;
    };
    std::vector<NodeParams> nodes(n);
    TimeSeriesDataset ds;

    for (std::size_t i = 0; i < n; ++i) {
        NodeParams& p = nodes[i];
        p.period = 26.0 + 7.0 * static_cast<double>(i) + rng.uniform(0.0, 4.0);
        p.phase = rng.uniform(0.0, 2.0 * M_PI);
        p.offset = 50.0 + rng.uniform(-5.0, 5.0);
        p.amp = rng.uniform(2.0, 3.5);
        p.ar_sigma = rng.uniform(0.08, 0.16);
        p.meas_sigma = cfg.meas_noise * rng.uniform(0.25, 0.45);

        const bool in_cluster = i >= periphery;
        // Odd periphery roots echo the preceding root so every root signal is
        // observable through at least one close sibling; this keeps single
        // sensors from becoming irreplaceable inputs to the detector.
        if (!in_cluster && i < n_roots) {
            if (i % 2 == 1) {
                p.parents = {i - 1};
                p.weights = {1.0};
                ds.planted_edges.emplace_back(i - 1, i);
            }
            continue;
        }
        std::size_t lo, hi;  // eligible parent index range [lo, hi)
        if (in_cluster) {
            lo = periphery;
            hi = i;
        } else {
            lo = 0;
            hi = i;
        }
        if (hi > lo) {
            const std::size_t avail = hi - lo;
            const std::size_t want = std::min<std::size_t>(3, avail);  // 2-3 parents
            std::vector<std::size_t> pool;
            for (std::size_t j = lo; j < hi; ++j) pool.push_back(j);
            for (std::size_t k = 0; k < want; ++k) {
                const std::size_t pick = k + rng.uniform_index(pool.size() - k);
                std::swap(pool[k], pool[pick]);
            }
            pool.resize(want);
            std::sort(pool.begin(), pool.end());
            p.parents = pool;
            // Near-equal mixing keeps any single parent from dominating the
            // child, which keeps the learned detector's attention spread out.
            double wsum = 0.0;
            for (std::size_t k = 0; k < want; ++k) {
                p.weights.push_back(rng.uniform(0.4, 1.0));
                wsum += p.weights.back();
            }
            for (double& wk : p.weights) wk /= wsum;
            for (std::size_t par : p.parents) ds.planted_edges.emplace_back(par, i);
        }
    }

    ds.sensor_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.sensor_ids[i] = "s" + std::to_string(i);
    ds.raw.assign(t_total * n, 0.0);
    ds.labels.assign(t_total * n, 0);

    const double ar_phi = 0.6;
    std::vector<double> ar(n, 0.0);
    std::vector<double> latent(n, 0.0);
    for (std::size_t t = 0; t < t_total; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            NodeParams& p = nodes[i];
            ar[i] = ar_phi * ar[i] + p.ar_sigma * rng.normal();
            const double own =
                p.offset +
                p.amp * std::sin(2.0 * M_PI * static_cast<double>(t) / p.period +
                                 p.phase) +
                ar[i];
            double v = own;
            if (!p.parents.empty()) {
                double mix = 0.0;
                for (std::size_t k = 0; k < p.parents.size(); ++k)
                    mix += p.weights[k] * latent[p.parents[k]];
                v = (1.0 - cfg.coupling) * own + cfg.coupling * mix;
            }
            latent[i] = v;
            // Per-reading measurement noise: forces the detector to average
            // over many window cells and neighbors instead of pinning its
            // prediction on a handful of readings.
            ds.raw[t * n + i] = v + p.meas_sigma * rng.normal();
        }
    }
    return ds;
}

void inject_anomalies(TimeSeriesDataset& ds, Split split, const InjectionConfig& cfg) {
    if (split != Split::test)
        throw policy_error(std::string("anomaly injection into the ") +
                           to_string(split) +
                           " split is not allowed (only test data may carry "
                           "injected anomalies)");
    if (ds.normalized_ready)
        throw state_error("inject_anomalies must run before normalization");
    if (cfg.rate < 0.0 || cfg.rate > 1.0) throw config_error("injection rate in [0,1]");

    const SplitRange& r = ds.test_range;
    const std::size_t n = ds.n_sensors();
    Rng rng(cfg.seed);

    auto sample_poisson = [&rng](double lambda) {
        // Knuth's method; fine for small lambda.
        const double limit = std::exp(-lambda);
        std::size_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= rng.uniform_open();
        } while (p > limit);
        return k - 1;
    };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = r.begin; t < r.end; ++t) {
            if (rng.uniform() >= cfg.rate) continue;
            std::size_t len = 0;
            while (len == 0) len = sample_poisson(cfg.lambda_var);
            const std::size_t end = std::min(t + len, r.end);
            for (std::size_t s = t; s < end; ++s) {
                ds.raw[s * n + i] += cfg.zeta * rng.normal();
                ds.labels[s * n + i] = 1;
            }
            ds.injections.push_back({i, t, end - t});
        }
    }
}

}  // namespace beta
