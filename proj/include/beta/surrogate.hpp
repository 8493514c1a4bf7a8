#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "beta/data.hpp"
#include "beta/detector.hpp"

namespace beta {

// The only victim surface visible to attacker-side code: a binary node-level
// decision per segment. Parameters stay behind this interface.
class DecisionOracle {
public:
    virtual ~DecisionOracle() = default;
    virtual bool decide(const Tensor& features, const std::vector<double>& observed,
                        std::size_t node) const = 0;
};

class VictimOracle final : public DecisionOracle {
public:
    explicit VictimOracle(const GdnModel& model);
    bool decide(const Tensor& features, const std::vector<double>& observed,
                std::size_t node) const override;
    std::size_t query_count() const { return queries_; }

private:
    const GdnModel* model_;
    mutable std::size_t queries_ = 0;
};

struct QueryRecord {
    std::string split;
    std::size_t window_index;
    std::size_t target_time;
    bool label;
};

struct QueryLog {
    std::size_t target = 0;
    std::string victim_id;
    std::vector<QueryRecord> records;
};

// Victim decisions for node `target` on every segment of every named set.
QueryLog query_victim(const DecisionOracle& victim,
                      const std::vector<std::pair<std::string,
                                                  const std::vector<Segment>*>>& sets,
                      std::size_t target, const std::string& victim_id);

// JSON-lines persistence (header line + one record per line).
void save_query_log(const std::filesystem::path& path, const QueryLog& log);
QueryLog load_query_log(const std::filesystem::path& path);

// Attacker-side detector: a GDN forecaster plus a target-node threshold
// fitted to mimic victim decisions.
struct Surrogate {
    GdnModel model;
    std::size_t target = 0;
    double target_lambda = 0.0;
    double fit_agreement = 0.0;  // agreement on the fitting log
    bool threshold_from_fallback = false;
};

struct SurrogateConfig {
    GdnHyper hyper;          // n/w filled from the dataset by the caller
    TrainConfig train;
    bool use_own_graph = false;  // default: victim adjacency injected (grey-box)
};

// Trains the forecaster on the attacker-observable train split, calibrates on
// validation, then sweeps the target threshold over logged scores to maximize
// agreement with the victim labels. The segments list must be index-aligned
// with log.records.
Surrogate train_surrogate(const QueryLog& log, const std::vector<Segment>& log_segments,
                          const TimeSeriesDataset& ds, const SensorGraph& victim_graph,
                          const SurrogateConfig& cfg);

bool surrogate_decide(const Surrogate& s, const Tensor& features,
                      const std::vector<double>& observed);

// Fraction of records where the surrogate decision matches the logged label.
double agreement(const Surrogate& s, const QueryLog& log,
                 const std::vector<Segment>& segments);

}  // namespace beta
