#include "beta/surrogate.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "beta/errors.hpp"
#include "beta/io.hpp"

namespace beta {

using json = nlohmann::json;

VictimOracle::VictimOracle(const GdnModel& model) : model_(&model) {
    if (!model.calib.fitted)
        throw state_error("victim oracle requires a calibrated model");
}

bool VictimOracle::decide(const Tensor& features, const std::vector<double>& observed,
                          std::size_t node) const {
    ++queries_;
    const auto scores = anomaly_scores(*model_, features, observed);
    return detect_node(scores, model_->calib.lambda, node);
}

QueryLog query_victim(
    const DecisionOracle& victim,
    const std::vector<std::pair<std::string, const std::vector<Segment>*>>& sets,
    std::size_t target, const std::string& victim_id) {
    QueryLog log;
    log.target = target;
    log.victim_id = victim_id;
    for (const auto& [name, segments] : sets) {
        for (std::size_t k = 0; k < segments->size(); ++k) {
            const Segment& seg = (*segments)[k];
            QueryRecord rec;
            rec.split = name;
            rec.window_index = k;
            rec.target_time = seg.target_time;
            rec.label = victim.decide(seg.features, seg.target, target);
            log.records.push_back(std::move(rec));
        }
    }
    return log;
}

void save_query_log(const std::filesystem::path& path, const QueryLog& log) {
    std::ostringstream os;
    json header = {{"kind", "query-log"},
                   {"target", log.target},
                   {"victim", log.victim_id},
                   {"count", log.records.size()}};
    os << header.dump() << "\n";
    for (const auto& r : log.records) {
        json line = {{"split", r.split},
                     {"window", r.window_index},
                     {"t", r.target_time},
                     {"label", r.label ? 1 : 0}};
        os << line.dump() << "\n";
    }
    io::atomic_write_text(path, os.str());
}

QueryLog load_query_log(const std::filesystem::path& path) {
    std::istringstream in(io::read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty query log: " + path.string());
    json header = json::parse(line);
    QueryLog log;
    log.target = header.at("target").get<std::size_t>();
    log.victim_id = header.at("victim").get<std::string>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        QueryRecord rec;
        rec.split = j.at("split").get<std::string>();
        rec.window_index = j.at("window").get<std::size_t>();
        rec.target_time = j.at("t").get<std::size_t>();
        rec.label = j.at("label").get<int>() != 0;
        log.records.push_back(std::move(rec));
    }
    if (log.records.size() != header.at("count").get<std::size_t>())
        throw parse_error("query log record count mismatch: " + path.string());
    return log;
}

namespace {

double target_score(const Surrogate& s, const Segment& seg) {
    const auto scores = anomaly_scores(s.model, seg.features, seg.target);
    return scores[s.target];
}

}  // namespace

Surrogate train_surrogate(const QueryLog& log, const std::vector<Segment>& log_segments,
                          const TimeSeriesDataset& ds, const SensorGraph& victim_graph,
                          const SurrogateConfig& cfg) {
    if (log.records.empty()) throw state_error("train_surrogate: empty query log");
    if (log.records.size() != log_segments.size())
        throw dim_error("train_surrogate: log/segments misaligned");

    Surrogate s;
    s.target = log.target;
    s.model = train_gdn(cfg.hyper, ds, cfg.train,
                        cfg.use_own_graph ? nullptr : &victim_graph);
    calibrate(s.model, ds);

    // Sweep the target threshold over logged scores for maximum agreement.
    std::vector<double> scores(log.records.size());
    for (std::size_t i = 0; i < log.records.size(); ++i)
        scores[i] = target_score(s, log_segments[i]);
    std::vector<double> cands = scores;
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    const bool single_class = [&] {
        for (const auto& r : log.records)
            if (r.label != log.records.front().label) return false;
        return true;
    }();
    if (single_class && cands.size() <= 1) {
        // Degenerate sweep; fall back to the validation-max rule.
        s.target_lambda = s.model.calib.lambda;
        s.threshold_from_fallback = true;
    } else {
        cands.insert(cands.begin(), cands.front() - 1.0);  // all-positive option
        double best_agree = -1.0;
        double best_thr = cands.front();
        for (double thr : cands) {
            std::size_t match = 0;
            for (std::size_t i = 0; i < scores.size(); ++i)
                if ((scores[i] > thr) == log.records[i].label) ++match;
            const double a =
                static_cast<double>(match) / static_cast<double>(scores.size());
            if (a > best_agree) {
                best_agree = a;
                best_thr = thr;
            }
        }
        s.target_lambda = best_thr;
    }

    std::size_t match = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if ((scores[i] > s.target_lambda) == log.records[i].label) ++match;
    s.fit_agreement = static_cast<double>(match) / static_cast<double>(scores.size());
    return s;
}

bool surrogate_decide(const Surrogate& s, const Tensor& features,
                      const std::vector<double>& observed) {
    const auto scores = anomaly_scores(s.model, features, observed);
    return scores[s.target] > s.target_lambda;
}

double agreement(const Surrogate& s, const QueryLog& log,
                 const std::vector<Segment>& segments) {
    if (log.records.size() != segments.size())
        throw dim_error("agreement: log/segments misaligned");
    if (log.records.empty()) throw metric_error("agreement: empty log");
    std::size_t match = 0;
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        const bool pred = surrogate_decide(s, segments[i].features, segments[i].target);
        if (pred == log.records[i].label) ++match;
    }
    return static_cast<double>(match) / static_cast<double>(log.records.size());
}

}  // namespace beta
