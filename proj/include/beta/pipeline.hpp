#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "beta/config.hpp"

namespace beta {

// Pipeline stages in dependency order. Every stage writes its artifacts under
// <out>/<stage>-<hash>/ where the hash covers the relevant config sections,
// the seed and all upstream hashes, so a changed config never reuses stale
// artifacts. Reruns with identical config+seed produce byte-identical files.
enum class Stage { generate, victim, surrogate, explain, attack, evaluate, report };

const char* to_string(Stage s);
Stage stage_from_string(const std::string& name);

std::string stage_hash(const ExperimentConfig& cfg, Stage stage, std::uint64_t seed);
std::filesystem::path stage_dir(const std::filesystem::path& out,
                                const ExperimentConfig& cfg, Stage stage,
                                std::uint64_t seed);

// Each runner is idempotent: when the stage manifest already exists the stage
// is skipped (force = true recomputes). Missing upstream artifacts raise
// dependency_error naming the file.
void run_generate(const ExperimentConfig& cfg, std::uint64_t seed,
                  const std::filesystem::path& out, bool force = false);
void run_train_victim(const ExperimentConfig& cfg, std::uint64_t seed,
                      const std::filesystem::path& out, bool force = false);
void run_train_surrogate(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::filesystem::path& out, bool force = false);
void run_explain(const ExperimentConfig& cfg, std::uint64_t seed,
                 const std::filesystem::path& out, bool force = false);
void run_attack_stage(const ExperimentConfig& cfg, std::uint64_t seed,
                      const std::filesystem::path& out, bool force = false);
void run_evaluate(const ExperimentConfig& cfg, std::uint64_t seed,
                  const std::filesystem::path& out, bool force = false);
// Aggregates every seed's metrics; requires all evaluate stages.
void run_report(const ExperimentConfig& cfg, const std::filesystem::path& out,
                bool force = false);

// generate .. evaluate for one seed.
void run_pipeline_for_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::filesystem::path& out, bool force = false);

// Resolved attack target (config value, or N-1 when unset).
std::size_t resolve_target(const ExperimentConfig& cfg, std::size_t n_sensors);

}  // namespace beta
