// betabench: config-driven experiment runner for the graph anomaly detection
// attack workbench. Stages: generate, train-victim, train-surrogate, explain,
// attack, evaluate, report; `pipeline` runs everything for all seeds.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "beta/config.hpp"
#include "beta/errors.hpp"
#include "beta/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string stage_cache;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required();
    cmd->add_option("--seed", args.seed, "override: run only this seed");
    cmd->add_option("--out", args.out_dir, "output directory (default: run.out_dir)");
    cmd->add_option("--stage-cache", args.stage_cache,
                    "directory holding stage artifacts (default: --out)");
    cmd->add_flag("--force", args.force, "recompute even if stage artifacts exist");
}

std::filesystem::path resolve_out(const beta::ExperimentConfig& cfg,
                                  const CommonArgs& args) {
    if (!args.stage_cache.empty()) return args.stage_cache;
    if (!args.out_dir.empty()) return args.out_dir;
    return cfg.run.out_dir;
}

std::vector<std::uint64_t> resolve_seeds(const beta::ExperimentConfig& cfg,
                                         const CommonArgs& args) {
    if (args.seed) return {*args.seed};
    return cfg.run.seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph anomaly detection attack workbench"};
    app.require_subcommand(1);

    struct {
        CommonArgs generate, victim, surrogate, explain, attack, evaluate, report,
            pipeline;
    } args;

    CLI::App* c_generate = app.add_subcommand("generate", "synthesize/load dataset");
    add_common(c_generate, args.generate);
    CLI::App* c_victim = app.add_subcommand("train-victim", "train + calibrate victim");
    add_common(c_victim, args.victim);
    CLI::App* c_surrogate =
        app.add_subcommand("train-surrogate", "query victim + train surrogate");
    add_common(c_surrogate, args.surrogate);
    CLI::App* c_explain = app.add_subcommand("explain", "train edge-mask explainer");
    add_common(c_explain, args.explain);
    CLI::App* c_attack = app.add_subcommand("attack", "run attack strategy sweep");
    add_common(c_attack, args.attack);
    CLI::App* c_evaluate = app.add_subcommand("evaluate", "compute metric rows");
    add_common(c_evaluate, args.evaluate);
    CLI::App* c_report = app.add_subcommand("report", "aggregate seeds into report");
    add_common(c_report, args.report);
    CLI::App* c_pipeline = app.add_subcommand("pipeline", "all stages for all seeds");
    add_common(c_pipeline, args.pipeline);

    CLI11_PARSE(app, argc, argv);

    try {
        auto run_stage = [&](const CommonArgs& a, auto&& fn, bool per_seed) {
            const beta::ExperimentConfig cfg = beta::load_config(a.config_path);
            const std::filesystem::path out = resolve_out(cfg, a);
            std::filesystem::create_directories(out);
            if (per_seed) {
                for (std::uint64_t seed : resolve_seeds(cfg, a)) fn(cfg, seed, out, a);
            } else {
                fn(cfg, 0, out, a);
            }
        };

        if (c_generate->parsed()) {
            run_stage(args.generate,
                      [](const auto& cfg, std::uint64_t s, const auto& out,
                         const CommonArgs& a) {
                          beta::run_generate(cfg, s, out, a.force);
                          std::cout << "generate seed=" << s << " -> "
                                    << beta::stage_dir(out, cfg, beta::Stage::generate, s)
                                           .string()
                                    << "\n";
                      },
                      true);
        } else if (c_victim->parsed()) {
            run_stage(args.victim,
                      [](const auto& cfg, std::uint64_t s, const auto& out,
                         const CommonArgs& a) {
                          beta::run_train_victim(cfg, s, out, a.force);
                          std::cout << "train-victim seed=" << s << " -> "
                                    << beta::stage_dir(out, cfg, beta::Stage::victim, s)
                                           .string()
                                    << "\n";
                      },
                      true);
        } else if (c_surrogate->parsed()) {
            run_stage(args.surrogate,
                      [](const auto& cfg, std::uint64_t s, const auto& out,
                         const CommonArgs& a) {
                          beta::run_train_surrogate(cfg, s, out, a.force);
                          std::cout << "train-surrogate seed=" << s << " -> "
                                    << beta::stage_dir(out, cfg,
                                                       beta::Stage::surrogate, s)
                                           .string()
                                    << "\n";
                      },
                      true);
        } else if (c_explain->parsed()) {
            run_stage(args.explain,
                      [](const auto& cfg, std::uint64_t s, const auto& out,
                         const CommonArgs& a) {
                          beta::run_explain(cfg, s, out, a.force);
                          std::cout << "explain seed=" << s << " -> "
                                    << beta::stage_dir(out, cfg, beta::Stage::explain, s)
                                           .string()
                                    << "\n";
                      },
                      true);
        } else if (c_attack->parsed()) {
            run_stage(args.attack,
                      [](const auto& cfg, std::uint64_t s, const auto& out,
                         const CommonArgs& a) {
                          beta::run_attack_stage(cfg, s, out, a.force);
                          std::cout << "attack seed=" << s << " -> "
                                    << beta::stage_dir(out, cfg, beta::Stage::attack, s)
                                           .string()
                                    << "\n";
                      },
                      true);
        } else if (c_evaluate->parsed()) {
            run_stage(args.evaluate,
                      [](const auto& cfg, std::uint64_t s, const auto& out,
                         const CommonArgs& a) {
                          beta::run_evaluate(cfg, s, out, a.force);
                          std::cout << "evaluate seed=" << s << " -> "
                                    << beta::stage_dir(out, cfg, beta::Stage::evaluate,
                                                       s)
                                           .string()
                                    << "\n";
                      },
                      true);
        } else if (c_report->parsed()) {
            run_stage(args.report,
                      [](const auto& cfg, std::uint64_t, const auto& out,
                         const CommonArgs& a) {
                          beta::run_report(cfg, out, a.force);
                          std::cout << "report -> "
                                    << (out / ("report-" +
                                               beta::stage_hash(
                                                   cfg, beta::Stage::report, 0)))
                                           .string()
                                    << "\n";
                      },
                      false);
        } else if (c_pipeline->parsed()) {
            const beta::ExperimentConfig cfg =
                beta::load_config(args.pipeline.config_path);
            const std::filesystem::path out = resolve_out(cfg, args.pipeline);
            std::filesystem::create_directories(out);
            for (std::uint64_t seed : resolve_seeds(cfg, args.pipeline)) {
                std::cout << "pipeline seed=" << seed << "\n";
                beta::run_pipeline_for_seed(cfg, seed, out, args.pipeline.force);
            }
            if (!args.pipeline.seed) {
                beta::run_report(cfg, out, args.pipeline.force);
                std::cout << "report -> "
                          << (out / ("report-" +
                                     beta::stage_hash(cfg, beta::Stage::report, 0)))
                                 .string()
                          << "\n";
            }
        }
    } catch (const beta::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const beta::parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const beta::dependency_error& e) {
        std::cerr << "dependency error: " << e.what() << "\n";
        return 3;
    } catch (const beta::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
