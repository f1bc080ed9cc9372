// knowrank — stage-by-stage ranking pipeline driver.
//
//   knowrank <stage> --config run.cfg [--force] [--backend mock]
//                    [--variant his_cand_u2i] [--seed 7]
//
// Stages: prepare | extract | knowledge | render | rank | eval.
// Exit codes: 0 ok, 2 bad config, 3 missing/stale upstream artifacts,
// 4 some rank calls failed, 1 anything else.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "knowrank/config.hpp"
#include "knowrank/pipeline.hpp"
#include "knowrank/util/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"LLM candidate-ranking pipeline with pluggable knowledge"};
    app.require_subcommand(1);

    std::string config_path;
    bool force = false;
    std::string backend_override;
    std::string variant_override;
    std::string seed_override;

    const std::vector<std::string> stages = {"prepare", "extract", "knowledge",
                                             "render",  "rank",    "eval"};
    for (const auto& stage : stages) {
        auto* sub = app.add_subcommand(stage);
        sub->add_option("--config", config_path, "Path to the run config file")->required();
        sub->add_flag("--force", force, "Rebuild even when outputs are up to date");
        sub->add_option("--backend", backend_override,
                        "Completion backend: http, replay, or mock");
        sub->add_option("--variant", variant_override, "Knowledge variant for this run");
        sub->add_option("--seed", seed_override, "Override the run seed");
    }

    CLI11_PARSE(app, argc, argv);
    std::string stage = app.get_subcommands().front()->get_name();

    knowrank::config::PipelineConfig cfg;
    try {
        cfg = knowrank::config::load_config(config_path);
        if (!backend_override.empty()) cfg.backend = backend_override;
        if (!variant_override.empty()) cfg.variant = variant_override;
        if (!seed_override.empty()) {
            size_t used = 0;
            cfg.seed = std::stoull(seed_override, &used);
            if (used != seed_override.size())
                throw knowrank::Error(knowrank::ErrorCode::ConfigError,
                                            "--seed expects an unsigned integer");
        }
    } catch (const knowrank::Error& e) {
        std::cerr << "config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config: " << e.what() << "\n";
        return 2;
    }

    return knowrank::pipeline::run_stage(stage, cfg, force);
}
