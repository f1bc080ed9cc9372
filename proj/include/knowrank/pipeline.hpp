#pragma once

#include <string>

#include "knowrank/config.hpp"
#include "knowrank/gateway.hpp"

namespace knowrank::pipeline {

struct StageOutcome {
    bool fresh = false;   // outputs already up to date, nothing recomputed
    size_t tasks = 0;     // tasks touched by the stage
    size_t failures = 0;  // tasks that could not be completed (rank only)
};

StageOutcome cmd_prepare(const config::PipelineConfig& cfg, bool force);
StageOutcome cmd_extract(const config::PipelineConfig& cfg, bool force);
StageOutcome cmd_knowledge(const config::PipelineConfig& cfg, bool force);
StageOutcome cmd_render(const config::PipelineConfig& cfg, bool force);
StageOutcome cmd_rank(const config::PipelineConfig& cfg, bool force,
                      gateway::Transport* transport = nullptr);
StageOutcome cmd_eval(const config::PipelineConfig& cfg, bool force);

/// Runs one named stage and maps errors to exit codes: 0 success, 2 config
/// error, 3 missing/stale upstream, 4 partial rank failures, 1 anything
/// else. Messages go to stderr.
int run_stage(const std::string& stage, const config::PipelineConfig& cfg, bool force,
              gateway::Transport* transport = nullptr);

}  // namespace knowrank::pipeline
