#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fastslow/config.hpp"
#include "fastslow/runtime.hpp"

namespace fastslow {

struct ModelScore {
    std::string name;
    Eigen::VectorXd fit_per_output;
    double fit_mean = 0.0;
};

struct ExperimentReport {
    std::vector<ModelScore> scores;
    std::vector<VerdictEvent> timeline;
    std::vector<std::pair<std::uint64_t, int>> member_counts;
    std::uint64_t total_steps = 0;
    std::uint64_t test_start = 0;  // first step of the scored test window
};

struct ExperimentResult {
    ExperimentReport report;
    Runtime runtime;
};

// Runs the scripted scenario selected by config.scenario and scores the
// comparison models on the final test window: each member alone, their
// arithmetic average, the proximity ensemble, the compensated model, and an
// online GP mapping inputs directly to outputs. `resume_state` installs a
// previously persisted ensemble before the run starts.
ExperimentResult run_experiment(
    const Config& config,
    std::optional<std::pair<Ensemble, std::vector<Dataset>>> resume_state = std::nullopt);

double score_by_name(const ExperimentReport& report, const std::string& name);

}  // namespace fastslow
