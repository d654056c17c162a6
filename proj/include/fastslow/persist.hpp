#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fastslow/config.hpp"
#include "fastslow/ensemble.hpp"
#include "fastslow/experiment.hpp"

namespace fastslow {

// Ensemble persistence: one JSON record per member plus a manifest with the
// pooled error profile/chart; member datasets are stored alongside so a
// resumed run can re-characterize when it grows.
void save_ensemble(const Ensemble& ensemble, const std::vector<Dataset>& datasets,
                   const std::string& dir);
std::pair<Ensemble, std::vector<Dataset>> load_ensemble(const std::string& dir);

void save_report(const ExperimentReport& report, const Config& config, const std::string& path);
ExperimentReport load_report(const std::string& path);

void write_steps_csv(const std::vector<StepRecord>& log, const std::vector<VerdictEvent>& timeline,
                     const std::string& path);

}  // namespace fastslow
