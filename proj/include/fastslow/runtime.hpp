#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "fastslow/compensator.hpp"
#include "fastslow/dataset.hpp"
#include "fastslow/ensemble.hpp"

namespace fastslow {

enum class Phase { Collecting, Monitoring };

struct VerdictEvent {
    std::uint64_t step = 0;
    VerdictTag tag = VerdictTag::InControl;
    double error_fraction = 0.0;
    std::optional<int> matched_member;
    int member_count_after = 0;
};

struct StepRecord {
    std::uint64_t k = 0;
    Phase phase = Phase::Collecting;
    bool warmup = false;  // no ensemble yet: passthrough, not scored
    Eigen::VectorXd u, y_p, y_s, e_hat, y;
    Eigen::VectorXd lambda;
    Eigen::VectorXd gp_lml;
    int gp_window = 0;
    bool gp_retrained = false;
    int member_count = 0;
};

struct RuntimeConfig {
    NarxConfig narx;
    EnsembleParams ensemble;
    GpConfig gp;
    int n_mon = 200;
    int train_len = 1000;
};

// Drives the per-sample loop: combined prediction y = y_s + e_hat, batch
// monitoring, member addition on NewRegime, full reset on InternalChange.
// The emitted prediction never depends on the same step's measurement.
class Runtime {
public:
    Runtime(RuntimeConfig config, int n_u, int n_y);

    // Install a persisted ensemble and its member datasets (resume).
    void adopt(Ensemble ensemble, std::vector<Dataset> datasets);

    Eigen::VectorXd step(const Eigen::VectorXd& u, const Eigen::VectorXd& y_p);

    Phase phase() const { return phase_; }
    const Ensemble& ensemble() const { return ensemble_; }
    const std::vector<Dataset>& member_datasets() const { return datasets_; }
    const std::vector<VerdictEvent>& timeline() const { return timeline_; }
    const std::vector<std::pair<std::uint64_t, int>>& member_counts() const {
        return member_counts_;
    }
    const std::vector<StepRecord>& log() const { return log_; }
    const GpCompensator& compensator() const { return comp_; }
    std::uint64_t step_count() const { return k_; }
    void set_logging(bool enabled) { logging_ = enabled; }

private:
    void integrate_pending();
    void apply_verdict(const MonitorVerdict& verdict);

    RuntimeConfig cfg_;
    int n_u_, n_y_;
    Ensemble ensemble_;
    std::vector<Dataset> datasets_;
    EnsembleRunState run_state_;
    GpCompensator comp_;
    Phase phase_ = Phase::Collecting;
    Dataset pending_;
    Dataset mon_buffer_;
    std::uint64_t k_ = 0;
    int dataset_counter_ = 0;
    std::vector<VerdictEvent> timeline_;
    std::vector<std::pair<std::uint64_t, int>> member_counts_;
    std::vector<StepRecord> log_;
    bool logging_ = true;
};

struct FitResult {
    Eigen::VectorXd per_output;  // NaN for excluded zero-variance channels
    double mean_fit = 0.0;
    std::vector<int> excluded;
};

// Normalized fit percentage per channel: 100 for a perfect prediction, 0 for
// the channel-mean predictor. Zero-variance channels are excluded from the
// mean and reported in `excluded`.
FitResult fit_index(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& measured);

}  // namespace fastslow
