#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "fastslow/dataset.hpp"
#include "fastslow/narx.hpp"
#include "fastslow/spc.hpp"

namespace fastslow {

struct EnsembleMember {
    BaseModel model;
    StatProfile input_profile;  // built from the reference split of its dataset
    ControlChart input_chart;
    std::string dataset_id;
};

enum class VerdictTag { InControl, NewRegime, InternalChange };

const char* to_string(VerdictTag tag);

struct MonitorVerdict {
    VerdictTag tag = VerdictTag::InControl;
    double error_fraction = 0.0;
    std::vector<double> input_fractions;  // per member
    std::optional<int> matched_member;
};

struct EnsembleParams {
    SpcParams spc;
    double weight_floor = 1e-8;  // clamp on T^2 before inversion
    double split_ratio = 0.7;    // contiguous reference fraction
    double theta = 0.99;         // monitoring acceptance fraction
    int warmup_skip = 0;         // extra error samples dropped at block starts
    // Characterization runs the free-run prediction in cold-started windows
    // of this length so the reference errors have the same free-run age
    // profile as the monitored batches. 0 = one window per dataset.
    int chart_block_len = 0;
};

// Ordered collection of per-regime models combined by statistical proximity
// of the current input to each member's training inputs. Snapshots are
// immutable; lifecycle operations return new values.
struct Ensemble {
    std::vector<EnsembleMember> members;
    std::optional<StatProfile> error_profile;
    std::optional<ControlChart> error_chart;
    EnsembleParams params;

    int size() const { return static_cast<int>(members.size()); }
    bool characterized() const { return error_profile.has_value(); }
};

// Normalized inverse-proximity weights for one input sample. The final
// component is computed as one minus the partial sum.
Eigen::VectorXd combination_weights(const Ensemble& ensemble, const Eigen::VectorXd& u);

// Per-member free-run lag states for step-wise prediction.
struct EnsembleRunState {
    std::vector<LagState> member_states;

    static EnsembleRunState cold(const Ensemble& ensemble);
};

struct EnsembleStepResult {
    Eigen::VectorXd y_s;
    Eigen::VectorXd lambda;
    Eigen::MatrixXd member_outputs;  // one row per member
};

// Advances every member's free run by one sample and combines the outputs
// with weights recomputed from `u`.
EnsembleStepResult ensemble_step(const Ensemble& ensemble, EnsembleRunState& state,
                                 const Eigen::VectorXd& u);

struct EnsemblePrediction {
    Eigen::MatrixXd y_s;                         // N x n_y
    Eigen::MatrixXd lambda;                      // N x n_members
    std::vector<Eigen::MatrixXd> member_outputs; // per member, N x n_y
};

// Cold-start batch prediction over an input sequence.
EnsemblePrediction ensemble_predict(const Ensemble& ensemble, const Eigen::MatrixXd& inputs);

// Rebuilds the pooled error profile/chart over every member dataset and the
// newest member's input profile/chart; older members' input charts are kept
// as built. The first `settle_samples(ensemble)` rows of each dataset's error
// trace are excluded (free-run lag warm-up).
Ensemble characterize(Ensemble ensemble, const std::vector<Dataset>& datasets);

// Condition checks over a monitored batch: error chart first, then
// per-member input charts. Ties on the input check resolve to the smallest
// member index.
MonitorVerdict monitor(const Ensemble& ensemble, const Dataset& batch);

// Fits a model on datasets.back(), appends it, and re-characterizes over all
// datasets. Existing members' models and input charts are not touched.
Ensemble add_member(const Ensemble& ensemble, const std::vector<Dataset>& datasets,
                    const NarxConfig& config);

// Discards all members and charts, keeping only the parameters.
Ensemble reset(const Ensemble& ensemble);

// Free-run warm-up rows excluded from error statistics: at least the lag
// depth, more if params.warmup_skip asks for it.
int settle_samples(const Ensemble& ensemble);

}  // namespace fastslow
