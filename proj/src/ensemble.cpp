#include "fastslow/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "fastslow/errors.hpp"

namespace fastslow {

const char* to_string(VerdictTag tag) {
    switch (tag) {
        case VerdictTag::InControl: return "InControl";
        case VerdictTag::NewRegime: return "NewRegime";
        case VerdictTag::InternalChange: return "InternalChange";
    }
    return "?";
}

Eigen::VectorXd combination_weights(const Ensemble& ensemble, const Eigen::VectorXd& u) {
    const int n = ensemble.size();
    if (n == 0) throw EmptyEnsembleError("combination_weights: empty ensemble");

    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) {
        const double t2 = mahalanobis_point(ensemble.members[static_cast<size_t>(i)].input_profile, u);
        w(i) = 1.0 / std::max(t2, ensemble.params.weight_floor);
    }
    const double total = w.sum();
    Eigen::VectorXd lambda(n);
    double partial = 0.0;
    for (int i = 0; i < n - 1; ++i) {
        lambda(i) = w(i) / total;
        partial += lambda(i);
    }
    lambda(n - 1) = std::max(0.0, 1.0 - partial);
    return lambda;
}

EnsembleRunState EnsembleRunState::cold(const Ensemble& ensemble) {
    EnsembleRunState st;
    st.member_states.reserve(ensemble.members.size());
    for (const auto& m : ensemble.members) st.member_states.push_back(LagState::cold(m.model));
    return st;
}

EnsembleStepResult ensemble_step(const Ensemble& ensemble, EnsembleRunState& state,
                                 const Eigen::VectorXd& u) {
    const int n = ensemble.size();
    if (n == 0) throw EmptyEnsembleError("ensemble_step: empty ensemble");
    if (state.member_states.size() != static_cast<size_t>(n)) {
        throw DimensionError("ensemble_step: run state does not match member count");
    }

    EnsembleStepResult out;
    out.lambda = combination_weights(ensemble, u);
    const int n_y = ensemble.members.front().model.n_y;
    out.member_outputs.resize(n, n_y);
    out.y_s = Eigen::VectorXd::Zero(n_y);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd yi = narx_step(ensemble.members[static_cast<size_t>(i)].model,
                                             state.member_states[static_cast<size_t>(i)], u);
        out.member_outputs.row(i) = yi.transpose();
        out.y_s += out.lambda(i) * yi;
    }
    return out;
}

EnsemblePrediction ensemble_predict(const Ensemble& ensemble, const Eigen::MatrixXd& inputs) {
    const int n = ensemble.size();
    if (n == 0) throw EmptyEnsembleError("ensemble_predict: empty ensemble");
    const int n_y = ensemble.members.front().model.n_y;

    EnsemblePrediction pred;
    pred.y_s.resize(inputs.rows(), n_y);
    pred.lambda.resize(inputs.rows(), n);
    pred.member_outputs.assign(static_cast<size_t>(n), Eigen::MatrixXd(inputs.rows(), n_y));

    EnsembleRunState state = EnsembleRunState::cold(ensemble);
    for (Eigen::Index k = 0; k < inputs.rows(); ++k) {
        const auto step = ensemble_step(ensemble, state, inputs.row(k).transpose());
        pred.y_s.row(k) = step.y_s.transpose();
        pred.lambda.row(k) = step.lambda.transpose();
        for (int i = 0; i < n; ++i) {
            pred.member_outputs[static_cast<size_t>(i)].row(k) = step.member_outputs.row(i);
        }
    }
    return pred;
}

int settle_samples(const Ensemble& ensemble) {
    int settle = ensemble.params.warmup_skip;
    for (const auto& m : ensemble.members) {
        settle = std::max(settle, std::max(m.model.config.n_a, m.model.config.n_b - 1));
    }
    return settle;
}

Ensemble characterize(Ensemble ensemble, const std::vector<Dataset>& datasets) {
    if (ensemble.members.empty()) throw EmptyEnsembleError("characterize: empty ensemble");
    if (datasets.size() != ensemble.members.size()) {
        throw DimensionError("characterize: need one dataset per member");
    }

    const double j = ensemble.params.spc.percentile_j;
    const double eps_cov = ensemble.params.spc.eps_cov_rel;
    const double eps_std = ensemble.params.spc.eps_std;
    const int settle = settle_samples(ensemble);

    // Newest member's input profile/chart come from its own split; they must
    // exist before predictions are run since the weights depend on them.
    {
        const Dataset& d = datasets.back();
        const auto split = static_cast<Eigen::Index>(
            std::floor(ensemble.params.split_ratio * static_cast<double>(d.size())));
        if (split < 2 || d.size() - split < 1) {
            throw InsufficientDataError("characterize: dataset too short to split");
        }
        auto& newest = ensemble.members.back();
        newest.input_profile = build_profile(d.inputs.topRows(split), eps_cov, eps_std);
        const Eigen::MatrixXd input_test = d.inputs.bottomRows(d.size() - split);
        newest.input_chart = empirical_ucl(mahalanobis(newest.input_profile, input_test), j);
        newest.dataset_id = d.id;
    }

    std::vector<Eigen::VectorXd> e_ref, e_test;
    for (const auto& d : datasets) {
        const auto split = static_cast<Eigen::Index>(
            std::floor(ensemble.params.split_ratio * static_cast<double>(d.size())));
        if (split - settle < 2 || d.size() - split < 1) {
            throw InsufficientDataError("characterize: dataset too short to split");
        }
        const Eigen::Index block = ensemble.params.chart_block_len > 0
                                       ? ensemble.params.chart_block_len
                                       : d.size();
        for (Eigen::Index start = 0; start < d.size(); start += block) {
            const Eigen::Index len = std::min(block, d.size() - start);
            if (len <= settle + 1) break;
            const auto pred = ensemble_predict(ensemble, d.inputs.middleRows(start, len));
            for (Eigen::Index k = settle; k < len; ++k) {
                Eigen::VectorXd e = (d.outputs.row(start + k) - pred.y_s.row(k)).transpose();
                (start + k < split ? e_ref : e_test).push_back(std::move(e));
            }
        }
    }

    const int n_y = ensemble.members.front().model.n_y;
    Eigen::MatrixXd ref(static_cast<Eigen::Index>(e_ref.size()), n_y);
    for (size_t r = 0; r < e_ref.size(); ++r) ref.row(static_cast<Eigen::Index>(r)) = e_ref[r].transpose();
    Eigen::MatrixXd test(static_cast<Eigen::Index>(e_test.size()), n_y);
    for (size_t r = 0; r < e_test.size(); ++r) test.row(static_cast<Eigen::Index>(r)) = e_test[r].transpose();

    ensemble.error_profile = build_profile(ref, eps_cov, eps_std);
    ensemble.error_chart = empirical_ucl(mahalanobis(*ensemble.error_profile, test), j);
    return ensemble;
}

MonitorVerdict monitor(const Ensemble& ensemble, const Dataset& batch) {
    if (!ensemble.characterized()) {
        throw NotCharacterizedError("monitor: ensemble has no error chart yet");
    }
    if (batch.size() == 0) throw InsufficientDataError("monitor: empty batch");

    const int settle = settle_samples(ensemble);
    const auto pred = ensemble_predict(ensemble, batch.inputs);
    const Eigen::Index usable = batch.size() - settle;
    if (usable < 1) throw InsufficientDataError("monitor: batch shorter than warm-up");

    Eigen::MatrixXd errors =
        batch.outputs.bottomRows(usable) - pred.y_s.bottomRows(usable);

    MonitorVerdict verdict;
    verdict.error_fraction =
        in_control_fraction(mahalanobis(*ensemble.error_profile, errors), *ensemble.error_chart);

    for (const auto& member : ensemble.members) {
        verdict.input_fractions.push_back(in_control_fraction(
            mahalanobis(member.input_profile, batch.inputs), member.input_chart));
    }

    if (verdict.error_fraction >= ensemble.params.theta) {
        verdict.tag = VerdictTag::InControl;
        return verdict;
    }
    for (size_t i = 0; i < verdict.input_fractions.size(); ++i) {
        if (verdict.input_fractions[i] >= ensemble.params.theta) {
            verdict.tag = VerdictTag::InternalChange;
            verdict.matched_member = static_cast<int>(i);
            return verdict;
        }
    }
    verdict.tag = VerdictTag::NewRegime;
    return verdict;
}

Ensemble add_member(const Ensemble& ensemble, const std::vector<Dataset>& datasets,
                    const NarxConfig& config) {
    if (datasets.size() != ensemble.members.size() + 1) {
        throw DimensionError("add_member: datasets must cover existing members plus the new one");
    }
    Ensemble next = ensemble;
    EnsembleMember member;
    member.model = fit_base_model(datasets.back(), config);
    member.dataset_id = datasets.back().id;
    if (!next.members.empty() &&
        (member.model.n_u != next.members.front().model.n_u ||
         member.model.n_y != next.members.front().model.n_y)) {
        throw DimensionError("add_member: dataset dimensions differ from existing members");
    }
    next.members.push_back(std::move(member));
    return characterize(std::move(next), datasets);
}

Ensemble reset(const Ensemble& ensemble) {
    Ensemble empty;
    empty.params = ensemble.params;
    return empty;
}

}  // namespace fastslow
