#include "fastslow/runtime.hpp"

#include <cmath>
#include <limits>

#include "fastslow/errors.hpp"

namespace fastslow {

Runtime::Runtime(RuntimeConfig config, int n_u, int n_y)
    : cfg_(std::move(config)), n_u_(n_u), n_y_(n_y), comp_(n_y, cfg_.gp) {
    ensemble_.params = cfg_.ensemble;
    pending_.inputs.resize(0, n_u);
    pending_.outputs.resize(0, n_y);
    mon_buffer_.inputs.resize(0, n_u);
    mon_buffer_.outputs.resize(0, n_y);
    member_counts_.emplace_back(0, 0);
}

void Runtime::adopt(Ensemble ensemble, std::vector<Dataset> datasets) {
    if (ensemble.size() != static_cast<int>(datasets.size())) {
        throw DimensionError("Runtime::adopt: one dataset per member required");
    }
    ensemble_ = std::move(ensemble);
    datasets_ = std::move(datasets);
    run_state_ = EnsembleRunState::cold(ensemble_);
    comp_.reset();
    dataset_counter_ = static_cast<int>(datasets_.size());
    phase_ = ensemble_.size() > 0 ? Phase::Monitoring : Phase::Collecting;
    member_counts_.back() = {k_, ensemble_.size()};
}

Eigen::VectorXd Runtime::step(const Eigen::VectorXd& u, const Eigen::VectorXd& y_p) {
    if (u.size() != n_u_ || y_p.size() != n_y_) {
        throw DimensionError("Runtime::step: sample dimension mismatch");
    }

    StepRecord rec;
    rec.k = k_;
    rec.phase = phase_;
    rec.member_count = ensemble_.size();
    rec.u = u;
    rec.y_p = y_p;

    Eigen::VectorXd y;
    if (ensemble_.size() > 0) {
        const auto sres = ensemble_step(ensemble_, run_state_, u);
        const Eigen::VectorXd e_hat = comp_.held_correction();
        y = sres.y_s + e_hat;  // emitted before y_p is consumed below
        rec.y_s = sres.y_s;
        rec.e_hat = e_hat;
        rec.lambda = sres.lambda;

        const bool retrain =
            cfg_.gp.retrain_every <= 1 || (comp_.step_count() % cfg_.gp.retrain_every == 0);
        comp_.step(sres.y_s, y_p, retrain);
        rec.gp_window = comp_.window_size(0);
        rec.gp_retrained = comp_.retrained_last_step();
        rec.gp_lml.resize(n_y_);
        for (int j = 0; j < n_y_; ++j) rec.gp_lml(j) = comp_.last_lml(j);
    } else {
        y = y_p;  // warm-up passthrough
        rec.warmup = true;
        rec.y_s = Eigen::VectorXd::Zero(n_y_);
        rec.e_hat = Eigen::VectorXd::Zero(n_y_);
        rec.gp_lml = Eigen::VectorXd::Zero(n_y_);
    }
    rec.y = y;

    if (phase_ == Phase::Collecting) {
        pending_.append(u, y_p);
        if (pending_.size() >= cfg_.train_len) integrate_pending();
    } else {
        mon_buffer_.append(u, y_p);
        if (mon_buffer_.size() >= cfg_.n_mon) {
            apply_verdict(monitor(ensemble_, mon_buffer_));
            mon_buffer_.clear();
        }
    }

    if (logging_) log_.push_back(std::move(rec));
    ++k_;
    return y;
}

void Runtime::integrate_pending() {
    ++dataset_counter_;
    pending_.id = "D" + std::to_string(dataset_counter_);
    datasets_.push_back(std::move(pending_));
    ensemble_ = add_member(ensemble_, datasets_, cfg_.narx);
    run_state_.member_states.push_back(LagState::cold(ensemble_.members.back().model));
    comp_.reset();  // the error the compensator tracks has a new distribution

    pending_ = Dataset();
    pending_.inputs.resize(0, n_u_);
    pending_.outputs.resize(0, n_y_);
    mon_buffer_.clear();
    phase_ = Phase::Monitoring;
    member_counts_.emplace_back(k_, ensemble_.size());
}

void Runtime::apply_verdict(const MonitorVerdict& verdict) {
    switch (verdict.tag) {
        case VerdictTag::InControl:
            break;
        case VerdictTag::NewRegime:
            phase_ = Phase::Collecting;
            break;
        case VerdictTag::InternalChange:
            ensemble_ = reset(ensemble_);
            datasets_.clear();
            run_state_ = EnsembleRunState{};
            comp_.reset();
            phase_ = Phase::Collecting;
            member_counts_.emplace_back(k_, 0);
            break;
    }
    timeline_.push_back(VerdictEvent{k_, verdict.tag, verdict.error_fraction,
                                     verdict.matched_member, ensemble_.size()});
}

FitResult fit_index(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& measured) {
    if (predicted.rows() != measured.rows() || predicted.cols() != measured.cols()) {
        throw DimensionError("fit_index: shape mismatch");
    }
    if (measured.rows() < 2) throw InsufficientDataError("fit_index: need at least 2 samples");

    FitResult res;
    res.per_output.resize(measured.cols());
    double sum = 0.0;
    int counted = 0;
    for (Eigen::Index j = 0; j < measured.cols(); ++j) {
        const double mean = measured.col(j).mean();
        const double deviation = (measured.col(j).array() - mean).matrix().norm();
        if (deviation <= 0.0) {
            res.per_output(j) = std::numeric_limits<double>::quiet_NaN();
            res.excluded.push_back(static_cast<int>(j));
            continue;
        }
        const double residual = (predicted.col(j) - measured.col(j)).norm();
        res.per_output(j) = 100.0 * (1.0 - residual / deviation);
        sum += res.per_output(j);
        ++counted;
    }
    if (counted == 0) throw InvalidDataError("fit_index: every channel has zero variance");
    res.mean_fit = sum / counted;
    return res;
}

}  // namespace fastslow
