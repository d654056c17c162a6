#include "fastslow/compensator.hpp"

#include "fastslow/errors.hpp"

namespace fastslow {

GpCompensator::GpCompensator(int n_y, GpConfig config) : n_y_(n_y), config_(config) {
    if (n_y < 1) throw ConfigError("GpCompensator: n_y must be positive");
    if (config.n_r_e < 1 || config.n_r_y < 0) {
        throw ConfigError("GpCompensator: regression horizons out of range");
    }
    if (config.k_min < 1 || config.k_max < config.k_min) {
        throw ConfigError("GpCompensator: require 1 <= k_min <= k_max");
    }
    e_hat_ = Eigen::VectorXd::Zero(n_y);
    for (int j = 0; j < n_y; ++j) {
        Channel ch{GpWindow(config.k_max), GpHyperparams{}, false, 0.0, false, {}};
        ch.hp.lengthscales = Eigen::VectorXd::Ones(nu_dim());
        ch.hp.jitter_rel = config.jitter_rel;
        channels_.push_back(std::move(ch));
    }
    reset();
}

void GpCompensator::reset() {
    k_ = 0;
    e_hat_.setZero();
    retrained_ = false;
    e_hist_.assign(static_cast<size_t>(config_.n_r_e), Eigen::VectorXd::Zero(n_y_));
    y_hist_.assign(static_cast<size_t>(config_.n_r_y) + 1, Eigen::VectorXd::Zero(n_y_));
    for (auto& ch : channels_) {
        ch.window.clear();
        ch.hp_ready = false;
        ch.last_lml = 0.0;
        ch.failed = false;
        ch.prev_nu.resize(0);
    }
}

Eigen::VectorXd GpCompensator::build_nu(int j) const {
    Eigen::VectorXd nu(nu_dim());
    Eigen::Index pos = 0;
    for (const auto& e : e_hist_) nu(pos++) = e(j);
    for (size_t i = 1; i < y_hist_.size(); ++i) nu(pos++) = y_hist_[i](j);
    nu(pos) = y_hist_.front()(j);
    return nu;
}

Eigen::VectorXd GpCompensator::step(const Eigen::VectorXd& y_s, const Eigen::VectorXd& y_p,
                                    bool retrain) {
    if (y_s.size() != n_y_ || y_p.size() != n_y_) {
        throw DimensionError("GpCompensator::step: output dimension mismatch");
    }
    const Eigen::VectorXd e = y_p - y_s;

    // Pair the previous step's regressor with the error it led to.
    if (k_ >= 1) {
        for (int j = 0; j < n_y_; ++j) {
            auto& ch = channels_[static_cast<size_t>(j)];
            ch.window.append(ch.prev_nu, e(j));
        }
    }

    e_hist_.push_front(e);
    e_hist_.pop_back();
    y_hist_.push_front(y_s);
    y_hist_.pop_back();

    retrained_ = false;
    if (k_ >= static_cast<std::uint64_t>(config_.k_min)) {
        // Active: predict the next-step error per channel.
        for (int j = 0; j < n_y_; ++j) {
            auto& ch = channels_[static_cast<size_t>(j)];
            ch.failed = false;
            const Eigen::VectorXd nu = build_nu(j);
            try {
                if (!ch.hp_ready) {
                    auto r = optimize_hyperparams(ch.window, heuristic_hyperparams(ch.window, config_.jitter_rel),
                                                  config_.opt_iters, config_.opt_starts);
                    ch.hp = r.hp;
                    ch.last_lml = r.lml;
                    ch.hp_ready = true;
                    retrained_ = true;
                } else if (retrain) {
                    auto r = optimize_hyperparams(ch.window, ch.hp, config_.warm_iters, 1);
                    ch.hp = r.hp;
                    ch.last_lml = r.lml;
                    retrained_ = true;
                }
                e_hat_(j) = gp_fit_predict(ch.window, ch.hp, nu);
            } catch (const NumericalFailureError&) {
                ch.failed = true;  // hold the previous correction for this channel
            }
        }
    }
    // Below k_min the held prediction simply carries over.

    for (int j = 0; j < n_y_; ++j) {
        channels_[static_cast<size_t>(j)].prev_nu = build_nu(j);
    }
    ++k_;
    return e_hat_;
}

}  // namespace fastslow
