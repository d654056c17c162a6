#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <vector>

#include "fastslow/gp.hpp"

namespace fastslow {

struct GpConfig {
    int n_r_e = 4;  // error regression horizon
    int n_r_y = 4;  // output regression horizon
    int k_min = 25;
    int k_max = 300;
    int retrain_every = 1;
    double jitter_rel = 1e-6;
    int opt_iters = 50;   // budget for the first full training
    int opt_starts = 3;
    int warm_iters = 10;  // budget for warm-started retraining
};

// Online corrector of the ensemble output error: one sliding-window GP per
// output channel, fed lagged errors and ensemble outputs. The correction
// applied at step k is the prediction held from step k-1; it stays zero until
// k_min samples have been observed.
class GpCompensator {
public:
    GpCompensator(int n_y, GpConfig config);

    // Prediction applied at the current step (zero before activation).
    const Eigen::VectorXd& held_correction() const { return e_hat_; }

    // Consumes the measured pair for step k and returns the correction to
    // apply at step k+1. Numerical failures in one channel hold that
    // channel's previous value and raise its failure flag.
    Eigen::VectorXd step(const Eigen::VectorXd& y_s, const Eigen::VectorXd& y_p, bool retrain);

    // Drops all windows, lag buffers, and held corrections (used when the
    // ensemble underneath changes and the error distribution moves).
    void reset();

    std::uint64_t step_count() const { return k_; }
    int output_dim() const { return n_y_; }
    const GpConfig& config() const { return config_; }

    int window_size(int j) const { return channels_[static_cast<size_t>(j)].window.size(); }
    double last_lml(int j) const { return channels_[static_cast<size_t>(j)].last_lml; }
    bool last_step_failed(int j) const { return channels_[static_cast<size_t>(j)].failed; }
    bool retrained_last_step() const { return retrained_; }
    const GpHyperparams& hyperparams(int j) const { return channels_[static_cast<size_t>(j)].hp; }

    int nu_dim() const { return config_.n_r_e + config_.n_r_y + 1; }

private:
    Eigen::VectorXd build_nu(int j) const;

    struct Channel {
        GpWindow window;
        GpHyperparams hp;
        bool hp_ready = false;
        double last_lml = 0.0;
        bool failed = false;
        Eigen::VectorXd prev_nu;
    };

    int n_y_;
    GpConfig config_;
    std::uint64_t k_ = 0;
    Eigen::VectorXd e_hat_;
    std::deque<Eigen::VectorXd> e_hist_;  // front = e_s(k), depth n_r_e
    std::deque<Eigen::VectorXd> y_hist_;  // front = y_s(k), depth n_r_y + 1
    std::vector<Channel> channels_;
    bool retrained_ = false;
};

}  // namespace fastslow
