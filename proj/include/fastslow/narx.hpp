#pragma once

#include <Eigen/Dense>
#include <deque>

#include "fastslow/dataset.hpp"

namespace fastslow {

struct NarxConfig {
    int n_a = 2;        // output lags
    int n_b = 2;        // input lags (includes the current input)
    double ridge = 1e-4;
    bool nonlinear_features = true;  // append elementwise tanh of the lag block
};

struct Scaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd std_dev;  // floored

    Eigen::VectorXd scale(const Eigen::VectorXd& v) const {
        return (v - mean).cwiseQuotient(std_dev);
    }
    Eigen::VectorXd unscale(const Eigen::VectorXd& v) const {
        return v.cwiseProduct(std_dev) + mean;
    }
};

Scaler fit_scaler(const Eigen::MatrixXd& data, double eps_std = 1e-12);

// Multi-output NARX model fitted by ridge least squares on scaled data and
// simulated in free run (its own predictions fed back as output lags).
struct BaseModel {
    NarxConfig config;
    Eigen::MatrixXd coefficients;  // n_y x feature_dim
    int n_u = 0;
    int n_y = 0;
    Scaler input_scaler;
    Scaler output_scaler;

    int lag_block_dim() const { return config.n_a * n_y + config.n_b * n_u; }
    int feature_dim() const {
        return lag_block_dim() + 1 + (config.nonlinear_features ? lag_block_dim() : 0);
    }
};

// Free-run lag state in scaled space. Cold start is all zeros, i.e. the
// signal means in raw units.
struct LagState {
    std::deque<Eigen::VectorXd> y_hist;  // front = most recent prediction
    std::deque<Eigen::VectorXd> u_hist;  // front = most recent input, n_b - 1 deep

    static LagState cold(const BaseModel& model);
};

BaseModel fit_base_model(const Dataset& dataset, const NarxConfig& config);

// Advances the free-run state by one sample and returns the raw-unit output.
Eigen::VectorXd narx_step(const BaseModel& model, LagState& state, const Eigen::VectorXd& u);

// Free-run simulation over an input sequence (rows = samples).
Eigen::MatrixXd simulate(const BaseModel& model, const Eigen::MatrixXd& inputs, LagState state);

// Training loss the fit minimizes: sum of squared scaled residuals over the
// regression rows plus ridge * ||coefficients||^2. Exposed for testing.
double training_loss(const BaseModel& model, const Dataset& dataset);

}  // namespace fastslow
