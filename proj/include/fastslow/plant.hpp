#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fastslow/dataset.hpp"

namespace fastslow {

// One operating regime: a band per disturbance channel plus an optional
// state-map gain while the system runs in that regime.
struct RegimeSpec {
    Eigen::VectorXd dist_low;
    Eigen::VectorXd dist_high;
    double gain = 1.0;
};

struct DriftSpec {
    double amplitude = 0.0;       // additive output bias, signal units
    double period = 500.0;        // samples
};

struct PlantConfig {
    int n_u = 3;  // leading n_ctrl channels are controls, the rest disturbances
    int n_y = 3;
    int n_x = 4;
    int n_ctrl = 1;
    std::vector<RegimeSpec> regimes;
    Eigen::VectorXd noise_std;    // per output
    DriftSpec drift;
    double spectral_radius = 0.6; // of the nominal state map; keeps the
                                  // gain-injected variant comfortably stable
    // Affine input normalization applied inside the plant so that raw inputs
    // of arbitrary magnitude drive the dynamics at O(1).
    Eigen::VectorXd u_center;
    Eigen::VectorXd u_scale;
    std::uint64_t seed = 1;

    int n_dist() const { return n_u - n_ctrl; }
};

struct ExcitationSpec {
    int mprbs_levels = 5;
    double ctrl_min = -1.0;
    double ctrl_max = 1.0;
    int dwell = 20;            // samples per control level
    double smoothness = 0.85;  // disturbance filter pole in (0,1)
    double spread = 0.45;      // fraction of the regime half-range exercised
};

struct PlantState {
    Eigen::VectorXd x;
    std::uint64_t k = 0;
    double gain = 1.0;  // state-map multiplier currently in effect
};

// Discrete-time nonlinear plant x' = gain*A x + B tanh(W u_n), y = C x + D u_n
// plus sinusoidal drift and white measurement noise, all deterministic in
// (seed, step index). Matrices are drawn once from the seed; A is scaled to
// the configured spectral radius.
class SyntheticPlant {
public:
    explicit SyntheticPlant(PlantConfig config);

    PlantState initial_state() const;

    // Advances one sample and returns the measured output.
    Eigen::VectorXd step(PlantState& state, const Eigen::VectorXd& u) const;

    const PlantConfig& config() const { return config_; }
    const Eigen::MatrixXd& state_map() const { return a_; }

private:
    PlantConfig config_;
    Eigen::MatrixXd a_, b_, w_, c_, d_;
};

// MPRBS control channels plus smooth band-limited disturbance profiles
// confined to the regime's bands. Deterministic in (seed, regime).
Eigen::MatrixXd generate_excitation(const PlantConfig& plant, const ExcitationSpec& spec,
                                    int regime, Eigen::Index length, std::uint64_t seed);

// Convenience: excitation + simulation from a cold plant state.
Dataset simulate_plant(const SyntheticPlant& plant, const ExcitationSpec& spec, int regime,
                       Eigen::Index length, std::uint64_t seed);

}  // namespace fastslow
