#include "fastslow/plant.hpp"

#include <cmath>
#include <random>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

constexpr double kTwoPi = 6.283185307179586;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = a * 0x9e3779b97f4a7c15ULL + b + 0x7f4a7c15ULL;
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& eng, Eigen::Index rows, Eigen::Index cols) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unit(eng);
    return m;
}

double spectral_radius(const Eigen::MatrixXd& m) {
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

SyntheticPlant::SyntheticPlant(PlantConfig config) : config_(std::move(config)) {
    if (config_.n_ctrl < 0 || config_.n_ctrl > config_.n_u) {
        throw ConfigError("plant: n_ctrl out of range");
    }
    if (config_.regimes.empty()) throw ConfigError("plant: at least one regime required");
    for (const auto& r : config_.regimes) {
        if (r.dist_low.size() != config_.n_dist() || r.dist_high.size() != config_.n_dist()) {
            throw ConfigError("plant: regime band dimension mismatch");
        }
        if (((r.dist_high - r.dist_low).array() <= 0.0).any()) {
            throw ConfigError("plant: degenerate disturbance band");
        }
    }
    if (config_.noise_std.size() != config_.n_y) {
        throw ConfigError("plant: noise_std dimension mismatch");
    }
    if (config_.u_center.size() != config_.n_u || config_.u_scale.size() != config_.n_u ||
        (config_.u_scale.array() <= 0.0).any()) {
        throw ConfigError("plant: input normalization must cover all channels");
    }

    std::mt19937_64 eng(mix(config_.seed, 0xA11CE));
    a_ = random_matrix(eng, config_.n_x, config_.n_x);
    const double rho = spectral_radius(a_);
    if (rho > 0.0) a_ *= config_.spectral_radius / rho;
    b_ = random_matrix(eng, config_.n_x, config_.n_u);
    w_ = random_matrix(eng, config_.n_u, config_.n_u);
    c_ = random_matrix(eng, config_.n_y, config_.n_x);
    d_ = 0.3 * random_matrix(eng, config_.n_y, config_.n_u);
}

PlantState SyntheticPlant::initial_state() const {
    PlantState st;
    st.x = Eigen::VectorXd::Zero(config_.n_x);
    return st;
}

Eigen::VectorXd SyntheticPlant::step(PlantState& state, const Eigen::VectorXd& u) const {
    if (u.size() != config_.n_u) throw DimensionError("plant step: input dimension mismatch");
    const Eigen::VectorXd u_n = (u - config_.u_center).cwiseQuotient(config_.u_scale);

    Eigen::VectorXd y = c_ * state.x + d_ * u_n;
    if (config_.drift.amplitude != 0.0) {
        for (int j = 0; j < config_.n_y; ++j) {
            const double phase = kTwoPi * double(j) / double(config_.n_y);
            y(j) += config_.drift.amplitude *
                    std::sin(kTwoPi * double(state.k) / config_.drift.period + phase);
        }
    }
    if ((config_.noise_std.array() > 0.0).any()) {
        std::mt19937_64 eng(mix(config_.seed, state.k * 2 + 1));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int j = 0; j < config_.n_y; ++j) y(j) += config_.noise_std(j) * gauss(eng);
    }

    state.x = state.gain * (a_ * state.x) + b_ * (w_ * u_n).array().tanh().matrix();
    state.k += 1;
    return y;
}

Eigen::MatrixXd generate_excitation(const PlantConfig& plant, const ExcitationSpec& spec,
                                    int regime, Eigen::Index length, std::uint64_t seed) {
    if (regime < 0 || regime >= static_cast<int>(plant.regimes.size())) {
        throw RegimeError("generate_excitation: regime index out of range");
    }
    if (spec.mprbs_levels < 2 || spec.dwell < 1) {
        throw ConfigError("generate_excitation: need at least 2 levels and dwell >= 1");
    }
    const RegimeSpec& band = plant.regimes[static_cast<size_t>(regime)];
    Eigen::MatrixXd u(length, plant.n_u);

    for (int ch = 0; ch < plant.n_ctrl; ++ch) {
        std::mt19937_64 eng(mix(seed, mix(0xC0DE, static_cast<std::uint64_t>(ch))));
        std::uniform_int_distribution<int> pick(0, spec.mprbs_levels - 1);
        const double step_size = (spec.ctrl_max - spec.ctrl_min) / double(spec.mprbs_levels - 1);
        double level = spec.ctrl_min + pick(eng) * step_size;
        for (Eigen::Index k = 0; k < length; ++k) {
            if (k % spec.dwell == 0) level = spec.ctrl_min + pick(eng) * step_size;
            u(k, ch) = level;
        }
    }

    for (int d = 0; d < plant.n_dist(); ++d) {
        std::mt19937_64 eng(
            mix(seed, mix(0xD157, mix(static_cast<std::uint64_t>(regime), static_cast<std::uint64_t>(d)))));
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        const double center = 0.5 * (band.dist_low(d) + band.dist_high(d));
        const double half = 0.5 * (band.dist_high(d) - band.dist_low(d));
        const double a = spec.smoothness;
        // Stationary std of the filtered uniform noise; used to rescale the
        // profile so `spread` is the fraction of the half-range exercised.
        const double z_std = (1.0 - a) / std::sqrt((1.0 - a * a) * 3.0);
        double z = 0.0;
        for (Eigen::Index k = 0; k < length; ++k) {
            z = a * z + (1.0 - a) * unit(eng);
            const double scaled = std::clamp(z / (2.5 * z_std), -1.0, 1.0);
            u(k, plant.n_ctrl + d) = center + half * spec.spread * scaled;
        }
    }
    return u;
}

Dataset simulate_plant(const SyntheticPlant& plant, const ExcitationSpec& spec, int regime,
                       Eigen::Index length, std::uint64_t seed) {
    const Eigen::MatrixXd u = generate_excitation(plant.config(), spec, regime, length, seed);
    PlantState st = plant.initial_state();
    st.gain = plant.config().regimes[static_cast<size_t>(regime)].gain;
    Eigen::MatrixXd y(length, plant.config().n_y);
    for (Eigen::Index k = 0; k < length; ++k) {
        y.row(k) = plant.step(st, u.row(k).transpose()).transpose();
    }
    return Dataset(u, y, "regime" + std::to_string(regime));
}

}  // namespace fastslow
