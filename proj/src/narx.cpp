#include "fastslow/narx.hpp"

#include <cmath>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

// Scaled lag block at row k: [y(k-1)..y(k-n_a), u(k)..u(k-n_b+1)].
Eigen::VectorXd lag_block(const NarxConfig& cfg, const Eigen::MatrixXd& y_scaled,
                          const Eigen::MatrixXd& u_scaled, Eigen::Index k) {
    const Eigen::Index n_y = y_scaled.cols();
    const Eigen::Index n_u = u_scaled.cols();
    Eigen::VectorXd block(cfg.n_a * n_y + cfg.n_b * n_u);
    Eigen::Index pos = 0;
    for (int lag = 1; lag <= cfg.n_a; ++lag) {
        block.segment(pos, n_y) = y_scaled.row(k - lag).transpose();
        pos += n_y;
    }
    for (int lag = 0; lag < cfg.n_b; ++lag) {
        block.segment(pos, n_u) = u_scaled.row(k - lag).transpose();
        pos += n_u;
    }
    return block;
}

Eigen::VectorXd features_from_block(const NarxConfig& cfg, const Eigen::VectorXd& block) {
    const Eigen::Index L = block.size();
    Eigen::VectorXd phi(L + 1 + (cfg.nonlinear_features ? L : 0));
    phi.head(L) = block;
    phi(L) = 1.0;
    if (cfg.nonlinear_features) phi.tail(L) = block.array().tanh();
    return phi;
}

void validate_config(const NarxConfig& cfg) {
    if (cfg.n_a < 0 || cfg.n_b < 1 || cfg.n_a + cfg.n_b < 1) {
        throw ConfigError("narx: require n_a >= 0, n_b >= 1");
    }
    if (cfg.ridge < 0.0) throw ConfigError("narx: ridge must be non-negative");
}

}  // namespace

Scaler fit_scaler(const Eigen::MatrixXd& data, double eps_std) {
    Scaler s;
    s.mean = data.colwise().mean();
    Eigen::MatrixXd centered = data.rowwise() - s.mean.transpose();
    const double denom = data.rows() > 1 ? double(data.rows() - 1) : 1.0;
    Eigen::VectorXd var = centered.colwise().squaredNorm() / denom;
    s.std_dev = var.cwiseSqrt().cwiseMax(eps_std);
    return s;
}

LagState LagState::cold(const BaseModel& model) {
    LagState st;
    for (int i = 0; i < model.config.n_a; ++i) st.y_hist.emplace_back(Eigen::VectorXd::Zero(model.n_y));
    for (int i = 0; i < model.config.n_b - 1; ++i) st.u_hist.emplace_back(Eigen::VectorXd::Zero(model.n_u));
    return st;
}

BaseModel fit_base_model(const Dataset& dataset, const NarxConfig& config) {
    validate_config(config);
    const Eigen::Index n = dataset.size();
    const Eigen::Index n_u = dataset.input_dim();
    const Eigen::Index n_y = dataset.output_dim();
    if (!dataset.inputs.allFinite() || !dataset.outputs.allFinite()) {
        throw InvalidDataError("fit_base_model: non-finite entry in dataset");
    }

    BaseModel model;
    model.config = config;
    model.n_u = static_cast<int>(n_u);
    model.n_y = static_cast<int>(n_y);
    model.input_scaler = fit_scaler(dataset.inputs);
    model.output_scaler = fit_scaler(dataset.outputs);

    const Eigen::Index F = model.feature_dim();
    const Eigen::Index k0 = std::max<Eigen::Index>(config.n_a, config.n_b - 1);
    if (n <= config.n_a + config.n_b + F) {
        throw InsufficientDataError("fit_base_model: dataset too short for regressor");
    }

    Eigen::MatrixXd u_scaled(n, n_u), y_scaled(n, n_y);
    for (Eigen::Index k = 0; k < n; ++k) {
        u_scaled.row(k) = model.input_scaler.scale(dataset.inputs.row(k).transpose()).transpose();
        y_scaled.row(k) = model.output_scaler.scale(dataset.outputs.row(k).transpose()).transpose();
    }

    const Eigen::Index rows = n - k0;
    Eigen::MatrixXd phi(rows, F);
    Eigen::MatrixXd target(rows, n_y);
    for (Eigen::Index k = k0; k < n; ++k) {
        phi.row(k - k0) = features_from_block(config, lag_block(config, y_scaled, u_scaled, k)).transpose();
        target.row(k - k0) = y_scaled.row(k);
    }

    Eigen::MatrixXd gram = phi.transpose() * phi;
    gram.diagonal().array() += config.ridge;
    Eigen::MatrixXd rhs = phi.transpose() * target;

    if (config.ridge == 0.0) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
        if (!lu.isInvertible()) {
            throw SingularFitError("fit_base_model: rank-deficient normal equations with ridge = 0");
        }
        model.coefficients = lu.solve(rhs).transpose();
    } else {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        if (ldlt.info() != Eigen::Success) {
            throw SingularFitError("fit_base_model: normal equations factorization failed");
        }
        model.coefficients = ldlt.solve(rhs).transpose();
    }
    if (!model.coefficients.allFinite()) {
        throw SingularFitError("fit_base_model: non-finite coefficients");
    }
    return model;
}

Eigen::VectorXd narx_step(const BaseModel& model, LagState& state, const Eigen::VectorXd& u) {
    if (u.size() != model.n_u) throw DimensionError("narx_step: input dimension mismatch");
    if (static_cast<int>(state.y_hist.size()) != model.config.n_a ||
        static_cast<int>(state.u_hist.size()) != model.config.n_b - 1) {
        throw DimensionError("narx_step: lag buffer depth mismatch");
    }

    const Eigen::VectorXd u_scaled = model.input_scaler.scale(u);
    Eigen::VectorXd block(model.lag_block_dim());
    Eigen::Index pos = 0;
    for (const auto& y : state.y_hist) {
        block.segment(pos, model.n_y) = y;
        pos += model.n_y;
    }
    block.segment(pos, model.n_u) = u_scaled;
    pos += model.n_u;
    for (const auto& uu : state.u_hist) {
        block.segment(pos, model.n_u) = uu;
        pos += model.n_u;
    }

    Eigen::VectorXd y_scaled = model.coefficients * features_from_block(model.config, block);

    if (model.config.n_a > 0) {
        state.y_hist.push_front(y_scaled);
        state.y_hist.pop_back();
    }
    if (model.config.n_b > 1) {
        state.u_hist.push_front(u_scaled);
        state.u_hist.pop_back();
    }
    return model.output_scaler.unscale(y_scaled);
}

Eigen::MatrixXd simulate(const BaseModel& model, const Eigen::MatrixXd& inputs, LagState state) {
    Eigen::MatrixXd out(inputs.rows(), model.n_y);
    for (Eigen::Index k = 0; k < inputs.rows(); ++k) {
        out.row(k) = narx_step(model, state, inputs.row(k).transpose()).transpose();
    }
    return out;
}

double training_loss(const BaseModel& model, const Dataset& dataset) {
    const Eigen::Index n = dataset.size();
    const Eigen::Index k0 = std::max<Eigen::Index>(model.config.n_a, model.config.n_b - 1);
    Eigen::MatrixXd u_scaled(n, model.n_u), y_scaled(n, model.n_y);
    for (Eigen::Index k = 0; k < n; ++k) {
        u_scaled.row(k) = model.input_scaler.scale(dataset.inputs.row(k).transpose()).transpose();
        y_scaled.row(k) = model.output_scaler.scale(dataset.outputs.row(k).transpose()).transpose();
    }
    double loss = 0.0;
    for (Eigen::Index k = k0; k < n; ++k) {
        Eigen::VectorXd phi =
            features_from_block(model.config, lag_block(model.config, y_scaled, u_scaled, k));
        loss += (y_scaled.row(k).transpose() - model.coefficients * phi).squaredNorm();
    }
    return loss + model.config.ridge * model.coefficients.squaredNorm();
}

}  // namespace fastslow
