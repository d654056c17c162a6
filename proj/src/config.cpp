#include "fastslow/config.hpp"

#include <fstream>
#include <json.hpp>

#include "fastslow/errors.hpp"

namespace fastslow {

using json = nlohmann::ordered_json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vec_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    return v;
}

json plant_to_json(const PlantConfig& p) {
    json j;
    j["n_u"] = p.n_u;
    j["n_y"] = p.n_y;
    j["n_x"] = p.n_x;
    j["n_ctrl"] = p.n_ctrl;
    j["regimes"] = json::array();
    for (const auto& r : p.regimes) {
        j["regimes"].push_back({{"dist_low", vec_to_json(r.dist_low)},
                                {"dist_high", vec_to_json(r.dist_high)},
                                {"gain", r.gain}});
    }
    j["noise_std"] = vec_to_json(p.noise_std);
    j["drift"] = {{"amplitude", p.drift.amplitude}, {"period", p.drift.period}};
    j["spectral_radius"] = p.spectral_radius;
    j["u_center"] = vec_to_json(p.u_center);
    j["u_scale"] = vec_to_json(p.u_scale);
    j["seed"] = p.seed;
    return j;
}

PlantConfig plant_from_json(const json& j) {
    PlantConfig p;
    p.n_u = j.at("n_u").get<int>();
    p.n_y = j.at("n_y").get<int>();
    p.n_x = j.at("n_x").get<int>();
    p.n_ctrl = j.at("n_ctrl").get<int>();
    for (const auto& r : j.at("regimes")) {
        RegimeSpec rs;
        rs.dist_low = vec_from_json(r.at("dist_low"));
        rs.dist_high = vec_from_json(r.at("dist_high"));
        rs.gain = r.at("gain").get<double>();
        p.regimes.push_back(std::move(rs));
    }
    p.noise_std = vec_from_json(j.at("noise_std"));
    p.drift.amplitude = j.at("drift").at("amplitude").get<double>();
    p.drift.period = j.at("drift").at("period").get<double>();
    p.spectral_radius = j.at("spectral_radius").get<double>();
    p.u_center = vec_from_json(j.at("u_center"));
    p.u_scale = vec_from_json(j.at("u_scale"));
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

}  // namespace

Config desk_preset() {
    Config c;
    c.plant.n_u = 3;
    c.plant.n_y = 3;
    c.plant.n_x = 4;
    c.plant.n_ctrl = 1;
    {
        RegimeSpec low;
        low.dist_low = Eigen::Vector2d(100.0, 100.0);
        low.dist_high = Eigen::Vector2d(300.0, 300.0);
        RegimeSpec high;
        high.dist_low = Eigen::Vector2d(150.0, 150.0);
        high.dist_high = Eigen::Vector2d(350.0, 350.0);
        high.gain = 1.15;  // seasonal regimes shift the effective dynamics too
        c.plant.regimes = {low, high};
    }
    c.plant.noise_std = Eigen::Vector3d::Constant(0.01);
    c.plant.drift = DriftSpec{0.05, 500.0};
    c.plant.spectral_radius = 0.5;
    c.plant.u_center = Eigen::Vector3d(0.0, 225.0, 225.0);
    // Tight disturbance normalization drives the nonlinearity across regimes.
    c.plant.u_scale = Eigen::Vector3d(1.0, 60.0, 60.0);
    c.plant.seed = 2;

    c.excitation = ExcitationSpec{};

    c.narx = NarxConfig{};
    c.ensemble = EnsembleParams{};
    // The free-run error process produces correlated excursion bursts of up
    // to ~15 samples; the acceptance fraction must tolerate one burst per
    // monitored batch. The strict per-sample rate stays one config key away.
    c.ensemble.theta = 0.92;
    c.ensemble.warmup_skip = 20;  // free-run re-anchoring horizon for cold batch starts
    c.ensemble.chart_block_len = 200;  // = n_mon: reference errors share the batch age profile
    c.gp = GpConfig{};
    c.gp.retrain_every = 25;  // per-sample prediction, periodic refresh
    c.gp.warm_iters = 8;
    c.gp.opt_iters = 40;

    c.scenario = "two_regime";
    c.n_mon = 200;
    // The contiguous test split (30%) must span a full drift period so the
    // error chart sees every drift phase.
    c.train_len = 2000;
    c.test_half = 400;
    c.in_regime_batches = 2;
    c.seed = 2;
    return c;
}

Config aroma_preset() {
    Config c = desk_preset();
    c.plant.n_u = 6;
    c.plant.n_y = 17;
    c.plant.n_x = 12;
    c.plant.n_ctrl = 1;
    {
        RegimeSpec low;
        low.dist_low = Eigen::VectorXd::Constant(5, 100.0);
        low.dist_high = Eigen::VectorXd::Constant(5, 300.0);
        RegimeSpec high;
        high.dist_low = Eigen::VectorXd::Constant(5, 150.0);
        high.dist_high = Eigen::VectorXd::Constant(5, 350.0);
        c.plant.regimes = {low, high};
    }
    c.plant.noise_std = Eigen::VectorXd::Constant(17, 0.01);
    c.plant.u_center = Eigen::VectorXd::Constant(6, 225.0);
    c.plant.u_center(0) = 0.0;
    c.plant.u_scale = Eigen::VectorXd::Constant(6, 125.0);
    c.plant.u_scale(0) = 1.0;
    c.n_mon = 288;           // one day at 5-minute sampling
    c.train_len = 2016;      // one week
    c.test_half = 288;
    return c;
}

void validate(const Config& c) {
    auto fail = [](const std::string& key, const std::string& what) {
        throw ConfigError("config." + key + ": " + what);
    };
    if (c.plant.n_u < 1) fail("plant.n_u", "must be positive");
    if (c.plant.n_y < 1) fail("plant.n_y", "must be positive");
    if (c.plant.n_x < 1) fail("plant.n_x", "must be positive");
    if (c.plant.n_ctrl < 0 || c.plant.n_ctrl > c.plant.n_u) fail("plant.n_ctrl", "out of range");
    if (c.plant.regimes.empty()) fail("plant.regimes", "need at least one regime");
    for (size_t i = 0; i < c.plant.regimes.size(); ++i) {
        const auto& r = c.plant.regimes[i];
        if (r.dist_low.size() != c.plant.n_dist() || r.dist_high.size() != c.plant.n_dist()) {
            fail("plant.regimes[" + std::to_string(i) + "]", "band dimension mismatch");
        }
        if (((r.dist_high - r.dist_low).array() <= 0.0).any()) {
            fail("plant.regimes[" + std::to_string(i) + "]", "degenerate band");
        }
    }
    if (c.plant.noise_std.size() != c.plant.n_y) fail("plant.noise_std", "dimension mismatch");
    if (!(c.plant.spectral_radius > 0.0 && c.plant.spectral_radius < 1.0)) {
        fail("plant.spectral_radius", "must lie in (0, 1)");
    }
    if (c.excitation.mprbs_levels < 2) fail("excitation.mprbs_levels", "need at least 2 levels");
    if (c.excitation.dwell < 1) fail("excitation.dwell", "must be positive");
    if (!(c.excitation.smoothness >= 0.0 && c.excitation.smoothness < 1.0)) {
        fail("excitation.smoothness", "must lie in [0, 1)");
    }
    if (!(c.excitation.spread > 0.0 && c.excitation.spread <= 1.0)) {
        fail("excitation.spread", "must lie in (0, 1]");
    }
    if (c.narx.n_a < 0) fail("narx.n_a", "must be non-negative");
    if (c.narx.n_b < 1) fail("narx.n_b", "must be positive");
    if (c.narx.ridge < 0.0) fail("narx.ridge", "must be non-negative");
    if (!(c.ensemble.theta > 0.0 && c.ensemble.theta <= 1.0)) {
        fail("ensemble.theta", "must lie in (0, 1]");
    }
    if (!(c.ensemble.spc.percentile_j > 0.0 && c.ensemble.spc.percentile_j < 100.0)) {
        fail("ensemble.spc.percentile_j", "must lie in (0, 100)");
    }
    if (!(c.ensemble.weight_floor > 0.0)) fail("ensemble.weight_floor", "must be positive");
    if (!(c.ensemble.split_ratio > 0.0 && c.ensemble.split_ratio < 1.0)) {
        fail("ensemble.split_ratio", "must lie in (0, 1)");
    }
    if (c.ensemble.warmup_skip < 0 || c.ensemble.warmup_skip >= c.n_mon / 2) {
        fail("ensemble.warmup_skip", "must lie in [0, n_mon/2)");
    }
    if (c.ensemble.chart_block_len != 0 &&
        c.ensemble.chart_block_len <= 2 * c.ensemble.warmup_skip) {
        fail("ensemble.chart_block_len", "must be 0 or larger than twice warmup_skip");
    }
    if (c.gp.n_r_e < 1) fail("gp.n_r_e", "must be positive");
    if (c.gp.n_r_y < 0) fail("gp.n_r_y", "must be non-negative");
    if (c.gp.k_min < 1) fail("gp.k_min", "must be positive");
    if (c.gp.k_max < c.gp.k_min) fail("gp.k_max", "must be >= k_min");
    if (c.gp.retrain_every < 1) fail("gp.retrain_every", "must be positive");
    if (!(c.gp.jitter_rel > 0.0)) fail("gp.jitter_rel", "must be positive");
    if (c.scenario != "two_regime" && c.scenario != "internal_change" &&
        c.scenario != "stationary") {
        fail("scenario", "must be one of two_regime|internal_change|stationary");
    }
    if (c.scenario == "two_regime" && c.plant.regimes.size() < 2) {
        fail("plant.regimes", "two_regime scenario needs two regimes");
    }
    if (c.n_mon < 10) fail("n_mon", "monitoring batch too small");
    if (c.train_len < 50) fail("train_len", "training batch too small");
    if (c.train_len % c.n_mon != 0) fail("train_len", "must be a multiple of n_mon");
    if (c.test_half < c.n_mon) fail("test_half", "must cover at least one monitoring batch");
    if (c.test_half % c.n_mon != 0) fail("test_half", "must be a multiple of n_mon");
    if (c.in_regime_batches < 1) fail("in_regime_batches", "must be positive");
    if (c.internal_change_gain <= 0.0) fail("internal_change_gain", "must be positive");
    if (c.out_dir.empty()) fail("out_dir", "must not be empty");
}

std::string config_to_json_string(const Config& c) {
    json j;
    j["plant"] = plant_to_json(c.plant);
    j["excitation"] = {{"mprbs_levels", c.excitation.mprbs_levels},
                       {"ctrl_min", c.excitation.ctrl_min},
                       {"ctrl_max", c.excitation.ctrl_max},
                       {"dwell", c.excitation.dwell},
                       {"smoothness", c.excitation.smoothness},
                       {"spread", c.excitation.spread}};
    j["narx"] = {{"n_a", c.narx.n_a},
                 {"n_b", c.narx.n_b},
                 {"ridge", c.narx.ridge},
                 {"nonlinear_features", c.narx.nonlinear_features}};
    j["ensemble"] = {{"percentile_j", c.ensemble.spc.percentile_j},
                     {"eps_cov_rel", c.ensemble.spc.eps_cov_rel},
                     {"eps_std", c.ensemble.spc.eps_std},
                     {"weight_floor", c.ensemble.weight_floor},
                     {"split_ratio", c.ensemble.split_ratio},
                     {"theta", c.ensemble.theta},
                     {"warmup_skip", c.ensemble.warmup_skip},
                     {"chart_block_len", c.ensemble.chart_block_len}};
    j["gp"] = {{"n_r_e", c.gp.n_r_e},
               {"n_r_y", c.gp.n_r_y},
               {"k_min", c.gp.k_min},
               {"k_max", c.gp.k_max},
               {"retrain_every", c.gp.retrain_every},
               {"jitter_rel", c.gp.jitter_rel},
               {"opt_iters", c.gp.opt_iters},
               {"opt_starts", c.gp.opt_starts},
               {"warm_iters", c.gp.warm_iters}};
    j["scenario"] = c.scenario;
    j["n_mon"] = c.n_mon;
    j["train_len"] = c.train_len;
    j["test_half"] = c.test_half;
    j["in_regime_batches"] = c.in_regime_batches;
    j["internal_change_gain"] = c.internal_change_gain;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    return j.dump(2) + "\n";
}

Config config_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    Config c;
    try {
        c.plant = plant_from_json(j.at("plant"));
        const auto& e = j.at("excitation");
        c.excitation.mprbs_levels = e.at("mprbs_levels").get<int>();
        c.excitation.ctrl_min = e.at("ctrl_min").get<double>();
        c.excitation.ctrl_max = e.at("ctrl_max").get<double>();
        c.excitation.dwell = e.at("dwell").get<int>();
        c.excitation.smoothness = e.at("smoothness").get<double>();
        c.excitation.spread = e.at("spread").get<double>();
        const auto& n = j.at("narx");
        c.narx.n_a = n.at("n_a").get<int>();
        c.narx.n_b = n.at("n_b").get<int>();
        c.narx.ridge = n.at("ridge").get<double>();
        c.narx.nonlinear_features = n.at("nonlinear_features").get<bool>();
        const auto& en = j.at("ensemble");
        c.ensemble.spc.percentile_j = en.at("percentile_j").get<double>();
        c.ensemble.spc.eps_cov_rel = en.at("eps_cov_rel").get<double>();
        c.ensemble.spc.eps_std = en.at("eps_std").get<double>();
        c.ensemble.weight_floor = en.at("weight_floor").get<double>();
        c.ensemble.split_ratio = en.at("split_ratio").get<double>();
        c.ensemble.theta = en.at("theta").get<double>();
        c.ensemble.warmup_skip = en.at("warmup_skip").get<int>();
        c.ensemble.chart_block_len = en.at("chart_block_len").get<int>();
        const auto& g = j.at("gp");
        c.gp.n_r_e = g.at("n_r_e").get<int>();
        c.gp.n_r_y = g.at("n_r_y").get<int>();
        c.gp.k_min = g.at("k_min").get<int>();
        c.gp.k_max = g.at("k_max").get<int>();
        c.gp.retrain_every = g.at("retrain_every").get<int>();
        c.gp.jitter_rel = g.at("jitter_rel").get<double>();
        c.gp.opt_iters = g.at("opt_iters").get<int>();
        c.gp.opt_starts = g.at("opt_starts").get<int>();
        c.gp.warm_iters = g.at("warm_iters").get<int>();
        c.scenario = j.at("scenario").get<std::string>();
        c.n_mon = j.at("n_mon").get<int>();
        c.train_len = j.at("train_len").get<int>();
        c.test_half = j.at("test_half").get<int>();
        c.in_regime_batches = j.at("in_regime_batches").get<int>();
        c.internal_change_gain = j.at("internal_change_gain").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.out_dir = j.at("out_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    return c;
}

void save_config(const Config& config, const std::string& path) {
    atomic_write_file(path, config_to_json_string(config));
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_string(text);
}

}  // namespace fastslow
