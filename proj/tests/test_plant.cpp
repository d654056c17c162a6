#include <doctest.h>

#include <cstring>

#include "fastslow/config.hpp"
#include "fastslow/errors.hpp"
#include "fastslow/narx.hpp"
#include "fastslow/plant.hpp"
#include "fastslow/spc.hpp"

using namespace fastslow;

TEST_SUITE_BEGIN("plant");

namespace {

PlantConfig quiet_plant() {
    PlantConfig p = desk_preset().plant;
    p.noise_std.setZero();
    p.drift.amplitude = 0.0;
    return p;
}

}  // namespace

TEST_CASE("zero input and state stay at the origin without noise or drift") {
    PlantConfig cfg = quiet_plant();
    cfg.u_center.setZero();
    cfg.u_scale.setOnes();
    const SyntheticPlant plant(cfg);
    PlantState st = plant.initial_state();
    for (int k = 0; k < 50; ++k) {
        const Eigen::VectorXd y = plant.step(st, Eigen::Vector3d::Zero());
        CHECK(y.isZero());
    }
    CHECK(st.x.isZero());
}

TEST_CASE("constant input converges to a fixed point") {
    const SyntheticPlant plant(quiet_plant());
    PlantState st = plant.initial_state();
    const Eigen::Vector3d u(0.5, 200.0, 250.0);
    Eigen::VectorXd prev_x = st.x;
    Eigen::VectorXd y;
    for (int k = 0; k < 400; ++k) {
        prev_x = st.x;
        y = plant.step(st, u);
    }
    CHECK((st.x - prev_x).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(y.allFinite());
}

TEST_CASE("same seed and inputs give bitwise identical trajectories") {
    const Config cfg = desk_preset();
    const SyntheticPlant plant(cfg.plant);
    const Dataset a = simulate_plant(plant, cfg.excitation, 0, 300, 9);
    const Dataset b = simulate_plant(plant, cfg.excitation, 0, 300, 9);
    CHECK(std::memcmp(a.outputs.data(), b.outputs.data(),
                      sizeof(double) * static_cast<size_t>(a.outputs.size())) == 0);
    const Dataset c = simulate_plant(plant, cfg.excitation, 0, 300, 10);
    CHECK((a.outputs - c.outputs).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("bounded inputs give bounded outputs") {
    const Config cfg = desk_preset();
    const SyntheticPlant plant(cfg.plant);
    const Dataset long_run = simulate_plant(plant, cfg.excitation, 0, 5000, 33);
    CHECK(long_run.outputs.allFinite());
    CHECK(long_run.outputs.lpNorm<Eigen::Infinity>() < 100.0);
}

TEST_CASE("excitation respects dwell, range, and regime bands") {
    const Config cfg = desk_preset();

    SUBCASE("dwell equal to length keeps the control constant") {
        ExcitationSpec spec = cfg.excitation;
        spec.dwell = 120;
        const Eigen::MatrixXd u = generate_excitation(cfg.plant, spec, 0, 120, 4);
        CHECK((u.col(0).array() == u(0, 0)).all());
    }
    SUBCASE("disturbances stay inside the regime band") {
        for (int regime = 0; regime < 2; ++regime) {
            const Eigen::MatrixXd u = generate_excitation(cfg.plant, cfg.excitation, regime, 800, 5);
            const auto& band = cfg.plant.regimes[static_cast<size_t>(regime)];
            for (int d = 0; d < cfg.plant.n_dist(); ++d) {
                CHECK(u.col(1 + d).minCoeff() >= band.dist_low(d));
                CHECK(u.col(1 + d).maxCoeff() <= band.dist_high(d));
            }
        }
    }
    SUBCASE("invalid regime is rejected") {
        CHECK_THROWS_AS(generate_excitation(cfg.plant, cfg.excitation, 7, 10, 1), RegimeError);
    }
}

TEST_CASE("the two regime bands are statistically separated beyond their own charts") {
    const Config cfg = desk_preset();
    const Eigen::MatrixXd a =
        generate_excitation(cfg.plant, cfg.excitation, 0, 1000, 21).rightCols(2);
    const Eigen::MatrixXd b =
        generate_excitation(cfg.plant, cfg.excitation, 1, 1000, 22).rightCols(2);

    auto separation = [](const Eigen::MatrixXd& own, const Eigen::MatrixXd& other) {
        const StatProfile profile = build_profile(own.topRows(700));
        const ControlChart chart = empirical_ucl(mahalanobis(profile, own.bottomRows(300)), 99.73);
        std::vector<double> cross = mahalanobis(profile, other);
        std::sort(cross.begin(), cross.end());
        const double median = cross[cross.size() / 2];
        return std::pair<double, double>(median, chart.ucl);
    };
    const auto [ab, ucl_a] = separation(a, b);
    CHECK(ab > ucl_a);
    const auto [ba, ucl_b] = separation(b, a);
    CHECK(ba > ucl_b);
}

TEST_CASE("drift leaves residual signal the base model cannot absorb") {
    Config cfg = desk_preset();
    const SyntheticPlant drifting(cfg.plant);
    const Dataset data = simulate_plant(drifting, cfg.excitation, 0, 1200, 44);
    const BaseModel model = fit_base_model(data, cfg.narx);
    const Eigen::MatrixXd sim = simulate(model, data.inputs, LagState::cold(model));
    const Eigen::MatrixXd resid = data.outputs - sim;
    const double rms = std::sqrt(resid.squaredNorm() / double(resid.size()));
    // Noise alone is 0.01; the sinusoidal bias must leave more than that.
    CHECK(rms > 0.02);
}

TEST_SUITE_END();
