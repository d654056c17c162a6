#include "fastslow/experiment.hpp"

#include <cstdlib>
#include <iostream>

#include "fastslow/errors.hpp"
#include "fastslow/gp.hpp"
#include "fastslow/plant.hpp"

namespace fastslow {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = a * 0x9e3779b97f4a7c15ULL + b + 0x7f4a7c15ULL;
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    return h ^ (h >> 31);
}

bool verbose() {
    const char* lvl = std::getenv("FASTSLOW_LOG");
    return lvl != nullptr && std::string(lvl) != "quiet" && std::string(lvl) != "0";
}

struct Segment {
    int regime = 0;
    Eigen::Index length = 0;
    bool scored = false;
    double gain = 1.0;
};

std::vector<Segment> build_schedule(const Config& c) {
    std::vector<Segment> segs;
    const auto mon = static_cast<Eigen::Index>(c.in_regime_batches) * c.n_mon;
    if (c.scenario == "two_regime") {
        segs.push_back({0, c.train_len, false, 1.0});
        segs.push_back({0, mon, false, 1.0});
        segs.push_back({1, c.n_mon + c.train_len, false, 1.0});
        segs.push_back({0, c.test_half, true, 1.0});
        segs.push_back({1, c.test_half, true, 1.0});
    } else if (c.scenario == "stationary") {
        segs.push_back({0, c.train_len, false, 1.0});
        segs.push_back({0, mon, false, 1.0});
        segs.push_back({0, 2 * static_cast<Eigen::Index>(c.test_half), true, 1.0});
    } else {  // internal_change: detection, reset, retrain, recovery check
        const double g = c.internal_change_gain;
        segs.push_back({0, c.train_len, false, 1.0});
        segs.push_back({0, mon, false, 1.0});
        segs.push_back({0, c.n_mon, false, g});      // detection batch
        segs.push_back({0, c.train_len, false, g});  // retrain on the altered plant
        segs.push_back({0, mon, false, g});
    }
    return segs;
}

// Online GP baseline mapping the raw input directly to one output channel.
class OnlineGpBaseline {
public:
    OnlineGpBaseline(int input_dim, const GpConfig& cfg)
        : cfg_(cfg), window_(cfg.k_max) {
        hp_.lengthscales = Eigen::VectorXd::Ones(input_dim);
        hp_.jitter_rel = cfg.jitter_rel;
    }

    double predict(const Eigen::VectorXd& u) {
        if (window_.size() < cfg_.k_min) return 0.0;
        try {
            if (!ready_) {
                hp_ = optimize_hyperparams(window_, heuristic_hyperparams(window_, cfg_.jitter_rel),
                                            cfg_.opt_iters, cfg_.opt_starts)
                          .hp;
                ready_ = true;
            } else if (cfg_.retrain_every <= 1 || (k_ % cfg_.retrain_every == 0)) {
                hp_ = optimize_hyperparams(window_, hp_, cfg_.warm_iters, 1).hp;
            }
            return gp_fit_predict(window_, hp_, u);
        } catch (const NumericalFailureError&) {
            return last_;
        }
    }

    void collect(const Eigen::VectorXd& u, double y) {
        window_.append(u, y);
        ++k_;
    }

    void remember(double pred) { last_ = pred; }

private:
    GpConfig cfg_;
    GpWindow window_;
    GpHyperparams hp_;
    bool ready_ = false;
    std::uint64_t k_ = 0;
    double last_ = 0.0;
};

}  // namespace

ExperimentResult run_experiment(
    const Config& config, std::optional<std::pair<Ensemble, std::vector<Dataset>>> resume_state) {
    validate(config);
    const SyntheticPlant plant(config.plant);

    RuntimeConfig rc;
    rc.narx = config.narx;
    rc.ensemble = config.ensemble;
    rc.gp = config.gp;
    rc.n_mon = config.n_mon;
    rc.train_len = config.train_len;

    ExperimentResult result{ExperimentReport{}, Runtime(rc, config.plant.n_u, config.plant.n_y)};
    Runtime& rt = result.runtime;
    if (resume_state) {
        rt.adopt(std::move(resume_state->first), std::move(resume_state->second));
        if (verbose()) {
            std::cerr << "[fastslow] resumed with " << rt.ensemble().size() << " member(s)\n";
        }
    }

    const auto schedule = build_schedule(config);
    PlantState ps = plant.initial_state();

    std::vector<Eigen::VectorXd> test_u, test_yp;
    std::uint64_t test_start = 0;
    bool test_seen = false;

    for (size_t s = 0; s < schedule.size(); ++s) {
        const Segment& seg = schedule[s];
        const Eigen::MatrixXd u_seg = generate_excitation(
            plant.config(), config.excitation, seg.regime, seg.length,
            mix_seed(config.seed, 1000 + static_cast<std::uint64_t>(s)));
        ps.gain = plant.config().regimes[static_cast<size_t>(seg.regime)].gain * seg.gain;
        for (Eigen::Index k = 0; k < seg.length; ++k) {
            const Eigen::VectorXd u = u_seg.row(k).transpose();
            const Eigen::VectorXd y_p = plant.step(ps, u);
            rt.step(u, y_p);
            if (seg.scored) {
                if (!test_seen) {
                    test_start = rt.step_count() - 1;
                    test_seen = true;
                }
                test_u.push_back(u);
                test_yp.push_back(y_p);
            }
        }
        if (verbose()) {
            std::cerr << "[fastslow] segment " << s << " done (regime " << seg.regime
                      << ", members " << rt.ensemble().size() << ")\n";
        }
    }

    ExperimentReport& report = result.report;
    report.timeline = rt.timeline();
    report.member_counts = rt.member_counts();
    report.total_steps = rt.step_count();
    report.test_start = test_start;

    if (!test_seen || rt.ensemble().size() == 0) return result;

    const auto rows = static_cast<Eigen::Index>(test_u.size());
    const int n_y = config.plant.n_y;
    Eigen::MatrixXd u_test(rows, config.plant.n_u), yp_test(rows, n_y);
    for (Eigen::Index k = 0; k < rows; ++k) {
        u_test.row(k) = test_u[static_cast<size_t>(k)].transpose();
        yp_test.row(k) = test_yp[static_cast<size_t>(k)].transpose();
    }

    // Online path outputs come straight from the runtime log.
    Eigen::MatrixXd ys_test(rows, n_y), y_comb(rows, n_y);
    {
        Eigen::Index r = 0;
        for (const auto& rec : rt.log()) {
            if (rec.k < test_start || rec.warmup) continue;
            if (r >= rows) break;
            ys_test.row(r) = rec.y_s.transpose();
            y_comb.row(r) = rec.y.transpose();
            ++r;
        }
        if (r != rows) throw Error("run_experiment: test window missing from the step log");
    }

    const auto pred = ensemble_predict(rt.ensemble(), u_test);
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(rows, n_y);
    for (const auto& m : pred.member_outputs) avg += m;
    avg /= static_cast<double>(pred.member_outputs.size());

    auto push_score = [&](const std::string& name, const Eigen::MatrixXd& predicted) {
        const FitResult fit = fit_index(predicted, yp_test);
        report.scores.push_back(ModelScore{name, fit.per_output, fit.mean_fit});
    };
    for (size_t i = 0; i < pred.member_outputs.size(); ++i) {
        push_score("M" + std::to_string(i + 1), pred.member_outputs[i]);
    }
    push_score("M_AVG", avg);
    push_score("M_s", ys_test);
    push_score("M", y_comb);

    // Stand-alone online GP: input -> measured output, trained over the test.
    {
        Eigen::MatrixXd gp_pred(rows, n_y);
        std::vector<OnlineGpBaseline> gps;
        gps.reserve(static_cast<size_t>(n_y));
        for (int j = 0; j < n_y; ++j) gps.emplace_back(config.plant.n_u, config.gp);
        for (Eigen::Index k = 0; k < rows; ++k) {
            const Eigen::VectorXd u = u_test.row(k).transpose();
            for (int j = 0; j < n_y; ++j) {
                const double p = gps[static_cast<size_t>(j)].predict(u);
                gp_pred(k, j) = p;
                gps[static_cast<size_t>(j)].remember(p);
                gps[static_cast<size_t>(j)].collect(u, yp_test(k, j));
            }
        }
        push_score("M_GP", gp_pred);
    }

    return result;
}

double score_by_name(const ExperimentReport& report, const std::string& name) {
    for (const auto& s : report.scores) {
        if (s.name == name) return s.fit_mean;
    }
    throw Error("score_by_name: no score named " + name);
}

}  // namespace fastslow
