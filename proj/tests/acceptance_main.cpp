// Acceptance suite: one pass/fail line per criterion, exit code = failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "fastslow/compensator.hpp"
#include "fastslow/config.hpp"
#include "fastslow/ensemble.hpp"
#include "fastslow/experiment.hpp"
#include "fastslow/gp.hpp"
#include "fastslow/persist.hpp"
#include "fastslow/plant.hpp"
#include "fastslow/spc.hpp"
#include "helpers.hpp"

using namespace fastslow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- criterion 1: SPC oracle suite -----------------------------------------

Outcome criterion_spc() {
    Outcome out;
    std::mt19937_64 eng(2024);
    std::uniform_int_distribution<int> dim_pick(1, 5);
    std::uniform_int_distribution<int> n_pick(8, 200);
    std::uniform_real_distribution<double> perc(80.0, 99.9);

    for (int trial = 0; trial < 500 && out.pass; ++trial) {
        const int d = dim_pick(eng);
        const int n = n_pick(eng);
        const Eigen::MatrixXd bench = testutil::random_matrix(eng, n, d, -5.0, 5.0);
        const Eigen::MatrixXd obs = testutil::random_matrix(eng, 40, d, -6.0, 6.0);

        const StatProfile profile = build_profile(bench, 0.0);
        const auto got = mahalanobis(profile, obs);
        const auto want = testutil::brute_force_t2(bench, obs);
        for (size_t k = 0; k < want.size(); ++k) {
            const double rel = std::abs(got[k] - want[k]) / std::max(1e-300, std::abs(want[k]));
            out.require(rel <= 1e-8, "T2 mismatch vs brute force at trial " + std::to_string(trial));
            if (!out.pass) break;
        }

        const double j = perc(eng);
        const ControlChart chart = empirical_ucl(want, j);
        out.require(in_control_fraction(chart.t2_reference, chart) >= j / 100.0,
                    "chart coverage violated at trial " + std::to_string(trial));
    }
    return out;
}

// --- criterion 2: GP correctness suite --------------------------------------

Outcome criterion_gp() {
    Outcome out;
    std::mt19937_64 eng(777);
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto make_window = [&](int n, int dim, double t_scale) {
        GpWindow w(n + 4);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd nu(dim);
            for (int d = 0; d < dim; ++d) nu(d) = 2.0 * gauss(eng);
            w.append(nu, t_scale * gauss(eng));
        }
        return w;
    };

    for (int trial = 0; trial < 100; ++trial) {
        const int dim = 1 + static_cast<int>(eng() % 5);
        const int n = 2 + static_cast<int>(eng() % 99);
        GpWindow w = testutil::spaced_window(eng, n, dim, 1.0, 1.5);
        GpHyperparams hp;
        hp.alpha = 0.6 + 0.03 * (trial % 30);
        hp.lengthscales = Eigen::VectorXd::Constant(dim, 0.8 + 0.05 * (trial % 10));
        hp.jitter_rel = 1e-6;

        // Dense-solve oracle parity.
        const Eigen::VectorXd q = testutil::random_vector(eng, dim, 0.0, 6.0);
        const double got = gp_fit_predict(w, hp, q);
        const double want = testutil::dense_gp_predict(w, hp, q);
        out.require(std::abs(got - want) <= 1e-8 * std::max(1.0, std::abs(want)),
                    "dense oracle mismatch at trial " + std::to_string(trial));

        // Interpolation with the tiny nugget.
        int i = 0;
        for (const auto& p : w.points()) {
            const double target = w.targets()[static_cast<size_t>(i)];
            const double pred = gp_fit_predict(w, hp, p);
            out.require(std::abs(pred - target) <= 1e-3 * std::max(1.0, std::abs(target)),
                        "interpolation failure at trial " + std::to_string(trial));
            ++i;
        }

        // Monotone LML under optimization.
        GpWindow noisy = make_window(10 + static_cast<int>(eng() % 60), dim, 1.0);
        GpHyperparams init;
        init.alpha = 0.3 + 0.05 * (trial % 20);
        init.lengthscales = Eigen::VectorXd::Constant(dim, 0.5 + 0.1 * (trial % 10));
        init.jitter_rel = 1e-6;
        const double before = log_marginal_likelihood(noisy, init);
        const OptResult res = optimize_hyperparams(noisy, init, 10, 2);
        out.require(res.lml >= before - 1e-9,
                    "optimizer lowered the LML at trial " + std::to_string(trial));
        if (!out.pass) break;
    }

    // Finite-difference gradient check.
    for (int trial = 0; trial < 25 && out.pass; ++trial) {
        const int dim = 1 + static_cast<int>(eng() % 4);
        GpWindow w = testutil::spaced_window(eng, 10 + static_cast<int>(eng() % 40), dim);
        const GpHyperparams hp = heuristic_hyperparams(w, 1e-6);
        const auto grad = log_marginal_likelihood_gradient(w, hp);
        const double h = 1e-5;
        for (int param = 0; param < 1 + dim; ++param) {
            auto eval = [&](double delta) {
                GpHyperparams p = hp;
                if (param == 0) p.alpha = std::exp(std::log(hp.alpha) + delta);
                else
                    p.lengthscales(param - 1) =
                        std::exp(std::log(hp.lengthscales(param - 1)) + delta);
                return log_marginal_likelihood(w, p);
            };
            const double fd = (eval(h) - eval(-h)) / (2.0 * h);
            const double scale = std::max({1.0, std::abs(fd), std::abs(grad.grad(param))});
            out.require(std::abs(grad.grad(param) - fd) <= 1e-4 * scale,
                        "gradient check failed at trial " + std::to_string(trial));
        }
    }
    return out;
}

// --- criterion 3: combination rule ------------------------------------------

Outcome criterion_combination() {
    Outcome out;
    std::mt19937_64 eng(31415);
    std::uniform_int_distribution<int> n_pick(2, 6);
    std::uniform_real_distribution<double> scale_pick(0.1, 8.0);

    // Simplex and proximity ordering over 10^4 random ensembles/inputs.
    for (int trial = 0; trial < 10000; ++trial) {
        Ensemble e;
        const int n = n_pick(eng);
        std::vector<double> scales;
        for (int i = 0; i < n; ++i) {
            EnsembleMember m;
            m.input_profile.mean = Eigen::VectorXd::Zero(1);
            m.input_profile.std_dev = Eigen::VectorXd::Ones(1);
            const double s = scale_pick(eng);
            m.input_profile.cov_inv = Eigen::MatrixXd::Constant(1, 1, s);
            m.input_profile.dim = 1;
            m.input_profile.n_obs = 4;
            e.members.push_back(std::move(m));
            scales.push_back(s);
        }
        const Eigen::VectorXd u = testutil::random_vector(eng, 1, -4.0, 4.0);
        const Eigen::VectorXd lambda = combination_weights(e, u);

        double sum = 0.0;
        bool nonneg = true;
        for (Eigen::Index i = 0; i < lambda.size(); ++i) {
            sum += lambda(i);
            nonneg = nonneg && lambda(i) >= 0.0;
        }
        out.require(nonneg, "negative weight at trial " + std::to_string(trial));
        out.require(sum == 1.0, "weights do not sum to one at trial " + std::to_string(trial));
        for (int a = 0; a < n && out.pass; ++a) {
            for (int b = 0; b < n; ++b) {
                const double t2a = scales[static_cast<size_t>(a)] * u(0) * u(0);
                const double t2b = scales[static_cast<size_t>(b)] * u(0) * u(0);
                if (t2a > e.params.weight_floor && t2b > e.params.weight_floor && t2a < t2b) {
                    out.require(lambda(a) > lambda(b),
                                "proximity ordering violated at trial " + std::to_string(trial));
                }
            }
        }
        if (!out.pass) return out;
    }

    // Argmax regime attribution on the two-regime plant inputs.
    const Config cfg = desk_preset();
    Ensemble e;
    e.params = cfg.ensemble;
    std::vector<Eigen::MatrixXd> regime_inputs;
    for (int r = 0; r < 2; ++r) {
        const Eigen::MatrixXd u =
            generate_excitation(cfg.plant, cfg.excitation, r, 1500, 7000 + r);
        EnsembleMember m;
        m.input_profile = build_profile(u.topRows(1000));
        e.members.push_back(std::move(m));
        regime_inputs.push_back(u.bottomRows(500));
    }

    // Precondition: the regime means are separated by at least 10.
    const double sep01 = mahalanobis_point(e.members[0].input_profile, e.members[1].input_profile.mean);
    const double sep10 = mahalanobis_point(e.members[1].input_profile, e.members[0].input_profile.mean);
    out.require(sep01 >= 10.0 && sep10 >= 10.0,
                "regime separation below 10 (" + std::to_string(sep01) + ", " +
                    std::to_string(sep10) + ")");

    int correct = 0, total = 0;
    for (int r = 0; r < 2; ++r) {
        for (Eigen::Index k = 0; k < regime_inputs[static_cast<size_t>(r)].rows(); ++k) {
            const Eigen::VectorXd lambda =
                combination_weights(e, regime_inputs[static_cast<size_t>(r)].row(k).transpose());
            int argmax = 0;
            lambda.maxCoeff(&argmax);
            correct += (argmax == r);
            ++total;
        }
    }
    const double rate = double(correct) / double(total);
    out.require(rate >= 0.9, "attribution rate " + std::to_string(rate) + " below 0.9");
    return out;
}

// --- criteria 4 and 5 share the scripted two-regime run ---------------------

Outcome criterion_monitoring(const Config& cfg, const ExperimentResult& result) {
    Outcome out;
    const auto& timeline = result.report.timeline;
    const std::uint64_t shift_step =
        static_cast<std::uint64_t>(cfg.train_len) +
        static_cast<std::uint64_t>(cfg.in_regime_batches) * cfg.n_mon;

    int new_regime = 0, internal = 0;
    for (const auto& e : timeline) {
        if (e.tag == VerdictTag::NewRegime) ++new_regime;
        if (e.tag == VerdictTag::InternalChange) ++internal;
        if (e.step < shift_step) {
            out.require(e.tag == VerdictTag::InControl,
                        "non-clean verdict before the regime shift at step " +
                            std::to_string(e.step));
        }
    }
    out.require(new_regime == 1, "expected exactly one NewRegime, got " + std::to_string(new_regime));
    out.require(internal == 0, "unexpected InternalChange");

    // First verdict after the shift is NewRegime, on the first full batch.
    bool found = false;
    for (const auto& e : timeline) {
        if (e.step >= shift_step) {
            out.require(e.tag == VerdictTag::NewRegime, "first post-shift verdict is not NewRegime");
            out.require(e.step == shift_step + static_cast<std::uint64_t>(cfg.n_mon) - 1,
                        "NewRegime not on the first full post-shift batch (step " +
                            std::to_string(e.step) + ")");
            found = true;
            break;
        }
    }
    out.require(found, "no verdict after the regime shift");
    out.require(result.runtime.ensemble().size() == 2, "member count is not 2");

    // Every verdict inside the mixed test window is InControl.
    int test_verdicts = 0;
    for (const auto& e : timeline) {
        if (e.step >= result.report.test_start) {
            ++test_verdicts;
            out.require(e.tag == VerdictTag::InControl,
                        "test-window verdict not InControl at step " + std::to_string(e.step));
        }
    }
    out.require(test_verdicts == 2 * cfg.test_half / cfg.n_mon,
                "unexpected number of test-window verdicts");
    return out;
}

Outcome criterion_ordering(const ExperimentResult& result) {
    Outcome out;
    const auto& report = result.report;
    const double m = score_by_name(report, "M");
    const double ms = score_by_name(report, "M_s");
    const double mavg = score_by_name(report, "M_AVG");
    const double m1 = score_by_name(report, "M1");
    const double m2 = score_by_name(report, "M2");
    const double mgp = score_by_name(report, "M_GP");

    char buf[160];
    std::snprintf(buf, sizeof(buf), "M=%.1f M_s=%.1f M_AVG=%.1f M1=%.1f M2=%.1f M_GP=%.1f", m, ms,
                  mavg, m1, m2, mgp);
    out.detail = buf;

    out.require(m >= ms + 2.0, "M does not beat M_s by 2");
    out.require(ms >= mavg + 2.0, "M_s does not beat M_AVG by 2");
    out.require(mavg >= std::max(m1, m2) + 2.0, "M_AVG does not beat the single models by 2");
    out.require(m >= mgp + 2.0, "M does not beat M_GP by 2");
    return out;
}

// --- criterion 6: bias learning ---------------------------------------------

Outcome criterion_bias() {
    Outcome out;
    const Config cfg = desk_preset();
    const SyntheticPlant plant(cfg.plant);
    const Dataset feed = simulate_plant(plant, cfg.excitation, 0, 200, 606);

    GpConfig gp = cfg.gp;  // defaults: k_min 25, horizons 4
    gp.retrain_every = 1;
    GpCompensator comp(cfg.plant.n_y, gp);
    const Eigen::Vector3d bias(0.8, -0.5, 0.3);

    Eigen::VectorXd e_hat = Eigen::VectorXd::Zero(3);
    const int horizon = gp.k_min + 50;
    for (int k = 0; k < horizon; ++k) {
        const Eigen::VectorXd y_s = feed.outputs.row(k).transpose();
        e_hat = comp.step(y_s, y_s + bias, true);
    }
    const double err = (e_hat - bias).lpNorm<Eigen::Infinity>();
    const double bound = 0.05 * bias.lpNorm<Eigen::Infinity>();
    char buf[96];
    std::snprintf(buf, sizeof(buf), "|e_hat - c| = %.4f, bound %.4f", err, bound);
    out.detail = buf;
    out.require(err <= bound, "bias not learned within k_min + 50 steps");
    return out;
}

// --- criterion 7: internal change branch ------------------------------------

Outcome criterion_internal_change() {
    Outcome out;
    Config cfg = desk_preset();
    cfg.scenario = "internal_change";
    const ExperimentResult result = run_experiment(cfg);

    int internal = 0;
    std::optional<size_t> pos;
    const auto& timeline = result.report.timeline;
    for (size_t i = 0; i < timeline.size(); ++i) {
        if (timeline[i].tag == VerdictTag::InternalChange) {
            ++internal;
            pos = i;
        }
    }
    out.require(internal == 1, "expected exactly one InternalChange, got " + std::to_string(internal));
    if (pos) {
        out.require(timeline[*pos].member_count_after == 0, "reset did not empty the ensemble");
        bool recovered = false;
        for (size_t i = *pos + 1; i < timeline.size(); ++i) {
            out.require(timeline[i].tag == VerdictTag::InControl,
                        "post-reset verdict not InControl at step " +
                            std::to_string(timeline[i].step));
            recovered = true;
        }
        out.require(recovered, "no monitoring verdict after the reset");
    }
    return out;
}

// --- criterion 8: byte-identical reports ------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome criterion_determinism() {
    Outcome out;
    const fs::path tmp = fs::temp_directory_path() / "fastslow_acceptance_det";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    Config cfg = desk_preset();
    cfg.out_dir = (tmp / "out").string();
    const fs::path cfg_path = tmp / "config.json";
    save_config(cfg, cfg_path.string());

    const std::string cmd = std::string(FASTSLOW_CLI_PATH) + " run --config " +
                            cfg_path.string() + " > /dev/null 2>&1";
    out.require(std::system(cmd.c_str()) == 0, "first cmd_run failed");
    const std::string first = slurp(tmp / "out" / "report.json");
    out.require(std::system(cmd.c_str()) == 0, "second cmd_run failed");
    const std::string second = slurp(tmp / "out" / "report.json");

    out.require(!first.empty(), "empty report");
    out.require(first == second, "report.json differs between identical runs");
    fs::remove_all(tmp);
    return out;
}

struct Entry {
    int id;
    std::string name;
    double budget_s;
    Outcome outcome;
    double elapsed_s = 0.0;
};

}  // namespace

int main() {
    std::vector<Entry> entries;

    auto timed = [&](int id, const std::string& name, double budget, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o = fn();
        const double dt = seconds_since(t0);
        o.require(dt < budget, "runtime budget exceeded");
        entries.push_back(Entry{id, name, budget, std::move(o), dt});
    };

    timed(1, "SPC oracle suite", 10.0, criterion_spc);
    timed(2, "GP correctness suite", 60.0, criterion_gp);
    timed(3, "combination rule", 30.0, criterion_combination);

    // Criteria 4 and 5 share the scripted two-regime run; its cost is charged
    // to both budgets.
    {
        const Config cfg = desk_preset();
        const auto t0 = std::chrono::steady_clock::now();
        const ExperimentResult result = run_experiment(cfg);
        const double run_s = seconds_since(t0);

        auto add_shared = [&](int id, const std::string& name, double budget, Outcome o) {
            const auto t1 = std::chrono::steady_clock::now();
            const double dt = run_s + seconds_since(t1);
            o.require(dt < budget, "runtime budget exceeded");
            entries.push_back(Entry{id, name, budget, std::move(o), dt});
        };
        add_shared(4, "monitoring behaviour", 120.0, criterion_monitoring(cfg, result));
        add_shared(5, "model ranking reproduction", 300.0, criterion_ordering(result));
    }

    timed(6, "bias learning", 30.0, criterion_bias);
    timed(7, "internal change branch", 120.0, criterion_internal_change);
    timed(8, "determinism", 300.0, criterion_determinism);

    int failures = 0;
    for (const auto& e : entries) {
        failures += e.outcome.pass ? 0 : 1;
        std::printf("[%s] criterion %d: %s (%.1f s / %.0f s)%s%s\n",
                    e.outcome.pass ? "PASS" : "FAIL", e.id, e.name.c_str(), e.elapsed_s,
                    e.budget_s, e.outcome.detail.empty() ? "" : " -- ",
                    e.outcome.detail.c_str());
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(entries.size()) - failures,
                entries.size());
    return failures;
}
