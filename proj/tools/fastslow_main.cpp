#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "fastslow/config.hpp"
#include "fastslow/errors.hpp"
#include "fastslow/experiment.hpp"
#include "fastslow/persist.hpp"
#include "fastslow/plant.hpp"

namespace fs = std::filesystem;
using namespace fastslow;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset = "desk";
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool resume = false;
};

Config resolve_config(const CommonOpts& opts) {
    Config config;
    if (!opts.config_path.empty()) {
        config = load_config(opts.config_path);
    } else if (opts.preset == "aroma") {
        config = aroma_preset();
    } else if (opts.preset == "desk") {
        config = desk_preset();
    } else {
        throw ConfigError("config.preset: must be desk or aroma");
    }
    if (opts.seed_set) {
        config.seed = opts.seed;
        config.plant.seed = opts.seed;
    }
    if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
    validate(config);
    return config;
}

int cmd_simulate(const CommonOpts& opts, int regime, int length, const std::string& out_path) {
    const Config config = resolve_config(opts);
    const SyntheticPlant plant(config.plant);
    const Dataset ds = simulate_plant(plant, config.excitation, regime, length, config.seed);
    write_dataset_csv(ds, out_path);
    std::cout << "wrote " << out_path << " (" << ds.size() << " samples)\n";
    return 0;
}

int cmd_run(const CommonOpts& opts) {
    const Config config = resolve_config(opts);
    const fs::path out(config.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory: " + config.out_dir);

    std::optional<std::pair<Ensemble, std::vector<Dataset>>> resume_state;
    if (opts.resume) {
        resume_state = load_ensemble((out / "ensemble").string());
    }

    ExperimentResult result = run_experiment(config, std::move(resume_state));

    save_config(config, (out / "config.json").string());
    save_report(result.report, config, (out / "report.json").string());
    write_steps_csv(result.runtime.log(), result.report.timeline, (out / "steps.csv").string());
    save_ensemble(result.runtime.ensemble(), result.runtime.member_datasets(),
                  (out / "ensemble").string());

    std::cout << "run complete: " << result.report.total_steps << " steps, "
              << result.runtime.ensemble().size() << " member(s), report at "
              << (out / "report.json").string() << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    const fs::path dir(run_dir);
    if (!fs::exists(dir / "report.json")) {
        throw IoError("no report.json in " + run_dir);
    }
    const ExperimentReport report = load_report((dir / "report.json").string());

    std::printf("Model      FIT [%%]\n");
    std::printf("------------------\n");
    for (const auto& s : report.scores) {
        std::printf("%-10s %6.1f\n", s.name.c_str(), s.fit_mean);
    }
    std::printf("\nVerdicts (%zu):\n", report.timeline.size());
    for (const auto& e : report.timeline) {
        std::printf("  step %8llu  %-14s error_fraction=%.4f members=%d\n",
                    static_cast<unsigned long long>(e.step), to_string(e.tag), e.error_fraction,
                    e.member_count_after);
    }
    std::printf("\nMember count trajectory:\n");
    for (const auto& [step, count] : report.member_counts) {
        std::printf("  step %8llu  n=%d\n", static_cast<unsigned long long>(step), count);
    }
    return 0;
}

int cmd_monitor(const std::string& ensemble_dir, const std::string& data_csv) {
    auto [ensemble, datasets] = load_ensemble(ensemble_dir);
    if (ensemble.size() == 0) throw EmptyEnsembleError("monitor: persisted ensemble is empty");
    const int n_u = ensemble.members.front().model.n_u;
    const int n_y = ensemble.members.front().model.n_y;
    const Dataset batch = read_dataset_csv(data_csv, n_u, n_y);
    const MonitorVerdict verdict = monitor(ensemble, batch);
    std::printf("%s error_fraction=%.4f", to_string(verdict.tag), verdict.error_fraction);
    for (size_t i = 0; i < verdict.input_fractions.size(); ++i) {
        std::printf(" input_fraction[%zu]=%.4f", i + 1, verdict.input_fractions[i]);
    }
    if (verdict.matched_member) std::printf(" matched_member=%d", *verdict.matched_member + 1);
    std::printf("\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-timescale model adaptation harness: slow ensemble growth "
                 "under control-chart monitoring plus fast online GP correction"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "configuration JSON file");
        sub->add_option("--preset", opts.preset, "built-in preset: desk|aroma")
            ->check(CLI::IsMember({"desk", "aroma"}));
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--seed", opts.seed, "random seed")->each([&](const std::string&) {
            opts.seed_set = true;
        });
    };

    int regime = 0, length = 1000;
    std::string sim_out = "dataset.csv";
    auto* sim = app.add_subcommand("simulate", "generate a plant dataset CSV");
    add_common(sim);
    sim->add_option("--regime", regime, "operating regime index");
    sim->add_option("--length", length, "number of samples");
    sim->add_option("--file", sim_out, "output CSV path");

    auto* run = app.add_subcommand("run", "run the full adaptation experiment");
    add_common(run);
    run->add_flag("--resume", opts.resume, "continue from the persisted ensemble in --out");

    std::string report_dir;
    auto* rep = app.add_subcommand("report", "print the FIT table and verdict timeline of a run");
    rep->add_option("run_dir", report_dir, "run output directory")->required();

    std::string mon_ensemble, mon_data;
    auto* mon = app.add_subcommand("monitor", "one-shot verdict for a dataset against an ensemble");
    mon->add_option("--ensemble", mon_ensemble, "persisted ensemble directory")->required();
    mon->add_option("--data", mon_data, "dataset CSV to monitor")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(opts, regime, length, sim_out);
        if (run->parsed()) return cmd_run(opts);
        if (rep->parsed()) return cmd_report(report_dir);
        if (mon->parsed()) return cmd_monitor(mon_ensemble, mon_data);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
