#include "fastslow/persist.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace fs = std::filesystem;
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

json mat_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_to_json(m.row(r).transpose()));
    return rows;
}

Eigen::MatrixXd mat_from_json(const json& rows) {
    if (rows.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (size_t r = 0; r < rows.size(); ++r) {
        m.row(static_cast<Eigen::Index>(r)) = vec_from_json(rows[r]).transpose();
    }
    return m;
}

json profile_to_json(const StatProfile& p) {
    return {{"mean", vec_to_json(p.mean)},
            {"std", vec_to_json(p.std_dev)},
            {"cov_inv", mat_to_json(p.cov_inv)},
            {"dim", p.dim},
            {"n_obs", p.n_obs}};
}

StatProfile profile_from_json(const json& j) {
    StatProfile p;
    p.mean = vec_from_json(j.at("mean"));
    p.std_dev = vec_from_json(j.at("std"));
    p.cov_inv = mat_from_json(j.at("cov_inv"));
    p.dim = j.at("dim").get<int>();
    p.n_obs = j.at("n_obs").get<int>();
    return p;
}

json chart_to_json(const ControlChart& c) {
    return {{"ucl", c.ucl},
            {"lcl", c.lcl},
            {"percentile_j", c.percentile_j},
            {"t2_reference", c.t2_reference}};
}

ControlChart chart_from_json(const json& j) {
    ControlChart c;
    c.ucl = j.at("ucl").get<double>();
    c.lcl = j.at("lcl").get<double>();
    c.percentile_j = j.at("percentile_j").get<double>();
    c.t2_reference = j.at("t2_reference").get<std::vector<double>>();
    return c;
}

json model_to_json(const BaseModel& m) {
    return {{"n_a", m.config.n_a},
            {"n_b", m.config.n_b},
            {"ridge", m.config.ridge},
            {"nonlinear_features", m.config.nonlinear_features},
            {"n_u", m.n_u},
            {"n_y", m.n_y},
            {"coefficients", mat_to_json(m.coefficients)},
            {"input_mean", vec_to_json(m.input_scaler.mean)},
            {"input_std", vec_to_json(m.input_scaler.std_dev)},
            {"output_mean", vec_to_json(m.output_scaler.mean)},
            {"output_std", vec_to_json(m.output_scaler.std_dev)}};
}

BaseModel model_from_json(const json& j) {
    BaseModel m;
    m.config.n_a = j.at("n_a").get<int>();
    m.config.n_b = j.at("n_b").get<int>();
    m.config.ridge = j.at("ridge").get<double>();
    m.config.nonlinear_features = j.at("nonlinear_features").get<bool>();
    m.n_u = j.at("n_u").get<int>();
    m.n_y = j.at("n_y").get<int>();
    m.coefficients = mat_from_json(j.at("coefficients"));
    m.input_scaler.mean = vec_from_json(j.at("input_mean"));
    m.input_scaler.std_dev = vec_from_json(j.at("input_std"));
    m.output_scaler.mean = vec_from_json(j.at("output_mean"));
    m.output_scaler.std_dev = vec_from_json(j.at("output_std"));
    return m;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

std::string member_file(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "member_%03d.json", i);
    return buf;
}

std::string dataset_file(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "dataset_%03d.csv", i);
    return buf;
}

}  // namespace

void save_ensemble(const Ensemble& ensemble, const std::vector<Dataset>& datasets,
                   const std::string& dir) {
    if (static_cast<size_t>(ensemble.size()) != datasets.size()) {
        throw DimensionError("save_ensemble: one dataset per member required");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);

    json manifest;
    manifest["n_members"] = ensemble.size();
    manifest["percentile_j"] = ensemble.params.spc.percentile_j;
    manifest["eps_cov_rel"] = ensemble.params.spc.eps_cov_rel;
    manifest["eps_std"] = ensemble.params.spc.eps_std;
    manifest["weight_floor"] = ensemble.params.weight_floor;
    manifest["split_ratio"] = ensemble.params.split_ratio;
    manifest["theta"] = ensemble.params.theta;
    manifest["warmup_skip"] = ensemble.params.warmup_skip;
    manifest["chart_block_len"] = ensemble.params.chart_block_len;
    if (ensemble.characterized()) {
        manifest["error_profile"] = profile_to_json(*ensemble.error_profile);
        manifest["error_chart"] = chart_to_json(*ensemble.error_chart);
    }
    json members = json::array();
    for (int i = 0; i < ensemble.size(); ++i) {
        members.push_back(member_file(i));
        const auto& m = ensemble.members[static_cast<size_t>(i)];
        json mj = {{"dataset_id", m.dataset_id},
                   {"model", model_to_json(m.model)},
                   {"input_profile", profile_to_json(m.input_profile)},
                   {"input_chart", chart_to_json(m.input_chart)}};
        atomic_write_file((fs::path(dir) / member_file(i)).string(), mj.dump(2) + "\n");
        write_dataset_csv(datasets[static_cast<size_t>(i)], (fs::path(dir) / dataset_file(i)).string());
    }
    manifest["members"] = members;
    atomic_write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

std::pair<Ensemble, std::vector<Dataset>> load_ensemble(const std::string& dir) {
    const json manifest = read_json_file((fs::path(dir) / "manifest.json").string());
    Ensemble ens;
    ens.params.spc.percentile_j = manifest.at("percentile_j").get<double>();
    ens.params.spc.eps_cov_rel = manifest.at("eps_cov_rel").get<double>();
    ens.params.spc.eps_std = manifest.at("eps_std").get<double>();
    ens.params.weight_floor = manifest.at("weight_floor").get<double>();
    ens.params.split_ratio = manifest.at("split_ratio").get<double>();
    ens.params.theta = manifest.at("theta").get<double>();
    ens.params.warmup_skip = manifest.at("warmup_skip").get<int>();
    ens.params.chart_block_len = manifest.at("chart_block_len").get<int>();
    if (manifest.contains("error_profile")) {
        ens.error_profile = profile_from_json(manifest.at("error_profile"));
        ens.error_chart = chart_from_json(manifest.at("error_chart"));
    }
    std::vector<Dataset> datasets;
    const int n = manifest.at("n_members").get<int>();
    for (int i = 0; i < n; ++i) {
        const json mj = read_json_file((fs::path(dir) / member_file(i)).string());
        EnsembleMember m;
        m.dataset_id = mj.at("dataset_id").get<std::string>();
        m.model = model_from_json(mj.at("model"));
        m.input_profile = profile_from_json(mj.at("input_profile"));
        m.input_chart = chart_from_json(mj.at("input_chart"));
        ens.members.push_back(std::move(m));
        Dataset ds = read_dataset_csv((fs::path(dir) / dataset_file(i)).string(),
                                      ens.members.back().model.n_u,
                                      ens.members.back().model.n_y);
        ds.id = ens.members.back().dataset_id;
        datasets.push_back(std::move(ds));
    }
    return {std::move(ens), std::move(datasets)};
}

void save_report(const ExperimentReport& report, const Config& config, const std::string& path) {
    json j;
    j["config"] = json::parse(config_to_json_string(config));
    j["total_steps"] = report.total_steps;
    j["test_start"] = report.test_start;
    j["scores"] = json::array();
    for (const auto& s : report.scores) {
        j["scores"].push_back({{"name", s.name},
                               {"fit_per_output", vec_to_json(s.fit_per_output)},
                               {"fit_mean", s.fit_mean}});
    }
    j["timeline"] = json::array();
    for (const auto& e : report.timeline) {
        json ev = {{"step", e.step},
                   {"tag", to_string(e.tag)},
                   {"error_fraction", e.error_fraction},
                   {"member_count_after", e.member_count_after}};
        ev["matched_member"] = e.matched_member ? json(*e.matched_member) : json(nullptr);
        j["timeline"].push_back(std::move(ev));
    }
    j["member_counts"] = json::array();
    for (const auto& [step, count] : report.member_counts) {
        j["member_counts"].push_back({{"step", step}, {"count", count}});
    }
    atomic_write_file(path, j.dump(2) + "\n");
}

ExperimentReport load_report(const std::string& path) {
    const json j = read_json_file(path);
    ExperimentReport report;
    report.total_steps = j.at("total_steps").get<std::uint64_t>();
    report.test_start = j.at("test_start").get<std::uint64_t>();
    for (const auto& s : j.at("scores")) {
        report.scores.push_back(ModelScore{s.at("name").get<std::string>(),
                                           vec_from_json(s.at("fit_per_output")),
                                           s.at("fit_mean").get<double>()});
    }
    for (const auto& e : j.at("timeline")) {
        VerdictEvent ev;
        ev.step = e.at("step").get<std::uint64_t>();
        const std::string tag = e.at("tag").get<std::string>();
        ev.tag = tag == "InControl"   ? VerdictTag::InControl
                 : tag == "NewRegime" ? VerdictTag::NewRegime
                                      : VerdictTag::InternalChange;
        ev.error_fraction = e.at("error_fraction").get<double>();
        if (!e.at("matched_member").is_null()) ev.matched_member = e.at("matched_member").get<int>();
        ev.member_count_after = e.at("member_count_after").get<int>();
        report.timeline.push_back(std::move(ev));
    }
    for (const auto& mc : j.at("member_counts")) {
        report.member_counts.emplace_back(mc.at("step").get<std::uint64_t>(),
                                          mc.at("count").get<int>());
    }
    return report;
}

void write_steps_csv(const std::vector<StepRecord>& log, const std::vector<VerdictEvent>& timeline,
                     const std::string& path) {
    int max_members = 0;
    for (const auto& rec : log) {
        max_members = std::max(max_members, static_cast<int>(rec.lambda.size()));
    }
    const int n_u = log.empty() ? 0 : static_cast<int>(log.front().u.size());
    const int n_y = log.empty() ? 0 : static_cast<int>(log.front().y_p.size());

    std::ostringstream out;
    out << "k,phase,members";
    for (int j = 0; j < n_u; ++j) out << ",u_" << (j + 1);
    for (int j = 0; j < n_y; ++j) out << ",y_p_" << (j + 1);
    for (int j = 0; j < n_y; ++j) out << ",y_s_" << (j + 1);
    for (int j = 0; j < n_y; ++j) out << ",e_hat_" << (j + 1);
    for (int j = 0; j < n_y; ++j) out << ",y_" << (j + 1);
    for (int i = 0; i < max_members; ++i) out << ",lambda_" << (i + 1);
    for (int j = 0; j < n_y; ++j) out << ",gp_lml_" << (j + 1);
    out << ",gp_window,gp_retrained,verdict\n";

    size_t v = 0;
    for (const auto& rec : log) {
        out << rec.k << "," << (rec.phase == Phase::Collecting ? "collecting" : "monitoring")
            << "," << rec.member_count;
        auto put = [&](const Eigen::VectorXd& vec, int width) {
            for (int j = 0; j < width; ++j) {
                out << ",";
                if (j < vec.size()) out << format_g9(vec(j));
                else out << "0";
            }
        };
        put(rec.u, n_u);
        put(rec.y_p, n_y);
        put(rec.y_s, n_y);
        put(rec.e_hat, n_y);
        put(rec.y, n_y);
        put(rec.lambda, max_members);
        put(rec.gp_lml, n_y);
        out << "," << rec.gp_window << "," << (rec.gp_retrained ? 1 : 0) << ",";
        if (v < timeline.size() && timeline[v].step == rec.k) {
            out << to_string(timeline[v].tag);
            ++v;
        }
        out << "\n";
    }
    atomic_write_file(path, out.str());
}

}  // namespace fastslow
