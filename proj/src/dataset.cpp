#include "fastslow/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fastslow/errors.hpp"

namespace fastslow {

Dataset::Dataset(Eigen::MatrixXd u, Eigen::MatrixXd y, std::string name)
    : inputs(std::move(u)), outputs(std::move(y)), id(std::move(name)) {
    if (inputs.rows() != outputs.rows()) {
        throw DimensionError("dataset: inputs and outputs must have the same number of rows");
    }
}

void Dataset::append(const Eigen::VectorXd& u, const Eigen::VectorXd& y) {
    if (inputs.rows() == 0 && inputs.cols() == 0) {
        inputs.resize(0, u.size());
        outputs.resize(0, y.size());
    }
    if (u.size() != inputs.cols() || y.size() != outputs.cols()) {
        throw DimensionError("dataset append: sample dimension mismatch");
    }
    inputs.conservativeResize(inputs.rows() + 1, Eigen::NoChange);
    outputs.conservativeResize(outputs.rows() + 1, Eigen::NoChange);
    inputs.row(inputs.rows() - 1) = u.transpose();
    outputs.row(outputs.rows() - 1) = y.transpose();
}

void Dataset::clear() {
    inputs.resize(0, inputs.cols());
    outputs.resize(0, outputs.cols());
}

Dataset Dataset::head(Eigen::Index n) const {
    return Dataset(inputs.topRows(n), outputs.topRows(n), id);
}

Dataset Dataset::tail_from(Eigen::Index start) const {
    return Dataset(inputs.bottomRows(inputs.rows() - start),
                   outputs.bottomRows(outputs.rows() - start), id);
}

std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out << content;
        if (!out) throw IoError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path + " (" + ec.message() + ")");
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ostringstream out;
    out << "k";
    for (Eigen::Index j = 0; j < ds.input_dim(); ++j) out << ",u_" << (j + 1);
    for (Eigen::Index j = 0; j < ds.output_dim(); ++j) out << ",y_" << (j + 1);
    out << "\n";
    for (Eigen::Index k = 0; k < ds.size(); ++k) {
        out << k;
        for (Eigen::Index j = 0; j < ds.input_dim(); ++j) out << "," << format_g9(ds.inputs(k, j));
        for (Eigen::Index j = 0; j < ds.output_dim(); ++j) out << "," << format_g9(ds.outputs(k, j));
        out << "\n";
    }
    atomic_write_file(path, out.str());
}

Dataset read_dataset_csv(const std::string& path, int n_u, int n_y) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty dataset file: " + path);

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != 1 + n_u + n_y) {
            throw IoError("bad column count in " + path);
        }
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd u(rows.size(), n_u), y(rows.size(), n_y);
    for (size_t k = 0; k < rows.size(); ++k) {
        for (int j = 0; j < n_u; ++j) u(static_cast<Eigen::Index>(k), j) = rows[k][1 + j];
        for (int j = 0; j < n_y; ++j) y(static_cast<Eigen::Index>(k), j) = rows[k][1 + n_u + j];
    }
    return Dataset(std::move(u), std::move(y), std::filesystem::path(path).stem().string());
}

}  // namespace fastslow
