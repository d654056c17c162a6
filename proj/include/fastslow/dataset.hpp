#pragma once

#include <Eigen/Dense>
#include <string>

namespace fastslow {

// Time-indexed batch of input/output observations. Rows are samples in
// chronological order; `inputs` is N x n_u an `outputs` is N x n_y.
struct Dataset {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd outputs;
    std::string id;

    Dataset() = default;
    Dataset(Eigen::MatrixXd u, Eigen::MatrixXd y, std::string name = "");

    Eigen::Index size() const { return inputs.rows(); }
    Eigen::Index input_dim() const { return inputs.cols(); }
    Eigen::Index output_dim() const { return outputs.cols(); }

    void append(const Eigen::VectorXd& u, const Eigen::VectorXd& y);
    void clear();

    // Contiguous blocks: [0, n) and [n, size).
    Dataset head(Eigen::Index n) const;
    Dataset tail_from(Eigen::Index start) const;
};

// CSV layout: header "k,u_1..u_nu,y_1..y_ny", one row per sample,
// floating point written with 9 significant digits.
void write_dataset_csv(const Dataset& ds, const std::string& path);
Dataset read_dataset_csv(const std::string& path, int n_u, int n_y);

// Formats a double with 9 significant digits (shared by all CSV writers).
std::string format_g9(double v);

// Writes `content` to `path` via a temporary file and rename.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace fastslow
