#include "fastslow/spc.hpp"

#include <algorithm>
#include <cmath>

#include "fastslow/errors.hpp"

namespace fastslow {

StatProfile build_profile(const Eigen::MatrixXd& benchmark, double eps_cov_rel, double eps_std) {
    const Eigen::Index n = benchmark.rows();
    const Eigen::Index d = benchmark.cols();
    if (n < 2) throw InsufficientDataError("build_profile: need at least 2 observations");
    if (!benchmark.allFinite()) throw InvalidDataError("build_profile: non-finite entry in benchmark");

    StatProfile p;
    p.dim = static_cast<int>(d);
    p.n_obs = static_cast<int>(n);
    p.mean = benchmark.colwise().mean();

    Eigen::MatrixXd centered = benchmark.rowwise() - p.mean.transpose();
    Eigen::VectorXd var = centered.colwise().squaredNorm() / double(n - 1);
    p.std_dev = var.cwiseSqrt().cwiseMax(eps_std);

    Eigen::MatrixXd z = centered.array().rowwise() / p.std_dev.transpose().array();
    Eigen::MatrixXd sigma = (z.transpose() * z) / double(n - 1);

    if (eps_cov_rel > 0.0) {
        double scale = sigma.trace() / double(d);
        if (!(scale > 0.0)) scale = 1.0;  // fully degenerate data
        sigma.diagonal().array() += eps_cov_rel * scale;
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NumericalFailureError("build_profile: covariance not positive definite");
    }
    p.cov_inv = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
    // Symmetrize; the solve can leave asymmetry at roundoff level.
    p.cov_inv = 0.5 * (p.cov_inv + p.cov_inv.transpose()).eval();
    return p;
}

std::vector<double> mahalanobis(const StatProfile& profile, const Eigen::MatrixXd& observations) {
    if (observations.cols() != profile.dim) {
        throw DimensionError("mahalanobis: observation dimension mismatch");
    }
    std::vector<double> t2(static_cast<size_t>(observations.rows()));
    for (Eigen::Index k = 0; k < observations.rows(); ++k) {
        Eigen::VectorXd z = (observations.row(k).transpose() - profile.mean)
                                .cwiseQuotient(profile.std_dev);
        t2[static_cast<size_t>(k)] = std::max(0.0, z.dot(profile.cov_inv * z));
    }
    return t2;
}

double mahalanobis_point(const StatProfile& profile, const Eigen::VectorXd& observation) {
    if (observation.size() != profile.dim) {
        throw DimensionError("mahalanobis_point: observation dimension mismatch");
    }
    Eigen::VectorXd z = (observation - profile.mean).cwiseQuotient(profile.std_dev);
    return std::max(0.0, z.dot(profile.cov_inv * z));
}

ControlChart empirical_ucl(const std::vector<double>& t2_values, double percentile_j) {
    if (t2_values.empty()) throw InsufficientDataError("empirical_ucl: empty sequence");
    if (!(percentile_j > 0.0 && percentile_j < 100.0)) {
        throw InvalidDataError("empirical_ucl: percentile must lie in (0, 100)");
    }
    ControlChart chart;
    chart.percentile_j = percentile_j;
    chart.t2_reference = t2_values;

    std::vector<double> sorted = t2_values;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<size_t>(std::ceil(percentile_j / 100.0 * n));  // 1-based
    rank = std::clamp<size_t>(rank, 1, sorted.size());
    chart.ucl = sorted[rank - 1];
    chart.lcl = 0.0;
    return chart;
}

double in_control_fraction(const std::vector<double>& t2_values, const ControlChart& chart) {
    if (t2_values.empty()) throw InsufficientDataError("in_control_fraction: empty sequence");
    const auto within = std::count_if(t2_values.begin(), t2_values.end(),
                                      [&](double v) { return v <= chart.ucl; });
    return static_cast<double>(within) / static_cast<double>(t2_values.size());
}

}  // namespace fastslow
