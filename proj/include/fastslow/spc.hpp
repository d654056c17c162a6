#pragma once

#include <Eigen/Dense>
#include <vector>

namespace fastslow {

// Per-dimension normalization statistics of a benchmark set plus the inverse
// covariance of the z-scored data. All distances computed against a profile
// first z-score the observation with `mean`/`std`; the normalized benchmark
// mean is zero by construction, so the quadratic form needs only cov_inv.
struct StatProfile {
    Eigen::VectorXd mean;     // raw units
    Eigen::VectorXd std_dev;  // raw units, floored at eps_std
    Eigen::MatrixXd cov_inv;  // inverse of normalized-data covariance
    int dim = 0;
    int n_obs = 0;
};

// Hotelling T^2 chart with empirical limits. LCL is identically zero; UCL is
// the nearest-rank percentile of the reference statistics.
struct ControlChart {
    double ucl = 0.0;
    double lcl = 0.0;
    double percentile_j = 99.73;
    std::vector<double> t2_reference;
};

struct SpcParams {
    double percentile_j = 99.73;
    double eps_cov_rel = 1e-8;  // relative covariance regularization
    double eps_std = 1e-12;     // std floor for constant channels
};

// Builds normalization stats and inverse covariance from a benchmark block
// (rows = observations). The covariance is computed on the z-scored data and
// regularized with eps_cov_rel * trace(Sigma)/dim before inversion (falling
// back to eps_cov_rel * I when the normalized data are fully degenerate).
// Pass eps_cov_rel = 0 to skip regularization entirely.
StatProfile build_profile(const Eigen::MatrixXd& benchmark,
                          double eps_cov_rel = 1e-8,
                          double eps_std = 1e-12);

// Squared Mahalanobis distance of each observation row from the profile.
std::vector<double> mahalanobis(const StatProfile& profile,
                                const Eigen::MatrixXd& observations);

// Single-observation convenience form.
double mahalanobis_point(const StatProfile& profile, const Eigen::VectorXd& observation);

// Empirical upper control limit: sort ascending, take the element at
// 1-based index ceil((j/100) * N). No interpolation.
ControlChart empirical_ucl(const std::vector<double>& t2_values, double percentile_j);

// Fraction of values <= chart.ucl (inclusive comparison).
double in_control_fraction(const std::vector<double>& t2_values, const ControlChart& chart);

}  // namespace fastslow
