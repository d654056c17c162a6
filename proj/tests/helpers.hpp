#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fastslow/gp.hpp"

namespace testutil {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& eng, Eigen::Index rows, Eigen::Index cols,
                                     double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(eng);
    return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& eng, Eigen::Index n, double lo = -1.0,
                                     double hi = 1.0) {
    return random_matrix(eng, n, 1, lo, hi).col(0);
}

// Independent brute-force route for the Mahalanobis sequence: normalize both
// sets with the benchmark stats, form the normalized-data covariance about
// its own mean, invert densely, apply the quadratic form. No regularization.
inline std::vector<double> brute_force_t2(const Eigen::MatrixXd& benchmark,
                                          const Eigen::MatrixXd& observations) {
    const Eigen::Index n = benchmark.rows();
    const Eigen::Index d = benchmark.cols();
    Eigen::VectorXd mu = benchmark.colwise().mean();
    Eigen::VectorXd sd(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        sd(j) = std::sqrt((benchmark.col(j).array() - mu(j)).square().sum() / double(n - 1));
    }
    Eigen::MatrixXd zb(n, d), zo(observations.rows(), d);
    for (Eigen::Index j = 0; j < d; ++j) {
        zb.col(j) = (benchmark.col(j).array() - mu(j)) / sd(j);
        zo.col(j) = (observations.col(j).array() - mu(j)) / sd(j);
    }
    Eigen::VectorXd mu_n = zb.colwise().mean();
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXd c = zb.row(k).transpose() - mu_n;
        sigma += c * c.transpose();
    }
    sigma /= double(n - 1);
    Eigen::MatrixXd inv = sigma.inverse();
    std::vector<double> t2;
    for (Eigen::Index k = 0; k < observations.rows(); ++k) {
        Eigen::VectorXd c = zo.row(k).transpose() - mu_n;
        t2.push_back(c.dot(inv * c));
    }
    return t2;
}

// Window whose points sit on a jittered grid with spacing 3*lengthscale, so
// the kernel matrix stays well conditioned and the tiny-nugget interpolation
// property is numerically meaningful.
inline fastslow::GpWindow spaced_window(std::mt19937_64& eng, int n, int dim,
                                        double lengthscale = 1.0, double target_scale = 1.0) {
    const int cells = static_cast<int>(std::ceil(std::pow(double(n), 1.0 / dim))) + 1;
    std::vector<int> order(static_cast<size_t>(std::pow(cells, dim)));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::shuffle(order.begin(), order.end(), eng);

    std::uniform_real_distribution<double> jitter(-0.5 * lengthscale, 0.5 * lengthscale);
    std::normal_distribution<double> gauss(0.0, 1.0);
    fastslow::GpWindow w(n + 4);
    for (int i = 0; i < n; ++i) {
        int cell = order[static_cast<size_t>(i)];
        Eigen::VectorXd nu(dim);
        for (int d = 0; d < dim; ++d) {
            nu(d) = (cell % cells + 0.5) * 3.0 * lengthscale + jitter(eng);
            cell /= cells;
        }
        w.append(nu, target_scale * gauss(eng));
    }
    return w;
}

// Dense-solve route for the GP posterior mean, bypassing the cached
// factorization entirely.
inline double dense_gp_predict(const fastslow::GpWindow& window, const fastslow::GpHyperparams& hp,
                               const Eigen::VectorXd& query) {
    const int n = window.size();
    Eigen::MatrixXd big(n, n);
    Eigen::VectorXd t(n), kq(n);
    int i = 0;
    for (const auto& a : window.points()) {
        int j = 0;
        for (const auto& b : window.points()) {
            big(i, j) = fastslow::se_kernel(a, b, hp);
            ++j;
        }
        kq(i) = fastslow::se_kernel(query, a, hp);
        t(i) = window.targets()[static_cast<size_t>(i)];
        ++i;
    }
    big.diagonal().array() += hp.nugget();
    return kq.dot(big.inverse() * t);
}

inline double dense_gp_lml(const fastslow::GpWindow& window, const fastslow::GpHyperparams& hp) {
    const int n = window.size();
    Eigen::MatrixXd big(n, n);
    Eigen::VectorXd t(n);
    int i = 0;
    for (const auto& a : window.points()) {
        int j = 0;
        for (const auto& b : window.points()) {
            big(i, j) = fastslow::se_kernel(a, b, hp);
            ++j;
        }
        t(i) = window.targets()[static_cast<size_t>(i)];
        ++i;
    }
    big.diagonal().array() += hp.nugget();
    const double logdet = std::log(big.determinant());
    return -0.5 * t.dot(big.inverse() * t) - 0.5 * logdet -
           0.5 * double(n) * std::log(2.0 * 3.14159265358979323846);
}

}  // namespace testutil
