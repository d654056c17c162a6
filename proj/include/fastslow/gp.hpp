#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>

namespace fastslow {

// Squared-exponential ARD kernel hyperparameters. The nugget added to the
// kernel matrix diagonal is jitter_rel * alpha^2; it escalates tenfold on
// factorization failure up to 1e-2 * alpha^2.
struct GpHyperparams {
    double alpha = 1.0;
    Eigen::VectorXd lengthscales;
    double jitter_rel = 1e-6;

    double nugget() const { return jitter_rel * alpha * alpha; }
};

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyperparams& hp);

// Sliding window of (nu, target) pairs with FIFO eviction at capacity and a
// lazily rebuilt Cholesky factor of the kernel matrix.
class GpWindow {
public:
    explicit GpWindow(int capacity);

    void append(Eigen::VectorXd nu, double target);
    void clear();

    int size() const { return static_cast<int>(targets_.size()); }
    int capacity() const { return capacity_; }
    bool empty() const { return targets_.empty(); }

    const std::deque<Eigen::VectorXd>& points() const { return nu_points_; }
    const std::deque<double>& targets() const { return targets_; }

    struct Factor {
        Eigen::MatrixXd chol_lower;
        Eigen::VectorXd weights;  // K^{-1} t
        double log_det = 0.0;
        double jitter_rel_used = 0.0;
        GpHyperparams hp;
        std::uint64_t version = 0;
        bool valid = false;
    };
    Factor& factor_cache() const { return cache_; }
    std::uint64_t version() const { return version_; }

private:
    int capacity_;
    std::deque<Eigen::VectorXd> nu_points_;
    std::deque<double> targets_;
    std::uint64_t version_ = 0;
    mutable Factor cache_;
};

// Posterior mean at `query` given the window, via the cached factorization.
double gp_fit_predict(const GpWindow& window, const GpHyperparams& hp,
                      const Eigen::VectorXd& query);

double log_marginal_likelihood(const GpWindow& window, const GpHyperparams& hp);

// LML and its gradient with respect to [log alpha, log l_1 .. log l_d].
struct LmlGradient {
    double lml = 0.0;
    Eigen::VectorXd grad;
};
LmlGradient log_marginal_likelihood_gradient(const GpWindow& window, const GpHyperparams& hp);

struct OptResult {
    GpHyperparams hp;
    double lml = 0.0;
    bool warning = false;  // every candidate step failed numerically
};

// Deterministic multi-start gradient ascent over log-parameters. The returned
// hyperparameters never have lower LML than `init`.
OptResult optimize_hyperparams(const GpWindow& window, const GpHyperparams& init,
                               int budget = 50, int n_starts = 3);

// Data-driven starting point: alpha from the target spread, lengthscales from
// the per-dimension spread of the window points.
GpHyperparams heuristic_hyperparams(const GpWindow& window, double jitter_rel = 1e-6);

}  // namespace fastslow
