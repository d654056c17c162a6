#include "fastslow/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

constexpr double kJitterRelCap = 1e-2;
constexpr double kLogParamBound = 12.0;
constexpr double kTwoPi = 6.283185307179586;

Eigen::MatrixXd stack_points(const std::deque<Eigen::VectorXd>& pts) {
    Eigen::MatrixXd x(pts.size(), pts.empty() ? 0 : pts.front().size());
    Eigen::Index r = 0;
    for (const auto& p : pts) x.row(r++) = p.transpose();
    return x;
}

Eigen::VectorXd stack_targets(const std::deque<double>& t) {
    Eigen::VectorXd v(t.size());
    Eigen::Index r = 0;
    for (double x : t) v(r++) = x;
    return v;
}

// Kernel matrix without the nugget, rows of `x` as observations.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const GpHyperparams& hp) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd scaled = x.array().rowwise() / hp.lengthscales.transpose().array();
    const double a2 = hp.alpha * hp.alpha;
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = a2;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d2 = (scaled.row(i) - scaled.row(j)).squaredNorm();
            k(i, j) = k(j, i) = a2 * std::exp(-0.5 * d2);
        }
    }
    return k;
}

bool hp_equal(const GpHyperparams& a, const GpHyperparams& b) {
    return a.alpha == b.alpha && a.jitter_rel == b.jitter_rel &&
           a.lengthscales.size() == b.lengthscales.size() && a.lengthscales == b.lengthscales;
}

// Rebuilds the cached Cholesky factor if needed, escalating the nugget
// tenfold per attempt. Throws NumericalFailureError past the cap.
const GpWindow::Factor& ensure_factor(const GpWindow& window, const GpHyperparams& hp) {
    auto& cache = window.factor_cache();
    if (cache.valid && cache.version == window.version() && hp_equal(cache.hp, hp)) {
        return cache;
    }
    if (window.empty()) throw InsufficientDataError("gp: empty window");
    if (hp.lengthscales.size() != window.points().front().size()) {
        throw DimensionError("gp: lengthscale dimension mismatch");
    }

    const Eigen::MatrixXd x = stack_points(window.points());
    const Eigen::VectorXd t = stack_targets(window.targets());
    const Eigen::MatrixXd k_base = kernel_matrix(x, hp);
    const double a2 = hp.alpha * hp.alpha;

    double jitter_rel = hp.jitter_rel;
    while (true) {
        Eigen::MatrixXd k = k_base;
        k.diagonal().array() += jitter_rel * a2;
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() == Eigen::Success) {
            cache.chol_lower = llt.matrixL();
            cache.weights = llt.solve(t);
            cache.log_det = 2.0 * cache.chol_lower.diagonal().array().log().sum();
            cache.jitter_rel_used = jitter_rel;
            cache.hp = hp;
            cache.version = window.version();
            cache.valid = true;
            return cache;
        }
        if (jitter_rel >= kJitterRelCap) {
            cache.valid = false;
            throw NumericalFailureError("gp: factorization failed at jitter cap");
        }
        jitter_rel = std::min(jitter_rel * 10.0, kJitterRelCap);
    }
}

Eigen::VectorXd cross_kernel(const GpWindow& window, const GpHyperparams& hp,
                             const Eigen::VectorXd& query) {
    Eigen::VectorXd kq(window.size());
    Eigen::Index i = 0;
    for (const auto& p : window.points()) kq(i++) = se_kernel(query, p, hp);
    return kq;
}

Eigen::VectorXd to_log(const GpHyperparams& hp) {
    Eigen::VectorXd v(1 + hp.lengthscales.size());
    v(0) = std::log(hp.alpha);
    v.tail(hp.lengthscales.size()) = hp.lengthscales.array().log();
    return v;
}

GpHyperparams from_log(const Eigen::VectorXd& v, double jitter_rel) {
    GpHyperparams hp;
    hp.alpha = std::exp(v(0));
    hp.lengthscales = v.tail(v.size() - 1).array().exp();
    hp.jitter_rel = jitter_rel;
    return hp;
}

}  // namespace

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyperparams& hp) {
    if (a.size() != b.size() || a.size() != hp.lengthscales.size()) {
        throw DimensionError("se_kernel: dimension mismatch");
    }
    const double d2 = ((a - b).cwiseQuotient(hp.lengthscales)).squaredNorm();
    return hp.alpha * hp.alpha * std::exp(-0.5 * d2);
}

GpWindow::GpWindow(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ConfigError("GpWindow: capacity must be positive");
}

void GpWindow::append(Eigen::VectorXd nu, double target) {
    if (!nu_points_.empty() && nu.size() != nu_points_.front().size()) {
        throw DimensionError("GpWindow::append: point dimension mismatch");
    }
    nu_points_.push_back(std::move(nu));
    targets_.push_back(target);
    if (static_cast<int>(targets_.size()) > capacity_) {
        nu_points_.pop_front();
        targets_.pop_front();
    }
    ++version_;
    cache_.valid = false;
}

void GpWindow::clear() {
    nu_points_.clear();
    targets_.clear();
    ++version_;
    cache_ = Factor{};
}

double gp_fit_predict(const GpWindow& window, const GpHyperparams& hp,
                      const Eigen::VectorXd& query) {
    const auto& factor = ensure_factor(window, hp);
    return cross_kernel(window, hp, query).dot(factor.weights);
}

double log_marginal_likelihood(const GpWindow& window, const GpHyperparams& hp) {
    const auto& factor = ensure_factor(window, hp);
    const Eigen::VectorXd t = stack_targets(window.targets());
    const double n = static_cast<double>(window.size());
    return -0.5 * t.dot(factor.weights) - 0.5 * factor.log_det - 0.5 * n * std::log(kTwoPi);
}

LmlGradient log_marginal_likelihood_gradient(const GpWindow& window, const GpHyperparams& hp) {
    const auto& factor = ensure_factor(window, hp);
    const Eigen::Index n = window.size();
    const Eigen::Index d = hp.lengthscales.size();
    const Eigen::MatrixXd x = stack_points(window.points());
    const Eigen::VectorXd t = stack_targets(window.targets());

    LmlGradient out;
    out.lml = -0.5 * t.dot(factor.weights) - 0.5 * factor.log_det -
              0.5 * double(n) * std::log(kTwoPi);
    out.grad.resize(1 + d);

    // d(LML)/dtheta = 1/2 tr((w w^T - K^{-1}) dK/dtheta), w = K^{-1} t.
    // The nugget scales with alpha^2, so dK/dlog(alpha) = 2K and the alpha
    // component collapses to t^T w - n.
    out.grad(0) = t.dot(factor.weights) - double(n);

    Eigen::MatrixXd k_inv = Eigen::MatrixXd::Identity(n, n);
    factor.chol_lower.triangularView<Eigen::Lower>().solveInPlace(k_inv);
    factor.chol_lower.transpose().triangularView<Eigen::Upper>().solveInPlace(k_inv);

    // Diagonal entries have zero squared difference and drop out.
    Eigen::VectorXd grad_l = Eigen::VectorXd::Zero(d);
    const Eigen::VectorXd inv_l2 = hp.lengthscales.array().square().inverse();
    const auto& w = factor.weights;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const double k_nl = se_kernel(x.row(i).transpose(), x.row(j).transpose(), hp);
            const double m = w(i) * w(j) - k_inv(i, j);
            const Eigen::VectorXd diff = x.row(i) - x.row(j);
            grad_l += (m * k_nl) * diff.array().square().matrix().cwiseProduct(inv_l2);
        }
    }
    out.grad.tail(d) = grad_l;
    return out;
}

GpHyperparams heuristic_hyperparams(const GpWindow& window, double jitter_rel) {
    const Eigen::MatrixXd x = stack_points(window.points());
    const Eigen::VectorXd t = stack_targets(window.targets());
    const double n = std::max<double>(1.0, double(window.size()) - 1.0);

    GpHyperparams hp;
    hp.jitter_rel = jitter_rel;
    const double t_mean = t.mean();
    hp.alpha = std::max(std::sqrt((t.array() - t_mean).square().sum() / n), 1e-6);
    hp.lengthscales.resize(x.cols());
    for (Eigen::Index dim = 0; dim < x.cols(); ++dim) {
        const double mean = x.col(dim).mean();
        const double sd = std::sqrt((x.col(dim).array() - mean).square().sum() / n);
        hp.lengthscales(dim) = std::max(sd, 1e-3);
    }
    return hp;
}

OptResult optimize_hyperparams(const GpWindow& window, const GpHyperparams& init,
                               int budget, int n_starts) {
    if (window.empty()) throw InsufficientDataError("optimize_hyperparams: empty window");

    OptResult best;
    best.hp = init;
    best.lml = -std::numeric_limits<double>::infinity();
    bool any_eval = false;
    try {
        best.lml = log_marginal_likelihood(window, init);
        any_eval = true;
    } catch (const NumericalFailureError&) {
    }

    std::vector<GpHyperparams> starts;
    starts.push_back(init);
    if (n_starts >= 2) starts.push_back(heuristic_hyperparams(window, init.jitter_rel));
    if (n_starts >= 3) {
        GpHyperparams wide = heuristic_hyperparams(window, init.jitter_rel);
        wide.lengthscales *= 3.0;
        starts.push_back(wide);
    }

    for (const auto& start : starts) {
        Eigen::VectorXd theta = to_log(start).cwiseMax(-kLogParamBound).cwiseMin(kLogParamBound);
        double lml;
        Eigen::VectorXd grad;
        try {
            auto g = log_marginal_likelihood_gradient(window, from_log(theta, init.jitter_rel));
            lml = g.lml;
            grad = g.grad;
            any_eval = true;
        } catch (const NumericalFailureError&) {
            continue;
        }
        double step = 0.5;  // log-space trust length along the gradient direction
        for (int it = 0; it < budget; ++it) {
            const double g_norm = grad.norm();
            if (g_norm < 1e-12) break;
            Eigen::VectorXd cand = (theta + (step / g_norm) * grad)
                                       .cwiseMax(-kLogParamBound)
                                       .cwiseMin(kLogParamBound);
            if ((cand - theta).lpNorm<Eigen::Infinity>() < 1e-12) break;
            double cand_lml;
            try {
                cand_lml = log_marginal_likelihood(window, from_log(cand, init.jitter_rel));
                any_eval = true;
            } catch (const NumericalFailureError&) {
                step *= 0.5;
                continue;
            }
            if (cand_lml > lml) {
                theta = cand;
                lml = cand_lml;
                try {
                    auto g = log_marginal_likelihood_gradient(window, from_log(theta, init.jitter_rel));
                    grad = g.grad;
                } catch (const NumericalFailureError&) {
                    break;
                }
                step = std::min(step * 1.4, 2.0);
            } else {
                step *= 0.5;
                if (step < 1e-8) break;
            }
        }
        if (lml > best.lml) {
            best.lml = lml;
            best.hp = from_log(theta, init.jitter_rel);
        }
    }

    if (!any_eval) {
        best.hp = init;
        best.warning = true;
        best.lml = -std::numeric_limits<double>::infinity();
    }
    return best;
}

}  // namespace fastslow
