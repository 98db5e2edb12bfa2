#include "planforge/gp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "planforge/error.hpp"

namespace planforge {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double kernel(const GpModel &m, const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
    double d2 = (a - b).squaredNorm();
    return m.signal_var * std::exp(-d2 / (2.0 * m.length_scale * m.length_scale));
}

} // namespace

GpModel fit_gp(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, double noise) {
    if (X.rows() < 1)
        raise(errc::argument, "a gaussian process needs at least one observation");
    if (X.rows() != y.size())
        raise(errc::argument, "gaussian process inputs and targets disagree in count");
    if (!(noise > 0.0))
        raise(errc::argument, "observation noise must be positive");
    if (!X.allFinite() || !y.allFinite())
        raise(errc::data, "gaussian process observations must be finite");

    GpModel m;
    m.X = X;
    m.y = y;
    m.noise = noise;
    m.mean = y.mean();

    std::vector<double> dists;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
            double d = (X.row(i) - X.row(j)).norm();
            if (d > 0.0)
                dists.push_back(d);
        }
    if (!dists.empty()) {
        size_t mid = dists.size() / 2;
        std::nth_element(dists.begin(), dists.begin() + (ptrdiff_t)mid, dists.end());
        m.length_scale = dists[mid];
    }
    if (y.size() >= 2) {
        double var = (y.array() - m.mean).square().sum() / (double)(y.size() - 1);
        if (var > 1e-12)
            m.signal_var = var;
    }

    Eigen::MatrixXd K(X.rows(), X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            K(i, j) = K(j, i) = kernel(m, X.row(i), X.row(j));
    // escalate the jitter only if the factorization fails numerically
    double jitter = noise;
    for (int attempt = 0;; ++attempt) {
        Eigen::MatrixXd Kn = K + jitter * Eigen::MatrixXd::Identity(X.rows(), X.rows());
        m.chol.compute(Kn);
        if (m.chol.info() == Eigen::Success)
            break;
        if (attempt >= 8)
            raise(errc::internal, "gaussian process covariance is not positive definite");
        jitter *= 10.0;
    }
    m.alpha = m.chol.solve((y.array() - m.mean).matrix().eval());
    return m;
}

GpModel::Posterior GpModel::posterior(const Eigen::VectorXd &x) const {
    if (x.size() != X.cols())
        raise(errc::argument, "query point dimension does not match the observations");
    Eigen::VectorXd k(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        k[i] = kernel(*this, x, X.row(i));
    Eigen::VectorXd v = chol.solve(k);
    double var = signal_var + noise - k.dot(v);
    return {mean + k.dot(alpha), std::max(var, 0.0)};
}

double GpModel::expected_improvement(const Eigen::VectorXd &x, double best_y) const {
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        if ((x.transpose() - X.row(i)).norm() < 1e-9)
            return 0.0; // already measured, nothing left to learn here
    Posterior p = posterior(x);
    double sigma = std::sqrt(p.var);
    if (sigma < 1e-12)
        return std::max(best_y - p.mean, 0.0);
    double z = (best_y - p.mean) / sigma;
    double ei = (best_y - p.mean) * normal_cdf(z) + sigma * normal_pdf(z);
    return std::max(ei, 0.0);
}

} // namespace planforge
