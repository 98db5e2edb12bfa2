#pragma once

#include <Eigen/Dense>

namespace planforge {

// Gaussian-process regression with a squared-exponential kernel:
//   k(a, b) = signal_var * exp(-|a-b|^2 / (2 * length_scale^2))
// The length scale is the median pairwise distance of the inputs (1 when
// fewer than two distinct points), signal_var is the sample variance of the
// targets (1 when degenerate), and observations carry a fixed 1e-6 noise
// floor. The prior mean is the target mean.
struct GpModel {
    Eigen::MatrixXd X; // one row per observed point
    Eigen::VectorXd y;
    double length_scale = 1.0;
    double signal_var = 1.0;
    double noise = 1e-6;
    double mean = 0.0;
    Eigen::LLT<Eigen::MatrixXd> chol; // of K + noise*I
    Eigen::VectorXd alpha;            // (K + noise*I)^{-1} (y - mean)

    struct Posterior {
        double mean;
        double var; // clamped at 0
    };
    Posterior posterior(const Eigen::VectorXd &x) const;

    // Expected improvement for minimization against best_y. Exactly 0 at
    // (numerically) already-observed points, so proposals never re-run a
    // measured plan; never negative.
    double expected_improvement(const Eigen::VectorXd &x, double best_y) const;
};

GpModel fit_gp(const Eigen::MatrixXd &X, const Eigen::VectorXd &y, double noise = 1e-6);

} // namespace planforge
