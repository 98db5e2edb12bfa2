#include <doctest.h>

#include <cmath>

#include "planforge/error.hpp"
#include "planforge/gp.hpp"
#include "planforge/rng.hpp"

using namespace planforge;

namespace {

Eigen::MatrixXd random_points(int n, int d, Rng &rng) {
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            X(i, j) = 3.0 * rng.next_normal();
    return X;
}

// brute-force E[max(best - T, 0)] for T ~ N(mu, sigma^2) by trapezoidal
// integration, the oracle for the closed-form expected improvement
double numeric_ei(double mu, double sigma, double best) {
    const int steps = 200001;
    double lo = mu - 10 * sigma, hi = mu + 10 * sigma, h = (hi - lo) / (steps - 1);
    double sum = 0;
    for (int i = 0; i < steps; ++i) {
        double t = lo + i * h;
        double density = std::exp(-0.5 * (t - mu) * (t - mu) / (sigma * sigma)) /
                         (sigma * std::sqrt(2 * M_PI));
        double val = std::max(best - t, 0.0) * density;
        sum += (i == 0 || i == steps - 1) ? 0.5 * val : val;
    }
    return sum * h;
}

} // namespace

TEST_CASE("the posterior interpolates its observations") {
    Rng rng(12);
    Eigen::MatrixXd X = random_points(5, 3, rng);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i)
        y[i] = 5.0 * rng.next_double();
    GpModel gp = fit_gp(X, y);
    for (int i = 0; i < 5; ++i) {
        auto p = gp.posterior(X.row(i));
        CHECK(std::abs(p.mean - y[i]) < 1e-4);
        CHECK(p.var < 1e-3);
        CHECK(p.var >= 0);
    }
}

TEST_CASE("hyperparameters come from the data") {
    Eigen::MatrixXd X(3, 1);
    X << 0, 1, 3; // pairwise distances {1, 2, 3}, median 2
    Eigen::VectorXd y(3);
    y << 1, 5, 9; // mean 5, sample variance 16
    GpModel gp = fit_gp(X, y);
    CHECK(gp.length_scale == 2.0);
    CHECK(gp.signal_var == 16.0);
    CHECK(gp.mean == 5.0);

    Eigen::VectorXd flat = Eigen::VectorXd::Constant(3, 7.0);
    GpModel gp2 = fit_gp(X, flat);
    CHECK(gp2.signal_var == 1.0); // degenerate variance falls back
}

TEST_CASE("a single observation reverts to the prior far away") {
    Eigen::MatrixXd X(1, 2);
    X << 0, 0;
    Eigen::VectorXd y(1);
    y << 3.0;
    GpModel gp = fit_gp(X, y);
    CHECK(gp.length_scale == 1.0);
    auto at = gp.posterior(X.row(0));
    CHECK(std::abs(at.mean - 3.0) < 1e-4);
    Eigen::VectorXd far(2);
    far << 50, 50;
    auto p = gp.posterior(far);
    CHECK(p.mean == doctest::Approx(3.0)); // prior mean is the data mean
    CHECK(p.var == doctest::Approx(gp.signal_var + gp.noise));
}

TEST_CASE("posterior mean follows the nearer observation") {
    Eigen::MatrixXd X(2, 1);
    X << 0, 10;
    Eigen::VectorXd y(2);
    y << 0, 10;
    GpModel gp = fit_gp(X, y);
    Eigen::VectorXd a(1), b(1);
    a << 1;
    b << 9;
    CHECK(gp.posterior(a).mean < gp.posterior(b).mean);
}

TEST_CASE("expected improvement matches numeric integration and is safe") {
    Rng rng(13);
    Eigen::MatrixXd X = random_points(6, 2, rng);
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i)
        y[i] = rng.next_double() * 4 - 2;
    GpModel gp = fit_gp(X, y);
    double best = y.minCoeff();

    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd x(2);
        x << 8 * rng.next_double() - 4, 8 * rng.next_double() - 4;
        double ei = gp.expected_improvement(x, best);
        CHECK(ei >= 0.0);
        auto p = gp.posterior(x);
        double sigma = std::sqrt(p.var);
        if (sigma > 1e-6) {
            double oracle = numeric_ei(p.mean, sigma, best);
            CHECK(ei == doctest::Approx(oracle).epsilon(1e-5));
        }
    }

    // measured points are never proposed again
    for (int i = 0; i < 6; ++i)
        CHECK(gp.expected_improvement(X.row(i), best) == 0.0);
}

TEST_CASE("the fit rejects malformed inputs") {
    Eigen::MatrixXd X(2, 1);
    X << 0, 1;
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    CHECK_THROWS_AS(fit_gp(X, y), Error);
    CHECK_THROWS_AS(fit_gp(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0)), Error);
    Eigen::VectorXd y2(2);
    y2 << 1, 2;
    CHECK_THROWS_AS(fit_gp(X, y2, 0.0), Error);
    GpModel gp = fit_gp(X, y2);
    Eigen::VectorXd wrong(3);
    wrong << 1, 2, 3;
    CHECK_THROWS_AS(gp.posterior(wrong), Error);
}
