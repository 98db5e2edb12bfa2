#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>

#include "planforge/experience.hpp"

namespace planforge {

struct NetConfig {
    int input = 87;     // feature vector width
    int h1 = 32;        // first hidden layer
    int bottleneck = 8; // latent width; must stay below both hidden layers
    int h2 = 16;        // second hidden layer
};

struct TrainConfig {
    int epochs = 400;
    double learning_rate = 0.02;
    double clip_norm = 20.0; // global gradient-norm ceiling per step
    uint64_t seed = 1;
};

struct NetGradients {
    Eigen::MatrixXd w1, w2, w3, w4;
    Eigen::VectorXd b1, b2, b3, b4;
};

// Four-layer perceptron with a deliberately narrow middle layer. Hidden
// layers use the rectifier, the output is linear; the regression target is
// log(1 + measured cost), so nearby latent points mean similar costs.
// encode() reads the activations at the narrow layer; predict() is exactly
// predict_from_latent(encode(x)).
class BottleneckNet {
  public:
    BottleneckNet(const NetConfig &cfg, uint64_t seed);

    const NetConfig &config() const { return cfg_; }
    int input_dim() const { return cfg_.input; }
    int latent_dim() const { return cfg_.bottleneck; }

    Eigen::VectorXd encode(const Eigen::VectorXd &x) const;
    double predict_from_latent(const Eigen::VectorXd &z) const;
    double predict(const Eigen::VectorXd &x) const;

    double loss(const Eigen::VectorXd &x, double y) const; // squared error
    NetGradients gradient(const Eigen::VectorXd &x, double y) const;
    // one descent step; the raw gradient is rescaled onto the clip_norm ball
    // first, which keeps early large-error steps from blowing up the weights
    void sgd_step(const Eigen::VectorXd &x, double y, double learning_rate,
                  double clip_norm = 20.0);

    void save(const std::filesystem::path &path) const;
    static BottleneckNet load(const std::filesystem::path &path);

    // parameters are open for inspection (tests probe them directly)
    Eigen::MatrixXd w1, w2, w3, w4;
    Eigen::VectorXd b1, b2, b3, b4;

  private:
    NetConfig cfg_;
};

// Fits a net to (features, log(1 + measured)) pairs by seeded per-sample
// stochastic gradient descent. Deterministic for a fixed config.
BottleneckNet train_bottleneck(std::span<const Experience> experiences,
                               const NetConfig &net_cfg = {}, const TrainConfig &train_cfg = {});

} // namespace planforge
