#include "planforge/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planforge/error.hpp"
#include "planforge/rng.hpp"

namespace planforge {

namespace {

Eigen::VectorXd relu(const Eigen::VectorXd &z) { return z.cwiseMax(0.0); }

Eigen::VectorXd relu_mask(const Eigen::VectorXd &z) {
    return (z.array() > 0.0).cast<double>().matrix();
}

// scaled normal init sized to the fan-in, as rectifier layers want
void init_layer(Eigen::MatrixXd &w, Eigen::VectorXd &b, int rows, int cols, Rng &rng) {
    w.resize(rows, cols);
    double scale = std::sqrt(2.0 / (double)cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            w(r, c) = scale * rng.next_normal();
    b = Eigen::VectorXd::Zero(rows);
}

void write_matrix(std::ofstream &out, const Eigen::MatrixXd &m) {
    out.write(reinterpret_cast<const char *>(m.data()),
              (std::streamsize)((size_t)m.size() * sizeof(double)));
}

void read_matrix(std::ifstream &in, Eigen::MatrixXd &m) {
    in.read(reinterpret_cast<char *>(m.data()),
            (std::streamsize)((size_t)m.size() * sizeof(double)));
}

} // namespace

BottleneckNet::BottleneckNet(const NetConfig &cfg, uint64_t seed) : cfg_(cfg) {
    if (cfg.input < 1 || cfg.h1 < 1 || cfg.bottleneck < 1 || cfg.h2 < 1)
        raise(errc::config, "network layer sizes must be positive");
    if (cfg.bottleneck >= cfg.h1 || cfg.bottleneck >= cfg.h2)
        raise(errc::config, "the bottleneck must be narrower than both hidden layers");
    Rng rng(mix_seed(seed, fnv1a64("bottleneck-net")));
    init_layer(w1, b1, cfg.h1, cfg.input, rng);
    init_layer(w2, b2, cfg.bottleneck, cfg.h1, rng);
    init_layer(w3, b3, cfg.h2, cfg.bottleneck, rng);
    init_layer(w4, b4, 1, cfg.h2, rng);
}

Eigen::VectorXd BottleneckNet::encode(const Eigen::VectorXd &x) const {
    if (x.size() != cfg_.input)
        raise(errc::argument, "feature vector has width " + std::to_string(x.size()) +
                                  ", the network expects " + std::to_string(cfg_.input));
    return relu(w2 * relu(w1 * x + b1) + b2);
}

double BottleneckNet::predict_from_latent(const Eigen::VectorXd &z) const {
    if (z.size() != cfg_.bottleneck)
        raise(errc::argument, "latent vector has width " + std::to_string(z.size()) +
                                  ", the network expects " + std::to_string(cfg_.bottleneck));
    return (w4 * relu(w3 * z + b3) + b4)(0);
}

double BottleneckNet::predict(const Eigen::VectorXd &x) const {
    return predict_from_latent(encode(x));
}

double BottleneckNet::loss(const Eigen::VectorXd &x, double y) const {
    double d = predict(x) - y;
    return d * d;
}

NetGradients BottleneckNet::gradient(const Eigen::VectorXd &x, double y) const {
    if (x.size() != cfg_.input)
        raise(errc::argument, "feature vector width does not match the network");
    Eigen::VectorXd z1 = w1 * x + b1, a1 = relu(z1);
    Eigen::VectorXd z2 = w2 * a1 + b2, a2 = relu(z2);
    Eigen::VectorXd z3 = w3 * a2 + b3, a3 = relu(z3);
    double f = (w4 * a3 + b4)(0);

    NetGradients g;
    double g4 = 2.0 * (f - y); // d(squared error)/d(output)
    g.w4 = g4 * a3.transpose();
    g.b4 = Eigen::VectorXd::Constant(1, g4);
    Eigen::VectorXd g3 = (w4.transpose() * g4).cwiseProduct(relu_mask(z3));
    g.w3 = g3 * a2.transpose();
    g.b3 = g3;
    Eigen::VectorXd g2 = (w3.transpose() * g3).cwiseProduct(relu_mask(z2));
    g.w2 = g2 * a1.transpose();
    g.b2 = g2;
    Eigen::VectorXd g1 = (w2.transpose() * g2).cwiseProduct(relu_mask(z1));
    g.w1 = g1 * x.transpose();
    g.b1 = g1;
    return g;
}

void BottleneckNet::sgd_step(const Eigen::VectorXd &x, double y, double learning_rate,
                             double clip_norm) {
    NetGradients g = gradient(x, y);
    if (clip_norm > 0) {
        double sq = g.w1.squaredNorm() + g.w2.squaredNorm() + g.w3.squaredNorm() +
                    g.w4.squaredNorm() + g.b1.squaredNorm() + g.b2.squaredNorm() +
                    g.b3.squaredNorm() + g.b4.squaredNorm();
        double norm = std::sqrt(sq);
        if (norm > clip_norm) {
            double s = clip_norm / norm;
            g.w1 *= s;
            g.w2 *= s;
            g.w3 *= s;
            g.w4 *= s;
            g.b1 *= s;
            g.b2 *= s;
            g.b3 *= s;
            g.b4 *= s;
        }
    }
    w1 -= learning_rate * g.w1;
    b1 -= learning_rate * g.b1;
    w2 -= learning_rate * g.w2;
    b2 -= learning_rate * g.b2;
    w3 -= learning_rate * g.w3;
    b3 -= learning_rate * g.b3;
    w4 -= learning_rate * g.w4;
    b4 -= learning_rate * g.b4;
    PLANFORGE_ASSERT(w1.allFinite() && w2.allFinite() && w3.allFinite() && w4.allFinite(),
                     "training diverged to non-finite weights");
}

void BottleneckNet::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        raise(errc::data, "cannot write network file " + path.string());
    nlohmann::json header = {{"format", "planforge-net-v1"},
                             {"input", cfg_.input},
                             {"h1", cfg_.h1},
                             {"bottleneck", cfg_.bottleneck},
                             {"h2", cfg_.h2}};
    out << header.dump() << '\n';
    write_matrix(out, w1);
    write_matrix(out, w2);
    write_matrix(out, w3);
    write_matrix(out, w4);
    Eigen::MatrixXd bs[4] = {b1, b2, b3, b4};
    for (const auto &b : bs)
        write_matrix(out, b);
    if (!out)
        raise(errc::data, "failed writing network file " + path.string());
}

BottleneckNet BottleneckNet::load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(errc::data, "cannot read network file " + path.string());
    std::string line;
    std::getline(in, line);
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "planforge-net-v1")
        raise(errc::data, "not a network file: " + path.string());
    NetConfig cfg;
    cfg.input = header.at("input").get<int>();
    cfg.h1 = header.at("h1").get<int>();
    cfg.bottleneck = header.at("bottleneck").get<int>();
    cfg.h2 = header.at("h2").get<int>();
    BottleneckNet net(cfg, 0);
    read_matrix(in, net.w1);
    read_matrix(in, net.w2);
    read_matrix(in, net.w3);
    read_matrix(in, net.w4);
    Eigen::MatrixXd b;
    Eigen::VectorXd *bs[4] = {&net.b1, &net.b2, &net.b3, &net.b4};
    for (auto *v : bs) {
        b.resize(v->size(), 1);
        read_matrix(in, b);
        *v = b.col(0);
    }
    if (!in)
        raise(errc::data, "network file is truncated: " + path.string());
    char extra;
    if (in.read(&extra, 1))
        raise(errc::data, "network file has trailing bytes: " + path.string());
    return net;
}

BottleneckNet train_bottleneck(std::span<const Experience> experiences, const NetConfig &net_cfg,
                               const TrainConfig &train_cfg) {
    if (experiences.empty())
        raise(errc::training, "cannot train on an empty experience set");
    for (const Experience &e : experiences) {
        e.validate();
        if (e.features.size() != net_cfg.input)
            raise(errc::training, "experience feature width does not match the network input");
    }
    BottleneckNet net(net_cfg, train_cfg.seed);
    Rng rng(mix_seed(train_cfg.seed, fnv1a64("sgd-shuffle")));
    std::vector<size_t> order(experiences.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);
        for (size_t idx : order) {
            const Experience &e = experiences[idx];
            net.sgd_step(e.features, std::log1p(e.measured), train_cfg.learning_rate,
                         train_cfg.clip_norm);
        }
    }
    return net;
}

} // namespace planforge
