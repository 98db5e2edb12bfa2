#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "planforge/error.hpp"
#include "planforge/mlp.hpp"
#include "planforge/rng.hpp"

using namespace planforge;

namespace {

Eigen::VectorXd random_vec(int n, Rng &rng) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i)
        x[i] = rng.next_normal();
    return x;
}

Experience make_exp(const Eigen::VectorXd &f, double measured) {
    Experience e;
    e.fingerprint = "0123456789abcdef";
    e.features = f;
    e.measured = measured;
    return e;
}

} // namespace

TEST_CASE("analytic gradients match central finite differences") {
    NetConfig cfg;
    cfg.input = 10;
    BottleneckNet net(cfg, 7);
    Rng rng(99);
    Eigen::VectorXd x = random_vec(cfg.input, rng);
    double y = 2.5;
    NetGradients g = net.gradient(x, y);

    struct Param {
        Eigen::MatrixXd *w;
        const Eigen::MatrixXd *gm;
    };
    std::vector<Param> params = {{&net.w1, &g.w1}, {&net.w2, &g.w2}, {&net.w3, &g.w3},
                                 {&net.w4, &g.w4}};
    int checked = 0;
    for (auto &p : params) {
        for (int probe = 0; probe < 5; ++probe) {
            int r = (int)rng.next_below((uint64_t)p.w->rows());
            int c = (int)rng.next_below((uint64_t)p.w->cols());
            double saved = (*p.w)(r, c);
            double h = 1e-5 * std::max(1.0, std::abs(saved));
            (*p.w)(r, c) = saved + h;
            double up = net.loss(x, y);
            (*p.w)(r, c) = saved - h;
            double down = net.loss(x, y);
            (*p.w)(r, c) = saved;
            double numeric = (up - down) / (2 * h);
            double analytic = (*p.gm)(r, c);
            double denom = std::max({1e-8, std::abs(numeric), std::abs(analytic)});
            CHECK(std::abs(numeric - analytic) / denom < 1e-4);
            ++checked;
        }
    }
    CHECK(checked == 20);

    // bias gradients, same oracle
    std::vector<std::pair<Eigen::VectorXd *, const Eigen::VectorXd *>> biases = {
        {&net.b1, &g.b1}, {&net.b2, &g.b2}, {&net.b3, &g.b3}, {&net.b4, &g.b4}};
    for (auto &[b, gb] : biases) {
        int r = (int)rng.next_below((uint64_t)b->size());
        double saved = (*b)[r];
        double h = 1e-5 * std::max(1.0, std::abs(saved));
        (*b)[r] = saved + h;
        double up = net.loss(x, y);
        (*b)[r] = saved - h;
        double down = net.loss(x, y);
        (*b)[r] = saved;
        double numeric = (up - down) / (2 * h);
        double denom = std::max({1e-8, std::abs(numeric), std::abs((*gb)[r])});
        CHECK(std::abs(numeric - (*gb)[r]) / denom < 1e-4);
    }
}

TEST_CASE("a single experience is memorized") {
    NetConfig cfg;
    cfg.input = 6;
    Rng rng(3);
    Experience e = make_exp(random_vec(6, rng), 54.0);
    TrainConfig tc;
    std::vector<Experience> one{e};
    BottleneckNet net = train_bottleneck(one, cfg, tc);
    CHECK(net.loss(e.features, std::log1p(54.0)) < 1e-4);
}

TEST_CASE("training is deterministic in the seed") {
    NetConfig cfg;
    cfg.input = 6;
    Rng rng(4);
    std::vector<Experience> exps;
    for (int i = 0; i < 3; ++i)
        exps.push_back(make_exp(random_vec(6, rng), 10.0 * (i + 1)));
    TrainConfig tc;
    tc.epochs = 50;
    BottleneckNet a = train_bottleneck(exps, cfg, tc);
    BottleneckNet b = train_bottleneck(exps, cfg, tc);
    CHECK(a.w1 == b.w1);
    CHECK(a.w4 == b.w4);
    CHECK(a.b2 == b.b2);
}

TEST_CASE("prediction factors exactly through the bottleneck") {
    NetConfig cfg;
    cfg.input = 12;
    BottleneckNet net(cfg, 11);
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        Eigen::VectorXd x = random_vec(cfg.input, rng);
        Eigen::VectorXd z = net.encode(x);
        CHECK(z.size() == cfg.bottleneck);
        CHECK(net.predict(x) == net.predict_from_latent(z));
        CHECK((z.array() >= 0.0).all()); // rectified activations
    }
}

TEST_CASE("network files round-trip and reject corruption") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "planforge_net_test";
    fs::create_directories(dir);
    NetConfig cfg;
    cfg.input = 9;
    BottleneckNet net(cfg, 21);
    fs::path file = dir / "net.bin";
    net.save(file);
    BottleneckNet back = BottleneckNet::load(file);
    Rng rng(6);
    for (int i = 0; i < 5; ++i) {
        Eigen::VectorXd x = random_vec(cfg.input, rng);
        CHECK(net.predict(x) == back.predict(x));
    }

    {
        std::ofstream out(dir / "trailing.bin", std::ios::binary);
        std::ifstream in(file, std::ios::binary);
        out << in.rdbuf();
        out << "x";
    }
    CHECK_THROWS_AS(BottleneckNet::load(dir / "trailing.bin"), Error);
    {
        std::ofstream out(dir / "garbage.bin", std::ios::binary);
        out << "not a header\n";
    }
    CHECK_THROWS_WITH_AS(BottleneckNet::load(dir / "garbage.bin"),
                         doctest::Contains("not a network file"), Error);
    fs::remove_all(dir);
}

TEST_CASE("training rejects bad inputs") {
    CHECK_THROWS_AS(train_bottleneck({}), Error);
    try {
        train_bottleneck({});
    } catch (const Error &e) {
        CHECK(e.kind() == errc::training);
    }
    Rng rng(8);
    std::vector<Experience> wrong{make_exp(random_vec(4, rng), 1.0)};
    NetConfig cfg; // expects width 87
    CHECK_THROWS_AS(train_bottleneck(wrong, cfg), Error);

    NetConfig fat;
    fat.bottleneck = 32;
    CHECK_THROWS_AS(BottleneckNet(fat, 1), Error);
}
