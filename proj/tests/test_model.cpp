#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "contactseq/model.hpp"

using namespace contactseq;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.input_dim = 3;
    c.enc_hidden = 4;
    c.hidden = 3;
    c.layers = 2;
    c.head_hidden1 = 4;
    c.head_hidden2 = 3;
    return c;
}

Eigen::MatrixXd random_input(int dim, int t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(dim, t);
    for (int j = 0; j < t; ++j)
        for (int i = 0; i < dim; ++i) x(i, j) = g(rng);
    return x;
}

LabelSeq seq(std::initializer_list<int> vals) {
    LabelSeq s;
    for (int v : vals) s.states.push_back(Label(v));
    return s;
}

}  // namespace

TEST_CASE("config validation") {
    ModelConfig c;
    CHECK_NOTHROW(c.validate());
    c.hidden = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ModelConfig{};
    c.layers = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ModelConfig{};
    c.input_dim = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("loss and gradient on fixed logits") {
    Eigen::VectorXd z(3);
    z << 0.0, 2.0, -1.0;
    LabelSeq y = seq({1, 1, -1});

    // Labeled frames: softplus(0) - 0 and softplus(2) - 2, averaged over 2.
    double expect = (std::log(2.0) + std::log1p(std::exp(-2.0))) / 2.0;
    CHECK(sequence_loss(z, y, 1.0, 1.0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(sequence_loss(z, y, 1.0, 3.0) == doctest::Approx(3.0 * expect).epsilon(1e-12));

    Eigen::VectorXd dz = sequence_loss_grad(z, y, 1.0, 1.0);
    CHECK(dz(0) == doctest::Approx((sigmoid(0.0) - 1.0) / 2.0));
    CHECK(dz(1) == doctest::Approx((sigmoid(2.0) - 1.0) / 2.0));
    CHECK(dz(2) == 0.0);

    LabelSeq mixed = seq({0, 1, 0});
    double l0 = std::log(2.0);  // softplus(0)
    double l1 = std::log1p(std::exp(-2.0));
    double l2 = std::log1p(std::exp(-1.0));  // softplus(-1)
    CHECK(sequence_loss(z, mixed, 2.0, 1.0) ==
          doctest::Approx((2.0 * l0 + l1 + 2.0 * l2) / 3.0).epsilon(1e-12));

    CHECK(sequence_loss(z, seq({-1, -1, -1}), 1.0, 1.0) == 0.0);
    CHECK(sequence_loss_grad(z, seq({-1, -1, -1}), 1.0, 1.0).norm() == 0.0);

    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(sigmoid(30.0) == doctest::Approx(1.0));
}

TEST_CASE("zero parameters predict indifference") {
    Model m(tiny_config());
    m.zero();
    Eigen::MatrixXd x = random_input(3, 6, 5);
    Eigen::VectorXd z = m.forward(x);
    CHECK(z.cwiseAbs().maxCoeff() == 0.0);
    for (double p : m.predict_probs(x)) CHECK(p == doctest::Approx(0.5));
    LabelSeq pred = m.predict(x);
    for (std::size_t t = 0; t < pred.size(); ++t) CHECK(pred[t] == Label::Contact);
}

TEST_CASE("init is seed-deterministic") {
    Model a(tiny_config()), b(tiny_config()), c(tiny_config());
    a.init(42);
    b.init(42);
    c.init(43);
    CHECK(a.params() == b.params());
    CHECK((a.params() - c.params()).norm() > 0.0);
    CHECK(a.params().cwiseAbs().maxCoeff() > 0.0);
    CHECK(a.num_params() == b.num_params());
}

TEST_CASE("analytic gradient matches central differences") {
    Model m(tiny_config());
    m.init(7);
    const int T = 5;
    Eigen::MatrixXd x = random_input(3, T, 11);
    LabelSeq y = seq({1, 0, -1, 1, 0});
    const double w0 = 0.8, w1 = 1.3;

    ForwardCache cache;
    Eigen::VectorXd z = m.forward(x, &cache);
    Eigen::VectorXd dz = sequence_loss_grad(z, y, w0, w1);
    Eigen::VectorXd grad = m.backward(cache, dz);
    REQUIRE(std::size_t(grad.size()) == m.num_params());

    auto loss_at = [&](Eigen::Index i, double delta) {
        double saved = m.params()(i);
        m.params()(i) = saved + delta;
        double l = sequence_loss(m.forward(x), y, w0, w1);
        m.params()(i) = saved;
        return l;
    };

    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
        double num = (loss_at(i, h) - loss_at(i, -h)) / (2.0 * h);
        double rel = std::abs(num - grad(i)) / std::max(1.0, std::abs(grad(i)));
        worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("swapping directions time-reverses the model") {
    ModelConfig cfg = tiny_config();
    Model m(cfg);
    m.init(21);
    const int T = 9;
    Eigen::MatrixXd x = random_input(3, T, 31);
    Eigen::VectorXd z = m.forward(x);

    Model rev = m;
    rev.swap_directions();
    Eigen::MatrixXd xr(3, T);
    for (int t = 0; t < T; ++t) xr.col(t) = x.col(T - 1 - t);
    Eigen::VectorXd zr = rev.forward(xr);

    for (int t = 0; t < T; ++t) CHECK(zr(T - 1 - t) == doctest::Approx(z(t)).epsilon(1e-12));

    // Swapping twice restores the original parameters.
    rev.swap_directions();
    CHECK((rev.params() - m.params()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checkpoint files restore the exact model") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() /
                    ("contactseq_model_" + std::to_string(std::rand()) + ".ckpt");

    Model m(tiny_config());
    m.init(99);
    m.save(path);
    Model back = Model::load(path);
    CHECK(back.config() == m.config());
    CHECK(back.params() == m.params());

    Eigen::MatrixXd x = random_input(3, 4, 3);
    CHECK((back.forward(x) - m.forward(x)).cwiseAbs().maxCoeff() == 0.0);
    fs::remove(path);

    CHECK_THROWS_AS(Model::load(path), TrackIoError);
}

TEST_CASE("forward is independent of unrelated state") {
    // Two models with identical parameters agree column by column even when
    // one processes a longer sequence: LSTM state flows only along time.
    Model m(tiny_config());
    m.init(13);
    Eigen::MatrixXd x = random_input(3, 8, 17);
    Eigen::VectorXd z_full = m.forward(x);

    // A prefix shares the forward pass but not the backward one, so only
    // check that per-frame outputs are finite and bounded sanely.
    CHECK(z_full.allFinite());
    Eigen::VectorXd z_again = m.forward(x);
    CHECK((z_full - z_again).cwiseAbs().maxCoeff() == 0.0);
}
