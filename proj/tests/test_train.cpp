#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "contactseq/train.hpp"

using namespace contactseq;

namespace {

LabelSeq seq(std::initializer_list<int> vals) {
    LabelSeq s;
    for (int v : vals) s.states.push_back(Label(v));
    return s;
}

ModelConfig small_config() {
    ModelConfig c;
    c.input_dim = 2;
    c.enc_hidden = 8;
    c.hidden = 6;
    c.layers = 1;
    c.head_hidden1 = 8;
    c.head_hidden2 = 4;
    return c;
}

// Sign of feature 0 decides the label; feature 1 is a nuisance.
std::vector<SeqExample> toy_set(int tracks, int t_len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<SeqExample> out;
    for (int i = 0; i < tracks; ++i) {
        SeqExample e;
        e.id = "toy" + std::to_string(i);
        e.features = Eigen::MatrixXd(2, t_len);
        e.labels = LabelSeq(std::size_t(t_len));
        int flip = 4 + int(rng() % (unsigned(t_len) - 8));
        for (int t = 0; t < t_len; ++t) {
            bool contact = t >= flip;
            e.features(0, t) = (contact ? 1.0 : -1.0) + g(rng);
            e.features(1, t) = g(rng);
            e.labels[std::size_t(t)] = contact ? Label::Contact : Label::NoContact;
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

TEST_CASE("adam first step moves by roughly the learning rate") {
    Eigen::VectorXd p(2);
    p << 1.0, 2.0;
    Eigen::VectorXd g(2);
    g << 0.1, -0.2;
    AdamState st;
    AdamConfig cfg;

    adam_step(p, g, st, cfg);
    CHECK(st.step == 1);
    // After bias correction the first update is lr * g / (|g| + eps).
    double want0 = 1.0 - cfg.lr * 0.1 / (0.1 + cfg.eps);
    double want1 = 2.0 + cfg.lr * 0.2 / (0.2 + cfg.eps);
    CHECK(std::abs(p(0) - want0) < 3e-12);
    CHECK(std::abs(p(1) - want1) < 3e-12);

    // Second step via an independent replay of the update rule.
    Eigen::VectorXd g2(2);
    g2 << 0.05, 0.05;
    double m0 = 0.9 * (0.1 * 0.1) + 0.1 * 0.05;
    double v0 = 0.999 * (0.001 * 0.1 * 0.1) + 0.001 * 0.05 * 0.05;
    double mhat = m0 / (1.0 - 0.9 * 0.9);
    double vhat = v0 / (1.0 - 0.999 * 0.999);
    double want = want0 - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    adam_step(p, g2, st, cfg);
    CHECK(p(0) == doctest::Approx(want).epsilon(1e-12));
    CHECK(st.step == 2);
}

TEST_CASE("class weights balance the label counts") {
    std::vector<SeqExample> ex(2);
    ex[0].labels = seq({1, 1, 0, -1});
    ex[1].labels = seq({0, 0});
    auto [w0, w1] = class_weights(ex);
    CHECK(w0 == doctest::Approx(5.0 / 6.0));
    CHECK(w1 == doctest::Approx(1.25));

    std::vector<SeqExample> pure(1);
    pure[0].labels = seq({1, 1, 1});
    auto [z0, z1] = class_weights(pure);
    CHECK(z0 == 0.0);
    CHECK(z1 == doctest::Approx(0.5));
}

TEST_CASE("train config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.iters = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.adam.lr = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    TrainConfig j;
    j.iters = 123;
    j.adam.lr = 0.01;
    nlohmann::json js = j;
    TrainConfig back = js.get<TrainConfig>();
    CHECK(back.iters == 123);
    CHECK(back.adam.lr == doctest::Approx(0.01));
}

TEST_CASE("train_step skips unlabeled sequences and learns on labeled ones") {
    Model m(small_config());
    m.init(3);
    Eigen::VectorXd before = m.params();
    AdamState st;
    st.reset(Eigen::Index(m.num_params()));
    TrainConfig tcfg;
    std::mt19937_64 rng(1);

    SeqExample blank;
    blank.features = Eigen::MatrixXd::Zero(2, 6);
    blank.labels = LabelSeq(6);
    CHECK(train_step(blank, m, st, tcfg, rng, 1.0, 1.0) == 0.0);
    CHECK(m.params() == before);
    CHECK(st.step == 0);

    SeqExample ex = toy_set(1, 20, 5)[0];
    double loss = train_step(ex, m, st, tcfg, rng, 1.0, 1.0);
    CHECK(loss > 0.0);
    CHECK((m.params() - before).norm() > 0.0);
    CHECK(st.step == 1);
}

TEST_CASE("train_step crops long sequences") {
    Model m(small_config());
    m.init(3);
    AdamState st;
    st.reset(Eigen::Index(m.num_params()));
    TrainConfig tcfg;
    tcfg.max_crop_len = 16;
    std::mt19937_64 rng(2);

    SeqExample ex = toy_set(1, 200, 7)[0];
    double loss = train_step(ex, m, st, tcfg, rng, 1.0, 1.0);
    CHECK(std::isfinite(loss));
    CHECK(loss > 0.0);
}

TEST_CASE("validate_model averages balanced accuracy") {
    Model m(small_config());
    m.zero();  // predicts Contact everywhere
    auto val = toy_set(3, 20, 9);
    CHECK(validate_model(m, val) == doctest::Approx(0.5));
    CHECK(validate_model(m, {}) == 0.0);
}

TEST_CASE("training fits a separable toy problem deterministically") {
    auto train_set = toy_set(6, 40, 17);
    auto val_set = toy_set(2, 40, 23);

    TrainConfig tcfg;
    tcfg.iters = 260;
    tcfg.seed = 4;
    tcfg.val_interval = 130;
    tcfg.adam.lr = 3e-3;

    TrainResult r1 = train(small_config(), train_set, val_set, tcfg);
    CHECK(r1.curve.size() == 260);
    CHECK(r1.best_iter > 0);
    CHECK(r1.best_val > 0.95);
    CHECK(validate_model(r1.model, val_set) == doctest::Approx(r1.best_val));

    TrainResult r2 = train(small_config(), train_set, val_set, tcfg);
    CHECK(r1.model.params() == r2.model.params());
    CHECK(r1.best_iter == r2.best_iter);
    for (std::size_t i = 0; i < r1.curve.size(); ++i)
        CHECK(r1.curve[i].loss == r2.curve[i].loss);

    CHECK_THROWS_AS(train(small_config(), {}, val_set, tcfg), ConfigError);
}

TEST_CASE("train_more continues in place") {
    auto train_set = toy_set(4, 30, 29);
    Model m(small_config());
    m.init(8);
    AdamState st;
    st.reset(Eigen::Index(m.num_params()));

    TrainConfig tcfg;
    tcfg.adam.lr = 3e-3;
    Eigen::VectorXd before = m.params();
    train_more(m, st, train_set, tcfg, 50, 77, 1.0, 1.0);
    CHECK((m.params() - before).norm() > 0.0);
    CHECK(st.step == 50);

    // Same seed and inputs, same trajectory.
    Model m2(small_config());
    m2.init(8);
    AdamState st2;
    st2.reset(Eigen::Index(m2.num_params()));
    train_more(m2, st2, train_set, tcfg, 50, 77, 1.0, 1.0);
    CHECK(m.params() == m2.params());

    train_more(m, st, {}, tcfg, 50, 77, 1.0, 1.0);  // no-op
    CHECK(m.params() == m2.params());
}
