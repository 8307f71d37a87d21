#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "contactseq/gplc.hpp"
#include "contactseq/metrics.hpp"

using namespace contactseq;

namespace {

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

struct ToyData {
    std::vector<SeqExample> noisy;
    std::vector<SeqExample> trusted;
    std::vector<LabelSeq> truth;
};

// Feature 0 carries the label almost perfectly; noisy labels flip a fraction
// of frames, and a few frames are left unlabeled.
ToyData toy_data(int noisy_tracks, int trusted_tracks, int t_len, double flip_rate,
                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ToyData d;
    auto make = [&](int count, bool flip, bool holes, std::vector<SeqExample>& out,
                    bool keep_truth) {
        for (int i = 0; i < count; ++i) {
            SeqExample e;
            e.id = (flip ? "noisy" : "trusted") + std::to_string(i);
            e.features = Eigen::MatrixXd(2, t_len);
            e.labels = LabelSeq(std::size_t(t_len));
            LabelSeq gt{std::size_t(t_len)};
            int a = 6 + int(rng() % 8), b = t_len - 6 - int(rng() % 8);
            for (int t = 0; t < t_len; ++t) {
                bool contact = t >= a && t < b;
                e.features(0, t) = (contact ? 1.0 : -1.0) + g(rng);
                e.features(1, t) = g(rng);
                gt[std::size_t(t)] = contact ? Label::Contact : Label::NoContact;
                Label lab = gt[std::size_t(t)];
                if (flip && u(rng) < flip_rate) lab = contactseq::flip(lab);
                if (holes && t % 9 == 4) lab = Label::Unlabeled;
                e.labels[std::size_t(t)] = lab;
            }
            if (keep_truth) d.truth.push_back(gt);
            out.push_back(std::move(e));
        }
    };
    make(noisy_tracks, true, true, d.noisy, true);
    make(trusted_tracks, false, false, d.trusted, false);
    return d;
}

GplcConfig fast_config() {
    GplcConfig cfg;
    cfg.delta0 = 0.1;
    cfg.delta_end = 0.4;
    cfg.alpha = 0.02;
    cfg.beta = 0.1;
    cfg.m = 5;
    cfg.rounds = 6;
    cfg.pretrain_iters = 600;
    cfg.pretrain_g_iters = 300;
    cfg.finetune_iters = 30;
    cfg.train.adam.lr = 3e-3;
    cfg.train.seed = 12;
    return cfg;
}

}  // namespace

TEST_CASE("gate arithmetic") {
    GateDecision d = gate_eval(0.9, 0.7, 0.15);
    CHECK(d.confident);
    CHECK(d.agree);
    CHECK(d.fire);
    CHECK(d.value == Label::Contact);

    CHECK(!gate_eval(0.9, 0.7, 0.05).confident);  // 0.4 < 0.45
    CHECK(!gate_eval(0.9, 0.4, 0.15).agree);
    CHECK(!gate_eval(0.9, 0.4, 0.15).fire);

    GateDecision low = gate_eval(0.2, 0.3, 0.3);
    CHECK(low.confident);
    CHECK(low.agree);
    CHECK(low.value == Label::NoContact);

    // Exactly at the confidence edge counts as confident.
    CHECK(gate_eval(0.8, 0.8, 0.2).confident);
    CHECK(!gate_eval(0.79, 0.79, 0.2).confident);
    CHECK(!gate_eval(0.5, 0.9, 0.25).confident);
}

TEST_CASE("config validation and json round trip") {
    GplcConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    GplcConfig bad = cfg;
    bad.delta_end = cfg.delta0 - 0.01;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.m = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    cfg.delta0 = 0.07;
    cfg.rounds = 3;
    nlohmann::json j = cfg;
    GplcConfig back = j.get<GplcConfig>();
    CHECK(back.delta0 == doctest::Approx(0.07));
    CHECK(back.rounds == 3);
    CHECK(back.train.adam.lr == doctest::Approx(cfg.train.adam.lr));
}

TEST_CASE("label correction on a separable toy problem") {
    ToyData d = toy_data(10, 4, 45, 0.3, 99);

    std::vector<LabelSeq> original;
    for (const auto& e : d.noisy) original.push_back(e.labels);
    double acc0 = 0.0;
    long long lab0 = 0;
    for (std::size_t i = 0; i < original.size(); ++i)
        for (std::size_t t = 0; t < original[i].size(); ++t)
            if (original[i][t] != Label::Unlabeled) {
                ++lab0;
                acc0 += original[i][t] == d.truth[i][t];
            }
    acc0 /= double(lab0);
    CHECK(acc0 < 0.85);  // the flips really corrupted the working set

    GplcResult res = run_gplc(small_config(), d.noisy, d.trusted, fast_config(), &d.truth);

    REQUIRE(res.rounds.size() == 6);
    REQUIRE(res.corrected.size() == original.size());

    SUBCASE("unlabeled frames are never touched") {
        for (std::size_t i = 0; i < original.size(); ++i)
            for (std::size_t t = 0; t < original[i].size(); ++t)
                if (original[i][t] == Label::Unlabeled) {
                    CHECK(res.corrected[i][t] == Label::Unlabeled);
                    CHECK(res.confident[i][t] == Label::Unlabeled);
                }
    }
    SUBCASE("round statistics are coherent") {
        long long labeled = lab0;
        double prev_delta = fast_config().delta0;
        for (const auto& st : res.rounds) {
            CHECK(st.labeled == labeled);
            CHECK(st.delta >= prev_delta);
            CHECK(st.delta <= fast_config().delta_end);
            prev_delta = st.delta;
            CHECK(st.flips <= st.written);
            CHECK(st.label_acc >= 0.0);
            CHECK(st.label_acc <= 1.0);
        }
        CHECK(res.final_delta >= fast_config().delta0);
        CHECK(res.final_delta <= fast_config().delta_end);
    }
    SUBCASE("corrections improve agreement with the truth") {
        double acc1 = 0.0;
        long long lab1 = 0;
        for (std::size_t i = 0; i < res.corrected.size(); ++i)
            for (std::size_t t = 0; t < res.corrected[i].size(); ++t)
                if (res.corrected[i][t] != Label::Unlabeled) {
                    ++lab1;
                    acc1 += res.corrected[i][t] == d.truth[i][t];
                }
        acc1 /= double(lab1);
        CHECK(lab1 == lab0);  // correction rewrites, never adds or removes
        CHECK(acc1 > acc0 + 0.05);
        CHECK(acc1 == doctest::Approx(res.rounds.back().label_acc));
    }
    SUBCASE("confident labels agree with the final working set") {
        for (std::size_t i = 0; i < res.confident.size(); ++i)
            for (std::size_t t = 0; t < res.confident[i].size(); ++t)
                if (res.confident[i][t] != Label::Unlabeled)
                    CHECK(res.confident[i][t] == res.corrected[i][t]);
    }
    SUBCASE("the main model ends up accurate on the trusted set") {
        CHECK(res.rounds.back().val_acc > 0.9);
    }
}

TEST_CASE("gplc is deterministic") {
    ToyData d1 = toy_data(6, 3, 40, 0.2, 7);
    ToyData d2 = toy_data(6, 3, 40, 0.2, 7);
    GplcConfig cfg = fast_config();
    cfg.rounds = 2;
    cfg.pretrain_iters = 80;
    cfg.pretrain_g_iters = 60;

    GplcResult a = run_gplc(small_config(), d1.noisy, d1.trusted, cfg, &d1.truth);
    GplcResult b = run_gplc(small_config(), d2.noisy, d2.trusted, cfg, &d2.truth);

    CHECK(a.f.params() == b.f.params());
    CHECK(a.g.params() == b.g.params());
    REQUIRE(a.corrected.size() == b.corrected.size());
    for (std::size_t i = 0; i < a.corrected.size(); ++i) CHECK(a.corrected[i] == b.corrected[i]);
    for (std::size_t i = 0; i < a.rounds.size(); ++i) {
        CHECK(a.rounds[i].flips == b.rounds[i].flips);
        CHECK(a.rounds[i].written == b.rounds[i].written);
    }
}

TEST_CASE("gplc rejects malformed input") {
    ToyData d = toy_data(2, 1, 30, 0.2, 3);
    GplcConfig cfg = fast_config();
    CHECK_THROWS_AS(run_gplc(small_config(), {}, d.trusted, cfg, nullptr), ConfigError);

    std::vector<LabelSeq> wrong(1);
    CHECK_THROWS_AS(run_gplc(small_config(), d.noisy, d.trusted, cfg, &wrong), ConfigError);
}
