#include "contactseq/gplc.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "contactseq/metrics.hpp"

namespace contactseq {

void GplcConfig::validate() const {
    if (delta0 < 0.0 || delta0 > 0.5) throw ConfigError("delta0 must be in [0, 0.5]");
    if (delta_end < delta0 || delta_end > 0.5)
        throw ConfigError("delta_end must be in [delta0, 0.5]");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (beta < 0.0) throw ConfigError("beta must be non-negative");
    if (m < 1) throw ConfigError("m must be at least 1");
    if (rounds < 1) throw ConfigError("rounds must be at least 1");
    if (pretrain_iters < 0 || pretrain_g_iters < 0 || finetune_iters < 0)
        throw ConfigError("training budgets must be non-negative");
    train.validate();
}

void to_json(nlohmann::json& j, const GplcConfig& c) {
    j = nlohmann::json{{"delta0", c.delta0},
                       {"delta_end", c.delta_end},
                       {"alpha", c.alpha},
                       {"beta", c.beta},
                       {"m", c.m},
                       {"rounds", c.rounds},
                       {"guided", c.guided},
                       {"pretrain_iters", c.pretrain_iters},
                       {"pretrain_g_iters", c.pretrain_g_iters},
                       {"finetune_iters", c.finetune_iters},
                       {"train", c.train}};
}

void from_json(const nlohmann::json& j, GplcConfig& c) {
    c.delta0 = j.value("delta0", c.delta0);
    c.delta_end = j.value("delta_end", c.delta_end);
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.m = j.value("m", c.m);
    c.rounds = j.value("rounds", c.rounds);
    c.guided = j.value("guided", c.guided);
    c.pretrain_iters = j.value("pretrain_iters", c.pretrain_iters);
    c.pretrain_g_iters = j.value("pretrain_g_iters", c.pretrain_g_iters);
    c.finetune_iters = j.value("finetune_iters", c.finetune_iters);
    if (j.contains("train")) from_json(j.at("train"), c.train);
}

GateDecision gate_eval(double pf, double pg, double delta) {
    GateDecision d;
    d.confident = std::abs(pf - 0.5) >= 0.5 - delta;
    d.agree = (pf >= 0.5) == (pg >= 0.5);
    d.fire = d.confident && d.agree;
    d.value = pf >= 0.5 ? Label::Contact : Label::NoContact;
    return d;
}

GplcResult run_gplc(const ModelConfig& mcfg, std::vector<SeqExample> noisy,
                    const std::vector<SeqExample>& trusted, const GplcConfig& cfg,
                    const std::vector<LabelSeq>* truth) {
    cfg.validate();
    mcfg.validate();
    if (noisy.empty()) throw ConfigError("gplc needs at least one noisy track");
    if (truth && truth->size() != noisy.size())
        throw ConfigError("truth count does not match noisy track count");

    const std::uint64_t seed = cfg.train.seed;

    Model f(mcfg);
    f.init(seed);
    AdamState fs;
    fs.reset(Eigen::Index(f.num_params()));
    auto [wf0, wf1] = class_weights(noisy);
    train_more(f, fs, noisy, cfg.train, cfg.pretrain_iters, seed ^ 0x706c6366ull, wf0, wf1);

    Model g(mcfg);
    g.init(seed ^ 0x6775696465ull);
    AdamState gs;
    gs.reset(Eigen::Index(g.num_params()));
    double wt0 = 1.0, wt1 = 1.0;
    if (!trusted.empty()) std::tie(wt0, wt1) = class_weights(trusted);
    if (cfg.guided && !trusted.empty())
        train_more(g, gs, trusted, cfg.train, cfg.pretrain_g_iters, seed ^ 0x67706c63ull, wt0,
                   wt1);

    const std::size_t n = noisy.size();
    std::vector<LabelSeq> confident(n);
    std::vector<SeqExample> confident_set(n);
    long long labeled_total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        confident[i] = LabelSeq(noisy[i].labels.size());
        confident_set[i] = {noisy[i].id, noisy[i].features, confident[i]};
        labeled_total += static_cast<long long>(noisy[i].labels.count_labeled());
    }

    std::mt19937_64 rng_f(seed ^ 0x726e675f66ull);
    std::mt19937_64 rng_g(seed ^ 0x726e675f67ull);

    double delta = cfg.delta0;
    long long visited = 0, finetunes = 0;
    GplcResult res{std::move(f), std::move(g)};

    for (int round = 1; round <= cfg.rounds; ++round) {
        // Loss weights follow the current state of each label set.
        std::tie(wf0, wf1) = class_weights(noisy);
        auto [wc0, wc1] = class_weights(confident_set);

        GplcRoundStats st;
        st.round = round;
        st.delta = delta;
        st.labeled = labeled_total;

        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> pf = res.f.predict_probs(noisy[i].features);
            std::vector<double> pg = cfg.guided ? res.g.predict_probs(noisy[i].features) : pf;
            LabelSeq& work = noisy[i].labels;
            for (std::size_t t = 0; t < work.size(); ++t) {
                GateDecision gd = gate_eval(pf[t], pg[t], delta);
                if (work[t] == Label::Unlabeled) {
                    if (gd.fire) ++st.skipped_unlabeled;  // never label new frames
                    continue;
                }
                if (!gd.fire) continue;
                ++st.written;
                if (gd.value != work[t]) ++st.flips;
                work[t] = gd.value;
                confident[i][t] = gd.value;
            }
            confident_set[i].labels = confident[i];

            train_step(noisy[i], res.f, fs, cfg.train, rng_f, wf0, wf1);
            if (cfg.guided && confident[i].count_labeled() > 0)
                train_step(confident_set[i], res.g, gs, cfg.train, rng_g, wc0, wc1);

            // Periodic fine-tune on the trusted set: the only path by which
            // truth reaches f, and what keeps recovery alive when the noisy
            // labels carry no signal at all.
            if (++visited % cfg.m == 0 && !trusted.empty()) {
                ++finetunes;
                std::uint64_t fseed = seed + 1000003ull * std::uint64_t(finetunes);
                train_more(res.f, fs, trusted, cfg.train, cfg.finetune_iters, fseed, wt0, wt1);
                if (cfg.guided)
                    train_more(res.g, gs, trusted, cfg.train, cfg.finetune_iters, fseed ^ 0x67ull,
                               wt0, wt1);
            }
        }

        if (truth) {
            long long hit = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t t = 0; t < noisy[i].labels.size(); ++t)
                    if (noisy[i].labels[t] != Label::Unlabeled &&
                        noisy[i].labels[t] == (*truth)[i][t])
                        ++hit;
            st.label_acc = labeled_total > 0 ? double(hit) / double(labeled_total) : 0.0;
        } else {
            st.label_acc = std::nan("");
        }
        st.val_acc = validate_model(res.f, trusted);

        if (st.flips < double(cfg.alpha) * double(labeled_total))
            delta = std::min(delta + cfg.beta, cfg.delta_end);
        res.rounds.push_back(st);
    }

    res.corrected.reserve(n);
    for (std::size_t i = 0; i < n; ++i) res.corrected.push_back(noisy[i].labels);
    res.confident = std::move(confident);
    res.final_delta = delta;
    return res;
}

}  // namespace contactseq
