#include "contactseq/train.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <random>

#include "contactseq/metrics.hpp"

namespace contactseq {

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"iters", c.iters},
                       {"max_crop_len", c.max_crop_len},
                       {"seed", c.seed},
                       {"val_interval", c.val_interval},
                       {"use_class_weights", c.use_class_weights},
                       {"adam",
                        {{"lr", c.adam.lr},
                         {"beta1", c.adam.beta1},
                         {"beta2", c.adam.beta2},
                         {"eps", c.adam.eps}}}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.iters = j.value("iters", c.iters);
    c.max_crop_len = j.value("max_crop_len", c.max_crop_len);
    c.seed = j.value("seed", c.seed);
    c.val_interval = j.value("val_interval", c.val_interval);
    c.use_class_weights = j.value("use_class_weights", c.use_class_weights);
    if (j.contains("adam")) {
        const auto& a = j.at("adam");
        c.adam.lr = a.value("lr", c.adam.lr);
        c.adam.beta1 = a.value("beta1", c.adam.beta1);
        c.adam.beta2 = a.value("beta2", c.adam.beta2);
        c.adam.eps = a.value("eps", c.adam.eps);
    }
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
               const AdamConfig& cfg) {
    if (state.m.size() != params.size()) state.reset(params.size());
    ++state.step;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = (cfg.beta2 * state.v.array() + (1.0 - cfg.beta2) * grad.array().square()).matrix();
    double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
    params.array() -=
        cfg.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + cfg.eps);
}

std::pair<double, double> class_weights(const std::vector<SeqExample>& examples) {
    long long c0 = 0, c1 = 0;
    for (const SeqExample& e : examples) {
        c0 += static_cast<long long>(e.labels.count(Label::NoContact));
        c1 += static_cast<long long>(e.labels.count(Label::Contact));
    }
    double total = double(c0 + c1);
    double w0 = c0 > 0 ? total / (2.0 * double(c0)) : 0.0;
    double w1 = c1 > 0 ? total / (2.0 * double(c1)) : 0.0;
    return {w0, w1};
}

void TrainConfig::validate() const {
    if (iters < 1) throw ConfigError("iters must be at least 1");
    if (max_crop_len < 1) throw ConfigError("max_crop_len must be at least 1");
    if (val_interval < 0) throw ConfigError("val_interval must be non-negative");
    if (!(adam.lr > 0.0)) throw ConfigError("lr must be positive");
}

double validate_model(const Model& model, const std::vector<SeqExample>& val_set) {
    double sum = 0.0;
    int n = 0;
    for (const SeqExample& e : val_set) {
        LabelSeq pred = model.predict(e.features);
        if (auto acc = frame_accuracy(pred, e.labels)) {
            sum += *acc;
            ++n;
        }
    }
    return n > 0 ? sum / n : 0.0;
}

double train_step(const SeqExample& ex, Model& model, AdamState& state, const TrainConfig& tcfg,
                  std::mt19937_64& rng, double w0, double w1) {
    const int t_total = int(ex.features.cols());
    int start = 0, len = t_total;
    if (t_total > tcfg.max_crop_len) {
        len = tcfg.max_crop_len;
        std::uniform_int_distribution<int> pick(0, t_total - len);
        start = pick(rng);
    }
    Eigen::MatrixXd x = ex.features.middleCols(start, len);
    LabelSeq y{std::size_t(len)};
    for (int t = 0; t < len; ++t) y[std::size_t(t)] = ex.labels[std::size_t(start + t)];
    if (y.count_labeled() == 0) return 0.0;

    ForwardCache cache;
    Eigen::VectorXd z = model.forward(x, &cache);
    double loss = sequence_loss(z, y, w0, w1);
    Eigen::VectorXd dz = sequence_loss_grad(z, y, w0, w1);
    Eigen::VectorXd grad = model.backward(cache, dz);
    adam_step(model.params(), grad, state, tcfg.adam);
    return loss;
}

TrainResult train(const ModelConfig& mcfg, const std::vector<SeqExample>& train_set,
                  const std::vector<SeqExample>& val_set, const TrainConfig& tcfg) {
    tcfg.validate();
    if (train_set.empty()) throw ConfigError("training set is empty");

    Model model(mcfg);
    model.init(tcfg.seed);
    AdamState state;
    state.reset(Eigen::Index(model.num_params()));
    auto [w0, w1] = tcfg.use_class_weights ? class_weights(train_set)
                                           : std::pair<double, double>{1.0, 1.0};

    std::mt19937_64 rng(tcfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<CurvePoint> curve;
    curve.reserve(std::size_t(tcfg.iters));
    Eigen::VectorXd best_params;
    double best_val = std::nan("");
    int best_iter = -1;

    for (int iter = 1; iter <= tcfg.iters; ++iter) {
        std::size_t pos = std::size_t(iter - 1) % order.size();
        if (pos == 0) std::shuffle(order.begin(), order.end(), rng);
        double loss = train_step(train_set[order[pos]], model, state, tcfg, rng, w0, w1);

        CurvePoint cp;
        cp.iter = iter;
        cp.loss = loss;
        if (tcfg.val_interval > 0 && !val_set.empty() &&
            (iter % tcfg.val_interval == 0 || iter == tcfg.iters)) {
            double acc = validate_model(model, val_set);
            cp.val_acc = acc;
            if (best_iter < 0 || acc > best_val) {
                best_val = acc;
                best_iter = iter;
                best_params = model.params();
            }
        }
        curve.push_back(cp);
    }
    if (best_iter >= 0) model.params() = best_params;

    TrainResult res{std::move(model)};
    res.curve = std::move(curve);
    res.best_val = best_val;
    res.best_iter = best_iter;
    return res;
}

void train_more(Model& model, AdamState& state, const std::vector<SeqExample>& train_set,
                const TrainConfig& tcfg, int iters, std::uint64_t seed, double w0, double w1) {
    if (train_set.empty() || iters < 1) return;
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int iter = 0; iter < iters; ++iter) {
        std::size_t pos = std::size_t(iter) % order.size();
        if (pos == 0) std::shuffle(order.begin(), order.end(), rng);
        train_step(train_set[order[pos]], model, state, tcfg, rng, w0, w1);
    }
}

}  // namespace contactseq
