#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <nlohmann/json_fwd.hpp>
#include <random>
#include <string>
#include <vector>

#include "contactseq/model.hpp"

namespace contactseq {

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;  // added to sqrt(v-hat), outside the root
};

struct AdamState {
    Eigen::VectorXd m, v;
    long long step = 0;

    void reset(Eigen::Index n) {
        m = Eigen::VectorXd::Zero(n);
        v = Eigen::VectorXd::Zero(n);
        step = 0;
    }
};

// One bias-corrected update: p -= lr * m-hat / (sqrt(v-hat) + eps).
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
               const AdamConfig& cfg);

// One training sequence: per-frame features (kFeatureDim x T) plus labels,
// possibly partial.
struct SeqExample {
    std::string id;
    Eigen::MatrixXd features;
    LabelSeq labels;
};

// NoContact / Contact loss weights: total_labeled / (2 * class_count), zero
// for an absent class.
std::pair<double, double> class_weights(const std::vector<SeqExample>& examples);

struct TrainConfig {
    int iters = 4000;        // optimizer steps; one sequence per step
    int max_crop_len = 105;  // longer sequences train on a random window
    std::uint64_t seed = 0;
    int val_interval = 200;  // steps between validation passes, 0 = never
    AdamConfig adam;
    bool use_class_weights = true;

    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct CurvePoint {
    int iter = 0;
    double loss = 0.0;
    double val_acc = std::nan("");  // balanced accuracy; NaN off-schedule
};

struct TrainResult {
    Model model;
    std::vector<CurvePoint> curve;
    double best_val = std::nan("");
    int best_iter = -1;
};

// Mean balanced frame accuracy of the model's predictions over a set.
double validate_model(const Model& model, const std::vector<SeqExample>& val_set);

// One optimizer step on a single sequence, cropping beyond max_crop_len.
// Returns the loss; sequences without labels are skipped at zero loss.
double train_step(const SeqExample& ex, Model& model, AdamState& state, const TrainConfig& tcfg,
                  std::mt19937_64& rng, double w0, double w1);

// Seeded training: shuffled epochs over train_set, one Adam step per
// sequence, random crops beyond max_crop_len, periodic validation. With a
// validation set the best checkpoint wins; otherwise the final one.
TrainResult train(const ModelConfig& mcfg, const std::vector<SeqExample>& train_set,
                  const std::vector<SeqExample>& val_set, const TrainConfig& tcfg);

// Continues training an existing model in place (shared optimizer state),
// for `iters` steps without validation or checkpointing.
void train_more(Model& model, AdamState& state, const std::vector<SeqExample>& train_set,
                const TrainConfig& tcfg, int iters, std::uint64_t seed, double w0, double w1);

}  // namespace contactseq
