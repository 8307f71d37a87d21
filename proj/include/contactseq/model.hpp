#pragma once

#include <array>
#include <Eigen/Dense>
#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "contactseq/common.hpp"

namespace contactseq {

struct ModelConfig {
    int input_dim = 11;
    int enc_hidden = 64;
    int hidden = 64;      // per direction
    int layers = 2;       // stacked bidirectional layers
    int head_hidden1 = 64;
    int head_hidden2 = 32;

    void validate() const;  // throws ConfigError
    bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Everything the backward pass needs from one forward run. Matrices hold one
// column per frame, indexed by absolute time.
struct ForwardCache {
    Eigen::MatrixXd x;  // input_dim x T

    // Encoder: two (linear, relu, layernorm) blocks.
    Eigen::MatrixXd r0, xh0, e0, r1, xh1, e1;  // enc_hidden x T
    Eigen::VectorXd inv0, inv1;                // per-frame 1/sqrt(var + eps)

    struct LstmLayer {
        Eigen::MatrixXd input;                      // layer input, in_l x T
        Eigen::MatrixXd i[2], f[2], g[2], o[2];     // gate activations, H x T
        Eigen::MatrixXd c[2], tc[2], h[2];          // cell, tanh(cell), hidden
    };
    std::vector<LstmLayer> lstm;

    Eigen::MatrixXd hcat;      // 2H x T, top-layer forward/backward stack
    Eigen::MatrixXd rh0, rh1;  // head relu outputs
    Eigen::VectorXd z;         // T logits
};

// Encoder -> stacked bidirectional LSTM -> MLP head emitting one contact
// logit per frame. Parameters live in one flat vector so the trainer and the
// gradient checker can treat the model as a black box.
class Model {
  public:
    explicit Model(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }
    std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per weight block, biases
    // following their layer, layernorm gain 1 / shift 0. Block order is
    // fixed, so one seed pins every parameter.
    void init(std::uint64_t seed);
    void zero();

    // x is input_dim x T. Returns one logit per frame.
    Eigen::VectorXd forward(const Eigen::MatrixXd& x, ForwardCache* cache = nullptr) const;

    // dz = dLoss/dlogits. Returns dLoss/dparams, same layout as params().
    Eigen::VectorXd backward(const ForwardCache& cache, const Eigen::VectorXd& dz) const;

    std::vector<double> predict_probs(const Eigen::MatrixXd& x) const;
    LabelSeq predict(const Eigen::MatrixXd& x) const;  // Contact iff p >= 0.5

    // Exchanges the forward and backward roles of every LSTM direction,
    // including the column halves of their consumers. The resulting model
    // maps time-reversed input to the time-reversed output of the original.
    void swap_directions();

    void save(const std::filesystem::path& path) const;
    static Model load(const std::filesystem::path& path);

  private:
    struct Block {
        std::ptrdiff_t off = 0;
        int rows = 0, cols = 0;  // cols == 1 for vectors
        std::ptrdiff_t size() const { return std::ptrdiff_t(rows) * cols; }
    };

    // Per-layer, per-direction LSTM parameter blocks; gate rows are stacked
    // i, f, g, o, each `hidden` tall.
    struct LstmBlocks {
        Block w, u, b;
    };

    // How to seed one block: uniform in (-bound, bound), or a constant.
    struct InitSpec {
        Block* block;
        double bound = 0.0;
        bool constant = false;
        double value = 0.0;
    };

    int lstm_input_dim(int layer) const;
    Eigen::Map<const Eigen::MatrixXd> mat(const Block& b) const;
    Eigen::Map<const Eigen::VectorXd> vec(const Block& b) const;
    Eigen::Map<Eigen::MatrixXd> mat_of(Eigen::VectorXd& v, const Block& b) const;
    Eigen::Map<Eigen::VectorXd> vec_of(Eigen::VectorXd& v, const Block& b) const;

    ModelConfig cfg_;
    Eigen::VectorXd params_;

    Block enc_w_[2], enc_b_[2], ln_g_[2], ln_b_[2];
    std::vector<std::array<LstmBlocks, 2>> lstm_;  // [layer][dir]
    Block head_w_[3], head_b_[3];
    std::vector<InitSpec> order_;  // construction order, drives init()
};

// Mean over labeled frames of w_y * (softplus(z) - y*z); zero when nothing
// is labeled. w0 / w1 weight the NoContact / Contact classes.
double sequence_loss(const Eigen::VectorXd& z, const LabelSeq& y, double w0, double w1);

// dLoss/dz for sequence_loss: w_y * (sigmoid(z) - y) / n_labeled on labeled
// frames, zero elsewhere.
Eigen::VectorXd sequence_loss_grad(const Eigen::VectorXd& z, const LabelSeq& y, double w0,
                                   double w1);

double sigmoid(double z);

}  // namespace contactseq
