#include "contactseq/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

namespace contactseq {

namespace {
constexpr double kLnEps = 1e-5;
constexpr char kCheckpointMagic[8] = {'C', 'S', 'C', 'K', 'P', 'T', '0', '1'};

Eigen::ArrayXd sigmoid_arr(const Eigen::ArrayXd& z) {
    return 0.5 * (0.5 * z).tanh() + 0.5;  // stable for large |z|
}
}  // namespace

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

void ModelConfig::validate() const {
    auto pos = [](int v, const char* name) {
        if (v < 1) throw ConfigError(std::string(name) + " must be at least 1");
    };
    pos(input_dim, "input_dim");
    pos(enc_hidden, "enc_hidden");
    pos(hidden, "hidden");
    pos(layers, "layers");
    pos(head_hidden1, "head_hidden1");
    pos(head_hidden2, "head_hidden2");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"input_dim", c.input_dim},       {"enc_hidden", c.enc_hidden},
                       {"hidden", c.hidden},             {"layers", c.layers},
                       {"head_hidden1", c.head_hidden1}, {"head_hidden2", c.head_hidden2}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    c.input_dim = j.value("input_dim", c.input_dim);
    c.enc_hidden = j.value("enc_hidden", c.enc_hidden);
    c.hidden = j.value("hidden", c.hidden);
    c.layers = j.value("layers", c.layers);
    c.head_hidden1 = j.value("head_hidden1", c.head_hidden1);
    c.head_hidden2 = j.value("head_hidden2", c.head_hidden2);
}

int Model::lstm_input_dim(int layer) const {
    return layer == 0 ? cfg_.enc_hidden : 2 * cfg_.hidden;
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.input_dim, e = cfg_.enc_hidden, h = cfg_.hidden;

    lstm_.resize(cfg_.layers);  // resize first so block pointers stay stable

    std::ptrdiff_t off = 0;
    auto uniform = [&](Block& b, int rows, int cols, int fan_in) {
        b = {off, rows, cols};
        off += b.size();
        order_.push_back({&b, 1.0 / std::sqrt(double(fan_in)), false, 0.0});
    };
    auto constant = [&](Block& b, int rows, double value) {
        b = {off, rows, 1};
        off += b.size();
        order_.push_back({&b, 0.0, true, value});
    };

    int enc_in[2] = {d, e};
    for (int k = 0; k < 2; ++k) {
        uniform(enc_w_[k], e, enc_in[k], enc_in[k]);
        uniform(enc_b_[k], e, 1, enc_in[k]);
        constant(ln_g_[k], e, 1.0);
        constant(ln_b_[k], e, 0.0);
    }
    for (int l = 0; l < cfg_.layers; ++l) {
        int in = lstm_input_dim(l);
        for (int dir = 0; dir < 2; ++dir) {
            LstmBlocks& blk = lstm_[l][dir];
            uniform(blk.w, 4 * h, in, in);
            uniform(blk.u, 4 * h, h, h);
            uniform(blk.b, 4 * h, 1, h);
        }
    }
    int head_in[3] = {2 * h, cfg_.head_hidden1, cfg_.head_hidden2};
    int head_out[3] = {cfg_.head_hidden1, cfg_.head_hidden2, 1};
    for (int k = 0; k < 3; ++k) {
        uniform(head_w_[k], head_out[k], head_in[k], head_in[k]);
        uniform(head_b_[k], head_out[k], 1, head_in[k]);
    }
    params_ = Eigen::VectorXd::Zero(off);
}

void Model::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (const InitSpec& s : order_) {
        auto span = params_.segment(s.block->off, s.block->size());
        if (s.constant) {
            span.setConstant(s.value);
        } else {
            std::uniform_real_distribution<double> u(-s.bound, s.bound);
            for (std::ptrdiff_t i = 0; i < span.size(); ++i) span(i) = u(rng);
        }
    }
}

void Model::zero() { params_.setZero(); }

Eigen::Map<const Eigen::MatrixXd> Model::mat(const Block& b) const {
    return {params_.data() + b.off, b.rows, b.cols};
}
Eigen::Map<const Eigen::VectorXd> Model::vec(const Block& b) const {
    return {params_.data() + b.off, b.rows};
}
Eigen::Map<Eigen::MatrixXd> Model::mat_of(Eigen::VectorXd& v, const Block& b) const {
    return {v.data() + b.off, b.rows, b.cols};
}
Eigen::Map<Eigen::VectorXd> Model::vec_of(Eigen::VectorXd& v, const Block& b) const {
    return {v.data() + b.off, b.rows};
}

namespace {

// y = g * (x - mu)/sqrt(var + eps) + b, per column. Stores x-hat and the
// inverse std for the backward pass.
void layernorm_forward(const Eigen::MatrixXd& x, const Eigen::VectorXd& g,
                       const Eigen::VectorXd& b, Eigen::MatrixXd& xhat, Eigen::MatrixXd& y,
                       Eigen::VectorXd& inv) {
    const int n = int(x.rows()), t_len = int(x.cols());
    xhat.resize(n, t_len);
    y.resize(n, t_len);
    inv.resize(t_len);
    for (int t = 0; t < t_len; ++t) {
        double mu = x.col(t).mean();
        double var = (x.col(t).array() - mu).square().mean();
        double s = 1.0 / std::sqrt(var + kLnEps);
        inv(t) = s;
        xhat.col(t) = ((x.col(t).array() - mu) * s).matrix();
        y.col(t) = (g.array() * xhat.col(t).array() + b.array()).matrix();
    }
}

// Given dL/dy, accumulates dg/db and returns dL/dx.
Eigen::MatrixXd layernorm_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& xhat,
                                   const Eigen::VectorXd& inv, const Eigen::VectorXd& g,
                                   Eigen::Map<Eigen::VectorXd> dg,
                                   Eigen::Map<Eigen::VectorXd> db) {
    const int t_len = int(dy.cols());
    Eigen::MatrixXd dx(dy.rows(), t_len);
    for (int t = 0; t < t_len; ++t) {
        db += dy.col(t);
        dg += (dy.col(t).array() * xhat.col(t).array()).matrix();
        Eigen::ArrayXd dxh = dy.col(t).array() * g.array();
        double m1 = dxh.mean();
        double m2 = (dxh * xhat.col(t).array()).mean();
        dx.col(t) = (inv(t) * (dxh - m1 - xhat.col(t).array() * m2)).matrix();
    }
    return dx;
}

}  // namespace

Eigen::VectorXd Model::forward(const Eigen::MatrixXd& x, ForwardCache* cache) const {
    if (int(x.rows()) != cfg_.input_dim)
        throw ConfigError("input has " + std::to_string(x.rows()) + " features, model expects " +
                          std::to_string(cfg_.input_dim));
    const int t_len = int(x.cols());
    const int h = cfg_.hidden;
    ForwardCache local;
    ForwardCache& cc = cache ? *cache : local;
    cc.x = x;

    // Encoder.
    Eigen::MatrixXd a = (mat(enc_w_[0]) * x).colwise() + vec(enc_b_[0]);
    cc.r0 = a.cwiseMax(0.0);
    layernorm_forward(cc.r0, vec(ln_g_[0]), vec(ln_b_[0]), cc.xh0, cc.e0, cc.inv0);
    a = (mat(enc_w_[1]) * cc.e0).colwise() + vec(enc_b_[1]);
    cc.r1 = a.cwiseMax(0.0);
    layernorm_forward(cc.r1, vec(ln_g_[1]), vec(ln_b_[1]), cc.xh1, cc.e1, cc.inv1);

    // Stacked bidirectional LSTM.
    cc.lstm.assign(cfg_.layers, {});
    Eigen::MatrixXd below = cc.e1;
    for (int l = 0; l < cfg_.layers; ++l) {
        ForwardCache::LstmLayer& lc = cc.lstm[l];
        lc.input = std::move(below);
        for (int dir = 0; dir < 2; ++dir) {
            const LstmBlocks& blk = lstm_[l][dir];
            auto w = mat(blk.w);
            auto u = mat(blk.u);
            auto b = vec(blk.b);
            for (Eigen::MatrixXd* m : {&lc.i[dir], &lc.f[dir], &lc.g[dir], &lc.o[dir],
                                       &lc.c[dir], &lc.tc[dir], &lc.h[dir]})
                m->setZero(h, t_len);

            Eigen::VectorXd hp = Eigen::VectorXd::Zero(h), cp = Eigen::VectorXd::Zero(h);
            int t = dir == 0 ? 0 : t_len - 1;
            int step = dir == 0 ? 1 : -1;
            for (int k = 0; k < t_len; ++k, t += step) {
                Eigen::VectorXd pre = w * lc.input.col(t) + u * hp + b;
                Eigen::ArrayXd ig = sigmoid_arr(pre.segment(0, h).array());
                Eigen::ArrayXd fg = sigmoid_arr(pre.segment(h, h).array());
                Eigen::ArrayXd gg = pre.segment(2 * h, h).array().tanh();
                Eigen::ArrayXd og = sigmoid_arr(pre.segment(3 * h, h).array());
                Eigen::ArrayXd c = fg * cp.array() + ig * gg;
                Eigen::ArrayXd tc = c.tanh();
                Eigen::ArrayXd hh = og * tc;
                lc.i[dir].col(t) = ig.matrix();
                lc.f[dir].col(t) = fg.matrix();
                lc.g[dir].col(t) = gg.matrix();
                lc.o[dir].col(t) = og.matrix();
                lc.c[dir].col(t) = c.matrix();
                lc.tc[dir].col(t) = tc.matrix();
                lc.h[dir].col(t) = hh.matrix();
                hp = hh.matrix();
                cp = c.matrix();
            }
        }
        below.resize(2 * h, t_len);
        below.topRows(h) = lc.h[0];
        below.bottomRows(h) = lc.h[1];
    }
    cc.hcat = std::move(below);

    // Head.
    Eigen::MatrixXd ah = (mat(head_w_[0]) * cc.hcat).colwise() + vec(head_b_[0]);
    cc.rh0 = ah.cwiseMax(0.0);
    ah = (mat(head_w_[1]) * cc.rh0).colwise() + vec(head_b_[1]);
    cc.rh1 = ah.cwiseMax(0.0);
    Eigen::MatrixXd zr = mat(head_w_[2]) * cc.rh1;  // 1 x T
    cc.z = zr.transpose() + Eigen::VectorXd::Constant(t_len, vec(head_b_[2])(0));
    return cc.z;
}

Eigen::VectorXd Model::backward(const ForwardCache& cc, const Eigen::VectorXd& dz) const {
    const int t_len = int(cc.z.size());
    const int h = cfg_.hidden;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());

    // Head.
    Eigen::MatrixXd dzt = dz.transpose();  // 1 x T
    mat_of(grad, head_w_[2]) += dzt * cc.rh1.transpose();
    vec_of(grad, head_b_[2])(0) += dz.sum();
    Eigen::MatrixXd d1 = mat(head_w_[2]).transpose() * dzt;
    d1 = (d1.array() * (cc.rh1.array() > 0.0).cast<double>()).matrix();
    mat_of(grad, head_w_[1]) += d1 * cc.rh0.transpose();
    vec_of(grad, head_b_[1]) += d1.rowwise().sum();
    Eigen::MatrixXd d0 = mat(head_w_[1]).transpose() * d1;
    d0 = (d0.array() * (cc.rh0.array() > 0.0).cast<double>()).matrix();
    mat_of(grad, head_w_[0]) += d0 * cc.hcat.transpose();
    vec_of(grad, head_b_[0]) += d0.rowwise().sum();
    Eigen::MatrixXd dout = mat(head_w_[0]).transpose() * d0;  // 2H x T

    // LSTM stack, top down.
    for (int l = cfg_.layers - 1; l >= 0; --l) {
        const ForwardCache::LstmLayer& lc = cc.lstm[l];
        Eigen::MatrixXd din = Eigen::MatrixXd::Zero(lc.input.rows(), t_len);
        for (int dir = 0; dir < 2; ++dir) {
            const LstmBlocks& blk = lstm_[l][dir];
            auto w = mat(blk.w);
            auto u = mat(blk.u);
            auto dw = mat_of(grad, blk.w);
            auto du = mat_of(grad, blk.u);
            auto db = vec_of(grad, blk.b);

            Eigen::VectorXd dh_acc = Eigen::VectorXd::Zero(h);
            Eigen::VectorXd dc_acc = Eigen::VectorXd::Zero(h);
            // Reverse of the processing order.
            int t = dir == 0 ? t_len - 1 : 0;
            int step = dir == 0 ? -1 : 1;
            for (int k = 0; k < t_len; ++k, t += step) {
                int t_prev = dir == 0 ? t - 1 : t + 1;  // processing predecessor
                bool has_prev = t_prev >= 0 && t_prev < t_len;

                Eigen::ArrayXd dh = dout.middleRows(dir * h, h).col(t).array() + dh_acc.array();
                Eigen::ArrayXd o = lc.o[dir].col(t).array();
                Eigen::ArrayXd tc = lc.tc[dir].col(t).array();
                Eigen::ArrayXd dc = dc_acc.array() + dh * o * (1.0 - tc.square());
                Eigen::ArrayXd i = lc.i[dir].col(t).array();
                Eigen::ArrayXd f = lc.f[dir].col(t).array();
                Eigen::ArrayXd g = lc.g[dir].col(t).array();
                Eigen::ArrayXd cp = Eigen::ArrayXd::Zero(h);
                if (has_prev) cp = lc.c[dir].col(t_prev).array();

                Eigen::VectorXd dpre(4 * h);
                dpre.segment(0, h) = (dc * g * i * (1.0 - i)).matrix();
                dpre.segment(h, h) = (dc * cp * f * (1.0 - f)).matrix();
                dpre.segment(2 * h, h) = (dc * i * (1.0 - g.square())).matrix();
                dpre.segment(3 * h, h) = (dh * tc * o * (1.0 - o)).matrix();

                dw += dpre * lc.input.col(t).transpose();
                if (has_prev) du += dpre * lc.h[dir].col(t_prev).transpose();
                db += dpre;
                din.col(t) += w.transpose() * dpre;
                dh_acc = u.transpose() * dpre;
                dc_acc = (dc * f).matrix();
            }
        }
        dout = std::move(din);
    }

    // Encoder, mirrored.
    Eigen::MatrixXd dr1 = layernorm_backward(dout, cc.xh1, cc.inv1, vec(ln_g_[1]),
                                             vec_of(grad, ln_g_[1]), vec_of(grad, ln_b_[1]));
    dr1 = (dr1.array() * (cc.r1.array() > 0.0).cast<double>()).matrix();
    mat_of(grad, enc_w_[1]) += dr1 * cc.e0.transpose();
    vec_of(grad, enc_b_[1]) += dr1.rowwise().sum();
    Eigen::MatrixXd de0 = mat(enc_w_[1]).transpose() * dr1;

    Eigen::MatrixXd dr0 = layernorm_backward(de0, cc.xh0, cc.inv0, vec(ln_g_[0]),
                                             vec_of(grad, ln_g_[0]), vec_of(grad, ln_b_[0]));
    dr0 = (dr0.array() * (cc.r0.array() > 0.0).cast<double>()).matrix();
    mat_of(grad, enc_w_[0]) += dr0 * cc.x.transpose();
    vec_of(grad, enc_b_[0]) += dr0.rowwise().sum();
    return grad;
}

std::vector<double> Model::predict_probs(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd z = forward(x);
    std::vector<double> p(std::size_t(z.size()));
    for (Eigen::Index t = 0; t < z.size(); ++t) p[std::size_t(t)] = sigmoid(z(t));
    return p;
}

LabelSeq Model::predict(const Eigen::MatrixXd& x) const {
    std::vector<double> p = predict_probs(x);
    LabelSeq out(p.size());
    for (std::size_t t = 0; t < p.size(); ++t)
        out[t] = p[t] >= 0.5 ? Label::Contact : Label::NoContact;
    return out;
}

void Model::swap_directions() {
    const int h = cfg_.hidden;
    auto swap_blocks = [&](const Block& a, const Block& b) {
        Eigen::VectorXd tmp = params_.segment(a.off, a.size());
        params_.segment(a.off, a.size()) = params_.segment(b.off, b.size());
        params_.segment(b.off, b.size()) = tmp;
    };
    for (auto& layer : lstm_) {
        swap_blocks(layer[0].w, layer[1].w);
        swap_blocks(layer[0].u, layer[1].u);
        swap_blocks(layer[0].b, layer[1].b);
    }
    // Consumers of a bidirectional stack read [forward; backward]; swap the
    // halves they read from.
    auto swap_cols = [&](const Block& b) {
        Eigen::Map<Eigen::MatrixXd> m(params_.data() + b.off, b.rows, b.cols);
        Eigen::MatrixXd left = m.leftCols(h);
        m.leftCols(h) = m.rightCols(h);
        m.rightCols(h) = left;
    };
    for (int l = 1; l < cfg_.layers; ++l) {
        swap_cols(lstm_[l][0].w);
        swap_cols(lstm_[l][1].w);
    }
    swap_cols(head_w_[0]);
}

void Model::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TrackIoError("cannot write checkpoint " + path.string());
    out.write(kCheckpointMagic, 8);
    std::uint32_t version = 1;
    nlohmann::json j = cfg_;
    std::string cfg_str = j.dump();
    auto cfg_len = std::uint32_t(cfg_str.size());
    auto n = std::uint64_t(params_.size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&cfg_len), 4);
    out.write(cfg_str.data(), cfg_len);
    out.write(reinterpret_cast<const char*>(&n), 8);
    out.write(reinterpret_cast<const char*>(params_.data()), std::streamsize(n * 8));
    if (!out) throw TrackIoError("short write on checkpoint " + path.string());
}

Model Model::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TrackIoError("cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw TrackIoError(path.string() + " is not a model checkpoint");
    std::uint32_t version = 0, cfg_len = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&cfg_len), 4);
    if (!in || version != 1)
        throw TrackIoError("unsupported checkpoint version in " + path.string());
    std::string cfg_str(cfg_len, '\0');
    in.read(cfg_str.data(), cfg_len);
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    if (!in) throw TrackIoError("truncated checkpoint " + path.string());

    ModelConfig cfg = nlohmann::json::parse(cfg_str).get<ModelConfig>();
    Model m(cfg);
    if (n != m.num_params())
        throw TrackIoError("checkpoint parameter count does not match its config");
    in.read(reinterpret_cast<char*>(m.params_.data()), std::streamsize(n * 8));
    if (!in) throw TrackIoError("truncated checkpoint " + path.string());
    return m;
}

double sequence_loss(const Eigen::VectorXd& z, const LabelSeq& y, double w0, double w1) {
    if (std::size_t(z.size()) != y.size())
        throw ConfigError("logit count does not match label count");
    double sum = 0.0;
    long long n = 0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (y[t] == Label::Unlabeled) continue;
        double zt = z(Eigen::Index(t));
        double target = y[t] == Label::Contact ? 1.0 : 0.0;
        double softplus = std::max(zt, 0.0) + std::log1p(std::exp(-std::abs(zt)));
        sum += (target > 0.5 ? w1 : w0) * (softplus - target * zt);
        ++n;
    }
    return n == 0 ? 0.0 : sum / double(n);
}

Eigen::VectorXd sequence_loss_grad(const Eigen::VectorXd& z, const LabelSeq& y, double w0,
                                   double w1) {
    if (std::size_t(z.size()) != y.size())
        throw ConfigError("logit count does not match label count");
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(z.size());
    long long n = 0;
    for (std::size_t t = 0; t < y.size(); ++t)
        if (y[t] != Label::Unlabeled) ++n;
    if (n == 0) return dz;
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (y[t] == Label::Unlabeled) continue;
        double target = y[t] == Label::Contact ? 1.0 : 0.0;
        double w = target > 0.5 ? w1 : w0;
        dz(Eigen::Index(t)) = w * (sigmoid(z(Eigen::Index(t))) - target) / double(n);
    }
    return dz;
}

}  // namespace contactseq
