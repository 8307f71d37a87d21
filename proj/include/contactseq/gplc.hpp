#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <vector>

#include "contactseq/train.hpp"

namespace contactseq {

struct GplcConfig {
    // Correction gate: a prediction is confident when |p - 0.5| >= 0.5 - delta.
    double delta0 = 0.05;
    double delta_end = 0.25;
    double alpha = 0.01;  // loosen when round flips < alpha * labeled frames
    double beta = 0.025;  // delta increment per loosening
    int m = 2500;         // fine-tune both models every m corrected tracks
    int rounds = 10;
    bool guided = true;   // false drops the guide: the gate then needs only f

    int pretrain_iters = 2000;    // main model, on the noisy labels
    int pretrain_g_iters = 1000;  // guide model, on the trusted set
    int finetune_iters = 200;     // per fine-tune burst

    TrainConfig train;  // step parameters shared by every phase

    void validate() const;
};

void to_json(nlohmann::json& j, const GplcConfig& c);
void from_json(const nlohmann::json& j, GplcConfig& c);

// Pure gate arithmetic, shared by the run loop and its tests.
struct GateDecision {
    bool confident = false;  // |pf - 0.5| >= 0.5 - delta
    bool agree = false;      // both models on the same side of 0.5
    bool fire = false;       // confident && agree
    Label value = Label::Unlabeled;  // side of pf
};
GateDecision gate_eval(double pf, double pg, double delta);

struct GplcRoundStats {
    int round = 0;
    double delta = 0.0;      // value used during this round
    long long flips = 0;     // corrections that changed a label
    long long written = 0;   // gate firings on labeled frames
    long long skipped_unlabeled = 0;  // confident agreements on unlabeled frames
    long long labeled = 0;   // labeled frames in the working set (constant)
    double label_acc = 0.0;  // working labels vs truth; NaN without truth
    double val_acc = 0.0;    // main model on the trusted set
};

struct GplcResult {
    Model f;  // main model
    Model g;  // guide model
    std::vector<GplcRoundStats> rounds;
    std::vector<LabelSeq> corrected;  // final working labels, one per noisy track
    std::vector<LabelSeq> confident;  // labels that ever passed the gate
    double final_delta = 0.0;
};

// Progressive label correction. The main model pretrains on the noisy
// labels, the guide on the trusted set. Each round walks the noisy tracks in
// order: snapshot both models' probabilities, rewrite every labeled frame
// that passes the gate (the confident set collects the same writes), then
// take one training step per model on the updated track. Every m visited
// tracks both models fine-tune on the trusted set. A quiet round (few flips)
// loosens delta by beta up to delta_end. Unlabeled frames are never touched.
// With guided off the gate consults only f and g keeps its initial weights.
GplcResult run_gplc(const ModelConfig& mcfg, std::vector<SeqExample> noisy,
                    const std::vector<SeqExample>& trusted, const GplcConfig& cfg,
                    const std::vector<LabelSeq>* truth = nullptr);

}  // namespace contactseq
