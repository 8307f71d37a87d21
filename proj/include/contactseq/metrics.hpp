#pragma once

#include <optional>
#include <string>
#include <vector>

#include "contactseq/common.hpp"

namespace contactseq {

// Frame indices t (1 <= t < T) where state[t] differs from state[t-1] and
// both frames carry a label.
std::vector<int> boundaries_of(const LabelSeq& seq);

// Largest set of gt/pred boundary pairs matchable one-to-one within
// `tol` frames. Pairs never cross: an optimal matching always exists in
// index order on both sides.
int match_boundaries(const std::vector<int>& gt, const std::vector<int>& pred, int tol);

// Mean per-class recall over the classes present in truth; frames with
// Unlabeled truth are ignored. nullopt when truth carries no labels.
std::optional<double> frame_accuracy(const LabelSeq& pred, const LabelSeq& truth);

struct BoundaryScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Boundary detection quality at the given frame tolerance. Both sides
// boundary-free scores 1.0; exactly one side boundary-free scores 0.0.
BoundaryScore boundary_score(const LabelSeq& pred, const LabelSeq& truth, int tol = 6);

// Plain accuracy restricted to frames within `tol` of a truth boundary.
// nullopt when truth has no boundaries.
std::optional<double> peripheral_accuracy(const LabelSeq& pred, const LabelSeq& truth,
                                          int tol = 6);

// Segment-level resemblance: 1 - lev(segments(pred), segments(truth)) /
// max(|segments(pred)|, |segments(truth)|).
double edit_score(const LabelSeq& pred, const LabelSeq& truth);

// Collapses runs of equal states into a segment-label sequence.
std::vector<Label> segments_of(const LabelSeq& seq);

int levenshtein(const std::vector<Label>& a, const std::vector<Label>& b);

// Fraction of frames that carry a label in `labels` and agree with truth
// there. nullopt when nothing is labeled.
std::optional<double> labeled_accuracy(const LabelSeq& labels, const LabelSeq& truth);

struct TrackMetrics {
    std::string id;
    double frame_acc = 0.0;
    BoundaryScore boundary;
    std::optional<double> peripheral_acc;
    double edit = 0.0;
    bool correct = false;  // frame_acc > 0.9 and boundary.f1 == 1.0
};

struct EvalSummary {
    std::vector<TrackMetrics> per_track;
    // Unweighted means over tracks; peripheral_acc averages only tracks
    // whose truth has boundaries.
    double frame_acc = 0.0;
    double boundary_f1 = 0.0;
    double boundary_precision = 0.0;
    double boundary_recall = 0.0;
    double peripheral_acc = 0.0;
    double edit = 0.0;
    double correct_track_ratio = 0.0;
    int tracks_with_boundaries = 0;
};

TrackMetrics evaluate_track(const std::string& id, const LabelSeq& pred, const LabelSeq& truth,
                            int tol = 6);

// Per-track metrics plus unweighted means. Predictions and truths are
// aligned by index; ids may be empty.
EvalSummary evaluate(const std::vector<LabelSeq>& preds, const std::vector<LabelSeq>& truths,
                     const std::vector<std::string>& ids = {}, int tol = 6);

}  // namespace contactseq
