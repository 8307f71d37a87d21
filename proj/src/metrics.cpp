#include "contactseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace contactseq {

std::vector<int> boundaries_of(const LabelSeq& seq) {
    std::vector<int> out;
    for (std::size_t t = 1; t < seq.size(); ++t) {
        Label a = seq[t - 1], b = seq[t];
        if (a != Label::Unlabeled && b != Label::Unlabeled && a != b)
            out.push_back(static_cast<int>(t));
    }
    return out;
}

int match_boundaries(const std::vector<int>& gt, const std::vector<int>& pred, int tol) {
    const int n = static_cast<int>(gt.size()), m = static_cast<int>(pred.size());
    if (n == 0 || m == 0) return 0;
    // Non-crossing assignment maximized by an LCS-style table. Crossed pairs
    // within tolerance can always be uncrossed, so this is the true maximum.
    std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= m; ++j) {
            int best = std::max(dp[i - 1][j], dp[i][j - 1]);
            if (std::abs(gt[i - 1] - pred[j - 1]) <= tol)
                best = std::max(best, dp[i - 1][j - 1] + 1);
            dp[i][j] = best;
        }
    return dp[n][m];
}

std::optional<double> frame_accuracy(const LabelSeq& pred, const LabelSeq& truth) {
    long long hit[2] = {0, 0}, total[2] = {0, 0};
    for (std::size_t t = 0; t < truth.size(); ++t) {
        Label y = truth[t];
        if (y == Label::Unlabeled) continue;
        int c = y == Label::Contact ? 1 : 0;
        ++total[c];
        if (pred[t] == y) ++hit[c];
    }
    int present = (total[0] > 0) + (total[1] > 0);
    if (present == 0) return std::nullopt;
    double sum = 0.0;
    for (int c = 0; c < 2; ++c)
        if (total[c] > 0) sum += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
    return sum / present;
}

BoundaryScore boundary_score(const LabelSeq& pred, const LabelSeq& truth, int tol) {
    std::vector<int> bg = boundaries_of(truth), bp = boundaries_of(pred);
    BoundaryScore s;
    if (bg.empty() && bp.empty()) {
        s.precision = s.recall = s.f1 = 1.0;
        return s;
    }
    if (bg.empty() || bp.empty()) return s;  // zeros
    int matched = match_boundaries(bg, bp, tol);
    s.precision = static_cast<double>(matched) / static_cast<double>(bp.size());
    s.recall = static_cast<double>(matched) / static_cast<double>(bg.size());
    if (s.precision + s.recall > 0.0)
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

std::optional<double> peripheral_accuracy(const LabelSeq& pred, const LabelSeq& truth, int tol) {
    std::vector<int> bg = boundaries_of(truth);
    if (bg.empty()) return std::nullopt;
    long long hit = 0, total = 0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        if (truth[t] == Label::Unlabeled) continue;
        bool near = false;
        for (int b : bg)
            if (std::abs(static_cast<int>(t) - b) <= tol) {
                near = true;
                break;
            }
        if (!near) continue;
        ++total;
        if (pred[t] == truth[t]) ++hit;
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(hit) / static_cast<double>(total);
}

std::vector<Label> segments_of(const LabelSeq& seq) {
    std::vector<Label> out;
    for (Label s : seq.states)
        if (out.empty() || out.back() != s) out.push_back(s);
    return out;
}

int levenshtein(const std::vector<Label>& a, const std::vector<Label>& b) {
    const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
    std::vector<int> row(m + 1);
    for (int j = 0; j <= m; ++j) row[j] = j;
    for (int i = 1; i <= n; ++i) {
        int diag = row[0];
        row[0] = i;
        for (int j = 1; j <= m; ++j) {
            int sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            diag = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
        }
    }
    return row[m];
}

double edit_score(const LabelSeq& pred, const LabelSeq& truth) {
    std::vector<Label> sp = segments_of(pred), sg = segments_of(truth);
    std::size_t denom = std::max(sp.size(), sg.size());
    if (denom == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(sp, sg)) / static_cast<double>(denom);
}

std::optional<double> labeled_accuracy(const LabelSeq& labels, const LabelSeq& truth) {
    long long hit = 0, total = 0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] == Label::Unlabeled) continue;
        ++total;
        if (labels[t] == truth[t]) ++hit;
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(hit) / static_cast<double>(total);
}

TrackMetrics evaluate_track(const std::string& id, const LabelSeq& pred, const LabelSeq& truth,
                            int tol) {
    TrackMetrics m;
    m.id = id;
    m.frame_acc = frame_accuracy(pred, truth).value_or(0.0);
    m.boundary = boundary_score(pred, truth, tol);
    m.peripheral_acc = peripheral_accuracy(pred, truth, tol);
    m.edit = edit_score(pred, truth);
    m.correct = m.frame_acc > 0.9 && m.boundary.f1 == 1.0;
    return m;
}

EvalSummary evaluate(const std::vector<LabelSeq>& preds, const std::vector<LabelSeq>& truths,
                     const std::vector<std::string>& ids, int tol) {
    EvalSummary s;
    const std::size_t n = preds.size();
    double peripheral_sum = 0.0;
    long long correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::string id = i < ids.size() ? ids[i] : std::string();
        TrackMetrics m = evaluate_track(id, preds[i], truths[i], tol);
        s.frame_acc += m.frame_acc;
        s.boundary_f1 += m.boundary.f1;
        s.boundary_precision += m.boundary.precision;
        s.boundary_recall += m.boundary.recall;
        s.edit += m.edit;
        if (m.peripheral_acc) {
            peripheral_sum += *m.peripheral_acc;
            ++s.tracks_with_boundaries;
        }
        correct += m.correct;
        s.per_track.push_back(std::move(m));
    }
    if (n > 0) {
        double dn = static_cast<double>(n);
        s.frame_acc /= dn;
        s.boundary_f1 /= dn;
        s.boundary_precision /= dn;
        s.boundary_recall /= dn;
        s.edit /= dn;
        s.correct_track_ratio = static_cast<double>(correct) / dn;
    }
    if (s.tracks_with_boundaries > 0)
        s.peripheral_acc = peripheral_sum / s.tracks_with_boundaries;
    return s;
}

}  // namespace contactseq
