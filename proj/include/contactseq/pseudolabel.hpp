#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <vector>

#include "contactseq/homography.hpp"
#include "contactseq/motion.hpp"
#include "contactseq/track.hpp"

namespace contactseq {

struct PseudoLabelConfig {
    // Moving-pixel thresholds (px/frame of residual motion).
    double sigma_contact = 2.0;
    double sigma_nocontact = 1.0;

    // Region-ratio gates.
    double hr_min = 0.7;            // hand must be mostly moving
    double or_min_contact = 0.2;    // object moving along with the hand
    double or_max_nocontact = 0.05; // object still while the hand moves
    double br_max = 0.2;            // background must stay quiet after compensation

    // Direction-similarity gates (cosine of mean residual vectors).
    double sim_min_contact = 0.5;   // contact: dir_sim > this
    double sim_max_nocontact = 0.0; // no-contact: dir_sim < this

    // Trajectory-based extension.
    double extension_rel_tol = 0.15;  // band around the source-frame pair distance
    int max_points_per_region = 100;
    double fb_consistency_tol = 1.0;  // px, forward-backward trajectory check

    RansacConfig ransac;

    void validate() const;  // throws ConfigError
};

void to_json(nlohmann::json& j, const PseudoLabelConfig& c);
void from_json(const nlohmann::json& j, PseudoLabelConfig& c);

// Tri-state rule on one frame. stats_c uses sigma_contact, stats_n uses
// sigma_nocontact. `cancelled`, when given, is set when the contact and
// no-contact rules fire together and the frame is left Unlabeled.
Label assign_frame_label(const RegionStats& stats_c, const RegionStats& stats_n,
                         const PseudoLabelConfig& cfg, bool* cancelled = nullptr);

// Uniform-grid seeds over set pixels / box-interior pixels, at most
// max_points of them, positioned at pixel centers.
std::vector<Vec2> seed_mask_points(const Mask& m, int max_points);
std::vector<Vec2> seed_box_points(const Box& b, int width, int height, int max_points);

// Moves each alive point from frame t to frame t+dir (dir = +1 or -1) by
// bilinear flow sampling. A point dies when it leaves the image or fails the
// forward-backward consistency check against the return flow.
void advance_points(const Track& track, int t, int dir, std::vector<Vec2>& pts,
                    std::vector<char>& alive, double fb_tol);

// Mean Euclidean distance over all alive hand-point x object-point pairs.
std::optional<double> mean_pair_distance(const std::vector<Vec2>& hand_pts,
                                         const std::vector<char>& hand_alive,
                                         const std::vector<Vec2>& obj_pts,
                                         const std::vector<char>& obj_alive);

// Propagates labels into Unlabeled runs while tracked hand-object geometry
// stays put: points seeded at a labeled source frame are advanced through the
// run, and a frame inherits the source label while the mean pair distance
// stays within extension_rel_tol of its source-frame value. Each run is
// filled forward from its left source first, then backward from its right
// source. Returns the number of frames labeled.
int extend_labels(const Track& track, LabelSeq& labels, const PseudoLabelConfig& cfg);

struct PseudoLabelResult {
    LabelSeq labels;       // after extension
    LabelSeq rule_labels;  // per-frame rule output, before extension
    int cancelled = 0;     // frames where contact and no-contact rules collided
    int frame_errors = 0;  // frames skipped (homography / geometry failures)
    int extended = 0;      // frames labeled by trajectory extension

    double coverage() const {
        return labels.size() == 0
                   ? 0.0
                   : static_cast<double>(labels.count_labeled()) / labels.size();
    }
};

// Full pipeline for one track: background homography, residual motion,
// per-frame rule, then trajectory extension. Per-frame failures leave the
// frame Unlabeled and are counted, not thrown.
PseudoLabelResult generate_pseudolabels(const Track& track, const PseudoLabelConfig& cfg = {});

}  // namespace contactseq
