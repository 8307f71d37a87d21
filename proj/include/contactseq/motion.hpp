#pragma once

#include "contactseq/flow.hpp"
#include "contactseq/geometry.hpp"
#include "contactseq/track.hpp"

namespace contactseq {

// Per-frame motion summary of one hand-object pair against a residual
// (camera-compensated) flow field, thresholded at one sigma.
struct RegionStats {
    double iou = 0.0;  // hand mask vs object box

    // Fraction of moving pixels (residual magnitude > sigma) per region.
    double h_r = 0.0;  // hand mask
    double o_r = 0.0;  // object box interior
    double b_r = 0.0;  // background: complement of every hand and box

    double mean_hand_speed = 0.0;  // mean residual magnitude, px/frame
    double mean_obj_speed = 0.0;

    // Cosine similarity of mean residual vectors over hand and object.
    // Undefined when either mean vector is (near) zero.
    bool dir_defined = false;
    double dir_sim = 0.0;
    Vec2 mean_hand_vec{0.0, 0.0};
    Vec2 mean_obj_vec{0.0, 0.0};

    int hand_count = 0;
    int obj_count = 0;
    int bg_count = 0;
};

// Throws GeometryError when the hand mask is empty. An object box covering no
// pixel centers yields o_r = 0 with dir_defined = false.
RegionStats region_stats(const Frame& frame, const VecField& residual, double sigma);

}  // namespace contactseq
