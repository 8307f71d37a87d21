#include "contactseq/features.hpp"

#include <cmath>

#include "contactseq/common.hpp"
#include "contactseq/motion.hpp"

namespace contactseq {

Eigen::MatrixXd extract_features(const Track& track, const PseudoLabelConfig& cfg) {
    const int t_len = static_cast<int>(track.frames.size());
    const double diag = std::hypot(double(track.width), double(track.height));
    const double image_area = double(track.width) * double(track.height);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(kFeatureDim, t_len);

    for (int t = 0; t < t_len; ++t) {
        const Frame& fr = track.frames[t];
        try {
            Homography h = estimate_background_homography(fr, cfg.ransac);
            VecField residual = compensated_flow(fr, h);
            RegionStats s = region_stats(fr, residual, cfg.sigma_contact);

            out(0, t) = s.iou;
            out(1, t) = s.h_r;
            out(2, t) = s.o_r;
            out(3, t) = s.b_r;
            out(4, t) = s.dir_defined ? s.dir_sim : 0.0;
            out(5, t) = s.mean_hand_speed;
            out(6, t) = s.mean_obj_speed;

            auto centroid = mask_centroid(fr.hand_mask);
            if (centroid)
                out(7, t) = std::hypot(centroid->x - fr.object_box.cx(),
                                       centroid->y - fr.object_box.cy()) /
                            diag;
            out(8, t) = fr.object_box.area() / image_area;

            bool other_hand = false;
            for (const Mask& m : fr.other_hand_masks)
                if (masks_overlap(m, fr.hand_mask) || mask_overlaps_box(m, fr.object_box)) {
                    other_hand = true;
                    break;
                }
            out(9, t) = other_hand ? 1.0 : 0.0;

            bool other_obj = false;
            for (const Box& b : fr.other_object_boxes)
                if (mask_overlaps_box(fr.hand_mask, b) || boxes_overlap(b, fr.object_box)) {
                    other_obj = true;
                    break;
                }
            out(10, t) = other_obj ? 1.0 : 0.0;
        } catch (const HomographyError&) {
            out.col(t).setZero();
        } catch (const GeometryError&) {
            out.col(t).setZero();
        }
    }
    return out;
}

}  // namespace contactseq
