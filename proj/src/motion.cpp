#include "contactseq/motion.hpp"

#include <cmath>

#include "contactseq/common.hpp"

namespace contactseq {

RegionStats region_stats(const Frame& frame, const VecField& residual, double sigma) {
    const int w = residual.width, h = residual.height;
    if (frame.hand_mask.width != w || frame.hand_mask.height != h)
        throw GeometryError("residual field size does not match the frame");

    RegionStats s;
    s.iou = mask_box_iou(frame.hand_mask, frame.object_box);

    Vec2 hand_sum{0.0, 0.0}, obj_sum{0.0, 0.0};
    double hand_speed_sum = 0.0, obj_speed_sum = 0.0;
    int h_moving = 0, o_moving = 0, b_moving = 0;

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec2 r = residual.at(x, y);
            double mag = std::hypot(r.x, r.y);
            bool moving = mag > sigma;

            bool in_hand = frame.hand_mask.at(x, y) != 0;
            bool in_obj = frame.object_box.contains_pixel(x, y);
            if (in_hand) {
                ++s.hand_count;
                hand_sum = hand_sum + r;
                hand_speed_sum += mag;
                if (moving) ++h_moving;
            }
            if (in_obj) {
                ++s.obj_count;
                obj_sum = obj_sum + r;
                obj_speed_sum += mag;
                if (moving) ++o_moving;
            }
            if (in_hand || in_obj) continue;

            bool in_other = false;
            for (const Mask& m : frame.other_hand_masks)
                if (m.at(x, y)) {
                    in_other = true;
                    break;
                }
            if (!in_other)
                for (const Box& b : frame.other_object_boxes)
                    if (b.contains_pixel(x, y)) {
                        in_other = true;
                        break;
                    }
            if (!in_other) {
                ++s.bg_count;
                if (moving) ++b_moving;
            }
        }

    if (s.hand_count == 0) throw GeometryError("hand mask is empty");
    s.h_r = static_cast<double>(h_moving) / s.hand_count;
    s.mean_hand_speed = hand_speed_sum / s.hand_count;
    s.mean_hand_vec = hand_sum * (1.0 / s.hand_count);
    if (s.obj_count > 0) {
        s.o_r = static_cast<double>(o_moving) / s.obj_count;
        s.mean_obj_speed = obj_speed_sum / s.obj_count;
        s.mean_obj_vec = obj_sum * (1.0 / s.obj_count);
    }
    if (s.bg_count > 0) s.b_r = static_cast<double>(b_moving) / s.bg_count;

    double hn = s.mean_hand_vec.norm(), on = s.mean_obj_vec.norm();
    if (hn > 1e-6 && on > 1e-6) {
        s.dir_defined = true;
        s.dir_sim = s.mean_hand_vec.dot(s.mean_obj_vec) / (hn * on);
    }
    return s;
}

}  // namespace contactseq
