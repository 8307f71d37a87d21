#include "contactseq/pseudolabel.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "contactseq/common.hpp"

namespace contactseq {

void PseudoLabelConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(sigma_contact, "sigma_contact");
    positive(sigma_nocontact, "sigma_nocontact");
    positive(extension_rel_tol, "extension_rel_tol");
    positive(fb_consistency_tol, "fb_consistency_tol");
    auto ratio = [](double v, const char* name) {
        if (v < 0.0 || v > 1.0) throw ConfigError(std::string(name) + " must be in [0, 1]");
    };
    ratio(hr_min, "hr_min");
    ratio(or_min_contact, "or_min_contact");
    ratio(or_max_nocontact, "or_max_nocontact");
    ratio(br_max, "br_max");
    auto cosine = [](double v, const char* name) {
        if (v < -1.0 || v > 1.0) throw ConfigError(std::string(name) + " must be in [-1, 1]");
    };
    cosine(sim_min_contact, "sim_min_contact");
    cosine(sim_max_nocontact, "sim_max_nocontact");
    if (max_points_per_region < 1) throw ConfigError("max_points_per_region must be at least 1");
    if (ransac.max_iters < 1) throw ConfigError("ransac.max_iters must be at least 1");
    if (!(ransac.inlier_tol > 0.0)) throw ConfigError("ransac.inlier_tol must be positive");
    if (ransac.max_samples < 4) throw ConfigError("ransac.max_samples must be at least 4");
}

void to_json(nlohmann::json& j, const PseudoLabelConfig& c) {
    j = nlohmann::json{{"sigma_contact", c.sigma_contact},
                       {"sigma_nocontact", c.sigma_nocontact},
                       {"hr_min", c.hr_min},
                       {"or_min_contact", c.or_min_contact},
                       {"or_max_nocontact", c.or_max_nocontact},
                       {"br_max", c.br_max},
                       {"sim_min_contact", c.sim_min_contact},
                       {"sim_max_nocontact", c.sim_max_nocontact},
                       {"extension_rel_tol", c.extension_rel_tol},
                       {"max_points_per_region", c.max_points_per_region},
                       {"fb_consistency_tol", c.fb_consistency_tol},
                       {"ransac",
                        {{"max_iters", c.ransac.max_iters},
                         {"inlier_tol", c.ransac.inlier_tol},
                         {"early_exit_ratio", c.ransac.early_exit_ratio},
                         {"max_samples", c.ransac.max_samples},
                         {"seed", c.ransac.seed}}}};
}

void from_json(const nlohmann::json& j, PseudoLabelConfig& c) {
    c.sigma_contact = j.value("sigma_contact", c.sigma_contact);
    c.sigma_nocontact = j.value("sigma_nocontact", c.sigma_nocontact);
    c.hr_min = j.value("hr_min", c.hr_min);
    c.or_min_contact = j.value("or_min_contact", c.or_min_contact);
    c.or_max_nocontact = j.value("or_max_nocontact", c.or_max_nocontact);
    c.br_max = j.value("br_max", c.br_max);
    c.sim_min_contact = j.value("sim_min_contact", c.sim_min_contact);
    c.sim_max_nocontact = j.value("sim_max_nocontact", c.sim_max_nocontact);
    c.extension_rel_tol = j.value("extension_rel_tol", c.extension_rel_tol);
    c.max_points_per_region = j.value("max_points_per_region", c.max_points_per_region);
    c.fb_consistency_tol = j.value("fb_consistency_tol", c.fb_consistency_tol);
    if (j.contains("ransac")) {
        const auto& r = j.at("ransac");
        c.ransac.max_iters = r.value("max_iters", c.ransac.max_iters);
        c.ransac.inlier_tol = r.value("inlier_tol", c.ransac.inlier_tol);
        c.ransac.early_exit_ratio = r.value("early_exit_ratio", c.ransac.early_exit_ratio);
        c.ransac.max_samples = r.value("max_samples", c.ransac.max_samples);
        c.ransac.seed = r.value("seed", c.ransac.seed);
    }
}

Label assign_frame_label(const RegionStats& stats_c, const RegionStats& stats_n,
                         const PseudoLabelConfig& cfg, bool* cancelled) {
    if (cancelled) *cancelled = false;

    // No spatial overlap means no contact, whatever the motion looks like.
    if (stats_c.iou == 0.0) return Label::NoContact;

    bool gates_c = stats_c.h_r >= cfg.hr_min && stats_c.o_r >= cfg.or_min_contact &&
                   stats_c.b_r < cfg.br_max && stats_c.dir_defined;
    bool contact = gates_c && stats_c.dir_sim > cfg.sim_min_contact;
    // Hand and object both move, but not together: something else moves the
    // object, or the hand leaves it behind.
    bool apart = gates_c && stats_c.dir_sim < cfg.sim_max_nocontact;
    // Hand moves while the object stays put, judged at the laxer threshold.
    bool still = stats_n.h_r >= cfg.hr_min && stats_n.o_r < cfg.or_max_nocontact &&
                 stats_n.b_r < cfg.br_max;
    bool nocontact = apart || still;

    if (contact && nocontact) {
        if (cancelled) *cancelled = true;
        return Label::Unlabeled;
    }
    if (contact) return Label::Contact;
    if (nocontact) return Label::NoContact;
    return Label::Unlabeled;
}

std::vector<Vec2> seed_mask_points(const Mask& m, int max_points) {
    std::vector<Vec2> out;
    if (max_points < 1) return out;
    for (int s = 1; s <= std::max(m.width, m.height); ++s) {
        out.clear();
        for (int y = s / 2; y < m.height; y += s)
            for (int x = s / 2; x < m.width; x += s)
                if (m.at(x, y)) out.push_back({x + 0.5, y + 0.5});
        if (static_cast<int>(out.size()) <= max_points) break;
    }
    if (out.empty()) {
        // Coarse grids can miss thin masks entirely; fall back to an even
        // subsample of the raster scan.
        std::vector<Vec2> all;
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x)
                if (m.at(x, y)) all.push_back({x + 0.5, y + 0.5});
        std::size_t n = all.size();
        std::size_t take = std::min<std::size_t>(n, max_points);
        for (std::size_t i = 0; i < take; ++i) out.push_back(all[i * n / take]);
    }
    return out;
}

std::vector<Vec2> seed_box_points(const Box& b, int width, int height, int max_points) {
    Mask m(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (b.contains_pixel(x, y)) m.set(x, y, 1);
    return seed_mask_points(m, max_points);
}

void advance_points(const Track& track, int t, int dir, std::vector<Vec2>& pts,
                    std::vector<char>& alive, double fb_tol) {
    if (dir != 1 && dir != -1) throw GeometryError("advance_points: dir must be +1 or -1");
    const int T = static_cast<int>(track.frames.size());
    int dst = t + dir;
    if (t < 0 || t >= T || dst < 0 || dst >= T)
        throw GeometryError("advance_points: frame index out of range");

    const FlowField* go;
    const FlowField* back;
    if (dir == 1) {
        go = &track.frames[t].flow_fwd;
        if (!track.frames[dst].flow_bwd)
            throw GeometryError("advance_points: missing backward flow at destination");
        back = &*track.frames[dst].flow_bwd;
    } else {
        if (!track.frames[t].flow_bwd)
            throw GeometryError("advance_points: missing backward flow at source");
        go = &*track.frames[t].flow_bwd;
        back = &track.frames[dst].flow_fwd;
    }

    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!alive[i]) continue;
        Vec2 f = go->sample(pts[i].x, pts[i].y);
        Vec2 q = pts[i] + f;
        if (!go->in_bounds(q.x, q.y)) {
            alive[i] = 0;
            continue;
        }
        Vec2 ret = back->sample(q.x, q.y);
        if ((f + ret).norm() > fb_tol) {
            alive[i] = 0;
            continue;
        }
        pts[i] = q;
    }
}

std::optional<double> mean_pair_distance(const std::vector<Vec2>& hand_pts,
                                         const std::vector<char>& hand_alive,
                                         const std::vector<Vec2>& obj_pts,
                                         const std::vector<char>& obj_alive) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < hand_pts.size(); ++i) {
        if (!hand_alive[i]) continue;
        for (std::size_t j = 0; j < obj_pts.size(); ++j) {
            if (!obj_alive[j]) continue;
            sum += (hand_pts[i] - obj_pts[j]).norm();
            ++pairs;
        }
    }
    if (pairs == 0) return std::nullopt;
    return sum / static_cast<double>(pairs);
}

namespace {

struct PointCloud {
    std::vector<Vec2> hand, obj;
    std::vector<char> hand_alive, obj_alive;

    static std::optional<PointCloud> seed(const Track& track, int frame, int max_points) {
        const Frame& f = track.frames[frame];
        PointCloud pc;
        pc.hand = seed_mask_points(f.hand_mask, max_points);
        pc.obj = seed_box_points(f.object_box, track.width, track.height, max_points);
        if (pc.hand.empty() || pc.obj.empty()) return std::nullopt;
        pc.hand_alive.assign(pc.hand.size(), 1);
        pc.obj_alive.assign(pc.obj.size(), 1);
        return pc;
    }

    std::optional<double> distance() const {
        return mean_pair_distance(hand, hand_alive, obj, obj_alive);
    }

    void advance(const Track& track, int t, int dir, double fb_tol) {
        advance_points(track, t, dir, hand, hand_alive, fb_tol);
        advance_points(track, t, dir, obj, obj_alive, fb_tol);
    }
};

// Fills frames from `first` towards `last` (inclusive, step = sign of
// last - first) with the label at `src`, while tracked geometry holds.
int fill_from(const Track& track, LabelSeq& labels, int src, int first, int last,
              const PseudoLabelConfig& cfg) {
    // Travel direction is away from the source frame; for a one-frame run
    // first == last, so the run bounds alone cannot tell it.
    int dir = first >= src ? 1 : -1;
    auto pc = PointCloud::seed(track, src, cfg.max_points_per_region);
    if (!pc) return 0;
    std::optional<double> d_ref = pc->distance();
    if (!d_ref) return 0;

    Label value = labels.states[src];
    int added = 0;
    int prev = src;
    for (int t = first; dir > 0 ? t <= last : t >= last; t += dir) {
        if (labels.states[t] != Label::Unlabeled) break;
        pc->advance(track, prev, dir, cfg.fb_consistency_tol);
        std::optional<double> d = pc->distance();
        if (!d) break;
        if (std::abs(*d - *d_ref) > cfg.extension_rel_tol * *d_ref) break;
        labels.states[t] = value;
        ++added;
        prev = t;
    }
    return added;
}

}  // namespace

int extend_labels(const Track& track, LabelSeq& labels, const PseudoLabelConfig& cfg) {
    const int T = static_cast<int>(labels.size());
    if (static_cast<int>(track.frames.size()) != T)
        throw GeometryError("label sequence length does not match the track");

    int added = 0;
    int t = 0;
    while (t < T) {
        if (labels.states[t] != Label::Unlabeled) {
            ++t;
            continue;
        }
        int a = t, b = t;
        while (b + 1 < T && labels.states[b + 1] == Label::Unlabeled) ++b;
        if (a > 0) added += fill_from(track, labels, a - 1, a, b, cfg);
        if (b + 1 < T) added += fill_from(track, labels, b + 1, b, a, cfg);
        t = b + 1;
    }
    return added;
}

PseudoLabelResult generate_pseudolabels(const Track& track, const PseudoLabelConfig& cfg) {
    cfg.validate();
    const int T = static_cast<int>(track.frames.size());
    PseudoLabelResult res;
    res.rule_labels = LabelSeq(T);

    for (int t = 0; t < T; ++t) {
        const Frame& frame = track.frames[t];
        try {
            Homography h = estimate_background_homography(frame, cfg.ransac);
            VecField residual = compensated_flow(frame, h);
            RegionStats sc = region_stats(frame, residual, cfg.sigma_contact);
            RegionStats sn = region_stats(frame, residual, cfg.sigma_nocontact);
            bool cancelled = false;
            res.rule_labels.states[t] = assign_frame_label(sc, sn, cfg, &cancelled);
            if (cancelled) ++res.cancelled;
        } catch (const HomographyError&) {
            ++res.frame_errors;
        } catch (const GeometryError&) {
            ++res.frame_errors;
        }
    }

    res.labels = res.rule_labels;
    res.extended = extend_labels(track, res.labels, cfg);
    return res;
}

}  // namespace contactseq
