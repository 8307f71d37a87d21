#include "contactseq/homography.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "contactseq/common.hpp"

namespace contactseq {

namespace {

// Similarity transform taking points to centroid 0 and mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Vec2>& pts, const std::vector<int>& idx) {
    double cx = 0.0, cy = 0.0;
    for (int i : idx) {
        cx += pts[i].x;
        cy += pts[i].y;
    }
    cx /= static_cast<double>(idx.size());
    cy /= static_cast<double>(idx.size());
    double mean_dist = 0.0;
    for (int i : idx) mean_dist += std::hypot(pts[i].x - cx, pts[i].y - cy);
    mean_dist /= static_cast<double>(idx.size());
    double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
}

Eigen::Matrix3d fit_dlt_indexed(const MatchSet& m, const std::vector<int>& idx) {
    if (idx.size() < 4) throw HomographyError("homography fit needs at least 4 correspondences");
    Eigen::Matrix3d tf = normalizing_transform(m.from, idx);
    Eigen::Matrix3d tt = normalizing_transform(m.to, idx);

    Eigen::MatrixXd a(2 * static_cast<int>(idx.size()), 9);
    int r = 0;
    for (int i : idx) {
        Eigen::Vector3d p = tf * Eigen::Vector3d(m.from[i].x, m.from[i].y, 1.0);
        Eigen::Vector3d q = tt * Eigen::Vector3d(m.to[i].x, m.to[i].y, 1.0);
        double x = p.x(), y = p.y(), u = q.x(), v = q.y();
        a.row(r++) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        a.row(r++) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }
    // Full V: with a minimal 4-point sample the system is 8x9 and the null
    // direction lives outside the thin decomposition.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    // Rank < 8 means the configuration does not pin down a homography.
    const auto& sv = svd.singularValues();
    if (sv(0) < 1e-12 || sv(7) / sv(0) < 1e-10)
        throw HomographyError("degenerate correspondence configuration");
    Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    Eigen::Matrix3d out = tt.inverse() * hn * tf;
    if (std::abs(out(2, 2)) < 1e-12) throw HomographyError("homography has vanishing scale");
    return out / out(2, 2);
}

bool triple_collinear(const Vec2& a, const Vec2& b, const Vec2& c) {
    double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return std::abs(cross) < 1e-9;
}

bool sample_degenerate(const MatchSet& m, const std::array<int, 4>& s) {
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k) {
                if (triple_collinear(m.from[s[i]], m.from[s[j]], m.from[s[k]])) return true;
                if (triple_collinear(m.to[s[i]], m.to[s[j]], m.to[s[k]])) return true;
            }
    return false;
}

std::vector<int> inliers_of(const Eigen::Matrix3d& h, const MatchSet& m, double tol) {
    std::vector<int> in;
    in.reserve(m.size());
    for (int i = 0; i < static_cast<int>(m.size()); ++i)
        if (reprojection_error(h, m.from[i], m.to[i]) <= tol) in.push_back(i);
    return in;
}

}  // namespace

double reprojection_error(const Eigen::Matrix3d& h, const Vec2& from, const Vec2& to) {
    Eigen::Vector3d q = h * Eigen::Vector3d(from.x, from.y, 1.0);
    if (std::abs(q.z()) < 1e-12) return std::numeric_limits<double>::infinity();
    return std::hypot(q.x() / q.z() - to.x, q.y() / q.z() - to.y);
}

Eigen::Matrix3d fit_homography_dlt(const MatchSet& matches) {
    std::vector<int> idx(matches.size());
    for (int i = 0; i < static_cast<int>(idx.size()); ++i) idx[i] = i;
    return fit_dlt_indexed(matches, idx);
}

Homography estimate_homography_ransac(const MatchSet& matches, const RansacConfig& cfg) {
    const int n = static_cast<int>(matches.size());
    if (n < 4) throw HomographyError("RANSAC needs at least 4 correspondences");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> pick(0, n - 1);

    std::vector<int> best_inliers;
    int iters_needed = cfg.max_iters;
    int it = 0;
    int degenerate_streak = 0;
    for (; it < cfg.max_iters && it < iters_needed; ++it) {
        std::array<int, 4> s{};
        int filled = 0;
        while (filled < 4) {
            int c = pick(rng);
            bool dup = false;
            for (int j = 0; j < filled; ++j) dup |= (s[j] == c);
            if (!dup) s[filled++] = c;
        }
        if (sample_degenerate(matches, s)) {
            if (++degenerate_streak > 4 * cfg.max_iters)
                throw HomographyError("background correspondences are collinear");
            --it;
            continue;
        }
        degenerate_streak = 0;

        Eigen::Matrix3d h;
        try {
            h = fit_dlt_indexed(matches, {s.begin(), s.end()});
        } catch (const HomographyError&) {
            continue;
        }
        std::vector<int> in = inliers_of(h, matches, cfg.inlier_tol);
        if (in.size() > best_inliers.size()) {
            best_inliers = std::move(in);
            double w = static_cast<double>(best_inliers.size()) / n;
            if (w >= cfg.early_exit_ratio) {
                ++it;
                break;
            }
            // Standard adaptive bound: enough draws for a 99% chance of one
            // all-inlier minimal sample.
            double denom = std::log(std::max(1e-12, 1.0 - std::pow(w, 4)));
            iters_needed = denom < 0.0
                               ? static_cast<int>(std::ceil(std::log(0.01) / denom))
                               : cfg.max_iters;
        }
    }
    if (best_inliers.size() < 4) throw HomographyError("RANSAC found no homography consensus");

    // Least-squares refit on the consensus set, then refresh the set once.
    Eigen::Matrix3d h = fit_dlt_indexed(matches, best_inliers);
    std::vector<int> in = inliers_of(h, matches, cfg.inlier_tol);
    if (in.size() >= 4) {
        Eigen::Matrix3d h2 = fit_dlt_indexed(matches, in);
        std::vector<int> in2 = inliers_of(h2, matches, cfg.inlier_tol);
        if (in2.size() >= in.size()) {
            h = h2;
            in = std::move(in2);
        }
    } else {
        in = std::move(best_inliers);
    }

    Homography out;
    out.h = h;
    out.num_samples = n;
    out.inlier_ratio = static_cast<double>(in.size()) / n;
    double err = 0.0;
    for (int i : in) err += reprojection_error(h, matches.from[i], matches.to[i]);
    out.mean_inlier_error = in.empty() ? 0.0 : err / static_cast<double>(in.size());
    return out;
}

Homography estimate_background_homography(const Frame& frame, const RansacConfig& cfg) {
    const FlowField& flow = frame.flow_fwd;
    const int w = flow.width, h = flow.height;

    auto foreground = [&](int x, int y) {
        if (frame.hand_mask.at(x, y)) return true;
        if (frame.object_box.contains_pixel(x, y)) return true;
        for (const Mask& m : frame.other_hand_masks)
            if (m.at(x, y)) return true;
        for (const Box& b : frame.other_object_boxes)
            if (b.contains_pixel(x, y)) return true;
        return false;
    };

    // Coarsest grid stride that still yields <= max_samples candidates.
    int stride = 1;
    while ((w / stride + 1) * (h / stride + 1) > cfg.max_samples) ++stride;

    MatchSet m;
    for (int y = stride / 2; y < h; y += stride)
        for (int x = stride / 2; x < w; x += stride) {
            if (foreground(x, y)) continue;
            Vec2 p{static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5};
            Vec2 f = flow.at(x, y);
            m.from.push_back(p);
            m.to.push_back(p + f);
        }
    if (m.size() < 4)
        throw HomographyError("not enough background pixels to estimate camera motion");
    return estimate_homography_ransac(m, cfg);
}

MatchSet matches_from_flow(const FlowField& flow, int max_samples) {
    int stride = 1;
    while ((flow.width / stride + 1) * (flow.height / stride + 1) > max_samples) ++stride;
    MatchSet m;
    for (int y = stride / 2; y < flow.height; y += stride)
        for (int x = stride / 2; x < flow.width; x += stride) {
            Vec2 p{static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5};
            m.from.push_back(p);
            m.to.push_back(p + flow.at(x, y));
        }
    return m;
}

VecField compensated_flow(const FlowField& flow, const Homography& h) {
    VecField out(flow.width, flow.height);
    for (int y = 0; y < flow.height; ++y)
        for (int x = 0; x < flow.width; ++x) {
            Vec2 p{static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5};
            Vec2 cam = h.warp(p) - p;
            Vec2 f = flow.at(x, y);
            out.set(x, y, f.x - cam.x, f.y - cam.y);
        }
    return out;
}

VecField compensated_flow(const Frame& frame, const Homography& h) {
    return compensated_flow(frame.flow_fwd, h);
}

Mask moving_mask(const VecField& residual, double sigma) {
    Mask m(residual.width, residual.height);
    for (int y = 0; y < residual.height; ++y)
        for (int x = 0; x < residual.width; ++x)
            if (residual.magnitude(x, y) > sigma) m.set(x, y, true);
    return m;
}

}  // namespace contactseq
