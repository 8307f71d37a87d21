#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "contactseq/flow.hpp"
#include "contactseq/track.hpp"

namespace contactseq {

// Background homography between adjacent frames, normalized so H(2,2) = 1.
struct Homography {
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
    double inlier_ratio = 1.0;
    double mean_inlier_error = 0.0;  // px, over RANSAC inliers after refit
    int num_samples = 0;

    Vec2 warp(const Vec2& p) const {
        Eigen::Vector3d q = h * Eigen::Vector3d(p.x, p.y, 1.0);
        return {q.x() / q.z(), q.y() / q.z()};
    }
};

struct RansacConfig {
    int max_iters = 500;
    double inlier_tol = 1.0;         // px reprojection
    double early_exit_ratio = 0.99;  // stop once this inlier fraction is reached
    int max_samples = 1200;          // cap on background matches fed to RANSAC
    std::uint64_t seed = 0;
};

// Point correspondences (p -> q) between adjacent frames.
struct MatchSet {
    std::vector<Vec2> from;
    std::vector<Vec2> to;
    std::size_t size() const { return from.size(); }
};

// Direct linear transform on >= 4 correspondences with Hartley coordinate
// normalization. Throws HomographyError on degenerate configurations.
Eigen::Matrix3d fit_homography_dlt(const MatchSet& matches);

// RANSAC around fit_homography_dlt with a final least-squares refit on the
// inlier set.
Homography estimate_homography_ransac(const MatchSet& matches, const RansacConfig& cfg);

// Collects background matches (p, p + flow_fwd(p)) on a subsampled grid,
// excluding the hand mask, object box, and all other entities, then runs
// RANSAC. Throws HomographyError when fewer than 4 usable samples exist or
// the background is degenerate.
Homography estimate_background_homography(const Frame& frame, const RansacConfig& cfg = {});

// Grid correspondences (p, p + flow(p)) over the whole field, no exclusions.
MatchSet matches_from_flow(const FlowField& flow, int max_samples);

// Residual motion after removing the homography-induced field:
// residual(p) = flow(p) - (warp(p, h) - p).
VecField compensated_flow(const Frame& frame, const Homography& h);
VecField compensated_flow(const FlowField& flow, const Homography& h);

// Binary mask of cells whose residual magnitude strictly exceeds sigma.
Mask moving_mask(const VecField& residual, double sigma);

double reprojection_error(const Eigen::Matrix3d& h, const Vec2& from, const Vec2& to);

}  // namespace contactseq
