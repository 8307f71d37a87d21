#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>

#include "contactseq/pseudolabel.hpp"
#include "contactseq/track.hpp"

namespace contactseq {

// Per-frame descriptor rows, in order:
//   0 hand/object raster IoU
//   1 moving fraction of the hand  (residual motion > sigma_contact)
//   2 moving fraction of the object box
//   3 moving fraction of the background
//   4 hand/object direction cosine, 0 when either region is still
//   5 mean hand speed, px/frame, camera-compensated
//   6 mean object speed
//   7 hand-centroid to box-center distance over the image diagonal
//   8 box area over the image area
//   9 1 when another hand touches the target hand or box
//  10 1 when another object box touches the target hand or box
inline constexpr int kFeatureDim = 11;

// kFeatureDim x T. Frames whose homography or geometry fails come out as
// all-zero columns.
Eigen::MatrixXd extract_features(const Track& track, const PseudoLabelConfig& cfg = {});

// Feature matrices are reused across training rounds; keyed by track id.
class FeatureCache {
  public:
    explicit FeatureCache(const PseudoLabelConfig& cfg = {}) : cfg_(cfg) {}

    const Eigen::MatrixXd& get(const Track& track) {
        auto it = cache_.find(track.id);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(track.id, extract_features(track, cfg_)).first->second;
    }
    std::size_t size() const { return cache_.size(); }

  private:
    PseudoLabelConfig cfg_;
    std::map<std::string, Eigen::MatrixXd> cache_;
};

}  // namespace contactseq
