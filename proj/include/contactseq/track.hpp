#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "contactseq/common.hpp"
#include "contactseq/flow.hpp"
#include "contactseq/geometry.hpp"

namespace contactseq {

// One frame of a hand-object track: target hand mask, target object box,
// any other detected entities, and dense flow. Forward flow covers the
// interval to the next frame and is present on every frame; backward flow
// is absent on the first frame.
struct Frame {
    Mask hand_mask;
    Box object_box;
    std::vector<Mask> other_hand_masks;
    std::vector<Box> other_object_boxes;
    FlowField flow_fwd;
    std::optional<FlowField> flow_bwd;
};

struct Track {
    std::string id;
    int width = 0;
    int height = 0;
    double fps = 30.0;
    std::vector<Frame> frames;

    std::size_t size() const { return frames.size(); }
};

// Validates all Track/Frame invariants; throws TrackIoError naming the
// offending frame on the first violation.
void validate_track(const Track& track);

// Content checksum over every field in a canonical order. Stable across
// save/load round trips.
std::uint64_t track_checksum(const Track& track);

// True iff some frame has positive IoU between the tight bounding box of
// the hand mask and the object box.
bool pair_overlap(const Track& track);

enum class DatasetRole { Noisy, Trusted, Clean };

struct DatasetEntry {
    std::shared_ptr<const Track> track;
    LabelSeq labels;
    std::optional<LabelSeq> truth;  // planted ground truth, synthetic corpora only
};

struct Dataset {
    DatasetRole role = DatasetRole::Noisy;
    std::vector<DatasetEntry> entries;
};

// Throws if two entries share a track id or a label length mismatches its track.
void validate_dataset(const Dataset& ds);

const char* dataset_role_name(DatasetRole role);

}  // namespace contactseq
