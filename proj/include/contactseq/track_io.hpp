#pragma once

#include <filesystem>
#include <string>

#include "contactseq/track.hpp"

namespace contactseq {

// On-disk track layout, one directory per track:
//   manifest            JSON: id, dims, fps, frame count, per-frame file names
//   flow_fwd_%04d.bin   dense float32 flow, 8-byte magic + dims header
//   flow_bwd_%04d.bin   same format; absent for frame 0
//   masks_%04d.bin      RLE rasters: target hand mask first, then other hands
//   boxes_%04d.txt      target object box first, then other boxes
Track load_track(const std::filesystem::path& dir);
void save_track(const Track& track, const std::filesystem::path& dir, bool overwrite = false);

// Label files: one line per frame, 0 = no contact, 1 = contact, -1 = unlabeled.
LabelSeq load_labels(const std::filesystem::path& file);
void save_labels(const LabelSeq& labels, const std::filesystem::path& file);

FlowField load_flow(const std::filesystem::path& file);
void save_flow(const FlowField& flow, const std::filesystem::path& file);

// Loads every track subdirectory (sorted by name) under a dataset directory.
// Labels resolve to <dir>/<id>/labels.txt; planted truth, when present, to
// labels_gt.txt. Missing labels.txt yields an all-unlabeled sequence.
Dataset load_dataset(const std::filesystem::path& dir, DatasetRole role);

// Finds labels for `track_id` under `dir`, trying <id>.txt, <id>/labels_gt.txt,
// <id>/labels.txt in that order. Throws when none exists.
LabelSeq find_labels(const std::filesystem::path& dir, const std::string& track_id);

}  // namespace contactseq
