#include "contactseq/track.hpp"

#include <cstring>
#include <set>
#include <string>

namespace contactseq {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw TrackIoError(msg);
}

std::string frame_tag(const Track& t, std::size_t i) {
    return "track '" + t.id + "' frame " + std::to_string(i);
}

void checksum_bytes(std::uint64_t& h, const void* p, std::size_t n) {
    h = fnv1a(p, n, h);
}

void checksum_box(std::uint64_t& h, const Box& b) {
    float v[4] = {b.x0, b.y0, b.x1, b.y1};
    checksum_bytes(h, v, sizeof(v));
}

void checksum_mask(std::uint64_t& h, const Mask& m) {
    auto runs = rle_encode(m);
    checksum_bytes(h, runs.data(), runs.size() * sizeof(std::uint32_t));
}

}  // namespace

void validate_track(const Track& track) {
    require(track.size() >= 2, "track '" + track.id + "': length must be >= 2");
    require(track.width > 0 && track.height > 0, "track '" + track.id + "': empty canvas");
    for (std::size_t i = 0; i < track.frames.size(); i++) {
        const Frame& f = track.frames[i];
        require(f.hand_mask.width == track.width && f.hand_mask.height == track.height,
                frame_tag(track, i) + ": hand mask dims mismatch");
        require(f.object_box.valid_in(track.width, track.height),
                frame_tag(track, i) + ": object box outside canvas or inverted");
        for (const Mask& m : f.other_hand_masks)
            require(m.width == track.width && m.height == track.height,
                    frame_tag(track, i) + ": other hand mask dims mismatch");
        for (const Box& b : f.other_object_boxes)
            require(b.valid_in(track.width, track.height),
                    frame_tag(track, i) + ": other object box outside canvas");
        require(f.flow_fwd.width == track.width && f.flow_fwd.height == track.height,
                frame_tag(track, i) + ": forward flow dims mismatch");
        require(f.flow_fwd.all_finite(), frame_tag(track, i) + ": non-finite forward flow");
        if (i == 0) {
            require(!f.flow_bwd.has_value(),
                    frame_tag(track, i) + ": backward flow present on first frame");
        } else {
            require(f.flow_bwd.has_value(), frame_tag(track, i) + ": backward flow missing");
            require(f.flow_bwd->width == track.width && f.flow_bwd->height == track.height,
                    frame_tag(track, i) + ": backward flow dims mismatch");
            require(f.flow_bwd->all_finite(), frame_tag(track, i) + ": non-finite backward flow");
        }
    }
}

std::uint64_t track_checksum(const Track& track) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a_str(track.id, h);
    std::int32_t dims[2] = {track.width, track.height};
    checksum_bytes(h, dims, sizeof(dims));
    checksum_bytes(h, &track.fps, sizeof(track.fps));
    for (const Frame& f : track.frames) {
        checksum_mask(h, f.hand_mask);
        checksum_box(h, f.object_box);
        std::uint32_t counts[2] = {std::uint32_t(f.other_hand_masks.size()),
                                   std::uint32_t(f.other_object_boxes.size())};
        checksum_bytes(h, counts, sizeof(counts));
        for (const Mask& m : f.other_hand_masks) checksum_mask(h, m);
        for (const Box& b : f.other_object_boxes) checksum_box(h, b);
        checksum_bytes(h, f.flow_fwd.data.data(), f.flow_fwd.data.size() * sizeof(float));
        std::uint8_t has_bwd = f.flow_bwd.has_value() ? 1 : 0;
        checksum_bytes(h, &has_bwd, 1);
        if (f.flow_bwd)
            checksum_bytes(h, f.flow_bwd->data.data(), f.flow_bwd->data.size() * sizeof(float));
    }
    return h;
}

bool pair_overlap(const Track& track) {
    for (const Frame& f : track.frames) {
        auto bb = mask_bounding_box(f.hand_mask);
        if (!bb) continue;
        if (box_iou(*bb, f.object_box) > 0.0) return true;
    }
    return false;
}

void validate_dataset(const Dataset& ds) {
    std::set<std::string> ids;
    for (const DatasetEntry& e : ds.entries) {
        if (!e.track) throw TrackIoError("dataset entry without track");
        if (!ids.insert(e.track->id).second)
            throw TrackIoError("duplicate track id in dataset: " + e.track->id);
        if (e.labels.size() != e.track->size())
            throw TrackIoError("label length mismatch for track " + e.track->id);
        if (e.truth && e.truth->size() != e.track->size())
            throw TrackIoError("truth length mismatch for track " + e.track->id);
    }
}

const char* dataset_role_name(DatasetRole role) {
    switch (role) {
        case DatasetRole::Noisy: return "noisy";
        case DatasetRole::Trusted: return "trusted";
        case DatasetRole::Clean: return "clean";
    }
    return "?";
}

}  // namespace contactseq
