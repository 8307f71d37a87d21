#include "contactseq/track_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace contactseq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kFlowMagic[8] = {'C', 'S', 'F', 'L', 'O', 'W', '0', '1'};
constexpr char kMaskMagic[8] = {'C', 'S', 'M', 'A', 'S', 'K', '0', '1'};

std::string frame_file(const char* stem, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04zu.%s", stem, i, ext);
    return buf;
}

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& what) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4)) throw TrackIoError("truncated " + what);
    return v;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw TrackIoError("cannot write " + p.string());
    return os;
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw TrackIoError("missing file " + p.string());
    return is;
}

void save_masks(const Frame& f, const fs::path& p) {
    auto os = open_out(p);
    os.write(kMaskMagic, 8);
    write_u32(os, std::uint32_t(f.hand_mask.width));
    write_u32(os, std::uint32_t(f.hand_mask.height));
    write_u32(os, std::uint32_t(1 + f.other_hand_masks.size()));
    auto write_mask = [&](const Mask& m) {
        auto runs = rle_encode(m);
        write_u32(os, std::uint32_t(runs.size()));
        os.write(reinterpret_cast<const char*>(runs.data()), std::streamsize(runs.size() * 4));
    };
    write_mask(f.hand_mask);
    for (const Mask& m : f.other_hand_masks) write_mask(m);
}

void load_masks(Frame& f, const fs::path& p) {
    auto is = open_in(p);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMaskMagic, 8) != 0)
        throw TrackIoError("bad mask magic in " + p.string());
    int w = int(read_u32(is, p.string()));
    int h = int(read_u32(is, p.string()));
    std::uint32_t count = read_u32(is, p.string());
    if (count == 0) throw TrackIoError("no masks in " + p.string());
    auto read_mask = [&]() {
        std::uint32_t nruns = read_u32(is, p.string());
        std::vector<std::uint32_t> runs(nruns);
        if (!is.read(reinterpret_cast<char*>(runs.data()), std::streamsize(nruns) * 4))
            throw TrackIoError("truncated mask runs in " + p.string());
        return rle_decode(runs, w, h);
    };
    f.hand_mask = read_mask();
    f.other_hand_masks.clear();
    for (std::uint32_t i = 1; i < count; i++) f.other_hand_masks.push_back(read_mask());
}

void save_boxes(const Frame& f, const fs::path& p) {
    std::ofstream os(p, std::ios::trunc);
    if (!os) throw TrackIoError("cannot write " + p.string());
    char line[160];
    auto put = [&](const Box& b) {
        std::snprintf(line, sizeof(line), "%.9g %.9g %.9g %.9g\n", b.x0, b.y0, b.x1, b.y1);
        os << line;
    };
    put(f.object_box);
    for (const Box& b : f.other_object_boxes) put(b);
}

void load_boxes(Frame& f, const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw TrackIoError("missing file " + p.string());
    std::string line;
    bool first = true;
    f.other_object_boxes.clear();
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Box b;
        if (std::sscanf(line.c_str(), "%g %g %g %g", &b.x0, &b.y0, &b.x1, &b.y1) != 4)
            throw TrackIoError("bad box line in " + p.string() + ": " + line);
        if (first) {
            f.object_box = b;
            first = false;
        } else {
            f.other_object_boxes.push_back(b);
        }
    }
    if (first) throw TrackIoError("no boxes in " + p.string());
}

}  // namespace

void save_flow(const FlowField& flow, const fs::path& file) {
    auto os = open_out(file);
    os.write(kFlowMagic, 8);
    write_u32(os, std::uint32_t(flow.width));
    write_u32(os, std::uint32_t(flow.height));
    os.write(reinterpret_cast<const char*>(flow.data.data()),
             std::streamsize(flow.data.size() * sizeof(float)));
    if (!os) throw TrackIoError("write failed: " + file.string());
}

FlowField load_flow(const fs::path& file) {
    auto is = open_in(file);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kFlowMagic, 8) != 0)
        throw TrackIoError("bad flow magic in " + file.string());
    int w = int(read_u32(is, file.string()));
    int h = int(read_u32(is, file.string()));
    FlowField flow(w, h);
    if (!is.read(reinterpret_cast<char*>(flow.data.data()),
                 std::streamsize(flow.data.size() * sizeof(float))))
        throw TrackIoError("truncated flow data in " + file.string());
    return flow;
}

void save_track(const Track& track, const fs::path& dir, bool overwrite) {
    validate_track(track);
    if (fs::exists(dir)) {
        if (!overwrite)
            throw TrackIoError("refusing to overwrite existing directory " + dir.string() +
                               " (pass overwrite)");
        fs::remove_all(dir);
    }
    fs::create_directories(dir);

    json frames = json::array();
    for (std::size_t i = 0; i < track.size(); i++) {
        const Frame& f = track.frames[i];
        json entry;
        entry["masks"] = frame_file("masks", i, "bin");
        entry["boxes"] = frame_file("boxes", i, "txt");
        entry["flow_fwd"] = frame_file("flow_fwd", i, "bin");
        entry["flow_bwd"] = f.flow_bwd ? json(frame_file("flow_bwd", i, "bin")) : json(nullptr);
        frames.push_back(entry);

        save_masks(f, dir / frame_file("masks", i, "bin"));
        save_boxes(f, dir / frame_file("boxes", i, "txt"));
        save_flow(f.flow_fwd, dir / frame_file("flow_fwd", i, "bin"));
        if (f.flow_bwd) save_flow(*f.flow_bwd, dir / frame_file("flow_bwd", i, "bin"));
    }

    json manifest;
    manifest["id"] = track.id;
    manifest["width"] = track.width;
    manifest["height"] = track.height;
    manifest["fps"] = track.fps;
    manifest["num_frames"] = track.size();
    manifest["frames"] = frames;
    manifest["image_paths"] = nullptr;  // reserved; RGB is not stored

    std::ofstream os(dir / "manifest", std::ios::trunc);
    if (!os) throw TrackIoError("cannot write manifest in " + dir.string());
    os << manifest.dump(2) << "\n";
}

Track load_track(const fs::path& dir) {
    fs::path mpath = dir / "manifest";
    std::ifstream ms(mpath);
    if (!ms) throw TrackIoError("missing manifest " + mpath.string());
    json manifest;
    try {
        ms >> manifest;
    } catch (const json::exception& e) {
        throw TrackIoError("malformed manifest " + mpath.string() + ": " + e.what());
    }

    Track track;
    try {
        track.id = manifest.at("id").get<std::string>();
        track.width = manifest.at("width").get<int>();
        track.height = manifest.at("height").get<int>();
        track.fps = manifest.at("fps").get<double>();
        std::size_t n = manifest.at("num_frames").get<std::size_t>();
        const json& frames = manifest.at("frames");
        if (frames.size() != n)
            throw TrackIoError("manifest " + mpath.string() + " declares " + std::to_string(n) +
                               " frames but lists " + std::to_string(frames.size()));
        for (std::size_t i = 0; i < n; i++) {
            const json& entry = frames.at(i);
            Frame f;
            try {
                load_masks(f, dir / entry.at("masks").get<std::string>());
                load_boxes(f, dir / entry.at("boxes").get<std::string>());
                f.flow_fwd = load_flow(dir / entry.at("flow_fwd").get<std::string>());
                if (!entry.at("flow_bwd").is_null())
                    f.flow_bwd = load_flow(dir / entry.at("flow_bwd").get<std::string>());
            } catch (const TrackIoError& e) {
                throw TrackIoError("track '" + track.id + "' frame " + std::to_string(i) + ": " +
                                   e.what());
            }
            track.frames.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        throw TrackIoError("malformed manifest " + mpath.string() + ": " + e.what());
    }

    validate_track(track);
    return track;
}

LabelSeq load_labels(const fs::path& file) {
    std::ifstream is(file);
    if (!is) throw TrackIoError("missing label file " + file.string());
    LabelSeq seq;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        int v = 0;
        if (std::sscanf(line.c_str(), "%d", &v) != 1 || (v != 0 && v != 1 && v != -1))
            throw TrackIoError("bad label line in " + file.string() + ": " + line);
        seq.states.push_back(Label(v));
    }
    return seq;
}

void save_labels(const LabelSeq& labels, const fs::path& file) {
    std::ofstream os(file, std::ios::trunc);
    if (!os) throw TrackIoError("cannot write " + file.string());
    for (Label s : labels.states) os << int(s) << "\n";
}

Dataset load_dataset(const fs::path& dir, DatasetRole role) {
    if (!fs::is_directory(dir)) throw TrackIoError("not a dataset directory: " + dir.string());
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && fs::exists(e.path() / "manifest")) subdirs.push_back(e.path());
    std::sort(subdirs.begin(), subdirs.end());

    Dataset ds;
    ds.role = role;
    for (const fs::path& sub : subdirs) {
        DatasetEntry entry;
        entry.track = std::make_shared<Track>(load_track(sub));
        fs::path lp = sub / "labels.txt";
        entry.labels =
            fs::exists(lp) ? load_labels(lp) : LabelSeq(entry.track->size(), Label::Unlabeled);
        if (entry.labels.size() != entry.track->size())
            throw TrackIoError("label length mismatch for " + sub.string());
        fs::path gp = sub / "labels_gt.txt";
        if (fs::exists(gp)) {
            entry.truth = load_labels(gp);
            if (entry.truth->size() != entry.track->size())
                throw TrackIoError("truth length mismatch for " + sub.string());
        }
        ds.entries.push_back(std::move(entry));
    }
    validate_dataset(ds);
    return ds;
}

LabelSeq find_labels(const fs::path& dir, const std::string& track_id) {
    fs::path flat = dir / (track_id + ".txt");
    if (fs::exists(flat)) return load_labels(flat);
    fs::path gt = dir / track_id / "labels_gt.txt";
    if (fs::exists(gt)) return load_labels(gt);
    fs::path own = dir / track_id / "labels.txt";
    if (fs::exists(own)) return load_labels(own);
    throw TrackIoError("no labels for track '" + track_id + "' under " + dir.string());
}

}  // namespace contactseq
