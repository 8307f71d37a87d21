#pragma once

#include <array>
#include <cstdint>
#include <Eigen/Dense>
#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "contactseq/pseudolabel.hpp"
#include "contactseq/track.hpp"

namespace contactseq {

// One motion phase of the scripted hand-object pair. Kinds:
//   idle         nothing moves                         no contact
//   approach     hand moves (default: toward object)   no contact
//   grasp/carry  hand and object move together         contact
//   hold         nothing moves                         contact
//   release      hand moves (default: away)            no contact
//   independent  hand and object move separately       no contact
struct PhaseSpec {
    std::string kind = "idle";
    int frames = 1;
    double speed = 0.0;
    std::optional<Vec2> dir;        // unit-normalized at use
    double obj_speed = 0.0;         // independent only
    std::optional<Vec2> obj_dir;    // independent only
};

struct DistractorSpec {
    std::string kind = "hand";  // "hand" (disk) or "object" (box)
    Vec2 start{0, 0};           // center
    double radius = 6.0;        // hand
    Vec2 size{14, 10};          // object
    Vec2 vel{0, 0};             // px/frame, constant over the track
};

struct CameraSpec {
    std::string kind = "static";  // "static", "pan", "projective"
    Vec2 vel{0, 0};               // pan
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};  // projective, row-major
};

// Frames listed here get a strong rotating background-warp added to every
// pixel of both flow directions: it defeats homography fitting and the
// forward-backward trajectory check at once.
struct TurbulenceSpec {
    std::vector<int> frames;
    double amp = 4.0;
    double wavelength = 8.0;
};

struct NoiseSpec {
    double flow_sigma = 0.0;        // gaussian, per flow component
    double outlier_fraction = 0.0;  // background pixels with junk flow
};

struct ScenarioSpec {
    std::string name = "scene";
    int width = 128;
    int height = 96;
    double fps = 30.0;

    Vec2 hand_start{32, 48};  // disk center
    double hand_radius = 8.0;
    Vec2 object_start{78, 48};  // box center
    Vec2 object_size{18, 14};

    CameraSpec camera;
    std::vector<PhaseSpec> phases;
    std::vector<DistractorSpec> distractors;
    TurbulenceSpec turbulence;
    NoiseSpec noise;

    int total_frames() const;
    void validate() const;  // throws ConfigError
};

void to_json(nlohmann::json& j, const ScenarioSpec& s);
void from_json(const nlohmann::json& j, ScenarioSpec& s);
ScenarioSpec load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioSpec& s, const std::filesystem::path& path);

struct SynthResult {
    Track track;
    LabelSeq truth;
};

// Renders the scenario into masks, boxes and both flow directions, plus the
// phase-derived contact truth. Identical (spec, seed, id) yield identical
// tracks. Throws ConfigError when scripted geometry leaves the canvas.
SynthResult generate_track(const ScenarioSpec& spec, std::uint64_t seed, const std::string& id);

enum class CorruptMode { UniformFlip, BoundaryShift, SegmentFlip };
CorruptMode corrupt_mode_from_string(const std::string& name);
std::string corrupt_mode_name(CorruptMode mode);

// Label noise for correction experiments. UniformFlip / SegmentFlip flip
// each labeled frame / each segment with probability `rate`; BoundaryShift
// moves every boundary by 1..6 frames either way (rate ignored) and needs a
// fully labeled sequence.
LabelSeq corrupt_labels(const LabelSeq& labels, CorruptMode mode, double rate,
                        std::uint64_t seed);

// Dense field flow(p) = warp(p) - p for a known homography, with optional
// gaussian noise and uniform-junk outliers.
FlowField planted_homography_field(int width, int height, const Eigen::Matrix3d& h,
                                   double noise_sigma, double outlier_fraction,
                                   std::uint64_t seed);

// Weighted scenario families for corpus generation.
struct FamilyWeights {
    double clean_grasp = 0.12;
    double turbulent_grasp = 0.30;
    double creep_hover = 0.28;
    double distractor_slide = 0.18;
    double no_contact = 0.12;
};

struct CorpusConfig {
    int noisy = 40;
    int trusted = 8;
    int test = 12;
    std::uint64_t seed = 0;
    std::string labels = "pseudo";  // noisy-split labels: "pseudo" or "corrupt"
    CorruptMode corrupt_mode = CorruptMode::UniformFlip;
    double corrupt_rate = 0.2;
    FamilyWeights weights;
    NoiseSpec noise{0.05, 0.0};
    PseudoLabelConfig pseudo;

    void validate() const;
};

void to_json(nlohmann::json& j, const CorpusConfig& c);
void from_json(const nlohmann::json& j, CorpusConfig& c);

// Draws one scenario from the weighted families, geometry pre-checked to
// stay on canvas.
ScenarioSpec random_scenario(std::mt19937_64& rng, const FamilyWeights& weights,
                             const NoiseSpec& noise);

struct CorpusStats {
    int tracks = 0;
    long long frames = 0;
    long long labeled = 0;
    long long label_hits = 0;  // labeled frames agreeing with truth
    double coverage() const { return frames ? double(labeled) / double(frames) : 0.0; }
    double label_accuracy() const { return labeled ? double(label_hits) / double(labeled) : 0.0; }
};

// Writes noisy/ trusted/ test/ track trees under out_dir. Every track gets
// labels_gt.txt; trusted and test get truth as labels.txt; noisy tracks get
// pseudo-labels or corrupted truth. Returns stats for the noisy split.
CorpusStats generate_corpus(const CorpusConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace contactseq
