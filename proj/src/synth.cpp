#include "contactseq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <set>

#include "contactseq/track_io.hpp"

namespace contactseq {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

Vec2 unit(const Vec2& v, const char* what) {
    double n = v.norm();
    if (n < 1e-9) throw ConfigError(std::string(what) + ": direction must be non-zero");
    return {v.x / n, v.y / n};
}

Box box_at(const Vec2& center, const Vec2& size) {
    return Box{float(center.x - size.x / 2), float(center.y - size.y / 2),
               float(center.x + size.x / 2), float(center.y + size.y / 2)};
}

bool in_disk(int px, int py, const Vec2& c, double r) {
    double dx = px + 0.5 - c.x, dy = py + 0.5 - c.y;
    return dx * dx + dy * dy <= r * r;
}

Mask disk_mask(int w, int h, const Vec2& c, double r) {
    Mask m(w, h);
    int x0 = std::max(0, int(std::floor(c.x - r)));
    int x1 = std::min(w - 1, int(std::ceil(c.x + r)));
    int y0 = std::max(0, int(std::floor(c.y - r)));
    int y1 = std::min(h - 1, int(std::ceil(c.y + r)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (in_disk(x, y, c, r)) m.set(x, y, 1);
    return m;
}

struct Camera {
    // "static" keeps fwd/inv at identity.
    Eigen::Matrix3d fwd = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d inv = Eigen::Matrix3d::Identity();
    bool identity = true;

    explicit Camera(const CameraSpec& spec) {
        if (spec.kind == "static") return;
        if (spec.kind == "pan") {
            fwd(0, 2) = spec.vel.x;
            fwd(1, 2) = spec.vel.y;
        } else if (spec.kind == "projective") {
            for (int i = 0; i < 9; ++i) fwd(i / 3, i % 3) = spec.h[i];
            if (std::abs(fwd.determinant()) < 1e-12)
                throw ConfigError("camera homography is singular");
        } else {
            throw ConfigError("unknown camera kind '" + spec.kind + "'");
        }
        inv = fwd.inverse();
        identity = false;
    }

    Vec2 flow(const Vec2& p) const { return apply(fwd, p); }
    Vec2 flow_inv(const Vec2& p) const { return apply(inv, p); }

    static Vec2 apply(const Eigen::Matrix3d& m, const Vec2& p) {
        Eigen::Vector3d q = m * Eigen::Vector3d(p.x, p.y, 1.0);
        if (std::abs(q.z()) < 1e-12) throw ConfigError("camera homography maps point to infinity");
        return {q.x() / q.z() - p.x, q.y() / q.z() - p.y};
    }
};

bool contact_kind(const std::string& kind) {
    return kind == "grasp" || kind == "carry" || kind == "hold";
}

bool known_kind(const std::string& kind) {
    return kind == "idle" || kind == "approach" || kind == "grasp" || kind == "carry" ||
           kind == "hold" || kind == "release" || kind == "independent";
}

// Screen-space trajectory of the scripted pair. Positions run 0..T inclusive;
// the extra entry feeds the last frame's forward flow. Phase speeds are
// relative to the background, so the camera term rides on top.
struct Motion {
    std::vector<Vec2> hand, obj;
    std::vector<bool> contact;

    Vec2 hand_vel(int t) const { return hand[t + 1] - hand[t]; }
    Vec2 obj_vel(int t) const { return obj[t + 1] - obj[t]; }
};

Motion simulate(const ScenarioSpec& spec, const Camera& cam) {
    Motion m;
    int T = spec.total_frames();
    m.hand.reserve(T + 1);
    m.obj.reserve(T + 1);
    m.contact.reserve(T);

    Vec2 hand = spec.hand_start;
    Vec2 obj = spec.object_start;
    m.hand.push_back(hand);
    m.obj.push_back(obj);

    for (const PhaseSpec& ph : spec.phases) {
        Vec2 dh{0, 0}, dobj{0, 0};
        double sh = 0.0, so = 0.0;
        if (ph.kind == "approach") {
            dh = ph.dir ? unit(*ph.dir, "approach") : unit(obj - hand, "approach");
            sh = ph.speed;
        } else if (ph.kind == "release") {
            dh = ph.dir ? unit(*ph.dir, "release") : unit(hand - obj, "release");
            sh = ph.speed;
        } else if (ph.kind == "grasp" || ph.kind == "carry") {
            dh = ph.dir ? unit(*ph.dir, ph.kind.c_str()) : Vec2{1, 0};
            dobj = dh;
            sh = so = ph.speed;
        } else if (ph.kind == "independent") {
            dh = ph.dir ? unit(*ph.dir, "independent") : Vec2{1, 0};
            dobj = ph.obj_dir ? unit(*ph.obj_dir, "independent") : Vec2{-1, 0};
            sh = ph.speed;
            so = ph.obj_speed;
        }
        bool touching = contact_kind(ph.kind);
        for (int i = 0; i < ph.frames; ++i) {
            hand = hand + dh * sh + cam.flow(hand);
            obj = obj + dobj * so + cam.flow(obj);
            m.hand.push_back(hand);
            m.obj.push_back(obj);
            m.contact.push_back(touching);
        }
    }
    return m;
}

void check_containment(const ScenarioSpec& spec, const Motion& m) {
    int T = spec.total_frames();
    int w = spec.width, h = spec.height;
    for (int t = 0; t < T; ++t) {
        const Vec2& hc = m.hand[t];
        double r = spec.hand_radius;
        if (hc.x - r < 0 || hc.x + r > w || hc.y - r < 0 || hc.y + r > h)
            throw ConfigError("hand leaves the canvas at frame " + std::to_string(t));
        Box b = box_at(m.obj[t], spec.object_size);
        if (!b.valid_in(w, h))
            throw ConfigError("object leaves the canvas at frame " + std::to_string(t));
        for (std::size_t d = 0; d < spec.distractors.size(); ++d) {
            const DistractorSpec& ds = spec.distractors[d];
            if (ds.kind != "object") continue;  // hand disks clip against the canvas
            Box db = box_at(ds.start + ds.vel * double(t), ds.size);
            if (!db.valid_in(w, h))
                throw ConfigError("distractor " + std::to_string(d) +
                                  " leaves the canvas at frame " + std::to_string(t));
        }
    }
}

struct TurbulencePlan {
    std::map<int, double> theta;  // frame -> phase offset
    double amp = 0.0;
    double wavelength = 8.0;

    bool active(int t) const { return theta.count(t) != 0; }
    Vec2 at(int t, double px, double py) const {
        double phi = theta.at(t) + kTau * (px + py) / wavelength;
        return {amp * std::cos(phi), amp * std::sin(phi)};
    }
};

TurbulencePlan plan_turbulence(const ScenarioSpec& spec, std::uint64_t seed) {
    TurbulencePlan plan;
    plan.amp = spec.turbulence.amp;
    plan.wavelength = spec.turbulence.wavelength;
    std::set<int> frames(spec.turbulence.frames.begin(), spec.turbulence.frames.end());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, kTau);
    for (int t : frames) plan.theta[t] = u(rng);
    return plan;
}

}  // namespace

int ScenarioSpec::total_frames() const {
    int n = 0;
    for (const PhaseSpec& p : phases) n += p.frames;
    return n;
}

void ScenarioSpec::validate() const {
    if (width < 16 || height < 16) throw ConfigError("canvas must be at least 16x16");
    if (!(fps > 0)) throw ConfigError("fps must be positive");
    if (!(hand_radius >= 1.0)) throw ConfigError("hand radius must be at least 1");
    if (!(object_size.x >= 2.0) || !(object_size.y >= 2.0))
        throw ConfigError("object size must be at least 2x2");
    if (phases.empty()) throw ConfigError("scenario has no phases");
    for (const PhaseSpec& p : phases) {
        if (!known_kind(p.kind)) throw ConfigError("unknown phase kind '" + p.kind + "'");
        if (p.frames < 1) throw ConfigError("phase frames must be at least 1");
        if (p.speed < 0 || p.obj_speed < 0) throw ConfigError("phase speed must be >= 0");
    }
    if (total_frames() < 2) throw ConfigError("scenario must span at least 2 frames");
    int T = total_frames();
    for (int t : turbulence.frames)
        if (t < 0 || t >= T) throw ConfigError("turbulence frame out of range");
    if (!turbulence.frames.empty()) {
        if (!(turbulence.amp > 0)) throw ConfigError("turbulence amp must be positive");
        if (!(turbulence.wavelength > 0)) throw ConfigError("turbulence wavelength must be positive");
    }
    if (noise.flow_sigma < 0) throw ConfigError("flow_sigma must be >= 0");
    if (noise.outlier_fraction < 0 || noise.outlier_fraction > 1)
        throw ConfigError("outlier_fraction must be in [0, 1]");
    for (const DistractorSpec& d : distractors) {
        if (d.kind != "hand" && d.kind != "object")
            throw ConfigError("unknown distractor kind '" + d.kind + "'");
        if (d.kind == "hand" && !(d.radius >= 1.0))
            throw ConfigError("distractor radius must be at least 1");
        if (d.kind == "object" && (!(d.size.x >= 2.0) || !(d.size.y >= 2.0)))
            throw ConfigError("distractor size must be at least 2x2");
    }
    (void)Camera(camera);  // validates the kind and invertibility
}

namespace {
nlohmann::json vec_json(const Vec2& v) { return nlohmann::json::array({v.x, v.y}); }
Vec2 vec_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("expected a 2-element array");
    return {j[0].get<double>(), j[1].get<double>()};
}
}  // namespace

void to_json(nlohmann::json& j, const ScenarioSpec& s) {
    j = nlohmann::json::object();
    j["name"] = s.name;
    j["width"] = s.width;
    j["height"] = s.height;
    j["fps"] = s.fps;
    j["hand_start"] = vec_json(s.hand_start);
    j["hand_radius"] = s.hand_radius;
    j["object_start"] = vec_json(s.object_start);
    j["object_size"] = vec_json(s.object_size);
    j["camera"] = {{"kind", s.camera.kind}};
    if (s.camera.kind == "pan") j["camera"]["vel"] = vec_json(s.camera.vel);
    if (s.camera.kind == "projective") j["camera"]["h"] = s.camera.h;
    auto phases = nlohmann::json::array();
    for (const PhaseSpec& p : s.phases) {
        nlohmann::json pj{{"kind", p.kind}, {"frames", p.frames}};
        if (p.speed != 0) pj["speed"] = p.speed;
        if (p.dir) pj["dir"] = vec_json(*p.dir);
        if (p.obj_speed != 0) pj["obj_speed"] = p.obj_speed;
        if (p.obj_dir) pj["obj_dir"] = vec_json(*p.obj_dir);
        phases.push_back(std::move(pj));
    }
    j["phases"] = std::move(phases);
    if (!s.distractors.empty()) {
        auto arr = nlohmann::json::array();
        for (const DistractorSpec& d : s.distractors) {
            nlohmann::json dj{{"kind", d.kind}, {"start", vec_json(d.start)},
                              {"vel", vec_json(d.vel)}};
            if (d.kind == "hand") dj["radius"] = d.radius;
            if (d.kind == "object") dj["size"] = vec_json(d.size);
            arr.push_back(std::move(dj));
        }
        j["distractors"] = std::move(arr);
    }
    if (!s.turbulence.frames.empty())
        j["turbulence"] = {{"frames", s.turbulence.frames},
                           {"amp", s.turbulence.amp},
                           {"wavelength", s.turbulence.wavelength}};
    if (s.noise.flow_sigma != 0 || s.noise.outlier_fraction != 0)
        j["noise"] = {{"flow_sigma", s.noise.flow_sigma},
                      {"outlier_fraction", s.noise.outlier_fraction}};
}

void from_json(const nlohmann::json& j, ScenarioSpec& s) {
    s = ScenarioSpec{};
    s.name = j.value("name", s.name);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.fps = j.value("fps", s.fps);
    if (j.contains("hand_start")) s.hand_start = vec_from(j.at("hand_start"));
    s.hand_radius = j.value("hand_radius", s.hand_radius);
    if (j.contains("object_start")) s.object_start = vec_from(j.at("object_start"));
    if (j.contains("object_size")) s.object_size = vec_from(j.at("object_size"));
    if (j.contains("camera")) {
        const auto& c = j.at("camera");
        s.camera.kind = c.value("kind", "static");
        if (c.contains("vel")) s.camera.vel = vec_from(c.at("vel"));
        if (c.contains("h")) {
            auto arr = c.at("h");
            if (!arr.is_array() || arr.size() != 9)
                throw ConfigError("camera.h must have 9 entries");
            for (int i = 0; i < 9; ++i) s.camera.h[i] = arr[i].get<double>();
        }
    }
    if (j.contains("phases")) {
        s.phases.clear();
        for (const auto& pj : j.at("phases")) {
            PhaseSpec p;
            p.kind = pj.value("kind", p.kind);
            p.frames = pj.value("frames", p.frames);
            p.speed = pj.value("speed", p.speed);
            if (pj.contains("dir")) p.dir = vec_from(pj.at("dir"));
            p.obj_speed = pj.value("obj_speed", p.obj_speed);
            if (pj.contains("obj_dir")) p.obj_dir = vec_from(pj.at("obj_dir"));
            s.phases.push_back(std::move(p));
        }
    }
    if (j.contains("distractors")) {
        for (const auto& dj : j.at("distractors")) {
            DistractorSpec d;
            d.kind = dj.value("kind", d.kind);
            if (dj.contains("start")) d.start = vec_from(dj.at("start"));
            d.radius = dj.value("radius", d.radius);
            if (dj.contains("size")) d.size = vec_from(dj.at("size"));
            if (dj.contains("vel")) d.vel = vec_from(dj.at("vel"));
            s.distractors.push_back(std::move(d));
        }
    }
    if (j.contains("turbulence")) {
        const auto& t = j.at("turbulence");
        s.turbulence.frames = t.value("frames", std::vector<int>{});
        s.turbulence.amp = t.value("amp", s.turbulence.amp);
        s.turbulence.wavelength = t.value("wavelength", s.turbulence.wavelength);
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        s.noise.flow_sigma = n.value("flow_sigma", s.noise.flow_sigma);
        s.noise.outlier_fraction = n.value("outlier_fraction", s.noise.outlier_fraction);
    }
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad scenario file " + path.string() + ": " + e.what());
    }
    ScenarioSpec s = j.get<ScenarioSpec>();
    s.validate();
    return s;
}

void save_scenario(const ScenarioSpec& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write scenario file " + path.string());
    nlohmann::json j = s;
    out << j.dump(2) << "\n";
}

SynthResult generate_track(const ScenarioSpec& spec, std::uint64_t seed, const std::string& id) {
    spec.validate();
    Camera cam(spec.camera);
    Motion motion = simulate(spec, cam);
    check_containment(spec, motion);

    std::uint64_t base = fnv1a_str(id, fnv1a(&seed, sizeof(seed)));
    TurbulencePlan turb = plan_turbulence(spec, base ^ 0x74757262ULL);
    std::mt19937_64 noise_rng(base ^ 0x6e6f6973ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> junk(-15.0, 15.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const double sigma = spec.noise.flow_sigma;
    const double outliers = spec.noise.outlier_fraction;

    const int T = spec.total_frames();
    const int w = spec.width, h = spec.height;

    Track track;
    track.id = id;
    track.width = w;
    track.height = h;
    track.fps = spec.fps;
    track.frames.resize(T);

    // sign=+1 paints frame t's forward flow (step t -> t+1); sign=-1 paints
    // its backward flow (step t -> t-1, turbulence-free).
    auto paint = [&](int t, int sign) {
        int step = sign > 0 ? t : t - 1;
        Vec2 vh = motion.hand_vel(step) * double(sign);
        Vec2 vo = motion.obj_vel(step) * double(sign);
        const Vec2& hc = motion.hand[t];
        Box ob = box_at(motion.obj[t], spec.object_size);
        FlowField field(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                Vec2 p{x + 0.5, y + 0.5};
                Vec2 f = sign > 0 ? (cam.identity ? Vec2{0, 0} : cam.flow(p))
                                  : (cam.identity ? Vec2{0, 0} : cam.flow_inv(p));
                bool foreground = false;
                for (const DistractorSpec& d : spec.distractors) {
                    Vec2 c = d.start + d.vel * double(t);
                    bool inside = d.kind == "hand" ? in_disk(x, y, c, d.radius)
                                                   : box_at(c, d.size).contains_pixel(x, y);
                    if (inside) {
                        f = d.vel * double(sign);
                        foreground = true;
                    }
                }
                if (ob.contains_pixel(x, y)) {
                    f = vo;
                    foreground = true;
                }
                if (in_disk(x, y, hc, spec.hand_radius)) {
                    f = vh;
                    foreground = true;
                }
                if (sign > 0 && turb.active(t)) f = f + turb.at(t, p.x, p.y);
                if (outliers > 0 && !foreground && coin(noise_rng) < outliers) {
                    f = {junk(noise_rng), junk(noise_rng)};
                } else if (sigma > 0) {
                    f.x += sigma * gauss(noise_rng);
                    f.y += sigma * gauss(noise_rng);
                }
                field.set(x, y, float(f.x), float(f.y));
            }
        }
        return field;
    };

    for (int t = 0; t < T; ++t) {
        Frame& fr = track.frames[t];
        fr.hand_mask = disk_mask(w, h, motion.hand[t], spec.hand_radius);
        if (fr.hand_mask.count() == 0)
            throw ConfigError("hand mask is empty at frame " + std::to_string(t));
        fr.object_box = box_at(motion.obj[t], spec.object_size);
        for (const DistractorSpec& d : spec.distractors) {
            Vec2 c = d.start + d.vel * double(t);
            if (d.kind == "hand")
                fr.other_hand_masks.push_back(disk_mask(w, h, c, d.radius));
            else
                fr.other_object_boxes.push_back(box_at(c, d.size));
        }
        fr.flow_fwd = paint(t, +1);
        if (t > 0) fr.flow_bwd = paint(t, -1);
    }

    SynthResult res;
    res.track = std::move(track);
    res.truth = LabelSeq(T);
    for (int t = 0; t < T; ++t)
        res.truth.states[t] = motion.contact[t] ? Label::Contact : Label::NoContact;
    validate_track(res.track);
    return res;
}

CorruptMode corrupt_mode_from_string(const std::string& name) {
    if (name == "uniform") return CorruptMode::UniformFlip;
    if (name == "boundary") return CorruptMode::BoundaryShift;
    if (name == "segment") return CorruptMode::SegmentFlip;
    throw ConfigError("unknown corruption mode '" + name + "'");
}

std::string corrupt_mode_name(CorruptMode mode) {
    switch (mode) {
        case CorruptMode::UniformFlip: return "uniform";
        case CorruptMode::BoundaryShift: return "boundary";
        case CorruptMode::SegmentFlip: return "segment";
    }
    throw ConfigError("unknown corruption mode");
}

LabelSeq corrupt_labels(const LabelSeq& labels, CorruptMode mode, double rate,
                        std::uint64_t seed) {
    if (rate < 0 || rate > 1) throw ConfigError("corruption rate must be in [0, 1]");
    const int n = int(labels.size());
    LabelSeq out = labels;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    if (mode == CorruptMode::UniformFlip) {
        for (int t = 0; t < n; ++t)
            if (out.states[t] != Label::Unlabeled && coin(rng) < rate)
                out.states[t] = flip(out.states[t]);
        return out;
    }

    if (mode == CorruptMode::SegmentFlip) {
        int t = 0;
        while (t < n) {
            if (out.states[t] == Label::Unlabeled) {
                ++t;
                continue;
            }
            int b = t;
            while (b + 1 < n && out.states[b + 1] == out.states[t]) ++b;
            if (coin(rng) < rate)
                for (int i = t; i <= b; ++i) out.states[i] = flip(out.states[i]);
            t = b + 1;
        }
        return out;
    }

    // BoundaryShift: slide every label transition by 1..6 frames, keeping the
    // transitions in their original order with at least one frame per segment.
    if (!labels.fully_labeled())
        throw ConfigError("boundary corruption needs a fully labeled sequence");
    std::vector<int> bounds;
    for (int t = 1; t < n; ++t)
        if (labels.states[t] != labels.states[t - 1]) bounds.push_back(t);
    if (bounds.empty()) return out;

    std::uniform_int_distribution<int> amount(1, 6);
    const int K = int(bounds.size());
    std::vector<int> moved(K);
    int prev = 0;
    for (int k = 0; k < K; ++k) {
        int shift = amount(rng) * (coin(rng) < 0.5 ? -1 : 1);
        int lo = prev + 1;
        int hi = n - (K - k);  // leave room for the boundaries still to come
        moved[k] = std::clamp(bounds[k] + shift, lo, hi);
        prev = moved[k];
    }
    int seg = 0;
    for (int t = 0; t < n; ++t) {
        while (seg < K && t >= moved[seg]) ++seg;
        out.states[t] = labels.states[seg == 0 ? 0 : bounds[seg - 1]];
    }
    return out;
}

FlowField planted_homography_field(int width, int height, const Eigen::Matrix3d& h,
                                   double noise_sigma, double outlier_fraction,
                                   std::uint64_t seed) {
    if (width < 1 || height < 1) throw ConfigError("field dimensions must be positive");
    if (noise_sigma < 0) throw ConfigError("noise_sigma must be >= 0");
    if (outlier_fraction < 0 || outlier_fraction > 1)
        throw ConfigError("outlier_fraction must be in [0, 1]");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> junk(-15.0, 15.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    FlowField field(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double px = x + 0.5, py = y + 0.5;
            Eigen::Vector3d q = h * Eigen::Vector3d(px, py, 1.0);
            if (std::abs(q.z()) < 1e-12)
                throw ConfigError("homography maps pixel to infinity");
            double fx = q.x() / q.z() - px;
            double fy = q.y() / q.z() - py;
            if (outlier_fraction > 0 && coin(rng) < outlier_fraction) {
                fx = junk(rng);
                fy = junk(rng);
            } else if (noise_sigma > 0) {
                fx += noise_sigma * gauss(rng);
                fy += noise_sigma * gauss(rng);
            }
            field.set(x, y, float(fx), float(fy));
        }
    }
    return field;
}

// ---------------------------------------------------------------------------
// Random scenario families

namespace {

double urand(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int irand(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

CameraSpec random_camera(std::mt19937_64& rng) {
    CameraSpec cam;
    double roll = urand(rng, 0, 1);
    if (roll < 0.5) return cam;
    if (roll < 0.85) {
        cam.kind = "pan";
        cam.vel = {urand(rng, -0.7, 0.7), urand(rng, -0.5, 0.5)};
        return cam;
    }
    cam.kind = "projective";
    double s = urand(rng, 0.5, 1.5);
    cam.h = {1.0 + 0.0015 * s, 0.0004 * s,  0.35 * s,
             -0.0003 * s,      1.0 + 0.0012 * s, 0.22 * s,
             4e-6 * s,         3e-6 * s,     1.0};
    return cam;
}

// Shared skeleton: idle, then an approach tuned to land the disk just barely
// (~1.2 px) inside the box face. A shallow stop keeps the post-release frame
// recognizable: the residual hand-in-box sliver stays below the lenient
// object-motion threshold, so the motionless-object rule can fire there.
struct GraspBase {
    ScenarioSpec spec;
    Vec2 grasp_dir;  // biased back toward the canvas middle
};

// Appends an approach covering exactly `travel` px at roughly the requested
// speed (the ceil'd step count would otherwise overshoot by up to one step).
void append_approach(ScenarioSpec& s, double travel, double speed) {
    int steps = std::max(1, int(std::ceil(travel / speed)));
    s.phases.push_back({"approach", steps, travel / steps});
}

GraspBase grasp_base(std::mt19937_64& rng) {
    GraspBase gb;
    ScenarioSpec& s = gb.spec;
    s.hand_radius = urand(rng, 7.0, 9.0);
    s.object_size = {urand(rng, 16.0, 22.0), urand(rng, 12.0, 16.0)};
    double hy = urand(rng, 40.0, 56.0);
    s.hand_start = {urand(rng, 26.0, 34.0), hy};
    s.object_start = {urand(rng, 70.0, 82.0), hy + urand(rng, -4.0, 4.0)};
    s.camera = random_camera(rng);

    s.phases.push_back({"idle", irand(rng, 1, 3)});

    double dist = (s.object_start - s.hand_start).norm();
    double reach = s.hand_radius + s.object_size.x / 2 - 1.2;
    append_approach(s, dist - reach, urand(rng, 2.6, 3.4));

    Vec2 mid{64.0 - s.object_start.x, 48.0 - s.object_start.y};
    double ang = std::atan2(mid.y, mid.x) + urand(rng, -0.6, 0.6);
    gb.grasp_dir = {std::cos(ang), std::sin(ang)};
    return gb;
}

void append_release_tail(ScenarioSpec& s, std::mt19937_64& rng, double speed) {
    PhaseSpec rel{"release", irand(rng, 3, 5), speed};
    s.phases.push_back(std::move(rel));
    s.phases.push_back({"idle", irand(rng, 1, 3)});
}

void maybe_add_distractors(ScenarioSpec& s, std::mt19937_64& rng, double prob) {
    if (urand(rng, 0, 1) >= prob) return;
    int n = irand(rng, 1, 2);
    for (int i = 0; i < n; ++i) {
        DistractorSpec d;
        bool top = urand(rng, 0, 1) < 0.5;
        double y = top ? urand(rng, 10.0, 20.0) : urand(rng, 76.0, 86.0);
        if (urand(rng, 0, 1) < 0.5) {
            d.kind = "hand";
            d.radius = urand(rng, 4.0, 6.0);
            d.start = {urand(rng, 20.0, 40.0), y};
            d.vel = {urand(rng, 0.5, 1.5), 0.0};
        } else {
            d.kind = "object";
            d.size = {urand(rng, 10.0, 14.0), urand(rng, 8.0, 10.0)};
            // keep the box inside the canvas over ~90 frames
            d.start = {urand(rng, 16.0, 24.0), y};
            d.vel = {urand(rng, 0.3, 0.9), 0.0};
        }
        s.distractors.push_back(std::move(d));
    }
}

ScenarioSpec family_clean_grasp(std::mt19937_64& rng) {
    GraspBase gb = grasp_base(rng);
    ScenarioSpec& s = gb.spec;
    s.name = "clean_grasp";
    PhaseSpec grasp{"grasp", irand(rng, 4, 8), urand(rng, 2.2, 2.9)};
    grasp.dir = gb.grasp_dir;
    s.phases.push_back(std::move(grasp));
    s.phases.push_back({"hold", irand(rng, 2, 5)});
    append_release_tail(s, rng, urand(rng, 2.6, 3.4));
    maybe_add_distractors(s, rng, 0.3);
    return s;
}

ScenarioSpec family_turbulent_grasp(std::mt19937_64& rng) {
    GraspBase gb = grasp_base(rng);
    ScenarioSpec& s = gb.spec;
    s.name = "turbulent_grasp";
    PhaseSpec grasp{"grasp", irand(rng, 3, 6), urand(rng, 2.2, 2.8)};
    grasp.dir = gb.grasp_dir;
    s.phases.push_back(std::move(grasp));
    int hold = irand(rng, 22, 34);
    s.phases.push_back({"hold", hold});
    int h0 = 0;
    for (std::size_t i = 0; i + 1 < s.phases.size(); ++i) h0 += s.phases[i].frames;
    int lead = irand(rng, 2, 4);
    int tail = irand(rng, 2, 3);
    for (int t = h0 + lead; t < h0 + hold - tail; ++t) s.turbulence.frames.push_back(t);
    // the quiet hold frames flanking the storm end up unlabeled or pick up a
    // neighboring run's label -- deliberate noise for the correction stage
    append_release_tail(s, rng, 4.0);
    maybe_add_distractors(s, rng, 0.3);
    return s;
}

ScenarioSpec family_creep_hover(std::mt19937_64& rng) {
    GraspBase gb = grasp_base(rng);
    ScenarioSpec& s = gb.spec;
    s.name = "creep_hover";
    // drift the last stretch into the box below every motion threshold: the
    // approach from grasp_base is cut short by the creep's travel
    PhaseSpec creep{"independent", irand(rng, 14, 20), 0.8};
    Vec2 toward = s.object_start - s.hand_start;
    creep.dir = unit(toward, "creep");
    creep.obj_speed = 0.0;
    double creep_travel = creep.speed * creep.frames;
    PhaseSpec& appr = s.phases.back();
    double travel = appr.speed * appr.frames - creep_travel;
    if (travel < 2.0) travel = 2.0;  // keep a token approach leg
    appr.frames = std::max(1, int(std::ceil(travel / 3.0)));
    appr.speed = travel / appr.frames;
    s.phases.push_back(std::move(creep));
    PhaseSpec grasp{"grasp", irand(rng, 4, 6), urand(rng, 2.2, 2.8)};
    grasp.dir = gb.grasp_dir;
    s.phases.push_back(std::move(grasp));
    s.phases.push_back({"hold", irand(rng, 2, 4)});
    append_release_tail(s, rng, urand(rng, 2.8, 3.4));
    return s;
}

ScenarioSpec family_slide(std::mt19937_64& rng) {
    ScenarioSpec s;
    s.name = "slide";
    s.hand_radius = urand(rng, 7.0, 9.0);
    s.object_size = {urand(rng, 16.0, 20.0), urand(rng, 12.0, 16.0)};
    double my = urand(rng, 40.0, 56.0);
    double mx = urand(rng, 56.0, 72.0);
    bool hover = urand(rng, 0, 1) < 0.7;
    double speed = 4.0;
    int frames = irand(rng, 12, 16);
    if (hover) {
        // box sweeps under a motionless hand
        s.hand_start = {mx, my};
        s.object_start = {mx - speed * frames / 2.0, my};
        PhaseSpec ph{"independent", frames, 0.0};
        ph.obj_speed = speed;
        ph.obj_dir = Vec2{1, 0};
        s.phases.push_back({"idle", irand(rng, 1, 3)});
        s.phases.push_back(std::move(ph));
    } else {
        // hand and box pass through each other head-on
        double hs = urand(rng, 2.3, 2.9);
        s.hand_start = {mx + hs * frames / 2.0, my};
        s.object_start = {mx - speed * frames / 2.0, my};
        PhaseSpec ph{"independent", frames, hs};
        ph.dir = Vec2{-1, 0};
        ph.obj_speed = speed;
        ph.obj_dir = Vec2{1, 0};
        s.phases.push_back({"idle", irand(rng, 1, 3)});
        s.phases.push_back(std::move(ph));
    }
    s.phases.push_back({"idle", irand(rng, 1, 3)});
    return s;
}

ScenarioSpec family_no_contact(std::mt19937_64& rng) {
    ScenarioSpec s;
    s.name = "no_contact";
    s.hand_radius = urand(rng, 7.0, 9.0);
    s.object_size = {urand(rng, 16.0, 20.0), urand(rng, 12.0, 16.0)};
    s.hand_start = {urand(rng, 20.0, 30.0), urand(rng, 24.0, 40.0)};
    s.object_start = {urand(rng, 92.0, 104.0), urand(rng, 60.0, 72.0)};
    s.camera = random_camera(rng);
    s.phases.push_back({"idle", irand(rng, 2, 4)});
    PhaseSpec wander{"independent", irand(rng, 5, 8), urand(rng, 1.5, 2.8)};
    wander.dir = Vec2{0, 1};
    wander.obj_speed = urand(rng, 1.2, 2.4);
    wander.obj_dir = Vec2{0, -1};
    s.phases.push_back(std::move(wander));
    s.phases.push_back({"idle", irand(rng, 2, 4)});
    if (urand(rng, 0, 1) < 0.5) {
        int T = s.total_frames();
        int a = irand(rng, 1, 2), b = irand(rng, 1, 2);
        for (int t = a; t < T - b; ++t) s.turbulence.frames.push_back(t);
    }
    return s;
}

}  // namespace

ScenarioSpec random_scenario(std::mt19937_64& rng, const FamilyWeights& weights,
                             const NoiseSpec& noise) {
    std::array<double, 5> w{weights.clean_grasp, weights.turbulent_grasp, weights.creep_hover,
                            weights.distractor_slide, weights.no_contact};
    double total = 0;
    for (double v : w) {
        if (v < 0) throw ConfigError("family weights must be >= 0");
        total += v;
    }
    if (!(total > 0)) throw ConfigError("family weights must not all be zero");

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < 64; ++attempt) {
        double roll = urand(rng, 0, total);
        int family = 0;
        double acc = 0;
        for (int i = 0; i < 5; ++i) {
            acc += w[i];
            if (roll < acc) {
                family = i;
                break;
            }
        }
        ScenarioSpec s;
        switch (family) {
            case 0: s = family_clean_grasp(rng); break;
            case 1: s = family_turbulent_grasp(rng); break;
            case 2: s = family_creep_hover(rng); break;
            case 3: s = family_slide(rng); break;
            default: s = family_no_contact(rng); break;
        }
        s.noise = noise;
        try {
            s.validate();
            Camera cam(s.camera);
            check_containment(s, simulate(s, cam));
            return s;
        } catch (const ConfigError& e) {
            last_error = e.what();
        }
    }
    throw ConfigError("could not draw an on-canvas scenario: " + last_error);
}

void CorpusConfig::validate() const {
    if (noisy < 0 || trusted < 0 || test < 0) throw ConfigError("split sizes must be >= 0");
    if (noisy + trusted + test < 1) throw ConfigError("corpus must contain at least one track");
    if (labels != "pseudo" && labels != "corrupt")
        throw ConfigError("labels must be 'pseudo' or 'corrupt'");
    if (corrupt_rate < 0 || corrupt_rate > 1) throw ConfigError("corrupt_rate must be in [0, 1]");
    if (noise.flow_sigma < 0) throw ConfigError("flow_sigma must be >= 0");
    if (noise.outlier_fraction < 0 || noise.outlier_fraction > 1)
        throw ConfigError("outlier_fraction must be in [0, 1]");
    pseudo.validate();
}

void to_json(nlohmann::json& j, const CorpusConfig& c) {
    j = nlohmann::json{{"noisy", c.noisy},
                       {"trusted", c.trusted},
                       {"test", c.test},
                       {"seed", c.seed},
                       {"labels", c.labels},
                       {"corrupt_mode", corrupt_mode_name(c.corrupt_mode)},
                       {"corrupt_rate", c.corrupt_rate},
                       {"weights",
                        {{"clean_grasp", c.weights.clean_grasp},
                         {"turbulent_grasp", c.weights.turbulent_grasp},
                         {"creep_hover", c.weights.creep_hover},
                         {"distractor_slide", c.weights.distractor_slide},
                         {"no_contact", c.weights.no_contact}}},
                       {"noise",
                        {{"flow_sigma", c.noise.flow_sigma},
                         {"outlier_fraction", c.noise.outlier_fraction}}},
                       {"pseudo", c.pseudo}};
}

void from_json(const nlohmann::json& j, CorpusConfig& c) {
    c.noisy = j.value("noisy", c.noisy);
    c.trusted = j.value("trusted", c.trusted);
    c.test = j.value("test", c.test);
    c.seed = j.value("seed", c.seed);
    c.labels = j.value("labels", c.labels);
    if (j.contains("corrupt_mode"))
        c.corrupt_mode = corrupt_mode_from_string(j.at("corrupt_mode").get<std::string>());
    c.corrupt_rate = j.value("corrupt_rate", c.corrupt_rate);
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        c.weights.clean_grasp = w.value("clean_grasp", c.weights.clean_grasp);
        c.weights.turbulent_grasp = w.value("turbulent_grasp", c.weights.turbulent_grasp);
        c.weights.creep_hover = w.value("creep_hover", c.weights.creep_hover);
        c.weights.distractor_slide = w.value("distractor_slide", c.weights.distractor_slide);
        c.weights.no_contact = w.value("no_contact", c.weights.no_contact);
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        c.noise.flow_sigma = n.value("flow_sigma", c.noise.flow_sigma);
        c.noise.outlier_fraction = n.value("outlier_fraction", c.noise.outlier_fraction);
    }
    if (j.contains("pseudo")) c.pseudo = j.at("pseudo").get<PseudoLabelConfig>();
}

CorpusStats generate_corpus(const CorpusConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    std::mt19937_64 rng(cfg.seed);

    // held-out splits stick to families whose tracks contain both classes
    FamilyWeights eval_weights = cfg.weights;
    eval_weights.distractor_slide = 0.0;
    eval_weights.no_contact = 0.0;
    if (eval_weights.clean_grasp + eval_weights.turbulent_grasp + eval_weights.creep_hover <= 0)
        eval_weights.clean_grasp = 1.0;

    CorpusStats stats;
    struct Split {
        const char* name;
        int count;
        bool eval;
    };
    for (const Split& split : {Split{"noisy", cfg.noisy, false}, Split{"trusted", cfg.trusted, true},
                               Split{"test", cfg.test, true}}) {
        std::filesystem::path split_dir = out_dir / split.name;
        std::filesystem::create_directories(split_dir);
        for (int i = 0; i < split.count; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%s_%03d", split.name, i);
            std::string id(buf);
            ScenarioSpec spec =
                random_scenario(rng, split.eval ? eval_weights : cfg.weights, cfg.noise);
            std::uint64_t tseed = cfg.seed ^ fnv1a_str(id);
            SynthResult gen = generate_track(spec, tseed, id);

            std::filesystem::path dir = split_dir / id;
            save_track(gen.track, dir, true);
            save_scenario(spec, dir / "scenario.json");
            save_labels(gen.truth, dir / "labels_gt.txt");

            LabelSeq noisy_labels;
            if (split.eval) {
                save_labels(gen.truth, dir / "labels.txt");
            } else if (cfg.labels == "pseudo") {
                noisy_labels = generate_pseudolabels(gen.track, cfg.pseudo).labels;
                save_labels(noisy_labels, dir / "labels.txt");
            } else {
                noisy_labels =
                    corrupt_labels(gen.truth, cfg.corrupt_mode, cfg.corrupt_rate, tseed ^ 0x6c6162);
                save_labels(noisy_labels, dir / "labels.txt");
            }

            if (!split.eval) {
                ++stats.tracks;
                stats.frames += gen.truth.size();
                for (std::size_t t = 0; t < gen.truth.size(); ++t) {
                    if (noisy_labels.states[t] == Label::Unlabeled) continue;
                    ++stats.labeled;
                    if (noisy_labels.states[t] == gen.truth.states[t]) ++stats.label_hits;
                }
            }
        }
    }

    nlohmann::json meta;
    meta["config"] = cfg;
    meta["noisy_stats"] = {{"tracks", stats.tracks},
                           {"frames", stats.frames},
                           {"labeled", stats.labeled},
                           {"label_hits", stats.label_hits},
                           {"coverage", stats.coverage()},
                           {"label_accuracy", stats.label_accuracy()}};
    std::ofstream out(out_dir / "corpus.json");
    out << meta.dump(2) << "\n";
    return stats;
}

}  // namespace contactseq
