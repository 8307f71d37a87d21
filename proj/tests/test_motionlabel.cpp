#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "contactseq/motion.hpp"
#include "contactseq/pseudolabel.hpp"

using namespace contactseq;

namespace {

Frame stats_frame() {
    Frame f;
    f.hand_mask = Mask(16, 12);
    for (int y = 2; y <= 3; ++y)
        for (int x = 2; x <= 3; ++x) f.hand_mask.set(x, y, 1);
    f.object_box = Box{8, 2, 12, 6};  // 16 pixel centers
    return f;
}

VecField zero_field() { return VecField(16, 12); }

void fill_box(VecField& v, const Box& b, double dx, double dy) {
    for (int y = 0; y < v.height; ++y)
        for (int x = 0; x < v.width; ++x)
            if (b.contains_pixel(x, y)) v.set(x, y, dx, dy);
}

}  // namespace

TEST_CASE("region stats: moving hand over a still object") {
    Frame f = stats_frame();
    Mask other(16, 12);
    other.set(14, 0, 1);
    f.other_hand_masks.push_back(other);
    f.other_object_boxes.push_back(Box{0, 8, 2, 10});

    VecField res = zero_field();
    fill_box(res, {2, 2, 4, 4}, 3.0, 0.0);  // hand pixels
    res.set(14, 0, 9.0, 9.0);               // other hand: not background
    res.set(0, 8, 9.0, 9.0);                // other box: not background
    res.set(6, 9, 0.0, 5.0);                // one genuinely moving bg pixel

    RegionStats s = region_stats(f, res, 2.0);
    CHECK(s.iou == 0.0);
    CHECK(s.hand_count == 4);
    CHECK(s.obj_count == 16);
    CHECK(s.bg_count == 16 * 12 - 4 - 16 - 1 - 4);
    CHECK(s.h_r == doctest::Approx(1.0));
    CHECK(s.o_r == doctest::Approx(0.0));
    CHECK(s.b_r == doctest::Approx(1.0 / s.bg_count));
    CHECK(s.mean_hand_speed == doctest::Approx(3.0));
    CHECK(s.mean_obj_speed == doctest::Approx(0.0));
    CHECK(s.mean_hand_vec.x == doctest::Approx(3.0));
    CHECK(!s.dir_defined);  // object mean vector is zero
}

TEST_CASE("region stats: direction similarity and sigma sensitivity") {
    Frame f = stats_frame();
    VecField res = zero_field();
    fill_box(res, {2, 2, 4, 4}, 3.0, 0.0);
    fill_box(res, f.object_box, 1.5, 0.0);

    RegionStats lax = region_stats(f, res, 1.0);
    CHECK(lax.o_r == doctest::Approx(1.0));
    CHECK(lax.dir_defined);
    CHECK(lax.dir_sim == doctest::Approx(1.0));
    CHECK(lax.mean_obj_speed == doctest::Approx(1.5));

    RegionStats strict = region_stats(f, res, 2.0);
    CHECK(strict.o_r == doctest::Approx(0.0));  // 1.5 px/frame is below sigma
    CHECK(strict.dir_defined);                  // but the mean vector is not zero

    fill_box(res, f.object_box, -2.0, 0.0);
    CHECK(region_stats(f, res, 1.0).dir_sim == doctest::Approx(-1.0));
    fill_box(res, f.object_box, 0.0, 2.0);
    CHECK(region_stats(f, res, 1.0).dir_sim == doctest::Approx(0.0));
}

TEST_CASE("region stats: overlap pixels count for both regions") {
    Frame f = stats_frame();
    f.object_box = Box{3, 3, 7, 7};
    VecField res = zero_field();
    fill_box(res, {2, 2, 4, 4}, 3.0, 0.0);

    RegionStats s = region_stats(f, res, 2.0);
    // mask 4 px, box 16 px, shared pixel (3,3).
    CHECK(s.iou == doctest::Approx(1.0 / 19.0));
    CHECK(s.obj_count == 16);
    CHECK(s.o_r == doctest::Approx(1.0 / 16.0));
    CHECK(s.mean_obj_vec.x == doctest::Approx(3.0 / 16.0));
}

TEST_CASE("region stats failure modes") {
    Frame f = stats_frame();
    f.hand_mask = Mask(16, 12);
    CHECK_THROWS_AS(region_stats(f, zero_field(), 2.0), GeometryError);

    Frame g = stats_frame();
    CHECK_THROWS_AS(region_stats(g, VecField(8, 8), 2.0), GeometryError);

    // Box covering no pixel centers: o_r stays 0, direction undefined.
    Frame h = stats_frame();
    h.object_box = Box{8.6f, 2.6f, 9.4f, 3.4f};
    VecField res = zero_field();
    fill_box(res, {2, 2, 4, 4}, 3.0, 0.0);
    RegionStats s = region_stats(h, res, 2.0);
    CHECK(s.obj_count == 0);
    CHECK(s.o_r == 0.0);
    CHECK(!s.dir_defined);
}

namespace {

RegionStats mk(double iou, double hr, double orr, double br, bool dird, double sim) {
    RegionStats s;
    s.iou = iou;
    s.h_r = hr;
    s.o_r = orr;
    s.b_r = br;
    s.dir_defined = dird;
    s.dir_sim = sim;
    return s;
}

}  // namespace

TEST_CASE("frame rule truth table") {
    PseudoLabelConfig cfg;
    bool cancelled = true;

    SUBCASE("no overlap is always no-contact") {
        RegionStats sc = mk(0.0, 0.9, 0.5, 0.1, true, 0.9);
        CHECK(assign_frame_label(sc, sc, cfg, &cancelled) == Label::NoContact);
        CHECK(!cancelled);
    }
    SUBCASE("joint motion means contact") {
        RegionStats sc = mk(0.3, 0.9, 0.5, 0.1, true, 0.8);
        RegionStats sn = mk(0.3, 0.9, 0.6, 0.1, true, 0.8);  // o_r too high for still
        CHECK(assign_frame_label(sc, sn, cfg, &cancelled) == Label::Contact);
        CHECK(!cancelled);
    }
    SUBCASE("contact gates sit exactly on their thresholds") {
        RegionStats sn = mk(0.3, 0.9, 0.6, 0.1, true, 0.8);
        CHECK(assign_frame_label(mk(0.3, 0.7, 0.5, 0.1, true, 0.8), sn, cfg) == Label::Contact);
        CHECK(assign_frame_label(mk(0.3, 0.69, 0.5, 0.1, true, 0.8), sn, cfg) == Label::Unlabeled);
        CHECK(assign_frame_label(mk(0.3, 0.9, 0.2, 0.1, true, 0.8), sn, cfg) == Label::Contact);
        CHECK(assign_frame_label(mk(0.3, 0.9, 0.19, 0.1, true, 0.8), sn, cfg) == Label::Unlabeled);
        CHECK(assign_frame_label(mk(0.3, 0.9, 0.5, 0.2, true, 0.8), sn, cfg) == Label::Unlabeled);
        CHECK(assign_frame_label(mk(0.3, 0.9, 0.5, 0.1, true, 0.5), sn, cfg) == Label::Unlabeled);
        CHECK(assign_frame_label(mk(0.3, 0.9, 0.5, 0.1, true, 0.51), sn, cfg) == Label::Contact);
        CHECK(assign_frame_label(mk(0.3, 0.9, 0.5, 0.1, false, 0.8), sn, cfg) == Label::Unlabeled);
    }
    SUBCASE("divergent motion means no contact") {
        RegionStats sc = mk(0.3, 0.9, 0.5, 0.1, true, -0.4);
        RegionStats sn = mk(0.3, 0.9, 0.6, 0.1, true, -0.4);
        CHECK(assign_frame_label(sc, sn, cfg, &cancelled) == Label::NoContact);
        // Similarity exactly at the bound is not divergent.
        RegionStats edge = mk(0.3, 0.9, 0.5, 0.1, true, 0.0);
        CHECK(assign_frame_label(edge, sn, cfg) == Label::Unlabeled);
    }
    SUBCASE("hand moving over a still object means no contact") {
        RegionStats sc = mk(0.3, 0.4, 0.0, 0.1, false, 0.0);  // contact cannot fire
        RegionStats sn = mk(0.3, 0.8, 0.03, 0.1, false, 0.0);
        CHECK(assign_frame_label(sc, sn, cfg, &cancelled) == Label::NoContact);
        CHECK(!cancelled);

        RegionStats sn_edge = mk(0.3, 0.8, 0.05, 0.1, false, 0.0);
        CHECK(assign_frame_label(sc, sn_edge, cfg) == Label::Unlabeled);
    }
    SUBCASE("colliding rules cancel out") {
        RegionStats sc = mk(0.3, 0.9, 0.5, 0.1, true, 0.9);
        RegionStats sn = mk(0.3, 0.8, 0.01, 0.05, true, 0.9);
        CHECK(assign_frame_label(sc, sn, cfg, &cancelled) == Label::Unlabeled);
        CHECK(cancelled);
    }
    SUBCASE("nothing firing leaves the frame unlabeled") {
        RegionStats sc = mk(0.3, 0.2, 0.0, 0.1, false, 0.0);
        RegionStats sn = mk(0.3, 0.3, 0.2, 0.1, false, 0.0);
        cancelled = true;
        CHECK(assign_frame_label(sc, sn, cfg, &cancelled) == Label::Unlabeled);
        CHECK(!cancelled);
    }
}

TEST_CASE("config validation and json round trip") {
    PseudoLabelConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.sigma_contact = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    PseudoLabelConfig out;
    out.hr_min = 0.55;
    out.ransac.seed = 99;
    out.ransac.max_samples = 640;
    nlohmann::json j = out;
    PseudoLabelConfig back = j.get<PseudoLabelConfig>();
    CHECK(back.hr_min == doctest::Approx(0.55));
    CHECK(back.ransac.seed == 99);
    CHECK(back.ransac.max_samples == 640);
    CHECK(back.sigma_contact == doctest::Approx(out.sigma_contact));
}

TEST_CASE("point seeding") {
    Mask m(10, 10);
    m.set(2, 2, 1);
    m.set(7, 2, 1);
    m.set(2, 8, 1);
    m.set(7, 8, 1);
    auto pts = seed_mask_points(m, 100);
    REQUIRE(pts.size() == 4);
    CHECK(pts[0].x == doctest::Approx(2.5));
    CHECK(pts[0].y == doctest::Approx(2.5));

    Mask blob(20, 20);
    for (auto& v : blob.data) v = 1;
    auto capped = seed_mask_points(blob, 100);
    CHECK(capped.size() == 100);  // stride-2 grid over a full raster
    CHECK(capped[0].x == doctest::Approx(1.5));
    CHECK(capped[0].y == doctest::Approx(1.5));

    // A one-row mask invisible to coarse grids falls back to a subsample.
    Mask thin(10, 10);
    for (int x = 0; x < 10; ++x) thin.set(x, 4, 1);
    auto fb = seed_mask_points(thin, 3);
    REQUIRE(fb.size() == 3);
    for (const Vec2& p : fb) CHECK(p.y == doctest::Approx(4.5));

    auto box_pts = seed_box_points({2, 3, 6, 7}, 10, 10, 100);
    CHECK(box_pts.size() == 16);
    for (const Vec2& p : box_pts) {
        CHECK(p.x > 2.0);
        CHECK(p.x < 6.0);
        CHECK(p.y > 3.0);
        CHECK(p.y < 7.0);
    }
}

namespace {

// T frames on a 32x24 canvas: a static hand block and an object box moving
// +obj_step px/frame in x, with exactly matching forward/backward flow.
Track ext_track(int T, double obj_step) {
    Track tr;
    tr.id = "ext";
    tr.width = 32;
    tr.height = 24;
    for (int t = 0; t < T; ++t) {
        Frame f;
        f.hand_mask = Mask(32, 24);
        for (int y = 10; y < 14; ++y)
            for (int x = 4; x < 8; ++x) f.hand_mask.set(x, y, 1);
        float ox = 20.0f + float(obj_step) * t;
        f.object_box = Box{ox, 10, ox + 4, 14};

        auto strip = [&](FlowField& fl, double step, double shift) {
            int x0 = std::max(0, int(16 + shift));
            int x1 = std::min(32, int(30 + shift));
            for (int y = 8; y < 16; ++y)
                for (int x = x0; x < x1; ++x) fl.set(x, y, step, 0.0);
        };
        f.flow_fwd = FlowField(32, 24);
        strip(f.flow_fwd, obj_step, obj_step * t);
        if (t > 0) {
            FlowField bwd(32, 24);
            strip(bwd, -obj_step, obj_step * t);
            f.flow_bwd = bwd;
        }
        tr.frames.push_back(std::move(f));
    }
    return tr;
}

LabelSeq seq(std::initializer_list<int> vals) {
    LabelSeq s;
    for (int v : vals) s.states.push_back(Label(v));
    return s;
}

}  // namespace

TEST_CASE("point advance follows flow and enforces the return check") {
    Track tr = ext_track(3, 2.0);
    std::vector<Vec2> pts{{21.5, 11.5}};
    std::vector<char> alive{1};

    advance_points(tr, 0, 1, pts, alive, 1.0);
    CHECK(alive[0] == 1);
    CHECK(pts[0].x == doctest::Approx(23.5));
    CHECK(pts[0].y == doctest::Approx(11.5));

    advance_points(tr, 1, -1, pts, alive, 1.0);
    CHECK(alive[0] == 1);
    CHECK(pts[0].x == doctest::Approx(21.5));

    // A mismatched return flow beyond the tolerance kills the point.
    Track bad = ext_track(3, 2.0);
    for (int y = 8; y < 16; ++y)
        for (int x = 0; x < 32; ++x) bad.frames[1].flow_bwd->set(x, y, -0.5, 0.0);
    std::vector<Vec2> p2{{21.5, 11.5}};
    std::vector<char> a2{1};
    advance_points(bad, 0, 1, p2, a2, 1.0);
    CHECK(a2[0] == 0);

    // Exactly at the tolerance the point survives.
    Track edge = ext_track(3, 2.0);
    for (int y = 8; y < 16; ++y)
        for (int x = 0; x < 32; ++x) edge.frames[1].flow_bwd->set(x, y, -1.0, 0.0);
    std::vector<Vec2> p3{{21.5, 11.5}};
    std::vector<char> a3{1};
    advance_points(edge, 0, 1, p3, a3, 1.0);
    CHECK(a3[0] == 1);

    // Leaving the canvas kills the point.
    std::vector<Vec2> p4{{31.5, 11.5}};
    std::vector<char> a4{1};
    Track wide = ext_track(2, 2.0);
    wide.frames[0].flow_fwd.set(31, 11, 2.0, 0.0);
    advance_points(wide, 0, 1, p4, a4, 1.0);
    CHECK(a4[0] == 0);

    std::vector<Vec2> p5{{5.5, 11.5}};
    std::vector<char> a5{1};
    CHECK_THROWS_AS(advance_points(tr, 0, 0, p5, a5, 1.0), GeometryError);
    CHECK_THROWS_AS(advance_points(tr, 2, 1, p5, a5, 1.0), GeometryError);
    CHECK_THROWS_AS(advance_points(tr, 0, -1, p5, a5, 1.0), GeometryError);
}

TEST_CASE("mean pair distance") {
    std::vector<Vec2> hand{{0, 0}};
    std::vector<char> ha{1};
    std::vector<Vec2> obj{{3, 4}, {0, 5}, {100, 100}};
    std::vector<char> oa{1, 1, 0};
    auto d = mean_pair_distance(hand, ha, obj, oa);
    REQUIRE(d.has_value());
    CHECK(*d == doctest::Approx(5.0));

    std::vector<char> none{0, 0, 0};
    CHECK(!mean_pair_distance(hand, ha, obj, none).has_value());
}

TEST_CASE("extension fills a static gap from the left source first") {
    Track tr = ext_track(5, 0.0);
    LabelSeq labels = seq({1, -1, -1, -1, 0});
    PseudoLabelConfig cfg;
    int added = extend_labels(tr, labels, cfg);
    CHECK(added == 3);
    CHECK(labels == seq({1, 1, 1, 1, 0}));
}

TEST_CASE("extension stops when the pair distance leaves the band") {
    // The object recedes 2 px/frame; the 15% band (~2.4 px around 16, ~3.6
    // around 24) admits exactly one step from either side.
    Track tr = ext_track(5, 2.0);
    LabelSeq labels = seq({1, -1, -1, -1, 0});
    PseudoLabelConfig cfg;
    int added = extend_labels(tr, labels, cfg);
    CHECK(added == 2);
    CHECK(labels == seq({1, 1, -1, 0, 0}));
}

TEST_CASE("extension without a left source fills backward only") {
    Track tr = ext_track(3, 0.0);
    LabelSeq labels = seq({-1, -1, 0});
    PseudoLabelConfig cfg;
    CHECK(extend_labels(tr, labels, cfg) == 2);
    CHECK(labels == seq({0, 0, 0}));
}

TEST_CASE("extension stops where trajectories die") {
    Track tr = ext_track(5, 0.0);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x) tr.frames[3].flow_bwd->set(x, y, 5.0, 5.0);
    LabelSeq labels = seq({1, -1, -1, -1, -1});
    PseudoLabelConfig cfg;
    CHECK(extend_labels(tr, labels, cfg) == 2);
    CHECK(labels == seq({1, 1, 1, -1, -1}));
}

TEST_CASE("a one-frame gap next to the track end fills from the right") {
    Track tr = ext_track(2, 0.0);
    LabelSeq labels = seq({-1, 0});
    PseudoLabelConfig cfg;
    CHECK(extend_labels(tr, labels, cfg) == 1);
    CHECK(labels == seq({0, 0}));

    Track tr2 = ext_track(2, 0.0);
    LabelSeq tail = seq({1, -1});
    CHECK(extend_labels(tr2, tail, cfg) == 1);
    CHECK(tail == seq({1, 1}));
}

TEST_CASE("extension leaves assigned frames alone") {
    Track tr = ext_track(4, 0.0);
    LabelSeq labels = seq({1, 0, -1, 0});
    PseudoLabelConfig cfg;
    extend_labels(tr, labels, cfg);
    CHECK(labels[0] == Label::Contact);
    CHECK(labels[1] == Label::NoContact);
    CHECK(labels[3] == Label::NoContact);
    CHECK(labels[2] == Label::NoContact);  // filled from its own run sources
}
