#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "contactseq/geometry.hpp"

using namespace contactseq;

TEST_CASE("box accessors") {
    Box b{2, 3, 10, 8};
    CHECK(b.width() == 8.0f);
    CHECK(b.height() == 5.0f);
    CHECK(b.area() == 40.0);
    CHECK(b.cx() == 6.0);
    CHECK(b.cy() == 5.5);
}

TEST_CASE("box pixel membership uses pixel centers, half-open") {
    Box b{2, 3, 10, 8};
    CHECK(b.contains_pixel(2, 3));   // center (2.5, 3.5)
    CHECK(!b.contains_pixel(1, 3));  // center x 1.5 < 2
    CHECK(b.contains_pixel(9, 7));   // center (9.5, 7.5)
    CHECK(!b.contains_pixel(10, 7)); // center x 10.5 >= 10
    CHECK(!b.contains_pixel(9, 8));  // center y 8.5 >= 8

    Box f{2.5f, 3.0f, 4.5f, 5.0f};
    CHECK(f.contains_pixel(2, 3));   // center x 2.5 is inclusive at x0
    CHECK(!f.contains_pixel(4, 3));  // center x 4.5 excluded at x1
}

TEST_CASE("box validity in a canvas") {
    CHECK(Box{0, 0, 5, 5}.valid_in(5, 5));
    CHECK(!Box{0, 0, 5.5f, 5}.valid_in(5, 5));
    CHECK(!Box{-0.5f, 0, 4, 4}.valid_in(5, 5));
    CHECK(!Box{3, 3, 2, 4}.valid_in(5, 5));  // inverted
    CHECK(Box{1, 1, 1, 3}.valid_in(5, 5));   // zero width is allowed
}

TEST_CASE("box iou") {
    CHECK(box_iou({0, 0, 4, 4}, {2, 0, 6, 4}) == doctest::Approx(8.0 / 24.0));
    CHECK(box_iou({0, 0, 2, 2}, {3, 3, 5, 5}) == 0.0);
    CHECK(box_iou({0, 0, 4, 4}, {0, 0, 4, 4}) == 1.0);
    CHECK(box_iou({0, 0, 2, 2}, {2, 0, 4, 2}) == 0.0);  // edge contact only
    CHECK(box_iou({1, 1, 1, 3}, {1, 1, 1, 3}) == 0.0);  // degenerate area
}

TEST_CASE("boxes_overlap needs interior overlap") {
    CHECK(boxes_overlap({0, 0, 4, 4}, {3, 3, 6, 6}));
    CHECK(!boxes_overlap({0, 0, 2, 2}, {2, 0, 4, 2}));
    CHECK(!boxes_overlap({0, 0, 2, 2}, {5, 5, 6, 6}));
}

namespace {

Mask make_mask(int w, int h, std::initializer_list<std::pair<int, int>> px) {
    Mask m(w, h);
    for (auto [x, y] : px) m.set(x, y, 1);
    return m;
}

}  // namespace

TEST_CASE("mask bounding box and centroid") {
    Mask m = make_mask(6, 5, {{1, 1}, {2, 1}, {1, 2}, {4, 3}});
    CHECK(m.count() == 4);

    auto bb = mask_bounding_box(m);
    REQUIRE(bb.has_value());
    CHECK(*bb == Box{1, 1, 5, 4});

    auto c = mask_centroid(m);
    REQUIRE(c.has_value());
    CHECK(c->x == doctest::Approx(2.5));
    CHECK(c->y == doctest::Approx(2.25));

    Mask empty(6, 5);
    CHECK(!mask_bounding_box(empty).has_value());
    CHECK(!mask_centroid(empty).has_value());
    CHECK(empty.empty_mask());
}

TEST_CASE("mask vs box iou counts pixel centers") {
    Mask m = make_mask(4, 4, {{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    // Box covers centers of (1,0),(2,0),(1,1),(2,1); intersection is 2 pixels.
    CHECK(mask_box_iou(m, {1, 0, 3, 2}) == doctest::Approx(2.0 / 6.0));
    // Box covering no pixel center.
    CHECK(mask_box_iou(m, {1.6f, 1.6f, 2.4f, 2.4f}) == 0.0);
    CHECK(mask_box_iou(Mask(4, 4), {0, 0, 2, 2}) == 0.0);
}

TEST_CASE("overlap predicates") {
    Mask a = make_mask(4, 4, {{1, 1}, {2, 2}});
    Mask b = make_mask(4, 4, {{2, 2}});
    Mask c = make_mask(4, 4, {{3, 0}});
    CHECK(masks_overlap(a, b));
    CHECK(!masks_overlap(a, c));

    CHECK(mask_overlaps_box(b, {2, 2, 3, 3}));
    CHECK(!mask_overlaps_box(b, {3, 2, 4, 3}));
}

TEST_CASE("rle encode known rasters") {
    // Row-major bits 0,0,1,1,1,0,0,0 on a 4x2 raster.
    Mask m = make_mask(4, 2, {{2, 0}, {3, 0}, {0, 1}});
    CHECK(rle_encode(m) == std::vector<std::uint32_t>{2, 3, 3});

    Mask lead = make_mask(4, 2, {{0, 0}});
    CHECK(rle_encode(lead) == std::vector<std::uint32_t>{0, 1, 7});

    CHECK(rle_encode(Mask(4, 2)) == std::vector<std::uint32_t>{8});

    Mask full(2, 2);
    for (auto& v : full.data) v = 1;
    CHECK(rle_encode(full) == std::vector<std::uint32_t>{0, 4});
}

TEST_CASE("rle roundtrip on random masks") {
    std::mt19937_64 rng(7);
    for (int it = 0; it < 50; ++it) {
        int w = 1 + int(rng() % 17), h = 1 + int(rng() % 13);
        Mask m(w, h);
        for (auto& v : m.data) v = (rng() % 3 == 0) ? 1 : 0;
        auto runs = rle_encode(m);
        std::uint64_t sum = 0;
        for (auto r : runs) sum += r;
        CHECK(sum == std::uint64_t(w) * std::uint64_t(h));
        CHECK(rle_decode(runs, w, h) == m);
    }
}

TEST_CASE("rle decode rejects malformed runs") {
    CHECK_THROWS_AS(rle_decode({9}, 4, 2), GeometryError);
    CHECK_THROWS_AS(rle_decode({3}, 4, 2), GeometryError);
    CHECK_THROWS_AS(rle_decode({4, 5}, 4, 2), GeometryError);
}
