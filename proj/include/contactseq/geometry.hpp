#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "contactseq/common.hpp"

namespace contactseq {

// Axis-aligned box in float pixel coordinates, corners (x0,y0) top-left
// inclusive, (x1,y1) bottom-right exclusive for raster purposes.
struct Box {
    float x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    float width() const { return x1 - x0; }
    float height() const { return y1 - y0; }
    double area() const { return double(width()) * double(height()); }
    double cx() const { return 0.5 * (double(x0) + double(x1)); }
    double cy() const { return 0.5 * (double(y0) + double(y1)); }

    bool valid_in(int image_w, int image_h) const {
        return x0 <= x1 && y0 <= y1 && x0 >= 0 && y0 >= 0 && x1 <= float(image_w) &&
               y1 <= float(image_h);
    }
    // Pixel (x,y) belongs to the box when its center falls inside.
    bool contains_pixel(int x, int y) const {
        double cx = x + 0.5, cy = y + 0.5;
        return cx >= x0 && cx < x1 && cy >= y0 && cy < y1;
    }
    bool operator==(const Box& o) const {
        return x0 == o.x0 && y0 == o.y0 && x1 == o.x1 && y1 == o.y1;
    }
};

// Dense binary raster, row-major.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // 0 or 1, size width*height

    Mask() = default;
    Mask(int w, int h) : width(w), height(h), data(std::size_t(w) * h, 0) {}

    std::uint8_t at(int x, int y) const { return data[std::size_t(y) * width + x]; }
    void set(int x, int y, std::uint8_t v) { data[std::size_t(y) * width + x] = v; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data) n += (v != 0);
        return n;
    }
    bool empty_mask() const { return count() == 0; }
    bool operator==(const Mask& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

// Tight bounding box of the set pixels; nullopt when the mask is empty.
std::optional<Box> mask_bounding_box(const Mask& m);

// Intersection-over-union between two boxes.
double box_iou(const Box& a, const Box& b);

// Raster IoU between the mask's set pixels and the box interior
// (pixel-center membership). Symmetric in the two pixel sets.
double mask_box_iou(const Mask& m, const Box& b);

bool masks_overlap(const Mask& a, const Mask& b);
bool mask_overlaps_box(const Mask& m, const Box& b);
bool boxes_overlap(const Box& a, const Box& b);

// Centroid of set pixels (pixel centers); nullopt for an empty mask.
struct Point2d {
    double x = 0, y = 0;
};
std::optional<Point2d> mask_centroid(const Mask& m);

// Row-major run-length encoding. Runs alternate zero-run, one-run, ...,
// starting with the count of leading zeros (possibly 0). Runs sum to w*h.
std::vector<std::uint32_t> rle_encode(const Mask& m);
Mask rle_decode(const std::vector<std::uint32_t>& runs, int width, int height);

}  // namespace contactseq
