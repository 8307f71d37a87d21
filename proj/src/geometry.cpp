#include "contactseq/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace contactseq {

std::optional<Box> mask_bounding_box(const Mask& m) {
    int minx = m.width, miny = m.height, maxx = -1, maxy = -1;
    for (int y = 0; y < m.height; y++) {
        const std::uint8_t* row = m.data.data() + std::size_t(y) * m.width;
        for (int x = 0; x < m.width; x++) {
            if (!row[x]) continue;
            minx = std::min(minx, x);
            miny = std::min(miny, y);
            maxx = std::max(maxx, x);
            maxy = std::max(maxy, y);
        }
    }
    if (maxx < 0) return std::nullopt;
    // Cover the full extent of the set pixels.
    return Box{float(minx), float(miny), float(maxx + 1), float(maxy + 1)};
}

double box_iou(const Box& a, const Box& b) {
    double ix0 = std::max(a.x0, b.x0), iy0 = std::max(a.y0, b.y0);
    double ix1 = std::min(a.x1, b.x1), iy1 = std::min(a.y1, b.y1);
    double iw = std::max(0.0, ix1 - ix0), ih = std::max(0.0, iy1 - iy0);
    double inter = iw * ih;
    double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

double mask_box_iou(const Mask& m, const Box& b) {
    // Restrict the scan to the union of the mask bbox and the box extent.
    std::size_t inter = 0, mask_n = 0, box_n = 0;
    for (int y = 0; y < m.height; y++) {
        const std::uint8_t* row = m.data.data() + std::size_t(y) * m.width;
        for (int x = 0; x < m.width; x++) {
            bool in_mask = row[x] != 0;
            bool in_box = b.contains_pixel(x, y);
            mask_n += in_mask;
            box_n += in_box;
            inter += (in_mask && in_box);
        }
    }
    std::size_t uni = mask_n + box_n - inter;
    if (uni == 0) return 0.0;
    return double(inter) / double(uni);
}

bool masks_overlap(const Mask& a, const Mask& b) {
    std::size_t n = std::min(a.data.size(), b.data.size());
    for (std::size_t i = 0; i < n; i++)
        if (a.data[i] && b.data[i]) return true;
    return false;
}

bool mask_overlaps_box(const Mask& m, const Box& b) {
    int x0 = std::max(0, int(std::floor(b.x0 - 0.5)));
    int y0 = std::max(0, int(std::floor(b.y0 - 0.5)));
    int x1 = std::min(m.width, int(std::ceil(b.x1)));
    int y1 = std::min(m.height, int(std::ceil(b.y1)));
    for (int y = y0; y < y1; y++)
        for (int x = x0; x < x1; x++)
            if (m.at(x, y) && b.contains_pixel(x, y)) return true;
    return false;
}

bool boxes_overlap(const Box& a, const Box& b) {
    return std::max(a.x0, b.x0) < std::min(a.x1, b.x1) &&
           std::max(a.y0, b.y0) < std::min(a.y1, b.y1);
}

std::optional<Point2d> mask_centroid(const Mask& m) {
    double sx = 0, sy = 0;
    std::size_t n = 0;
    for (int y = 0; y < m.height; y++) {
        const std::uint8_t* row = m.data.data() + std::size_t(y) * m.width;
        for (int x = 0; x < m.width; x++) {
            if (!row[x]) continue;
            sx += x + 0.5;
            sy += y + 0.5;
            n++;
        }
    }
    if (n == 0) return std::nullopt;
    return Point2d{sx / double(n), sy / double(n)};
}

std::vector<std::uint32_t> rle_encode(const Mask& m) {
    std::vector<std::uint32_t> runs;
    std::uint8_t expect = 0;
    std::uint32_t run = 0;
    for (std::uint8_t v : m.data) {
        std::uint8_t bit = v ? 1 : 0;
        if (bit == expect) {
            run++;
        } else {
            runs.push_back(run);
            expect = bit;
            run = 1;
        }
    }
    runs.push_back(run);
    return runs;
}

Mask rle_decode(const std::vector<std::uint32_t>& runs, int width, int height) {
    Mask m(width, height);
    std::size_t total = std::size_t(width) * height;
    std::size_t pos = 0;
    std::uint8_t bit = 0;
    for (std::uint32_t run : runs) {
        if (pos + run > total) throw GeometryError("RLE runs exceed raster size");
        std::fill(m.data.begin() + pos, m.data.begin() + pos + run, bit);
        pos += run;
        bit ^= 1;
    }
    if (pos != total) throw GeometryError("RLE runs do not cover raster");
    return m;
}

}  // namespace contactseq
