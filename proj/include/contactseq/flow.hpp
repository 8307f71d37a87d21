#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace contactseq {

struct Vec2 {
    double x = 0, y = 0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
};

// Dense 2-vector field, row-major, float32 storage (the on-disk precision).
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // 2 floats per pixel: dx, dy

    FlowField() = default;
    FlowField(int w, int h) : width(w), height(h), data(std::size_t(w) * h * 2, 0.f) {}

    Vec2 at(int x, int y) const {
        std::size_t i = (std::size_t(y) * width + x) * 2;
        return {double(data[i]), double(data[i + 1])};
    }
    void set(int x, int y, double dx, double dy) {
        std::size_t i = (std::size_t(y) * width + x) * 2;
        data[i] = float(dx);
        data[i + 1] = float(dy);
    }
    // Whether a continuous position lies inside the image rectangle.
    bool in_bounds(double x, double y) const {
        return x >= 0.0 && y >= 0.0 && x <= double(width) && y <= double(height);
    }

    // Bilinear sample at a continuous position. The value of pixel (i, j)
    // sits at its center (i + 0.5, j + 0.5); samples clamp to the border.
    Vec2 sample(double x, double y) const {
        double cx = std::min(std::max(x - 0.5, 0.0), double(width - 1));
        double cy = std::min(std::max(y - 0.5, 0.0), double(height - 1));
        int x0 = int(cx), y0 = int(cy);
        int x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
        double fx = cx - x0, fy = cy - y0;
        Vec2 a = at(x0, y0), b = at(x1, y0), c = at(x0, y1), d = at(x1, y1);
        return {(a.x * (1 - fx) + b.x * fx) * (1 - fy) + (c.x * (1 - fx) + d.x * fx) * fy,
                (a.y * (1 - fx) + b.y * fx) * (1 - fy) + (c.y * (1 - fx) + d.y * fx) * fy};
    }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
    bool operator==(const FlowField& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

// Double-precision 2-vector field for compensated-flow residuals.
struct VecField {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    VecField() = default;
    VecField(int w, int h) : width(w), height(h), data(std::size_t(w) * h * 2, 0.0) {}

    Vec2 at(int x, int y) const {
        std::size_t i = (std::size_t(y) * width + x) * 2;
        return {data[i], data[i + 1]};
    }
    void set(int x, int y, double dx, double dy) {
        std::size_t i = (std::size_t(y) * width + x) * 2;
        data[i] = dx;
        data[i + 1] = dy;
    }
    double magnitude(int x, int y) const {
        Vec2 v = at(x, y);
        return std::hypot(v.x, v.y);
    }
};

}  // namespace contactseq
