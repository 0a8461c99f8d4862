#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mitoscan {

/// Grayscale raster, row-major, stored at its native bit depth (8 or 16).
/// Downstream math converts to floating point on demand.
struct GrayImage {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    std::vector<uint16_t> pixels;  // row-major, every value < 2^bit_depth

    GrayImage() = default;
    GrayImage(int w, int h, int depth = 8, uint16_t fill = 0)
        : width(w), height(h), bit_depth(depth),
          pixels(static_cast<size_t>(w) * h, fill) {}

    uint16_t at(int x, int y) const { return pixels[idx(x, y)]; }
    uint16_t& at(int x, int y) { return pixels[idx(x, y)]; }
    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    bool in_bounds(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height;
    }
    int max_value() const { return (1 << bit_depth) - 1; }
    size_t size() const { return pixels.size(); }

    // Throws DimensionMismatchError / Error on invariant violations.
    void validate() const;
};

/// Row-major boolean raster sharing GrayImage geometry.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;  // 0 or 1

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h),
          bits(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

    bool at(int x, int y) const { return bits[idx(x, y)] != 0; }
    void set(int x, int y, bool v) { bits[idx(x, y)] = v ? 1 : 0; }
    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    bool in_bounds(int x, int y) const {
        return x >= 0 && y >= 0 && x < width && y < height;
    }
    size_t count() const;
};

/// Axis-aligned pixel rectangle, inclusive bounds.
struct Window {
    int x0 = 0;
    int y0 = 0;
    int x1 = -1;
    int y1 = -1;

    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    long pixel_count() const { return static_cast<long>(width()) * height(); }
    bool empty() const { return x1 < x0 || y1 < y0; }
    Window clipped_to(int image_width, int image_height) const;
    Window expanded(int margin) const {
        return {x0 - margin, y0 - margin, x1 + margin, y1 + margin};
    }
};

}  // namespace mitoscan
