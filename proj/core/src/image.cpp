#include "mitoscan/image.hpp"

#include <algorithm>
#include <numeric>

#include "mitoscan/errors.hpp"

namespace mitoscan {

void GrayImage::validate() const {
    if (width <= 0 || height <= 0)
        throw DimensionMismatchError("image has non-positive dimensions");
    if (bit_depth != 8 && bit_depth != 16)
        throw Error("unsupported bit depth " + std::to_string(bit_depth));
    if (pixels.size() != static_cast<size_t>(width) * height)
        throw DimensionMismatchError("pixel buffer does not match width*height");
    const uint16_t limit = static_cast<uint16_t>(max_value());
    for (uint16_t v : pixels)
        if (v > limit) throw Error("pixel value exceeds bit depth");
}

size_t BinaryMask::count() const {
    return std::accumulate(bits.begin(), bits.end(), size_t{0},
                           [](size_t acc, uint8_t b) { return acc + (b != 0); });
}

Window Window::clipped_to(int image_width, int image_height) const {
    Window w;
    w.x0 = std::max(x0, 0);
    w.y0 = std::max(y0, 0);
    w.x1 = std::min(x1, image_width - 1);
    w.y1 = std::min(y1, image_height - 1);
    return w;
}

}  // namespace mitoscan
