#include "mitoscan/focus.hpp"

#include <algorithm>
#include <cmath>

#include "mitoscan/errors.hpp"

namespace mitoscan {

double average_gradient(const GrayImage& img) {
    if (img.width < 3 || img.height < 3)
        throw ImageTooSmallError("average_gradient needs at least 3x3 pixels");

    double sum = 0;
    for (int y = 1; y < img.height - 1; ++y) {
        for (int x = 1; x < img.width - 1; ++x) {
            const double p00 = img.at(x - 1, y - 1), p10 = img.at(x, y - 1), p20 = img.at(x + 1, y - 1);
            const double p01 = img.at(x - 1, y),                             p21 = img.at(x + 1, y);
            const double p02 = img.at(x - 1, y + 1), p12 = img.at(x, y + 1), p22 = img.at(x + 1, y + 1);
            const double gx = (p20 + 2 * p21 + p22) - (p00 + 2 * p01 + p02);
            const double gy = (p02 + 2 * p12 + p22) - (p00 + 2 * p10 + p20);
            sum += std::sqrt(gx * gx + gy * gy);
        }
    }
    const long interior = static_cast<long>(img.width - 2) * (img.height - 2);
    return sum / interior;
}

FocusRanking rank_planes(const MultispectralHPF& stack, int band, int keep) {
    if (band < 0 || band >= stack.bands)
        throw BandOutOfRangeError("band " + std::to_string(band) + " out of range");
    keep = std::min(keep, stack.planes);

    FocusRanking ranking;
    ranking.band = band;
    ranking.scores.reserve(stack.planes);
    for (int p = 0; p < stack.planes; ++p)
        ranking.scores.push_back({p, average_gradient(stack.image(band, p))});

    std::vector<int> order(stack.planes);
    for (int p = 0; p < stack.planes; ++p) order[p] = p;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return ranking.scores[a].average_gradient > ranking.scores[b].average_gradient;
    });
    ranking.selected.assign(order.begin(), order.begin() + keep);
    return ranking;
}

Histogram masked_histogram(const GrayImage& img, const BinaryMask& mask, int bin_count) {
    if (img.width != mask.width || img.height != mask.height)
        throw DimensionMismatchError("mask dimensions differ from image");
    if (bin_count <= 0) throw Error("bin_count must be positive");

    Histogram h;
    h.bin_count = bin_count;
    h.counts.assign(bin_count, 0);
    const double range = static_cast<double>(img.max_value()) + 1.0;
    h.bin_edges.resize(bin_count + 1);
    for (int i = 0; i <= bin_count; ++i) h.bin_edges[i] = range * i / bin_count;

    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (!mask.at(x, y)) continue;
            int bin = static_cast<int>(img.at(x, y) * bin_count / range);
            h.counts[std::min(bin, bin_count - 1)]++;
            h.total++;
        }
    }
    if (h.total == 0) throw EmptyMaskError("masked histogram over an empty mask");
    return h;
}

int default_bin_count(int bit_depth) { return bit_depth == 16 ? 1024 : 256; }

}  // namespace mitoscan
