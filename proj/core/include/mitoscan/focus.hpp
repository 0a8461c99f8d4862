#pragma once

#include <cstdint>
#include <vector>

#include "mitoscan/image.hpp"
#include "mitoscan/stack.hpp"

namespace mitoscan {

struct PlaneScore {
    int plane = 0;
    double average_gradient = 0;
};

/// Per-band focus ranking. `scores` covers every plane once in plane order;
/// `selected` holds the kept planes sorted by descending gradient, ties
/// broken by lower plane index.
struct FocusRanking {
    int band = 0;
    std::vector<PlaneScore> scores;
    std::vector<int> selected;
};

struct Histogram {
    int bin_count = 0;
    std::vector<double> bin_edges;  // bin_count + 1 edges spanning the gray range
    std::vector<uint64_t> counts;
    uint64_t total = 0;
};

/// Mean over interior pixels of the Euclidean magnitude of the 3x3 Sobel
/// response. Border pixels are excluded rather than padded. Requires a
/// 3x3 image or larger.
double average_gradient(const GrayImage& img);

/// Scores all planes of one band by average gradient and selects the top
/// `keep`. Out-of-focus planes score lower and fall out of `selected`.
FocusRanking rank_planes(const MultispectralHPF& stack, int band, int keep);

/// Histogram of the pixels under the mask, with `bin_count` equal-width bins
/// spanning [0, 2^bit_depth). Throws EmptyMaskError when no pixel is set.
Histogram masked_histogram(const GrayImage& img, const BinaryMask& mask, int bin_count);

/// 256 bins for 8-bit sources, 1024 for 16-bit.
int default_bin_count(int bit_depth);

}  // namespace mitoscan
