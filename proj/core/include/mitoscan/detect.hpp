#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mitoscan/image.hpp"
#include "mitoscan/stack.hpp"

namespace mitoscan {

/// A connected foreground component surviving the area gates. Pixels are
/// 8-connected; the centroid is the fractional mean of pixel coordinates.
struct CandidateRegion {
    std::string id;  // "<hpfId>:<band>:<plane>:<ordinal>"
    std::vector<std::pair<int, int>> pixels;
    int area = 0;
    double cx = 0;
    double cy = 0;
    int x_min = 0, y_min = 0, x_max = 0, y_max = 0;
    int source_band = 0;
    int source_plane = 0;

    Window bounding_box() const { return {x_min, y_min, x_max, y_max}; }
};

struct DetectParams {
    int open_radius = 1;
    int min_area = 200;   // 37 um^2 at 0.430 um/px
    int max_area = 5405;  // 1000 um^2
    bool dark_foreground = true;
};

/// Global Otsu threshold over the image histogram: the cut maximizing
/// between-class variance (smallest cut on ties). With dark_foreground the
/// mask covers intensity <= threshold; otherwise intensity > threshold.
/// Throws DegenerateImageError when the image has a single gray value.
std::pair<uint16_t, BinaryMask> otsu_threshold(const GrayImage& img,
                                               bool dark_foreground = true);

/// Binary opening (erode then dilate) with a disk of radius open_radius,
/// followed by hole filling: background components (4-connected) not touching
/// the image border become foreground.
BinaryMask morphological_cleanup(const BinaryMask& mask, int open_radius);

/// Labels 8-connected components and keeps those with
/// min_area <= area <= max_area (both inclusive). Ordinals follow
/// scanline-first-pixel order.
std::vector<CandidateRegion> extract_candidates(const BinaryMask& mask, int min_area,
                                                int max_area, int band, int plane,
                                                const std::string& hpf_id);

/// otsu_threshold -> morphological_cleanup -> extract_candidates on the
/// selected (band, plane) image.
std::vector<CandidateRegion> detect(const MultispectralHPF& stack, int band, int plane,
                                    const DetectParams& params = {});

/// Candidate list CSV (`id,area,cx,cy,xMin,yMin,xMax,yMax`) plus one
/// run-length-encoded mask sidecar per candidate under `<dir>/masks/`.
void save_candidates(const std::vector<CandidateRegion>& candidates,
                     const std::filesystem::path& csv_path,
                     const std::filesystem::path& mask_dir);

std::vector<CandidateRegion> load_candidates(const std::filesystem::path& csv_path,
                                             const std::filesystem::path& mask_dir);

/// File-system-safe name of a candidate's mask sidecar.
std::string candidate_mask_filename(const std::string& candidate_id);

}  // namespace mitoscan
