#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mitoscan/image.hpp"

namespace mitoscan {

/// Physical scale used when a dataset does not state its own: the minimum
/// mitosis size of 37 um^2 corresponds to 200 pixels, giving
/// sqrt(37/200) ~= 0.430 um per pixel.
inline constexpr double kDefaultMicronsPerPixel = 0.430;

/// One high-power field: a (band, plane) grid of grayscale images sharing
/// identical dimensions. Immutable after construction; safe to share across
/// concurrent workers.
struct MultispectralHPF {
    std::string id;
    int bands = 10;
    int planes = 17;
    int width = 0;
    int height = 0;
    double microns_per_pixel = kDefaultMicronsPerPixel;
    std::vector<GrayImage> images;  // band-major: images[band * planes + plane]

    const GrayImage& image(int band, int plane) const {
        return images[static_cast<size_t>(band) * planes + plane];
    }
    GrayImage& image(int band, int plane) {
        return images[static_cast<size_t>(band) * planes + plane];
    }

    void validate() const;
};

struct MitosisAnnotation {
    std::string id;
    // Integer-valued when derived from a pixel list (round half up per axis);
    // otherwise taken verbatim from the centroid row.
    double cx = 0;
    double cy = 0;
    std::vector<std::pair<int, int>> pixels;  // optional (x, y) list
};

struct GroundTruth {
    std::string hpf_id;
    std::vector<MitosisAnnotation> mitoses;
};

/// Loads `<root>/<hpf_id>/band<BB>_plane<PP>.png`. Band and plane counts are
/// inferred from the files present; the grid must be complete and all images
/// must share dimensions.
MultispectralHPF load_stack(const std::filesystem::path& root, const std::string& hpf_id,
                            double microns_per_pixel = kDefaultMicronsPerPixel);

/// Writes the stack back in the same layout. load_stack(save_stack(s)) is
/// lossless at the intensity level.
void save_stack(const MultispectralHPF& stack, const std::filesystem::path& root);

/// Parses `mitosis.csv`: one row per mitosis, either `id,cx,cy` or
/// `id,x0,y0,x1,y1,...`. An optional header is detected by a non-numeric
/// second field. Pixel-list centroids are the coordinate means rounded half
/// up per axis. Pass image dimensions (when known) to bounds-check.
GroundTruth load_ground_truth(const std::filesystem::path& csv_path, int image_width = 0,
                              int image_height = 0);

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& csv_path);

}  // namespace mitoscan
