#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mitoscan/stack.hpp"

namespace mitoscan {

/// Parameters of the synthetic multispectral fixture generator. Planted
/// mitoses are darker elliptical blobs carrying a band-dependent sinusoidal
/// texture; distractors share the darkness but not the texture. Every plane
/// is the in-focus scene blurred by blur_sigma_by_plane[p].
struct SynthSpec {
    int width = 512;
    int height = 512;
    int bands = 10;
    int planes = 9;

    int n_mitoses = 10;
    int mitosis_area_min = 220;
    int mitosis_area_max = 460;
    int n_distractors = 20;
    int distractor_area_min = 80;
    int distractor_area_max = 620;

    // When non-empty these exact pixel areas are planted (in order) and the
    // corresponding count/range fields are ignored.
    std::vector<int> mitosis_areas;
    std::vector<int> distractor_areas;

    double mitosis_darkness = 80;   // gray offset below background
    double texture_contrast = 25;   // grating amplitude per band
    double background = 200;
    double noise_sigma = 2;

    // The white band integrates the whole spectrum, washing the narrowband
    // gratings out; its grating amplitude is scaled by this.
    int white_band = 1;
    double white_band_texture_scale = 0.0;

    std::vector<double> blur_sigma_by_plane;  // planes entries, unique minimum

    int bit_depth = 8;
    double microns_per_pixel = kDefaultMicronsPerPixel;
    uint64_t seed = 7;

    void validate() const;  // throws InvalidSpecError
};

struct SynthResult {
    MultispectralHPF stack;
    GroundTruth gt;
};

/// Blur schedule with its unique minimum (sigma 0) at plane min(6, planes-1)
/// and strictly distinct sigmas elsewhere.
std::vector<double> default_blur_schedule(int planes);

/// Deterministic: identical spec (including seed) yields bit-identical
/// stacks and ground truth. Throws InfeasiblePlacementError when the blobs
/// cannot be placed without overlap after bounded retries.
SynthResult generate(const SynthSpec& spec, const std::string& hpf_id = "synth");

/// Flat key=value spec file (same format as the CLI run config).
SynthSpec load_synth_spec(const std::filesystem::path& path);
void save_synth_spec(const SynthSpec& spec, const std::filesystem::path& path);

}  // namespace mitoscan
