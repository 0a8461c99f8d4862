#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "mitoscan/detect.hpp"
#include "mitoscan/image.hpp"
#include "mitoscan/stack.hpp"

namespace mitoscan {

enum class FeatureFamily { Morph, Intensity, Haralick, RunLength };

struct FeatureSlot {
    int index = 0;
    FeatureFamily family = FeatureFamily::Morph;
    int band = -1;  // -1 for morphological slots
    std::string name;
};

inline constexpr int kFeatureCount = 235;
inline constexpr int kMorphFeatureCount = 5;
inline constexpr int kIntensityFeatureCount = 5;
inline constexpr int kHaralickFeatureCount = 8;
inline constexpr int kRunLengthFeatureCount = 10;
inline constexpr int kBandCount = 10;

/// The fixed 235-slot schema: morph[0..4], then per band b = 0..9 a block of
/// 5 intensity + 8 Haralick + 10 run-length slots. Names follow
/// `morph.area`, `b3.hc.contrast`, `b7.rl.sre`, ...
class FeatureSchema {
  public:
    static const FeatureSchema& instance();

    const std::vector<FeatureSlot>& slots() const { return slots_; }
    const FeatureSlot& slot(int index) const { return slots_[index]; }
    int size() const { return static_cast<int>(slots_.size()); }
    std::vector<std::string> names() const;

  private:
    FeatureSchema();
    std::vector<FeatureSlot> slots_;
};

struct FeatureVector {
    std::string candidate_id;
    std::vector<double> values;  // kFeatureCount entries, all finite
    int label = -1;              // 1 mitosis, 0 non-mitosis, -1 unknown
};

/// Co-occurrence directions; displacement is one pixel.
enum class Direction { Deg0, Deg45, Deg90, Deg135 };
inline constexpr std::array<Direction, 4> kAllDirections = {
    Direction::Deg0, Direction::Deg45, Direction::Deg90, Direction::Deg135};

/// Symmetric, normalized gray-level co-occurrence matrix.
struct CooccurrenceMatrix {
    int levels = 0;
    std::vector<double> p;  // levels x levels, sums to 1

    double at(int i, int j) const { return p[static_cast<size_t>(i) * levels + j]; }
    double& at(int i, int j) { return p[static_cast<size_t>(i) * levels + j]; }
};

/// Counts of maximal constant-level runs by (level, run length).
struct RunLengthMatrix {
    int levels = 0;
    int max_run = 0;
    long window_pixels = 0;
    std::vector<uint32_t> runs;  // levels x max_run; run length l stored at l-1

    uint32_t at(int level, int length) const {
        return runs[static_cast<size_t>(level) * max_run + (length - 1)];
    }
    uint32_t& at(int level, int length) {
        return runs[static_cast<size_t>(level) * max_run + (length - 1)];
    }
};

/// Linearly requantizes the window's raw gray values to `levels` buckets over
/// the window's min..max range (integer arithmetic, so exact). A constant
/// window maps everything to level 0.
std::vector<uint8_t> quantize_window(const GrayImage& img, const Window& window, int levels);

/// GLCM at displacement 1 in the given direction over the (clipped) window,
/// counting each ordered pair both ways and normalizing. Throws
/// WindowTooSmallError when the window has fewer than 2 pixels along the
/// direction.
CooccurrenceMatrix glcm(const GrayImage& img, const Window& window, Direction dir,
                        int levels);

/// Energy, contrast, correlation, variance, homogeneity, entropy (base 2),
/// sum average, sum entropy — with 1-based gray indices and 0*log(0) = 0.
/// Correlation is 0 when either marginal deviation vanishes.
std::array<double, kHaralickFeatureCount> haralick_features(const CooccurrenceMatrix& m);

RunLengthMatrix run_length_matrix(const GrayImage& img, const Window& window,
                                  Direction dir, int levels);

/// SRE, LRE, GLN, RLN, RP, LGRE, HGRE, SRLGE, SRHGE, LRHGE with the gray
/// index starting at 1.
std::array<double, kRunLengthFeatureCount> runlength_features(const RunLengthMatrix& rlm);

std::array<double, kRunLengthFeatureCount> runlength_features(const GrayImage& img,
                                                              const Window& window,
                                                              Direction dir, int levels);

/// Area, roundness 4*pi*A/P^2, elongation sqrt(l1/l2) of the central
/// second-moment eigenvalues (capped at 1e6 for degenerate regions),
/// perimeter as the crack-boundary edge count, equivalent spherical
/// perimeter 2*sqrt(pi*A).
std::array<double, kMorphFeatureCount> morphological_features(const CandidateRegion& region);

/// Mean, median, population variance, skewness m3/m2^1.5 and excess kurtosis
/// m4/m2^2 - 3 over the region's pixels; skewness and kurtosis are 0 when the
/// variance is below 1e-12.
std::array<double, kIntensityFeatureCount> intensity_features(const GrayImage& img,
                                                              const CandidateRegion& region);

struct TextureConfig {
    int gray_levels = 16;
    int window_margin = 5;
};

/// Assembles the full 235-value vector for one candidate: morph features from
/// the mask, then per band at the given plane: mask-restricted intensity
/// features plus Haralick and run-length features computed per direction on
/// the margin-padded bounding-box window and averaged over the four
/// directions.
FeatureVector feature_vector(const MultispectralHPF& stack, const CandidateRegion& region,
                             int plane, const TextureConfig& cfg = {});

// --- feature matrix (the CSV contract between pipeline stages) ----------

struct FeatureMatrix {
    std::vector<std::string> feature_names;
    std::vector<std::string> ids;
    std::vector<int> labels;  // 1 / 0 / -1 per row
    std::vector<std::vector<double>> rows;

    int n_instances() const { return static_cast<int>(rows.size()); }
    int n_features() const { return static_cast<int>(feature_names.size()); }
};

/// `candidateId,label,<names...>` header, one row per candidate. Values are
/// written with shortest round-trip formatting.
void save_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);

enum class FeatureMode { All, Selected, WhiteBandOnly, MultispectralOnly, IntensityOnly, TextureOnly };

FeatureMode parse_feature_mode(const std::string& s);
std::string feature_mode_name(FeatureMode mode);

/// Column indices a mode keeps, derived from the schema-encoded names.
/// WhiteBandOnly keeps morph slots plus band 1 (the white band);
/// MultispectralOnly drops band 1; IntensityOnly / TextureOnly filter by
/// family. Selected is resolved elsewhere (from a stored subset) and is not
/// valid here.
std::vector<int> feature_mode_columns(const std::vector<std::string>& names, FeatureMode mode);

/// Copies only the given columns (order preserved).
FeatureMatrix restrict_columns(const FeatureMatrix& m, const std::vector<int>& columns);

}  // namespace mitoscan
