#include "mitoscan/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "mitoscan/errors.hpp"
#include "mitoscan/util.hpp"

namespace mitoscan {

namespace {

constexpr double kLog2 = 0.6931471805599453;
constexpr double kPi = 3.14159265358979323846;

double log2_safe(double p) { return std::log(p) / kLog2; }

std::pair<int, int> direction_step(Direction dir) {
    switch (dir) {
        case Direction::Deg0: return {1, 0};
        case Direction::Deg45: return {1, -1};
        case Direction::Deg90: return {0, -1};
        default: return {-1, -1};  // Deg135
    }
}

const char* kMorphNames[] = {"area", "roundness", "elongation", "perimeter", "esp"};
const char* kIntensityNames[] = {"mean", "median", "variance", "skewness", "kurtosis"};
const char* kHaralickNames[] = {"energy", "contrast",    "correlation", "variance",
                                "homogeneity", "entropy", "sum_average", "sum_entropy"};
const char* kRunLengthNames[] = {"sre",  "lre",  "gln",   "rln",   "rp",
                                 "lgre", "hgre", "srlge", "srhge", "lrhge"};

}  // namespace

FeatureSchema::FeatureSchema() {
    slots_.reserve(kFeatureCount);
    auto add = [&](FeatureFamily family, int band, std::string name) {
        slots_.push_back({static_cast<int>(slots_.size()), family, band, std::move(name)});
    };
    for (const char* n : kMorphNames) add(FeatureFamily::Morph, -1, std::string("morph.") + n);
    for (int b = 0; b < kBandCount; ++b) {
        const std::string prefix = "b" + std::to_string(b) + ".";
        for (const char* n : kIntensityNames) add(FeatureFamily::Intensity, b, prefix + "int." + n);
        for (const char* n : kHaralickNames) add(FeatureFamily::Haralick, b, prefix + "hc." + n);
        for (const char* n : kRunLengthNames) add(FeatureFamily::RunLength, b, prefix + "rl." + n);
    }
}

const FeatureSchema& FeatureSchema::instance() {
    static const FeatureSchema schema;
    return schema;
}

std::vector<std::string> FeatureSchema::names() const {
    std::vector<std::string> out;
    out.reserve(slots_.size());
    for (const auto& s : slots_) out.push_back(s.name);
    return out;
}

std::vector<uint8_t> quantize_window(const GrayImage& img, const Window& window, int levels) {
    const int w = window.width(), h = window.height();
    std::vector<uint8_t> q(static_cast<size_t>(w) * h, 0);
    uint16_t lo = img.at(window.x0, window.y0), hi = lo;
    for (int y = window.y0; y <= window.y1; ++y) {
        for (int x = window.x0; x <= window.x1; ++x) {
            const uint16_t v = img.at(x, y);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi == lo) return q;
    const uint32_t span = static_cast<uint32_t>(hi - lo) + 1;
    for (int y = window.y0; y <= window.y1; ++y)
        for (int x = window.x0; x <= window.x1; ++x)
            q[static_cast<size_t>(y - window.y0) * w + (x - window.x0)] =
                static_cast<uint8_t>(static_cast<uint32_t>(img.at(x, y) - lo) * levels / span);
    return q;
}

namespace {

Window checked_window(const GrayImage& img, const Window& window, Direction dir) {
    Window w = window.clipped_to(img.width, img.height);
    if (w.empty()) throw WindowTooSmallError("window clipped to nothing");
    auto [dx, dy] = direction_step(dir);
    const int along = (dx != 0 && dy != 0) ? std::min(w.width(), w.height())
                      : (dx != 0)          ? w.width()
                                           : w.height();
    if (along < 2) throw WindowTooSmallError("window has fewer than 2 pixels along direction");
    return w;
}

}  // namespace

CooccurrenceMatrix glcm(const GrayImage& img, const Window& window, Direction dir, int levels) {
    const Window w = checked_window(img, window, dir);
    const auto q = quantize_window(img, w, levels);
    auto [dx, dy] = direction_step(dir);
    const int ww = w.width(), wh = w.height();

    CooccurrenceMatrix m;
    m.levels = levels;
    m.p.assign(static_cast<size_t>(levels) * levels, 0.0);

    uint64_t pairs = 0;
    for (int y = 0; y < wh; ++y) {
        for (int x = 0; x < ww; ++x) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= ww || ny >= wh) continue;
            const int a = q[static_cast<size_t>(y) * ww + x];
            const int b = q[static_cast<size_t>(ny) * ww + nx];
            m.at(a, b) += 1.0;
            m.at(b, a) += 1.0;
            ++pairs;
        }
    }
    const double norm = 2.0 * static_cast<double>(pairs);
    for (double& v : m.p) v /= norm;
    return m;
}

std::array<double, kHaralickFeatureCount> haralick_features(const CooccurrenceMatrix& m) {
    const int g = m.levels;
    std::vector<double> marginal(g, 0.0);       // p_x == p_y on a symmetric matrix
    std::vector<double> sum_diag(2 * g + 1, 0.0);  // p_{x+y}(k), k = i+j with 1-based i,j
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
            const double p = m.at(i, j);
            marginal[i] += p;
            sum_diag[i + j + 2] += p;
        }

    double mu = 0;
    for (int i = 0; i < g; ++i) mu += (i + 1) * marginal[i];
    double sigma2 = 0;
    for (int i = 0; i < g; ++i) sigma2 += (i + 1 - mu) * (i + 1 - mu) * marginal[i];

    double energy = 0, contrast = 0, corr_num = 0, variance = 0, homogeneity = 0, entropy = 0;
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
            const double p = m.at(i, j);
            energy += p * p;
            contrast += static_cast<double>(i - j) * (i - j) * p;
            corr_num += (i + 1 - mu) * (j + 1 - mu) * p;
            variance += (i + 1 - mu) * (i + 1 - mu) * p;
            homogeneity += p / (1.0 + static_cast<double>(i - j) * (i - j));
            if (p > 0) entropy -= p * log2_safe(p);
        }
    }
    const double correlation = sigma2 < 1e-12 ? 0.0 : corr_num / sigma2;

    double sum_average = 0, sum_entropy = 0;
    for (int k = 2; k <= 2 * g; ++k) {
        const double p = sum_diag[k];
        sum_average += k * p;
        if (p > 0) sum_entropy -= p * log2_safe(p);
    }

    return {energy, contrast, correlation, variance, homogeneity, entropy, sum_average, sum_entropy};
}

RunLengthMatrix run_length_matrix(const GrayImage& img, const Window& window, Direction dir,
                                  int levels) {
    const Window w = checked_window(img, window, dir);
    const auto q = quantize_window(img, w, levels);
    auto [dx, dy] = direction_step(dir);
    const int ww = w.width(), wh = w.height();

    RunLengthMatrix rlm;
    rlm.levels = levels;
    rlm.max_run = std::max(ww, wh);
    rlm.window_pixels = static_cast<long>(ww) * wh;
    rlm.runs.assign(static_cast<size_t>(levels) * rlm.max_run, 0);

    // Walk every maximal line in the direction; a line starts where the
    // backwards step leaves the window.
    for (int y = 0; y < wh; ++y) {
        for (int x = 0; x < ww; ++x) {
            const int px = x - dx, py = y - dy;
            if (px >= 0 && py >= 0 && px < ww && py < wh) continue;
            int cx = x, cy = y;
            int level = q[static_cast<size_t>(cy) * ww + cx];
            int run = 0;
            while (cx >= 0 && cy >= 0 && cx < ww && cy < wh) {
                const int v = q[static_cast<size_t>(cy) * ww + cx];
                if (v == level) {
                    ++run;
                } else {
                    rlm.at(level, run)++;
                    level = v;
                    run = 1;
                }
                cx += dx;
                cy += dy;
            }
            rlm.at(level, run)++;
        }
    }
    return rlm;
}

std::array<double, kRunLengthFeatureCount> runlength_features(const RunLengthMatrix& rlm) {
    double n_runs = 0;
    double sre = 0, lre = 0, lgre = 0, hgre = 0, srlge = 0, srhge = 0, lrhge = 0;
    std::vector<double> by_level(rlm.levels, 0.0), by_length(rlm.max_run, 0.0);

    for (int gi = 0; gi < rlm.levels; ++gi) {
        const double g = gi + 1;  // gray index starts at 1
        for (int l = 1; l <= rlm.max_run; ++l) {
            const double r = rlm.at(gi, l);
            if (r == 0) continue;
            const double l2 = static_cast<double>(l) * l, g2 = g * g;
            n_runs += r;
            by_level[gi] += r;
            by_length[l - 1] += r;
            sre += r / l2;
            lre += r * l2;
            lgre += r / g2;
            hgre += r * g2;
            srlge += r / (g2 * l2);
            srhge += r * g2 / l2;
            lrhge += r * g2 * l2;
        }
    }

    double gln = 0, rln = 0;
    for (double v : by_level) gln += v * v;
    for (double v : by_length) rln += v * v;

    const double rp = n_runs / static_cast<double>(rlm.window_pixels);
    return {sre / n_runs,  lre / n_runs,  gln / n_runs,   rln / n_runs,   rp,
            lgre / n_runs, hgre / n_runs, srlge / n_runs, srhge / n_runs, lrhge / n_runs};
}

std::array<double, kRunLengthFeatureCount> runlength_features(const GrayImage& img,
                                                              const Window& window,
                                                              Direction dir, int levels) {
    return runlength_features(run_length_matrix(img, window, dir, levels));
}

std::array<double, kMorphFeatureCount> morphological_features(const CandidateRegion& region) {
    const double area = static_cast<double>(region.pixels.size());
    if (region.pixels.empty()) throw EmptyRegionError("morphological features of an empty region");

    std::unordered_set<long long> in_region;
    in_region.reserve(region.pixels.size() * 2);
    auto key = [](int x, int y) { return (static_cast<long long>(y) << 32) | static_cast<unsigned>(x); };
    for (auto [x, y] : region.pixels) in_region.insert(key(x, y));

    // Crack boundary: one edge per 4-neighbor that is not part of the region.
    long perimeter_edges = 0;
    for (auto [x, y] : region.pixels) {
        if (!in_region.count(key(x - 1, y))) ++perimeter_edges;
        if (!in_region.count(key(x + 1, y))) ++perimeter_edges;
        if (!in_region.count(key(x, y - 1))) ++perimeter_edges;
        if (!in_region.count(key(x, y + 1))) ++perimeter_edges;
    }
    const double perimeter = static_cast<double>(perimeter_edges);

    double mx = 0, my = 0;
    for (auto [x, y] : region.pixels) {
        mx += x;
        my += y;
    }
    mx /= area;
    my /= area;
    double mu20 = 0, mu02 = 0, mu11 = 0;
    for (auto [x, y] : region.pixels) {
        const double dx = x - mx, dy = y - my;
        mu20 += dx * dx;
        mu02 += dy * dy;
        mu11 += dx * dy;
    }
    mu20 /= area;
    mu02 /= area;
    mu11 /= area;

    const double tr = (mu20 + mu02) / 2;
    const double det = std::sqrt((mu20 - mu02) * (mu20 - mu02) / 4 + mu11 * mu11);
    const double l1 = tr + det, l2 = tr - det;
    double elongation;
    if (l2 <= 1e-12)
        elongation = l1 <= 1e-12 ? 1.0 : 1e6;  // 1-px-wide line: capped infinity sentinel
    else
        elongation = std::min(std::sqrt(l1 / l2), 1e6);

    const double roundness = 4.0 * kPi * area / (perimeter * perimeter);
    const double esp = 2.0 * std::sqrt(kPi * area);
    return {area, roundness, elongation, perimeter, esp};
}

std::array<double, kIntensityFeatureCount> intensity_features(const GrayImage& img,
                                                              const CandidateRegion& region) {
    if (region.pixels.empty()) throw EmptyRegionError("intensity features of an empty region");
    std::vector<double> values;
    values.reserve(region.pixels.size());
    for (auto [x, y] : region.pixels) {
        if (!img.in_bounds(x, y)) throw EmptyRegionError("region pixel outside image bounds");
        values.push_back(img.at(x, y));
    }

    const double n = static_cast<double>(values.size());
    double mean = 0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    std::sort(values.begin(), values.end());
    const size_t half = values.size() / 2;
    const double median = values.size() % 2 ? values[half] : (values[half - 1] + values[half]) / 2.0;

    double skewness = 0, kurtosis = 0;
    if (m2 >= 1e-12) {
        skewness = m3 / std::pow(m2, 1.5);
        kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return {mean, median, m2, skewness, kurtosis};
}

FeatureVector feature_vector(const MultispectralHPF& stack, const CandidateRegion& region,
                             int plane, const TextureConfig& cfg) {
    if (plane < 0 || plane >= stack.planes)
        throw BandOutOfRangeError("plane " + std::to_string(plane) + " out of range");
    if (stack.bands != kBandCount)
        throw SchemaMismatchError("the 235-slot schema needs a 10-band stack, got " +
                                  std::to_string(stack.bands));

    FeatureVector fv;
    fv.candidate_id = region.id;
    fv.values.resize(kFeatureCount);

    const auto morph = morphological_features(region);
    std::copy(morph.begin(), morph.end(), fv.values.begin());

    const Window window =
        region.bounding_box().expanded(cfg.window_margin).clipped_to(stack.width, stack.height);

    int slot = kMorphFeatureCount;
    for (int b = 0; b < stack.bands; ++b) {
        const GrayImage& img = stack.image(b, plane);

        const auto intensity = intensity_features(img, region);
        std::copy(intensity.begin(), intensity.end(), fv.values.begin() + slot);
        slot += kIntensityFeatureCount;

        std::array<double, kHaralickFeatureCount> hc{};
        std::array<double, kRunLengthFeatureCount> rl{};
        for (Direction dir : kAllDirections) {
            const auto h = haralick_features(glcm(img, window, dir, cfg.gray_levels));
            const auto r = runlength_features(img, window, dir, cfg.gray_levels);
            for (int i = 0; i < kHaralickFeatureCount; ++i) hc[i] += h[i];
            for (int i = 0; i < kRunLengthFeatureCount; ++i) rl[i] += r[i];
        }
        for (int i = 0; i < kHaralickFeatureCount; ++i) fv.values[slot + i] = hc[i] / 4.0;
        slot += kHaralickFeatureCount;
        for (int i = 0; i < kRunLengthFeatureCount; ++i) fv.values[slot + i] = rl[i] / 4.0;
        slot += kRunLengthFeatureCount;
    }
    return fv;
}

// --- feature matrix ------------------------------------------------------

namespace {

std::string label_name(int label) {
    return label == 1 ? "mitosis" : label == 0 ? "nonMitosis" : "unknown";
}

int parse_label(const std::string& s) {
    if (s == "mitosis") return 1;
    if (s == "nonMitosis") return 0;
    return -1;
}

}  // namespace

void save_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UnreadableFileError("cannot write " + path.string());
    out << "candidateId,label";
    for (const auto& n : m.feature_names) out << ',' << n;
    out << '\n';
    for (int i = 0; i < m.n_instances(); ++i) {
        out << m.ids[i] << ',' << label_name(m.labels[i]);
        for (double v : m.rows[i]) out << ',' << format_double(v);
        out << '\n';
    }
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UnreadableFileError("cannot open " + path.string());
    FeatureMatrix m;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (line_no == 1) {
            if (f.size() < 3 || f[0] != "candidateId")
                throw MalformedRowError(line_no, "expected candidateId,label,<features...> header");
            m.feature_names.assign(f.begin() + 2, f.end());
            continue;
        }
        if (f.size() != m.feature_names.size() + 2)
            throw MalformedRowError(line_no, "row width differs from header");
        m.ids.push_back(trim(f[0]));
        m.labels.push_back(parse_label(trim(f[1])));
        std::vector<double> row(m.feature_names.size());
        for (size_t j = 0; j < row.size(); ++j) row[j] = std::stod(f[j + 2]);
        m.rows.push_back(std::move(row));
    }
    if (m.feature_names.empty()) throw EmptyMatrixError("no header in " + path.string());
    return m;
}

FeatureMode parse_feature_mode(const std::string& s) {
    if (s == "all") return FeatureMode::All;
    if (s == "selected") return FeatureMode::Selected;
    if (s == "whiteBandOnly") return FeatureMode::WhiteBandOnly;
    if (s == "multispectralOnly") return FeatureMode::MultispectralOnly;
    if (s == "intensityOnly") return FeatureMode::IntensityOnly;
    if (s == "textureOnly") return FeatureMode::TextureOnly;
    throw Error("unknown feature mode '" + s + "'");
}

std::string feature_mode_name(FeatureMode mode) {
    switch (mode) {
        case FeatureMode::All: return "all";
        case FeatureMode::Selected: return "selected";
        case FeatureMode::WhiteBandOnly: return "whiteBandOnly";
        case FeatureMode::MultispectralOnly: return "multispectralOnly";
        case FeatureMode::IntensityOnly: return "intensityOnly";
        default: return "textureOnly";
    }
}

namespace {

// Name layout is "morph.<x>" or "b<band>.<fam>.<x>" with fam in {int, hc, rl}.
struct ParsedName {
    bool morph = false;
    int band = -1;
    std::string family;
};

ParsedName parse_feature_name(const std::string& name) {
    ParsedName p;
    if (name.rfind("morph.", 0) == 0) {
        p.morph = true;
        return p;
    }
    if (name.size() > 1 && name[0] == 'b') {
        const auto dot = name.find('.');
        const auto dot2 = dot == std::string::npos ? std::string::npos : name.find('.', dot + 1);
        if (dot != std::string::npos && dot2 != std::string::npos) {
            const std::string band_str = name.substr(1, dot - 1);
            if (is_numeric(band_str)) {
                p.band = std::stoi(band_str);
                p.family = name.substr(dot + 1, dot2 - dot - 1);
            }
        }
    }
    return p;
}

}  // namespace

std::vector<int> feature_mode_columns(const std::vector<std::string>& names, FeatureMode mode) {
    constexpr int kWhiteBand = 1;
    std::vector<int> cols;
    for (size_t i = 0; i < names.size(); ++i) {
        const ParsedName p = parse_feature_name(names[i]);
        bool keep = false;
        switch (mode) {
            case FeatureMode::All: keep = true; break;
            case FeatureMode::WhiteBandOnly: keep = p.morph || p.band == kWhiteBand; break;
            case FeatureMode::MultispectralOnly: keep = p.band != kWhiteBand; break;
            case FeatureMode::IntensityOnly: keep = p.family == "int"; break;
            case FeatureMode::TextureOnly: keep = p.family == "hc" || p.family == "rl"; break;
            case FeatureMode::Selected:
                throw Error("feature mode 'selected' is resolved from a stored subset");
        }
        if (keep) cols.push_back(static_cast<int>(i));
    }
    return cols;
}

FeatureMatrix restrict_columns(const FeatureMatrix& m, const std::vector<int>& columns) {
    FeatureMatrix out;
    out.ids = m.ids;
    out.labels = m.labels;
    out.feature_names.reserve(columns.size());
    for (int c : columns) out.feature_names.push_back(m.feature_names[c]);
    out.rows.reserve(m.rows.size());
    for (const auto& row : m.rows) {
        std::vector<double> r(columns.size());
        for (size_t j = 0; j < columns.size(); ++j) r[j] = row[columns[j]];
        out.rows.push_back(std::move(r));
    }
    return out;
}

}  // namespace mitoscan
