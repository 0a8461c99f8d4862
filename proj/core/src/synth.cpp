#include "mitoscan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mitoscan/errors.hpp"
#include "mitoscan/rng.hpp"
#include "mitoscan/util.hpp"

namespace mitoscan {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxPlacementAttempts = 5000;

struct Blob {
    int cx = 0, cy = 0;
    double half_major = 0;  // conservative radius for overlap rejection
    double phase = 0;
    bool mitotic = false;
    std::vector<std::pair<int, int>> pixels;
};

// Exact-area rasterization: the `area` pixels closest to the center under the
// elliptical metric, ties broken by (y, x). Keeps planted areas exactly on
// the requested pixel counts.
std::vector<std::pair<int, int>> rasterize_ellipse(int cx, int cy, int area, double ratio,
                                                   double theta) {
    const double a = std::sqrt(area * ratio / kPi);
    const double b = std::sqrt(area / (ratio * kPi));
    const double ct = std::cos(theta), st = std::sin(theta);
    const int reach = static_cast<int>(std::ceil(a)) + 2;

    struct Entry {
        double metric;
        int x, y;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<size_t>(2 * reach + 1) * (2 * reach + 1));
    for (int y = cy - reach; y <= cy + reach; ++y) {
        for (int x = cx - reach; x <= cx + reach; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double u = dx * ct + dy * st;
            const double v = -dx * st + dy * ct;
            entries.push_back({(u / a) * (u / a) + (v / b) * (v / b), x, y});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& p, const Entry& q) {
        if (p.metric != q.metric) return p.metric < q.metric;
        if (p.y != q.y) return p.y < q.y;
        return p.x < q.x;
    });

    std::vector<std::pair<int, int>> pixels(area);
    for (int i = 0; i < area; ++i) pixels[i] = {entries[i].x, entries[i].y};
    return pixels;
}

std::vector<float> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<float> k(2 * radius + 1);
    double sum = 0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k[i + radius] = static_cast<float>(w);
        sum += w;
    }
    for (float& w : k) w = static_cast<float>(w / sum);
    return k;
}

// Separable convolution with replicated borders.
std::vector<float> blur(const std::vector<float>& in, int w, int h, double sigma) {
    if (sigma <= 0) return in;
    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);

    std::vector<float> tmp(in.size()), out(in.size());
    for (int y = 0; y < h; ++y) {
        const float* row = in.data() + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            float acc = 0;
            for (int j = -radius; j <= radius; ++j)
                acc += kernel[j + radius] * row[std::clamp(x + j, 0, w - 1)];
            tmp[static_cast<size_t>(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float acc = 0;
            for (int j = -radius; j <= radius; ++j)
                acc += kernel[j + radius] * tmp[static_cast<size_t>(std::clamp(y + j, 0, h - 1)) * w + x];
            out[static_cast<size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

}  // namespace

void SynthSpec::validate() const {
    if (width < 16 || height < 16) throw InvalidSpecError("canvas must be at least 16x16");
    if (bands < 1 || planes < 1) throw InvalidSpecError("bands and planes must be positive");
    if (bit_depth != 8 && bit_depth != 16) throw InvalidSpecError("bit_depth must be 8 or 16");
    if (noise_sigma < 0) throw InvalidSpecError("noise_sigma must be non-negative");
    if (microns_per_pixel <= 0) throw InvalidSpecError("microns_per_pixel must be positive");

    const long canvas = static_cast<long>(width) * height;
    auto check_range = [&](int lo, int hi, const char* what) {
        if (lo < 1 || hi < lo || hi > canvas)
            throw InvalidSpecError(std::string(what) + " area range invalid");
    };
    if (mitosis_areas.empty()) check_range(mitosis_area_min, mitosis_area_max, "mitosis");
    if (distractor_areas.empty()) check_range(distractor_area_min, distractor_area_max, "distractor");
    for (int a : mitosis_areas)
        if (a < 1 || a > canvas) throw InvalidSpecError("explicit mitosis area out of range");
    for (int a : distractor_areas)
        if (a < 1 || a > canvas) throw InvalidSpecError("explicit distractor area out of range");

    if (static_cast<int>(blur_sigma_by_plane.size()) != planes)
        throw InvalidSpecError("blur_sigma_by_plane must have one entry per plane");
    const auto min_it = std::min_element(blur_sigma_by_plane.begin(), blur_sigma_by_plane.end());
    if (std::count(blur_sigma_by_plane.begin(), blur_sigma_by_plane.end(), *min_it) != 1)
        throw InvalidSpecError("blur_sigma_by_plane needs a unique minimum");
    for (double s : blur_sigma_by_plane)
        if (s < 0) throw InvalidSpecError("blur sigma must be non-negative");

    const double max_val = static_cast<double>((1 << bit_depth) - 1);
    if (background < 0 || background > max_val)
        throw InvalidSpecError("background outside the gray range");
}

SynthResult generate(const SynthSpec& spec, const std::string& hpf_id) {
    spec.validate();
    SplitMix64 rng(derive_seed(spec.seed, 1));

    const int n_mitoses = spec.mitosis_areas.empty() ? spec.n_mitoses
                                                     : static_cast<int>(spec.mitosis_areas.size());
    const int n_distractors = spec.distractor_areas.empty()
                                  ? spec.n_distractors
                                  : static_cast<int>(spec.distractor_areas.size());

    std::vector<Blob> blobs;
    blobs.reserve(n_mitoses + n_distractors);
    auto place = [&](bool mitotic, int index, int total) {
        int area;
        if (mitotic)
            area = spec.mitosis_areas.empty()
                       ? rng.uniform_int(spec.mitosis_area_min, spec.mitosis_area_max)
                       : spec.mitosis_areas[index];
        else
            area = spec.distractor_areas.empty()
                       ? rng.uniform_int(spec.distractor_area_min, spec.distractor_area_max)
                       : spec.distractor_areas[index];

        for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
            const double ratio = rng.uniform(1.1, 1.8);
            const double theta = rng.uniform(0.0, kPi);
            const double a = std::sqrt(area * ratio / kPi);
            const int margin = static_cast<int>(std::ceil(a)) + 3;
            if (2 * margin >= spec.width || 2 * margin >= spec.height) continue;
            const int cx = rng.uniform_int(margin, spec.width - 1 - margin);
            const int cy = rng.uniform_int(margin, spec.height - 1 - margin);
            const double radius = a + 3;

            bool collides = false;
            for (const Blob& other : blobs) {
                const double dx = cx - other.cx, dy = cy - other.cy;
                if (std::sqrt(dx * dx + dy * dy) < radius + other.half_major) {
                    collides = true;
                    break;
                }
            }
            if (collides) continue;

            Blob blob;
            blob.cx = cx;
            blob.cy = cy;
            blob.half_major = radius;
            blob.mitotic = mitotic;
            blob.phase = rng.uniform(0.0, 2 * kPi);
            blob.pixels = rasterize_ellipse(cx, cy, area, ratio, theta);
            blobs.push_back(std::move(blob));
            return;
        }
        throw InfeasiblePlacementError("could not place blob " + std::to_string(index + 1) +
                                       " of " + std::to_string(total) + " without overlap");
    };
    for (int i = 0; i < n_mitoses; ++i) place(true, i, n_mitoses);
    for (int i = 0; i < n_distractors; ++i) place(false, i, n_distractors);

    SynthResult result;
    result.stack.id = hpf_id;
    result.stack.bands = spec.bands;
    result.stack.planes = spec.planes;
    result.stack.width = spec.width;
    result.stack.height = spec.height;
    result.stack.microns_per_pixel = spec.microns_per_pixel;
    result.stack.images.resize(static_cast<size_t>(spec.bands) * spec.planes);

    result.gt.hpf_id = hpf_id;
    int gt_ordinal = 0;
    for (const Blob& blob : blobs) {
        if (!blob.mitotic) continue;
        MitosisAnnotation m;
        m.id = "m" + std::to_string(gt_ordinal++);
        m.pixels = blob.pixels;
        double sx = 0, sy = 0;
        for (auto [x, y] : blob.pixels) {
            sx += x;
            sy += y;
        }
        m.cx = std::floor(sx / blob.pixels.size() + 0.5);
        m.cy = std::floor(sy / blob.pixels.size() + 0.5);
        result.gt.mitoses.push_back(std::move(m));
    }

    const size_t pixel_count = static_cast<size_t>(spec.width) * spec.height;
    const double max_val = static_cast<double>((1 << spec.bit_depth) - 1);
    std::vector<float> scene(pixel_count);

    for (int b = 0; b < spec.bands; ++b) {
        std::fill(scene.begin(), scene.end(), static_cast<float>(spec.background));

        // Band-indexed grating: wavelength and orientation vary per band; the
        // white band sees only a washed-out residue of it.
        const double wavelength = 3.0 + 0.6 * b;
        const double angle = 0.7 * b;
        const double ux = std::cos(angle) * 2 * kPi / wavelength;
        const double uy = std::sin(angle) * 2 * kPi / wavelength;
        const double amplitude =
            spec.texture_contrast * (b == spec.white_band ? spec.white_band_texture_scale : 1.0);

        for (const Blob& blob : blobs) {
            for (auto [x, y] : blob.pixels) {
                double v = spec.background - spec.mitosis_darkness;
                if (blob.mitotic) v += amplitude * std::sin(ux * x + uy * y + blob.phase);
                scene[static_cast<size_t>(y) * spec.width + x] = static_cast<float>(v);
            }
        }

        if (spec.noise_sigma > 0) {
            SplitMix64 noise(derive_seed(spec.seed, 100 + static_cast<uint64_t>(b)));
            for (float& v : scene)
                v += static_cast<float>(spec.noise_sigma * noise.gaussian());
        }

        for (int p = 0; p < spec.planes; ++p) {
            const std::vector<float> blurred =
                blur(scene, spec.width, spec.height, spec.blur_sigma_by_plane[p]);
            GrayImage img(spec.width, spec.height, spec.bit_depth);
            for (size_t i = 0; i < pixel_count; ++i) {
                const double v = std::clamp(std::round(static_cast<double>(blurred[i])), 0.0, max_val);
                img.pixels[i] = static_cast<uint16_t>(v);
            }
            result.stack.image(b, p) = std::move(img);
        }
    }
    return result;
}

namespace {

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UnreadableFileError("cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw InvalidSpecError("line " + std::to_string(line_no) + ": expected key = value");
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty()) out.push_back(std::stod(trim(item)));
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (double v : parse_double_list(s)) out.push_back(static_cast<int>(v));
    return out;
}

}  // namespace

std::vector<double> default_blur_schedule(int planes) {
    const int focus = std::min(6, planes - 1);
    std::vector<double> sigmas(planes);
    for (int p = 0; p < planes; ++p)
        sigmas[p] = 0.45 * std::abs(p - focus) + (p > focus ? 0.15 : 0.0);
    return sigmas;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
    const auto kv = read_key_values(path);
    SynthSpec spec;
    auto geti = [&](const char* key, int def) {
        auto it = kv.find(key);
        return it == kv.end() ? def : std::stoi(it->second);
    };
    auto getd = [&](const char* key, double def) {
        auto it = kv.find(key);
        return it == kv.end() ? def : std::stod(it->second);
    };

    spec.width = geti("width", spec.width);
    spec.height = geti("height", spec.height);
    spec.bands = geti("bands", spec.bands);
    spec.planes = geti("planes", spec.planes);
    spec.n_mitoses = geti("n_mitoses", spec.n_mitoses);
    spec.mitosis_area_min = geti("mitosis_area_min", spec.mitosis_area_min);
    spec.mitosis_area_max = geti("mitosis_area_max", spec.mitosis_area_max);
    spec.n_distractors = geti("n_distractors", spec.n_distractors);
    spec.distractor_area_min = geti("distractor_area_min", spec.distractor_area_min);
    spec.distractor_area_max = geti("distractor_area_max", spec.distractor_area_max);
    spec.mitosis_darkness = getd("mitosis_darkness", spec.mitosis_darkness);
    spec.texture_contrast = getd("texture_contrast", spec.texture_contrast);
    spec.background = getd("background", spec.background);
    spec.noise_sigma = getd("noise_sigma", spec.noise_sigma);
    spec.white_band = geti("white_band", spec.white_band);
    spec.white_band_texture_scale = getd("white_band_texture_scale", spec.white_band_texture_scale);
    spec.bit_depth = geti("bit_depth", spec.bit_depth);
    spec.microns_per_pixel = getd("microns_per_pixel", spec.microns_per_pixel);
    if (auto it = kv.find("seed"); it != kv.end()) spec.seed = std::stoull(it->second);
    if (auto it = kv.find("blur_sigma_by_plane"); it != kv.end())
        spec.blur_sigma_by_plane = parse_double_list(it->second);
    else
        spec.blur_sigma_by_plane = default_blur_schedule(spec.planes);
    if (auto it = kv.find("mitosis_areas"); it != kv.end())
        spec.mitosis_areas = parse_int_list(it->second);
    if (auto it = kv.find("distractor_areas"); it != kv.end())
        spec.distractor_areas = parse_int_list(it->second);

    spec.validate();
    return spec;
}

void save_synth_spec(const SynthSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UnreadableFileError("cannot write " + path.string());
    out << "width = " << spec.width << "\nheight = " << spec.height << "\nbands = " << spec.bands
        << "\nplanes = " << spec.planes << "\n";
    if (spec.mitosis_areas.empty()) {
        out << "n_mitoses = " << spec.n_mitoses << "\nmitosis_area_min = " << spec.mitosis_area_min
            << "\nmitosis_area_max = " << spec.mitosis_area_max << "\n";
    } else {
        out << "mitosis_areas = ";
        for (size_t i = 0; i < spec.mitosis_areas.size(); ++i)
            out << (i ? "," : "") << spec.mitosis_areas[i];
        out << "\n";
    }
    if (spec.distractor_areas.empty()) {
        out << "n_distractors = " << spec.n_distractors
            << "\ndistractor_area_min = " << spec.distractor_area_min
            << "\ndistractor_area_max = " << spec.distractor_area_max << "\n";
    } else {
        out << "distractor_areas = ";
        for (size_t i = 0; i < spec.distractor_areas.size(); ++i)
            out << (i ? "," : "") << spec.distractor_areas[i];
        out << "\n";
    }
    out << "mitosis_darkness = " << format_double(spec.mitosis_darkness)
        << "\ntexture_contrast = " << format_double(spec.texture_contrast)
        << "\nbackground = " << format_double(spec.background)
        << "\nnoise_sigma = " << format_double(spec.noise_sigma)
        << "\nwhite_band = " << spec.white_band
        << "\nwhite_band_texture_scale = " << format_double(spec.white_band_texture_scale)
        << "\nbit_depth = " << spec.bit_depth
        << "\nmicrons_per_pixel = " << format_double(spec.microns_per_pixel)
        << "\nseed = " << spec.seed << "\nblur_sigma_by_plane = ";
    for (size_t i = 0; i < spec.blur_sigma_by_plane.size(); ++i)
        out << (i ? "," : "") << format_double(spec.blur_sigma_by_plane[i]);
    out << "\n";
}

}  // namespace mitoscan
