#include "mitoscan/detect.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mitoscan/errors.hpp"
#include "mitoscan/util.hpp"

namespace mitoscan {

namespace fs = std::filesystem;

std::pair<uint16_t, BinaryMask> otsu_threshold(const GrayImage& img, bool dark_foreground) {
    const int levels = img.max_value() + 1;
    std::vector<uint64_t> hist(levels, 0);
    for (uint16_t v : img.pixels) hist[v]++;

    int lo = 0, hi = levels - 1;
    while (lo < levels && hist[lo] == 0) ++lo;
    while (hi >= 0 && hist[hi] == 0) --hi;
    if (lo >= hi) throw DegenerateImageError("image has fewer than 2 distinct gray values");

    const double total = static_cast<double>(img.pixels.size());
    double total_mean = 0;
    for (int v = lo; v <= hi; ++v) total_mean += static_cast<double>(v) * hist[v];
    total_mean /= total;

    // Cut t puts {<= t} in class 0; scan every cut, keep the smallest argmax.
    double best_var = -1;
    int best_t = lo;
    double w0 = 0, sum0 = 0;
    for (int t = lo; t < hi; ++t) {
        w0 += hist[t];
        sum0 += static_cast<double>(t) * hist[t];
        if (w0 == 0) continue;
        const double w1 = total - w0;
        const double mu0 = sum0 / w0;
        const double mu1 = (total_mean * total - sum0) / w1;
        const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best_var) {
            best_var = between;
            best_t = t;
        }
    }

    BinaryMask mask(img.width, img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        const bool below = img.pixels[i] <= best_t;
        mask.bits[i] = (dark_foreground ? below : !below) ? 1 : 0;
    }
    return {static_cast<uint16_t>(best_t), std::move(mask)};
}

namespace {

std::vector<std::pair<int, int>> disk_offsets(int radius) {
    std::vector<std::pair<int, int>> offs;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) offs.emplace_back(dx, dy);
    return offs;
}

BinaryMask erode(const BinaryMask& mask, const std::vector<std::pair<int, int>>& offs) {
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            bool keep = true;
            for (auto [dx, dy] : offs) {
                const int nx = x + dx, ny = y + dy;
                if (!mask.in_bounds(nx, ny) || !mask.at(nx, ny)) {
                    keep = false;
                    break;
                }
            }
            out.set(x, y, keep);
        }
    }
    return out;
}

BinaryMask dilate(const BinaryMask& mask, const std::vector<std::pair<int, int>>& offs) {
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            for (auto [dx, dy] : offs) {
                const int nx = x + dx, ny = y + dy;
                if (mask.in_bounds(nx, ny)) out.set(nx, ny, true);
            }
        }
    }
    return out;
}

// Flood fill over unvisited background from the border, 4-connected; any
// background pixel left unvisited is inside a hole.
void fill_holes(BinaryMask& mask) {
    const int w = mask.width, h = mask.height;
    std::vector<uint8_t> outside(static_cast<size_t>(w) * h, 0);
    std::vector<std::pair<int, int>> stack;
    auto push = [&](int x, int y) {
        const size_t i = mask.idx(x, y);
        if (!mask.bits[i] && !outside[i]) {
            outside[i] = 1;
            stack.emplace_back(x, y);
        }
    };
    for (int x = 0; x < w; ++x) {
        push(x, 0);
        push(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        push(0, y);
        push(w - 1, y);
    }
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        if (x > 0) push(x - 1, y);
        if (x + 1 < w) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y + 1 < h) push(x, y + 1);
    }
    for (size_t i = 0; i < mask.bits.size(); ++i)
        if (!mask.bits[i] && !outside[i]) mask.bits[i] = 1;
}

}  // namespace

BinaryMask morphological_cleanup(const BinaryMask& mask, int open_radius) {
    BinaryMask out = mask;
    if (open_radius > 0) {
        const auto offs = disk_offsets(open_radius);
        out = dilate(erode(out, offs), offs);
    }
    fill_holes(out);
    return out;
}

std::vector<CandidateRegion> extract_candidates(const BinaryMask& mask, int min_area,
                                                int max_area, int band, int plane,
                                                const std::string& hpf_id) {
    const int w = mask.width, h = mask.height;
    std::vector<int> label(static_cast<size_t>(w) * h, -1);
    std::vector<CandidateRegion> out;
    std::vector<std::pair<int, int>> stack;
    int ordinal = 0;

    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const size_t i0 = mask.idx(x0, y0);
            if (!mask.bits[i0] || label[i0] >= 0) continue;

            CandidateRegion region;
            label[i0] = static_cast<int>(out.size());
            stack.emplace_back(x0, y0);
            while (!stack.empty()) {
                auto [x, y] = stack.back();
                stack.pop_back();
                region.pixels.emplace_back(x, y);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = x + dx, ny = y + dy;
                        if (!mask.in_bounds(nx, ny)) continue;
                        const size_t ni = mask.idx(nx, ny);
                        if (mask.bits[ni] && label[ni] < 0) {
                            label[ni] = label[i0];
                            stack.emplace_back(nx, ny);
                        }
                    }
                }
            }

            region.area = static_cast<int>(region.pixels.size());
            if (region.area < min_area || region.area > max_area) continue;

            std::sort(region.pixels.begin(), region.pixels.end(),
                      [](auto a, auto b) { return a.second != b.second ? a.second < b.second
                                                                       : a.first < b.first; });
            double sx = 0, sy = 0;
            region.x_min = region.x_max = region.pixels[0].first;
            region.y_min = region.y_max = region.pixels[0].second;
            for (auto [x, y] : region.pixels) {
                sx += x;
                sy += y;
                region.x_min = std::min(region.x_min, x);
                region.x_max = std::max(region.x_max, x);
                region.y_min = std::min(region.y_min, y);
                region.y_max = std::max(region.y_max, y);
            }
            region.cx = sx / region.area;
            region.cy = sy / region.area;
            region.source_band = band;
            region.source_plane = plane;
            region.id = hpf_id + ":" + std::to_string(band) + ":" + std::to_string(plane) +
                        ":" + std::to_string(ordinal++);
            out.push_back(std::move(region));
        }
    }
    return out;
}

std::vector<CandidateRegion> detect(const MultispectralHPF& stack, int band, int plane,
                                    const DetectParams& params) {
    if (band < 0 || band >= stack.bands)
        throw BandOutOfRangeError("band " + std::to_string(band) + " out of range");
    if (plane < 0 || plane >= stack.planes)
        throw BandOutOfRangeError("plane " + std::to_string(plane) + " out of range");
    auto [threshold, mask] = otsu_threshold(stack.image(band, plane), params.dark_foreground);
    (void)threshold;
    BinaryMask cleaned = morphological_cleanup(mask, params.open_radius);
    return extract_candidates(cleaned, params.min_area, params.max_area, band, plane, stack.id);
}

std::string candidate_mask_filename(const std::string& candidate_id) {
    std::string name = candidate_id;
    std::replace(name.begin(), name.end(), ':', '_');
    return name + ".rle";
}

namespace {

// Sidecar format: first line "x_min y_min width height", then one line per
// mask row: "y x_start run_length [x_start run_length ...]" in absolute
// coordinates. Rows without foreground are omitted.
void write_mask_rle(const CandidateRegion& region, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UnreadableFileError("cannot write " + path.string());
    out << region.x_min << ' ' << region.y_min << ' ' << (region.x_max - region.x_min + 1)
        << ' ' << (region.y_max - region.y_min + 1) << '\n';
    size_t i = 0;
    while (i < region.pixels.size()) {  // pixels are scanline-sorted
        const int y = region.pixels[i].second;
        out << y;
        while (i < region.pixels.size() && region.pixels[i].second == y) {
            const int start = region.pixels[i].first;
            int len = 1;
            while (i + len < region.pixels.size() && region.pixels[i + len].second == y &&
                   region.pixels[i + len].first == start + len)
                ++len;
            out << ' ' << start << ' ' << len;
            i += len;
        }
        out << '\n';
    }
}

void read_mask_rle(CandidateRegion& region, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UnreadableFileError("cannot read " + path.string());
    int x_min, y_min, w, h;
    if (!(in >> x_min >> y_min >> w >> h))
        throw UnreadableFileError("malformed mask header in " + path.string());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::istringstream row(line);
        int y, start, len;
        row >> y;
        while (row >> start >> len)
            for (int k = 0; k < len; ++k) region.pixels.emplace_back(start + k, y);
    }
}

}  // namespace

void save_candidates(const std::vector<CandidateRegion>& candidates, const fs::path& csv_path,
                     const fs::path& mask_dir) {
    fs::create_directories(mask_dir);
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw UnreadableFileError("cannot write " + csv_path.string());
    out << "id,area,cx,cy,xMin,yMin,xMax,yMax\n";
    for (const auto& c : candidates) {
        out << c.id << ',' << c.area << ',' << format_double(c.cx) << ',' << format_double(c.cy)
            << ',' << c.x_min << ',' << c.y_min << ',' << c.x_max << ',' << c.y_max << '\n';
        write_mask_rle(c, mask_dir / candidate_mask_filename(c.id));
    }
}

std::vector<CandidateRegion> load_candidates(const fs::path& csv_path, const fs::path& mask_dir) {
    std::ifstream in(csv_path);
    if (!in) throw UnreadableFileError("cannot open " + csv_path.string());
    std::vector<CandidateRegion> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || line_no == 1) continue;
        auto f = split_csv_line(line);
        if (f.size() != 8) throw MalformedRowError(line_no, "expected 8 candidate fields");
        CandidateRegion c;
        c.id = trim(f[0]);
        c.area = std::stoi(f[1]);
        c.cx = std::stod(f[2]);
        c.cy = std::stod(f[3]);
        c.x_min = std::stoi(f[4]);
        c.y_min = std::stoi(f[5]);
        c.x_max = std::stoi(f[6]);
        c.y_max = std::stoi(f[7]);
        // id layout: <hpfId>:<band>:<plane>:<ordinal>
        const auto last = c.id.rfind(':');
        const auto mid = c.id.rfind(':', last - 1);
        const auto first = c.id.rfind(':', mid - 1);
        if (last == std::string::npos || mid == std::string::npos || first == std::string::npos)
            throw MalformedRowError(line_no, "candidate id is not hpf:band:plane:ordinal");
        c.source_band = std::stoi(c.id.substr(first + 1, mid - first - 1));
        c.source_plane = std::stoi(c.id.substr(mid + 1, last - mid - 1));
        read_mask_rle(c, mask_dir / candidate_mask_filename(c.id));
        if (static_cast<int>(c.pixels.size()) != c.area)
            throw DimensionMismatchError("mask sidecar area differs from CSV for " + c.id);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace mitoscan
