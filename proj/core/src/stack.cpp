#include "mitoscan/stack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "mitoscan/errors.hpp"
#include "mitoscan/png_io.hpp"
#include "mitoscan/util.hpp"

namespace mitoscan {

namespace fs = std::filesystem;

void MultispectralHPF::validate() const {
    if (bands <= 0 || planes <= 0) throw Error("stack must have positive band/plane counts");
    if (microns_per_pixel <= 0) throw Error("microns_per_pixel must be positive");
    if (images.size() != static_cast<size_t>(bands) * planes)
        throw MissingImageError(0, 0);
    for (const auto& img : images) {
        img.validate();
        if (img.width != width || img.height != height)
            throw DimensionMismatchError("stack images differ in dimensions");
    }
}

namespace {

std::string image_filename(int band, int plane) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "band%02d_plane%02d.png", band, plane);
    return buf;
}

// Parses "band<BB>_plane<PP>.png"; returns false for anything else.
bool parse_image_filename(const std::string& name, int& band, int& plane) {
    int b = 0, p = 0;
    char tail = 0;
    if (std::sscanf(name.c_str(), "band%2d_plane%2d.pn%c", &b, &p, &tail) != 3 || tail != 'g')
        return false;
    if (name != image_filename(b, p)) return false;
    band = b;
    plane = p;
    return true;
}

}  // namespace

MultispectralHPF load_stack(const fs::path& root, const std::string& hpf_id,
                            double microns_per_pixel) {
    const fs::path dir = root / hpf_id;
    if (!fs::is_directory(dir)) throw UnreadableFileError("no such stack directory: " + dir.string());

    std::set<int> band_set, plane_set;
    for (const auto& entry : fs::directory_iterator(dir)) {
        int b, p;
        if (entry.is_regular_file() && parse_image_filename(entry.path().filename().string(), b, p)) {
            band_set.insert(b);
            plane_set.insert(p);
        }
    }
    if (band_set.empty()) throw UnreadableFileError("no stack images under " + dir.string());

    MultispectralHPF stack;
    stack.id = hpf_id;
    stack.bands = *band_set.rbegin() + 1;
    stack.planes = *plane_set.rbegin() + 1;
    stack.microns_per_pixel = microns_per_pixel;
    stack.images.resize(static_cast<size_t>(stack.bands) * stack.planes);

    for (int b = 0; b < stack.bands; ++b) {
        for (int p = 0; p < stack.planes; ++p) {
            const fs::path file = dir / image_filename(b, p);
            if (!fs::exists(file)) throw MissingImageError(b, p);
            GrayImage img = read_gray_png(file);
            if (b == 0 && p == 0) {
                stack.width = img.width;
                stack.height = img.height;
            } else if (img.width != stack.width || img.height != stack.height) {
                throw DimensionMismatchError(file.string() + ": expected " +
                                             std::to_string(stack.width) + "x" +
                                             std::to_string(stack.height));
            }
            stack.image(b, p) = std::move(img);
        }
    }
    stack.validate();
    return stack;
}

void save_stack(const MultispectralHPF& stack, const fs::path& root) {
    stack.validate();
    const fs::path dir = root / stack.id;
    fs::create_directories(dir);
    for (int b = 0; b < stack.bands; ++b)
        for (int p = 0; p < stack.planes; ++p)
            write_gray_png(dir / image_filename(b, p), stack.image(b, p));
}

namespace {

// Round half up, applied per axis at the ingestion boundary only.
double round_half_up(double v) { return std::floor(v + 0.5); }

}  // namespace

GroundTruth load_ground_truth(const fs::path& csv_path, int image_width, int image_height) {
    std::ifstream in(csv_path);
    if (!in) throw UnreadableFileError("cannot open " + csv_path.string());

    GroundTruth gt;
    gt.hpf_id = csv_path.parent_path().filename().string();

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() >= 2 && line_no == 1 && !is_numeric(trim(fields[1]))) continue;  // header

        if (fields.size() < 3 || fields.size() % 2 == 0)
            throw MalformedRowError(line_no, "expected id,cx,cy or id followed by pixel pairs");

        MitosisAnnotation m;
        m.id = trim(fields[0]);
        std::vector<double> nums;
        nums.reserve(fields.size() - 1);
        for (size_t i = 1; i < fields.size(); ++i) {
            const std::string f = trim(fields[i]);
            if (!is_numeric(f)) throw MalformedRowError(line_no, "non-numeric coordinate '" + f + "'");
            nums.push_back(std::stod(f));
        }

        if (nums.size() == 2) {
            m.cx = nums[0];
            m.cy = nums[1];
        } else {
            double sx = 0, sy = 0;
            for (size_t i = 0; i + 1 < nums.size(); i += 2) {
                int px = static_cast<int>(std::llround(nums[i]));
                int py = static_cast<int>(std::llround(nums[i + 1]));
                m.pixels.emplace_back(px, py);
                sx += px;
                sy += py;
            }
            m.cx = round_half_up(sx / m.pixels.size());
            m.cy = round_half_up(sy / m.pixels.size());
        }

        auto check = [&](double x, double y) {
            if (x < 0 || y < 0 ||
                (image_width > 0 && x >= image_width) ||
                (image_height > 0 && y >= image_height))
                throw OutOfBoundsCoordinateError("line " + std::to_string(line_no) +
                                                 ": coordinate (" + format_double(x) + "," +
                                                 format_double(y) + ") outside image");
        };
        check(m.cx, m.cy);
        for (auto [px, py] : m.pixels) check(px, py);

        gt.mitoses.push_back(std::move(m));
    }
    return gt;
}

void save_ground_truth(const GroundTruth& gt, const fs::path& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw UnreadableFileError("cannot open " + csv_path.string() + " for writing");
    for (const auto& m : gt.mitoses) {
        out << m.id;
        if (m.pixels.empty()) {
            out << ',' << format_double(m.cx) << ',' << format_double(m.cy);
        } else {
            for (auto [x, y] : m.pixels) out << ',' << x << ',' << y;
        }
        out << '\n';
    }
}

}  // namespace mitoscan
