#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mitoscan/errors.hpp"
#include "mitoscan/png_io.hpp"
#include "mitoscan/rng.hpp"
#include "mitoscan/stack.hpp"
#include "test_util.hpp"

using namespace mitoscan;
namespace fs = std::filesystem;

namespace {

GrayImage random_image(int w, int h, int depth, uint64_t seed) {
    GrayImage img(w, h, depth);
    SplitMix64 rng(seed);
    for (auto& p : img.pixels) p = static_cast<uint16_t>(rng.next() % (img.max_value() + 1));
    return img;
}

MultispectralHPF small_stack(int bands, int planes, int w, int h, uint64_t seed) {
    MultispectralHPF stack;
    stack.id = "hpf0";
    stack.bands = bands;
    stack.planes = planes;
    stack.width = w;
    stack.height = h;
    for (int b = 0; b < bands; ++b)
        for (int p = 0; p < planes; ++p)
            stack.images.push_back(random_image(w, h, 8, seed + b * 100 + p));
    return stack;
}

}  // namespace

TEST_CASE("png round-trip is lossless for 8- and 16-bit images") {
    TempDir dir("png");
    for (int depth : {8, 16}) {
        GrayImage img = random_image(37, 21, depth, 42 + depth);
        const fs::path file = dir.path / ("img" + std::to_string(depth) + ".png");
        write_gray_png(file, img);
        GrayImage back = read_gray_png(file);
        CHECK(back.width == img.width);
        CHECK(back.height == img.height);
        CHECK(back.bit_depth == depth);
        CHECK(back.pixels == img.pixels);
    }
}

TEST_CASE("stack save/load round-trip preserves every intensity") {
    TempDir dir("stack");
    MultispectralHPF stack = small_stack(3, 4, 24, 18, 7);
    save_stack(stack, dir.path);
    MultispectralHPF back = load_stack(dir.path, "hpf0");
    REQUIRE(back.bands == 3);
    REQUIRE(back.planes == 4);
    CHECK(back.width == 24);
    for (int b = 0; b < 3; ++b)
        for (int p = 0; p < 4; ++p)
            CHECK(back.image(b, p).pixels == stack.image(b, p).pixels);
}

TEST_CASE("load_stack reports the missing grid cell") {
    TempDir dir("missing");
    MultispectralHPF stack = small_stack(4, 8, 16, 16, 3);
    save_stack(stack, dir.path);
    fs::remove(dir.path / "hpf0" / "band03_plane07.png");
    try {
        load_stack(dir.path, "hpf0");
        FAIL("expected MissingImageError");
    } catch (const MissingImageError& e) {
        CHECK(e.band == 3);
        CHECK(e.plane == 7);
    }
}

TEST_CASE("load_stack rejects mismatched dimensions") {
    TempDir dir("dims");
    MultispectralHPF stack = small_stack(2, 2, 20, 20, 5);
    save_stack(stack, dir.path);
    write_gray_png(dir.path / "hpf0" / "band00_plane00.png", random_image(8, 8, 8, 1));
    CHECK_THROWS_AS(load_stack(dir.path, "hpf0"), DimensionMismatchError);
}

TEST_CASE("ground truth pixel-list centroid rounds half up per axis") {
    TempDir dir("gt");
    const fs::path csv = dir.path / "mitosis.csv";
    std::ofstream(csv) << "m1,10,10,10,11,11,10,11,11\n";
    GroundTruth gt = load_ground_truth(csv, 100, 100);
    REQUIRE(gt.mitoses.size() == 1);
    CHECK(gt.mitoses[0].cx == 11);  // mean 10.5 rounds up
    CHECK(gt.mitoses[0].cy == 11);
    CHECK(gt.mitoses[0].pixels.size() == 4);
}

TEST_CASE("ground truth accepts centroid-only rows and optional header") {
    TempDir dir("gt2");
    const fs::path csv = dir.path / "mitosis.csv";
    std::ofstream(csv) << "id,x,y\nm1,31.5,12\nm2,4,9\n";
    GroundTruth gt = load_ground_truth(csv, 100, 100);
    REQUIRE(gt.mitoses.size() == 2);
    CHECK(gt.mitoses[0].cx == doctest::Approx(31.5));
    CHECK(gt.mitoses[0].pixels.empty());
}

TEST_CASE("empty ground truth file yields zero mitoses") {
    TempDir dir("gt3");
    const fs::path csv = dir.path / "mitosis.csv";
    std::ofstream(csv) << "";
    CHECK(load_ground_truth(csv).mitoses.empty());
}

TEST_CASE("negative coordinates are rejected") {
    TempDir dir("gt4");
    const fs::path csv = dir.path / "mitosis.csv";
    std::ofstream(csv) << "m1,-3,10\n";
    CHECK_THROWS_AS(load_ground_truth(csv), OutOfBoundsCoordinateError);
}

TEST_CASE("malformed rows carry their line number") {
    TempDir dir("gt5");
    const fs::path csv = dir.path / "mitosis.csv";
    std::ofstream(csv) << "m1,5,6\nm2,abc,9\n";
    try {
        load_ground_truth(csv);
        FAIL("expected MalformedRowError");
    } catch (const MalformedRowError& e) {
        CHECK(e.line_no == 2);
    }
}

TEST_CASE("ground truth save/load round-trip") {
    TempDir dir("gt6");
    GroundTruth gt;
    gt.hpf_id = "h";
    MitosisAnnotation a;
    a.id = "m0";
    a.pixels = {{3, 4}, {4, 4}, {3, 5}, {4, 5}};
    a.cx = 4;  // round half up of 3.5
    a.cy = 5;
    gt.mitoses.push_back(a);
    const fs::path csv = dir.path / "mitosis.csv";
    save_ground_truth(gt, csv);
    GroundTruth back = load_ground_truth(csv, 10, 10);
    REQUIRE(back.mitoses.size() == 1);
    CHECK(back.mitoses[0].cx == 4);
    CHECK(back.mitoses[0].cy == 5);
    CHECK(back.mitoses[0].pixels == a.pixels);
}
