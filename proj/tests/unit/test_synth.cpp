#include <doctest.h>

#include <set>

#include "mitoscan/errors.hpp"
#include "mitoscan/focus.hpp"
#include "mitoscan/synth.hpp"
#include "test_util.hpp"

using namespace mitoscan;

namespace {

SynthSpec small_spec() {
    SynthSpec spec;
    spec.width = 200;
    spec.height = 200;
    spec.bands = 3;
    spec.planes = 5;
    spec.n_mitoses = 4;
    spec.mitosis_area_min = 200;
    spec.mitosis_area_max = 320;
    spec.n_distractors = 5;
    spec.distractor_area_min = 120;
    spec.distractor_area_max = 380;
    spec.blur_sigma_by_plane = {2.1, 1.4, 0.8, 0.0, 0.4};
    spec.seed = 7;
    return spec;
}

}  // namespace

TEST_CASE("an empty flat spec yields constant background images") {
    SynthSpec spec = small_spec();
    spec.n_mitoses = 0;
    spec.n_distractors = 0;
    spec.noise_sigma = 0;
    spec.texture_contrast = 0;
    SynthResult r = generate(spec);
    for (const auto& img : r.stack.images)
        for (uint16_t v : img.pixels) CHECK(v == 200);
    CHECK(r.gt.mitoses.empty());
}

TEST_CASE("identical spec and seed give bit-identical output") {
    SynthSpec spec = small_spec();
    SynthResult a = generate(spec);
    SynthResult b = generate(spec);
    REQUIRE(a.stack.images.size() == b.stack.images.size());
    for (size_t i = 0; i < a.stack.images.size(); ++i)
        CHECK(a.stack.images[i].pixels == b.stack.images[i].pixels);
    REQUIRE(a.gt.mitoses.size() == b.gt.mitoses.size());
    for (size_t i = 0; i < a.gt.mitoses.size(); ++i) {
        CHECK(a.gt.mitoses[i].cx == b.gt.mitoses[i].cx);
        CHECK(a.gt.mitoses[i].pixels == b.gt.mitoses[i].pixels);
    }
}

TEST_CASE("planted blobs respect the area range and never overlap") {
    SynthSpec spec = small_spec();
    SynthResult r = generate(spec);
    REQUIRE(r.gt.mitoses.size() == 4);
    std::set<std::pair<int, int>> seen;
    for (const auto& m : r.gt.mitoses) {
        CHECK(m.pixels.size() >= 200);
        CHECK(m.pixels.size() <= 320);
        for (auto px : m.pixels) CHECK(seen.insert(px).second);
    }
}

TEST_CASE("explicit areas are planted exactly") {
    SynthSpec spec = small_spec();
    spec.mitosis_areas = {150, 200, 5405, 5406};
    spec.width = spec.height = 400;
    spec.n_distractors = 0;
    spec.noise_sigma = 0;
    spec.texture_contrast = 0;
    SynthResult r = generate(spec);
    REQUIRE(r.gt.mitoses.size() == 4);
    CHECK(r.gt.mitoses[0].pixels.size() == 150);
    CHECK(r.gt.mitoses[1].pixels.size() == 200);
    CHECK(r.gt.mitoses[2].pixels.size() == 5405);
    CHECK(r.gt.mitoses[3].pixels.size() == 5406);
}

TEST_CASE("average gradient peaks at the least-blurred plane for every band") {
    SynthSpec spec = small_spec();
    SynthResult r = generate(spec);
    for (int b = 0; b < spec.bands; ++b) {
        FocusRanking ranking = rank_planes(r.stack, b, spec.planes);
        CHECK(ranking.selected.front() == 3);  // sigma 0.0 lives at plane 3

        // Monotone: strictly smaller sigma means strictly larger gradient.
        for (int p = 0; p < spec.planes; ++p)
            for (int q = 0; q < spec.planes; ++q)
                if (spec.blur_sigma_by_plane[p] < spec.blur_sigma_by_plane[q])
                    CHECK(ranking.scores[p].average_gradient >
                          ranking.scores[q].average_gradient);
    }
}

TEST_CASE("infeasible placement is reported") {
    SynthSpec spec = small_spec();
    spec.width = spec.height = 64;
    spec.n_mitoses = 200;
    CHECK_THROWS_AS(generate(spec), InfeasiblePlacementError);
}

TEST_CASE("spec invariants are validated") {
    SynthSpec spec = small_spec();
    SUBCASE("blur schedule must match plane count") {
        spec.blur_sigma_by_plane.pop_back();
        CHECK_THROWS_AS(generate(spec), InvalidSpecError);
    }
    SUBCASE("blur minimum must be unique") {
        spec.blur_sigma_by_plane = {1.0, 0.0, 0.0, 1.0, 2.0};
        CHECK_THROWS_AS(generate(spec), InvalidSpecError);
    }
    SUBCASE("area range must be sane") {
        spec.mitosis_area_min = 500;
        spec.mitosis_area_max = 100;
        CHECK_THROWS_AS(generate(spec), InvalidSpecError);
    }
}

TEST_CASE("the default blur schedule has a unique minimum at plane 6") {
    const auto sigmas = default_blur_schedule(17);
    REQUIRE(sigmas.size() == 17);
    for (int p = 0; p < 17; ++p)
        if (p != 6) CHECK(sigmas[p] > sigmas[6]);
    CHECK(sigmas[6] == 0.0);
}

TEST_CASE("synth spec file round-trips") {
    TempDir dir("spec");
    SynthSpec spec = small_spec();
    spec.mitosis_areas = {250, 333};
    save_synth_spec(spec, dir.path / "spec.txt");
    SynthSpec back = load_synth_spec(dir.path / "spec.txt");
    CHECK(back.width == spec.width);
    CHECK(back.planes == spec.planes);
    CHECK(back.mitosis_areas == spec.mitosis_areas);
    CHECK(back.blur_sigma_by_plane == spec.blur_sigma_by_plane);
    CHECK(back.seed == spec.seed);
    CHECK(back.white_band_texture_scale == spec.white_band_texture_scale);
}
