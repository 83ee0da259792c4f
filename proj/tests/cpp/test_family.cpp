#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "tubelab/family.h"
#include "tubelab/generators.h"

using namespace tubelab;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("rle encode/decode round-trips sorted voxel lists") {
    const std::vector<uint64_t> vox{1, 2, 3, 7, 10, 11, 12, 13, 40};
    const std::vector<uint64_t> runs = rle_encode(vox);
    CHECK(runs.size() < 2 * vox.size());
    CHECK(rle_decode(runs) == vox);
    CHECK(rle_decode(rle_encode({})).empty());
    CHECK(rle_decode(rle_encode({5})) == std::vector<uint64_t>{5});
    // a contiguous run compresses to one pair
    const std::vector<uint64_t> contig{100, 101, 102, 103, 104};
    CHECK(rle_encode(contig).size() == 2);
}

TEST_CASE("family save/load round-trip preserves everything") {
    family_spec s;
    s.kind = family_kind::random_uniform;
    s.count = 40;
    s.delta = 1.0 / 32;
    s.seed = 99;
    tube_family f = generate_family(s);
    apply_shading(f, shading_mode::random_subset, 0.5, 4.0, 7);

    const std::string path = temp_path("tubelab_family_roundtrip.json");
    save_family(path, f);
    const tube_family g = load_family(path);
    std::remove(path.c_str());

    CHECK(g.delta == f.delta);
    CHECK(g.kind == f.kind);
    CHECK(g.seed == f.seed);
    CHECK(g.lambda == f.lambda);
    CHECK(g.shaded == f.shaded);
    CHECK(g.grid.h == f.grid.h);
    CHECK(g.grid.n == f.grid.n);
    REQUIRE(g.tubes.size() == f.tubes.size());
    for (size_t i = 0; i < f.tubes.size(); i++) {
        CHECK(norm(g.tubes[i].mid - f.tubes[i].mid) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(norm(g.tubes[i].dir - f.tubes[i].dir) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(g.tubes[i].delta == f.tubes[i].delta);
    }
    REQUIRE(g.shadings.size() == f.shadings.size());
    for (size_t i = 0; i < f.shadings.size(); i++) {
        CHECK(g.shadings[i].body == f.shadings[i].body);
        CHECK(g.shadings[i].vox == f.shadings[i].vox);
    }
    CHECK_NOTHROW(g.validate());
}

TEST_CASE("loading a missing file raises io_error") {
    CHECK_THROWS_AS(load_family("/nonexistent/tubelab.json"), io_error);
}

TEST_CASE("validate rejects misaligned shadings") {
    family_spec s;
    s.kind = family_kind::random_uniform;
    s.count = 5;
    tube_family f = generate_family(s);
    apply_shading(f, shading_mode::full, 1.0, 4.0, 1);
    f.shadings[2].body = 0;   // break alignment
    CHECK_THROWS_AS(f.validate(), validation_error);
}

TEST_CASE("mass accounting") {
    family_spec s;
    s.kind = family_kind::random_uniform;
    s.count = 12;
    s.delta = 1.0 / 16;
    tube_family f = generate_family(s);
    CHECK(f.tube_volume() == 4 * s.delta * s.delta);
    CHECK(f.total_volume() == doctest::Approx(12 * 4 * s.delta * s.delta));
    CHECK(f.bodies().size() == 12);

    apply_shading(f, shading_mode::full, 1.0, 4.0, 1);
    double sum = 0;
    for (const shading& y : f.shadings) sum += y.measure(f.grid);
    CHECK(f.total_shading() == doctest::Approx(sum));
    // full shading of a tube approximates the tube volume
    CHECK(f.total_shading() == doctest::Approx(f.total_volume()).epsilon(0.2));
}
