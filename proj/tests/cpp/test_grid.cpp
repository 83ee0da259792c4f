#include <doctest.h>

#include <cmath>

#include "tubelab/grid.h"
#include "tubelab/rng.h"

using namespace tubelab;

TEST_CASE("unit cube voxelizes to an exact cell count") {
    voxel_grid g;
    g.h = 1.0 / 16;
    g.n = 64;
    const convex_body cube = convex_body::cube(vec3{}, 0.5);
    const auto vox = voxelize(cube, g);
    CHECK(vox.size() == 16 * 16 * 16);
    shading s;
    s.vox = vox;
    CHECK(s.measure(g) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(voxel_count(cube, g) == vox.size());
}

TEST_CASE("pack and unpack round-trip") {
    voxel_grid g;
    g.h = 1.0 / 8;
    g.n = 32;
    rng r(2);
    for (int t = 0; t < 200; t++) {
        const int64_t i = static_cast<int64_t>(r.below(32)), j = static_cast<int64_t>(r.below(32)),
                      k = static_cast<int64_t>(r.below(32));
        int64_t i2, j2, k2;
        g.unpack(g.pack(i, j, k), i2, j2, k2);
        CHECK(i == i2);
        CHECK(j == j2);
        CHECK(k == k2);
    }
    // cell centers sit at half-offsets from the origin
    const vec3 c = g.cell_center(g.pack(0, 0, 0));
    CHECK(c.x == doctest::Approx(-2 + g.h / 2));
}

TEST_CASE("for_delta builds a measurable grid") {
    const voxel_grid g = voxel_grid::for_delta(1.0 / 64, 4.0);
    CHECK(g.h == doctest::Approx(1.0 / 256));
    CHECK(g.n * g.h >= 4.0 - 1e-12);   // covers [-2,2]
    // measuring a tube thinner than the cell is refused
    delta_tube t;
    t.delta = 1.0 / 1024;
    CHECK_THROWS_AS(voxelize(t, g), validation_error);
}

TEST_CASE("tube voxel measure approximates 4 delta^2") {
    const double d = 1.0 / 32;
    delta_tube t;
    t.delta = d;
    t.dir = normalized(vec3{1, 1, 1});
    const voxel_grid g = voxel_grid::for_delta(d, 4.0);
    shading s;
    s.vox = voxelize(t, g);
    CHECK(s.measure(g) == doctest::Approx(4 * d * d).epsilon(0.15));
}

TEST_CASE("sorted voxel lists intersect exactly") {
    std::vector<uint64_t> a{1, 3, 5, 7, 9}, b{2, 3, 4, 7, 10};
    CHECK(intersection_count(a, b) == 2);
    CHECK(intersection_count(a, a) == a.size());
    CHECK(intersection_count(a, {}) == 0);
}

TEST_CASE("essentially_distinct separates far tubes and merges near-coincident ones") {
    const double d = 1.0 / 32;
    const voxel_grid g = voxel_grid::for_delta(d, 4.0);
    delta_tube a, b;
    a.delta = b.delta = d;
    a.dir = b.dir = vec3{0, 0, 1};
    b.mid = vec3{10 * d, 0, 0};
    CHECK(essentially_distinct(a, b, g));          // disjoint parallel tubes
    b.mid = vec3{0, 0, 0.1};
    CHECK(!essentially_distinct(a, b, g));         // coaxial with 90% overlap
    CHECK(!essentially_distinct(a, a, g));
}

TEST_CASE("bit_grid counts set cells within its window") {
    voxel_grid g;
    g.h = 1.0 / 8;
    g.n = 32;
    aabb box;
    box.grow(vec3{-0.5, -0.5, -0.5});
    box.grow(vec3{0.5, 0.5, 0.5});
    bit_grid bits(g, box);
    CHECK(bits.count() == 0);
    const convex_body cube = convex_body::cube(vec3{}, 0.25);
    voxelize_into(cube, bits);
    CHECK(bits.count() == voxel_count(cube, g));
    // setting the same cells again does not change the count
    voxelize_into(cube, bits);
    CHECK(bits.count() == voxel_count(cube, g));
}

TEST_CASE("remove_voxels_if filters by cell center") {
    voxel_grid g;
    g.h = 1.0 / 8;
    g.n = 32;
    shading s;
    s.vox = voxelize(convex_body::cube(vec3{}, 0.5), g);
    const size_t before = s.vox.size();
    const size_t removed = remove_voxels_if(s, g, [](const vec3& p) { return p.x > 0; });
    CHECK(removed > 0);
    CHECK(s.vox.size() + removed == before);
    for (uint64_t v : s.vox) CHECK(g.cell_center(v).x <= 0);
}

TEST_CASE("voxel_bounds wraps the cell centers") {
    voxel_grid g;
    g.h = 1.0 / 8;
    g.n = 32;
    const auto vox = voxelize(convex_body::cube(vec3{0.25, 0, 0}, 0.25), g);
    const aabb box = voxel_bounds(vox, g);
    for (uint64_t v : vox) {
        const vec3 c = g.cell_center(v);
        for (int i = 0; i < 3; i++) {
            CHECK(c[i] >= box.lo[i] - 1e-12);
            CHECK(c[i] <= box.hi[i] + 1e-12);
        }
    }
}
