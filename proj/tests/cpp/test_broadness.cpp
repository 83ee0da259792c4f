#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tubelab/broadness.h"
#include "tubelab/generators.h"
#include "tubelab/rng.h"

using namespace tubelab;

namespace {

std::vector<vec3> fibonacci_net(int n, uint64_t seed) {
    rng r(seed);
    const mat3 rot = rotation_about(r.unit_vector(), r.uniform(0, 2 * std::numbers::pi));
    std::vector<vec3> dirs;
    const double ga = 2.399963229728653;
    for (int i = 0; i < n; i++) {
        const double z = -1.0 + 2.0 * (i + 0.5) / n;
        const double rad = std::sqrt(std::max(0.0, 1 - z * z));
        dirs.push_back(rot.apply(vec3{rad * std::cos(ga * i), rad * std::sin(ga * i), z}));
    }
    return dirs;
}

std::vector<vec3> cap_dirs(const vec3& v, double rho, int n, uint64_t seed) {
    rng r(seed);
    vec3 e1, e2;
    frame_from_axis(v, e1, e2);
    std::vector<vec3> out;
    for (int i = 0; i < n; i++) {
        const double theta = rho * std::sqrt(r.uniform());
        const double a = r.uniform(0, 2 * std::numbers::pi);
        out.push_back(normalized(v * std::cos(theta) + (e1 * std::cos(a) + e2 * std::sin(a)) * std::sin(theta)));
    }
    return out;
}

} // namespace

TEST_CASE("a repeated direction is never broad") {
    const std::vector<vec3> dirs(100, vec3{0, 0, 1});
    broad_params p;
    p.beta = 0.5;
    p.delta = 1.0 / 64;
    p.error = 1.0;
    const broad_report rep = is_broad(dirs, p);
    CHECK(!rep.broad);
    CHECK(rep.worst.count == 100);
    CHECK(rep.worst.allowed < 100.0);
    CHECK(rep.worst.r <= 2 * p.delta);
}

TEST_CASE("a uniform net is broad with a small error") {
    broad_params p;
    p.beta = 0.5;
    p.delta = 1.0 / 64;
    p.error = 2.0;
    CHECK(is_broad(fibonacci_net(256, 1), p).broad);
}

TEST_CASE("cap-relative broadness rescales the radius") {
    const vec3 v = normalized(vec3{1, 1, 1});
    const double rho = 0.25;
    const std::vector<vec3> dirs = cap_dirs(v, rho, 64, 5);
    // relative to its own cap the cluster is spread out
    broad_params rel;
    rel.beta = 1.0;
    rel.delta = 1.0 / 64;
    rel.error = 4.0;
    CHECK(is_broad(dirs, rel, direction_cap{v, rho, false}).broad);
    // on the whole sphere the same set is concentrated
    broad_params whole = rel;
    whole.error = 1.0;
    const broad_report rep = is_broad(dirs, whole);
    CHECK(!rep.broad);
    CHECK(rep.worst.count >= 60);   // nearly the whole cluster in one witness ball
}

TEST_CASE("a union of broad parts stays broad at the shared error") {
    broad_params p;
    p.beta = 0.5;
    p.delta = 1.0 / 64;
    p.error = 3.0;
    const std::vector<std::vector<vec3>> parts{fibonacci_net(256, 2), fibonacci_net(256, 3),
                                               fibonacci_net(128, 4)};
    for (const auto& part : parts) CHECK(is_broad(part, p).broad);
    CHECK(union_is_broad(parts, p, direction_cap{}).broad);
}

TEST_CASE("broad piece extraction keeps its documented floors") {
    const double delta = 1.0 / 64;
    const double beta = 0.5;
    int shape = 0;
    for (uint64_t seed : {11ull, 12ull, 13ull}) {
        std::vector<vec3> dirs;
        if (shape == 0) {
            dirs = fibonacci_net(256, seed);
        } else if (shape == 1) {
            rng r(seed);
            for (int i = 0; i < 256; i++) dirs.push_back(r.unit_vector());
        } else {
            dirs = fibonacci_net(128, seed);
            const std::vector<vec3> cl = cap_dirs(vec3{0, 0, 1}, 0.2, 128, seed + 1);
            dirs.insert(dirs.end(), cl.begin(), cl.end());
        }
        shape++;
        CAPTURE(shape);

        const broad_pieces_result res = find_broad_pieces(dirs, delta, beta);
        REQUIRE(!res.pieces.empty());
        CHECK(res.total == dirs.size());
        CHECK(static_cast<double>(res.kept) >=
              static_cast<double>(dirs.size()) / (4 * std::log2(1.0 / delta)));

        const double floor = 0.25 * std::pow(res.rho, beta) * static_cast<double>(dirs.size());
        size_t member_sum = 0;
        for (const broad_piece& pc : res.pieces) {
            CHECK(static_cast<double>(pc.members.size()) >= floor);
            CHECK(pc.r >= res.rho / 2 - 1e-12);
            CHECK(pc.r <= res.rho + 1e-12);
            member_sum += pc.members.size();
            std::vector<vec3> sub;
            for (int m : pc.members) sub.push_back(dirs[static_cast<size_t>(m)]);
            broad_params bp;
            bp.beta = beta;
            bp.delta = delta;
            bp.error = 100;
            CHECK(is_broad(sub, bp, direction_cap{pc.center, pc.r, false}).broad);
        }
        CHECK(member_sum == res.kept);
    }
}

TEST_CASE("full shadings are already regular") {
    const convex_body w = convex_body::make_prism(vec3{0.1, 0, 0}, mat3::identity(), vec3{0.05, 0.1, 0.4});
    const voxel_grid g = voxel_grid::for_delta(1.0 / 32, 4.0);
    shading y;
    y.body = 0;
    y.vox = voxelize(w, g);
    CHECK(is_regular_shading(w, y, g, 1.0 / 32));
    const regular_report rep = regularize_shading(w, y, g, 1.0 / 32);
    CHECK(rep.removed == 0);
    CHECK(rep.verified);
    CHECK(rep.kept.vox == y.vox);
}

TEST_CASE("regularization deletes an isolated speck and keeps half the mass") {
    const convex_body w = convex_body::make_prism(vec3{}, mat3::identity(), vec3{0.05, 0.1, 0.4});
    const voxel_grid g = voxel_grid::for_delta(1.0 / 32, 4.0);
    const std::vector<uint64_t> all = voxelize(w, g);

    // dense quarter at the low end plus one voxel at the far tip
    shading y;
    y.body = 0;
    uint64_t speck = all.front();
    double top = -1e30;
    for (uint64_t v : all) {
        const double z = g.cell_center(v).z;
        if (z <= -0.2) y.vox.push_back(v);
        if (z > top) {
            top = z;
            speck = v;
        }
    }
    y.vox.push_back(speck);
    std::sort(y.vox.begin(), y.vox.end());

    const regular_report rep = regularize_shading(w, y, g, 1.0 / 32);
    CHECK(rep.verified);
    CHECK(rep.removed >= 1);
    CHECK(!std::binary_search(rep.kept.vox.begin(), rep.kept.vox.end(), speck));
    CHECK(rep.kept.vox.size() * 2 >= y.vox.size());
    CHECK(is_regular_shading(w, rep.kept, g, 1.0 / 32));
    // kept voxels are a subset of the input shading
    for (uint64_t v : rep.kept.vox) CHECK(std::binary_search(y.vox.begin(), y.vox.end(), v));
}

TEST_CASE("scale splitting takes branch A on a high-multiplicity tree") {
    family_spec s;
    s.kind = family_kind::sticky;
    s.delta = 1.0 / 32;
    s.branching = 4;
    s.seed = 3;
    tube_family f = generate_family(s);
    apply_shading(f, shading_mode::full, 1.0, 2.0, 4);
    broad_scale_params p;
    p.omega = 1.0;
    const broad_scale_result res = find_broad_scale(f, p);
    CHECK(res.branch == 'A');
    CHECK(res.pass);
    CHECK(res.certificate <= 1.0);
}

TEST_CASE("scale splitting finds broad covers for separated directions") {
    family_spec s;
    s.kind = family_kind::direction_separated;
    s.delta = 1.0 / 16;
    s.seed = 6;
    tube_family f = generate_family(s);
    apply_shading(f, shading_mode::full, 1.0, 2.0, 7);
    broad_scale_params p;
    p.omega = 1.0;
    const broad_scale_result res = find_broad_scale(f, p);
    CHECK(res.pass);
    if (res.branch == 'B') {
        CHECK(res.rho >= 4 * f.delta - 1e-12);
        CHECK(res.refined_fraction > 0);
        CHECK(!res.covers.empty());
        // refined members exist and point into the family
        size_t total = 0;
        for (const auto& lst : res.cover_members) total += lst.size();
        CHECK(total >= static_cast<size_t>(res.refined_fraction * static_cast<double>(f.tubes.size()) - 1));
    }
}

TEST_CASE("scale splitting requires shadings") {
    family_spec s;
    s.kind = family_kind::random_uniform;
    s.count = 8;
    const tube_family f = generate_family(s);
    broad_scale_params p;
    CHECK_THROWS_AS(find_broad_scale(f, p), validation_error);
}
