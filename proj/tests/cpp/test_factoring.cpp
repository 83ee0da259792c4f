#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tubelab/factoring.h"
#include "tubelab/generators.h"
#include "tubelab/rng.h"

using namespace tubelab;

namespace {

// exact integer forms of the pruning guarantees, thresholds from the input
bool prune_is_valid(const bipartite_graph& g, const prune_result& res, bool check_induced) {
    const size_t e0 = g.edges.size();
    if (2 * res.edges.size() < e0) return false;
    std::vector<int> dl(static_cast<size_t>(g.n_left), 0), dr(static_cast<size_t>(g.n_right), 0);
    std::vector<char> kl(static_cast<size_t>(g.n_left), 0), kr(static_cast<size_t>(g.n_right), 0);
    for (int v : res.left) kl[static_cast<size_t>(v)] = 1;
    for (int v : res.right) kr[static_cast<size_t>(v)] = 1;
    for (const auto& [u, v] : res.edges) {
        if (!kl[static_cast<size_t>(u)] || !kr[static_cast<size_t>(v)]) return false;
        dl[static_cast<size_t>(u)]++;
        dr[static_cast<size_t>(v)]++;
    }
    for (int v : res.left) {
        if (4ULL * static_cast<uint64_t>(g.n_left) * static_cast<uint64_t>(dl[static_cast<size_t>(v)]) < e0)
            return false;
    }
    for (int v : res.right) {
        if (4ULL * static_cast<uint64_t>(g.n_right) * static_cast<uint64_t>(dr[static_cast<size_t>(v)]) < e0)
            return false;
    }
    if (check_induced) {
        std::vector<std::pair<int, int>> want, got = res.edges;
        for (const auto& [u, v] : g.edges) {
            if (kl[static_cast<size_t>(u)] && kr[static_cast<size_t>(v)]) want.emplace_back(u, v);
        }
        std::sort(want.begin(), want.end());
        std::sort(got.begin(), got.end());
        if (want != got) return false;
    }
    return true;
}

tube_family coplanar_shaded(int n, double delta, uint64_t seed) {
    tube_family f;
    f.delta = delta;
    f.kind = "custom";
    f.seed = seed;
    rng r(seed);
    for (int i = 0; i < n; i++) {
        delta_tube t;
        t.delta = delta;
        const double a = r.uniform(0, std::numbers::pi);
        t.dir = vec3{std::cos(a), std::sin(a), 0};
        t.mid = vec3{r.uniform(-0.2, 0.2), r.uniform(-0.2, 0.2), 0};
        f.tubes.push_back(t);
    }
    apply_shading(f, shading_mode::full, 1.0, 2.0, seed + 1);
    return f;
}

} // namespace

TEST_CASE("pruning keeps balanced graphs untouched") {
    bipartite_graph k22;
    k22.n_left = k22.n_right = 2;
    k22.edges = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const prune_result res = prune_bipartite(k22);
    CHECK(res.left.size() == 2);
    CHECK(res.right.size() == 2);
    CHECK(res.edges.size() == 4);

    bipartite_graph star;
    star.n_left = 1;
    star.n_right = 6;
    for (int j = 0; j < 6; j++) star.edges.emplace_back(0, j);
    const prune_result sres = prune_bipartite(star);
    CHECK(sres.edges.size() == 6);
    CHECK(prune_is_valid(star, sres, true));
}

TEST_CASE("pruning bounds hold on random graphs, induced-exact when small") {
    rng r(21);
    for (int trial = 0; trial < 60; trial++) {
        bipartite_graph g;
        const int max_v = trial < 30 ? 12 : 80;
        g.n_left = 1 + static_cast<int>(r.below(static_cast<uint64_t>(max_v / 2)));
        g.n_right = 1 + static_cast<int>(r.below(static_cast<uint64_t>(max_v / 2)));
        const double p = r.uniform(0.05, 0.6);
        for (int i = 0; i < g.n_left; i++) {
            for (int j = 0; j < g.n_right; j++) {
                if (r.uniform() < p) g.edges.emplace_back(i, j);
            }
        }
        CAPTURE(trial);
        CHECK(prune_is_valid(g, prune_bipartite(g), true));
    }
    // the empty graph survives trivially
    bipartite_graph empty;
    empty.n_left = 3;
    empty.n_right = 3;
    CHECK(prune_bipartite(empty).edges.empty());
}

TEST_CASE("factor_convex on a single tube is the identity factorization") {
    delta_tube t;
    t.delta = 1.0 / 64;
    t.dir = normalized(vec3{0.2, -0.1, 1});
    factor_params p;
    p.cands.delta = t.delta;
    const convex_factor_result res = factor_convex({t.body()}, t.delta, p);
    CHECK(res.ok);
    CHECK(res.kept == std::vector<int>{0});
    CHECK(res.achieved_K <= 8.0);
    for (const conclusion& c : res.conclusions) {
        CAPTURE(c.name);
        CHECK(c.ok);
    }
}

TEST_CASE("factor_convex recovers planted prism structure") {
    family_spec s;
    s.kind = family_kind::prism_clustered;
    s.delta = 1.0 / 64;
    s.planted = 4;
    s.per_prism = 12;
    s.seed = 31;
    const tube_family f = generate_family(s);
    factor_params p;
    p.cands.delta = f.delta;
    p.cands.seed = 77;
    p.k_cap = 100;
    const convex_factor_result res = factor_convex(f.bodies(), f.delta, p);
    CHECK(res.ok);
    CHECK(res.achieved_K <= 100.0);
    CHECK(res.kept.size() >= f.tubes.size() / 2);
    REQUIRE(!res.covers.empty());
    REQUIRE(res.cover_members.size() == res.covers.size());
    const std::vector<convex_body> bodies = f.bodies();
    size_t covered = 0;
    for (size_t ci = 0; ci < res.covers.size(); ci++) {
        for (int m : res.cover_members[ci]) {
            CHECK(contains_body(bodies[static_cast<size_t>(m)], res.covers[ci], 2 * p.slack));
            covered++;
        }
        // forced common dyadic shape across covers
        CHECK(res.covers[ci].same_dyadic_shape(res.covers[0], 2.0));
    }
    CHECK(covered >= res.kept.size());
    for (const conclusion& c : res.conclusions) {
        CAPTURE(c.name);
        CHECK(c.ok);
    }
}

TEST_CASE("brunn envelope near-containment certificate") {
    // a cube overlapping a thin plane neighborhood spills at most 10 s / t out
    const convex_body cube = convex_body::cube(vec3{}, 0.2);
    const brunn_report full = brunn_envelope(cube, vec3{0, 0, 1}, 0.0, 0.25, 4.0);
    CHECK(full.t == doctest::Approx(1.0).epsilon(0.02));
    CHECK(full.contained);

    const brunn_report thin = brunn_envelope(cube, vec3{0, 0, 1}, 0.0, 0.02, 4.0);
    CHECK(thin.t == doctest::Approx(0.1).epsilon(0.15));
    CHECK(thin.halfwidth == doctest::Approx(10 * 0.02 / thin.t).epsilon(1e-9));
    CHECK(thin.reach == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(thin.contained);   // 10 s / t = 2 >> 0.2

    // an offset plane with a tiny window still certifies containment
    const convex_body box = convex_body::make_prism(vec3{0, 0, 0.2}, mat3::identity(), vec3{0.1, 0.1, 0.3});
    const brunn_report off = brunn_envelope(box, vec3{0, 0, 1}, 0.0, 0.05, 4.0);
    CHECK(off.t > 0);
    CHECK(off.contained);
}

TEST_CASE("factor_slab collapses a coplanar family into one clean group") {
    const tube_family f = coplanar_shaded(15, 1.0 / 32, 8);
    slab_factor_params p;
    p.sweep.delta = f.delta;
    p.sweep.seed = 5;
    const slab_factor_result res = factor_slab(f, p);
    CHECK(res.ok);
    CHECK(res.retention >= 0.5);
    CHECK(res.retention <= 1.0 + 1e-9);
    REQUIRE(!res.groups.empty());

    std::vector<uint64_t> all;
    size_t member_total = 0;
    for (const slab_group& g : res.groups) {
        CHECK(g.constant_ok);
        CHECK(g.rescaled_constant <= g.rescaled_bound);
        CHECK(g.half_thickness > 0);
        member_total += g.members.size();
        std::vector<uint64_t> mine;
        for (const shading& y : g.shadings) mine.insert(mine.end(), y.vox.begin(), y.vox.end());
        std::sort(mine.begin(), mine.end());
        mine.erase(std::unique(mine.begin(), mine.end()), mine.end());
        all.insert(all.end(), mine.begin(), mine.end());
        for (int m : g.members) {
            CHECK(m >= 0);
            CHECK(m < static_cast<int>(f.tubes.size()));
        }
    }
    CHECK(member_total <= f.tubes.size());
    // across groups the shaded voxels are exactly disjoint
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
}

TEST_CASE("factor_slab needs a shaded family") {
    family_spec s;
    s.kind = family_kind::random_uniform;
    s.count = 10;
    tube_family f = generate_family(s);
    slab_factor_params p;
    p.sweep.delta = f.delta;
    CHECK_THROWS_AS(factor_slab(f, p), validation_error);
}

TEST_CASE("rigid factorization with one motion is the identity") {
    family_spec s;
    s.kind = family_kind::random_uniform;
    s.count = 16;
    s.delta = 1.0 / 8;
    s.seed = 12;
    const std::vector<delta_tube> fam = generate_family(s).tubes;
    rigid_params p;
    p.cands.delta = s.delta;
    // rho^2 <= m delta^2 forces a single motion
    const rigid_factor_result res = random_rigid_factor({fam, fam}, s.delta, 1.0 / 8, 3, p);
    CHECK(res.target_count == 1);
    CHECK(res.success);
    CHECK(res.rounds == 0);
    REQUIRE(res.motions.size() == 1);
    CHECK(res.motions[0].displacement_bound == 0.0);
}

TEST_CASE("rigid factorization finds admissible motion sets") {
    family_spec s;
    s.kind = family_kind::random_uniform;
    s.count = 24;
    s.delta = 1.0 / 32;
    std::vector<std::vector<delta_tube>> families;
    for (uint64_t j = 0; j < 2; j++) {
        s.seed = 40 + j;
        families.push_back(generate_family(s).tubes);
    }
    rigid_params p;
    p.cands.delta = s.delta;
    p.cands.max_body_prisms = 128;
    p.cands.max_cluster = 256;
    p.cands.max_lattice = 512;
    p.cands.max_large = 32;
    const double rho = 0.25;
    const rigid_factor_result res = random_rigid_factor(families, s.delta, rho, 7, p);
    CHECK(res.target_count == 32);   // ceil(rho^2 / (2 delta^2))
    CHECK(res.success);
    CHECK(res.rounds >= 1);
    CHECK(res.motions.size() == res.target_count);
    CHECK(res.worst_ratio <= 1.0);
    for (const rigid_motion& m : res.motions) {
        CHECK(m.displacement_bound <= rho);
    }

    CHECK_THROWS_AS(random_rigid_factor({}, s.delta, rho, 1, p), validation_error);
    CHECK_THROWS_AS(random_rigid_factor(families, s.delta, 1.5, 1, p), validation_error);
}
