#include <doctest.h>

#include <cmath>

#include "tubelab/generators.h"
#include "tubelab/rng.h"
#include "tubelab/wolff.h"

using namespace tubelab;

namespace {

std::vector<convex_body> tube_bodies(const std::vector<delta_tube>& tubes) {
    std::vector<convex_body> out;
    out.reserve(tubes.size());
    for (const delta_tube& t : tubes) out.push_back(t.body());
    return out;
}

std::vector<delta_tube> coplanar_family(int n, double delta, uint64_t seed) {
    rng r(seed);
    std::vector<delta_tube> tubes;
    for (int i = 0; i < n; i++) {
        delta_tube t;
        t.delta = delta;
        const double a = r.uniform(0, std::numbers::pi);
        t.dir = vec3{std::cos(a), std::sin(a), 0};
        t.mid = vec3{r.uniform(-0.2, 0.2), r.uniform(-0.2, 0.2), 0};
        tubes.push_back(t);
    }
    return tubes;
}

} // namespace

TEST_CASE("a single tube is its own best Katz-Tao witness") {
    delta_tube t;
    t.delta = 1.0 / 64;
    t.dir = normalized(vec3{1, 0, 2});
    const std::vector<convex_body> members = tube_bodies({t});
    candidate_params cp;
    cp.delta = t.delta;
    const candidate_family cands = build_convex_candidates(members, cp);
    CHECK(!cands.bodies.empty());

    const wolff_report kt = katz_tao_constant(members, cands, cp.slack);
    CHECK(kt.constant >= 1.0 - 1e-9);
    CHECK(kt.constant <= 1.15);
    CHECK(kt.witness_count == 1);
    CHECK(kt.total_mass == doctest::Approx(t.volume()));

    // frostman only renormalizes by the family mass
    const wolff_report fr = frostman_constant(members, cands, cp.slack);
    CHECK(fr.constant == doctest::Approx(kt.constant / kt.total_mass).epsilon(1e-9));
}

TEST_CASE("well-separated parallel tubes stay at constant one") {
    const double d = 1.0 / 64;
    std::vector<delta_tube> tubes;
    for (int i = 0; i < 8; i++) {
        delta_tube t;
        t.delta = d;
        t.dir = vec3{0, 0, 1};
        t.mid = vec3{-0.3 + i * 10 * d, 0, 0};
        tubes.push_back(t);
    }
    const std::vector<convex_body> members = tube_bodies(tubes);
    candidate_params cp;
    cp.delta = d;
    const wolff_report kt = katz_tao_constant(members, build_convex_candidates(members, cp), cp.slack);
    CHECK(kt.constant >= 1.0 - 1e-9);
    CHECK(kt.constant <= 1.3);
}

TEST_CASE("members_in honors the containment slack") {
    delta_tube t;
    t.delta = 1.0 / 32;
    const convex_body body = t.body();
    const std::vector<convex_body> cands{body, body.dilated(2.0),
                                         convex_body::cube(vec3{0.9, 0.9, 0.9}, 0.05)};
    const auto lists = members_in(cands, {body}, 0.01);
    REQUIRE(lists.size() == 3);
    CHECK(lists[0] == std::vector<int>{0});
    CHECK(lists[1] == std::vector<int>{0});
    CHECK(lists[2].empty());
}

TEST_CASE("a coplanar family lights up the slab sweep") {
    const double d = 1.0 / 32;
    const std::vector<convex_body> flat = tube_bodies(coplanar_family(20, d, 3));
    const std::vector<convex_body> spread = tube_bodies(generate_family([] {
                                                            family_spec s;
                                                            s.kind = family_kind::random_uniform;
                                                            s.count = 20;
                                                            s.delta = 1.0 / 32;
                                                            s.seed = 4;
                                                            return s;
                                                        }()).tubes);
    slab_sweep_params sp;
    sp.delta = d;
    const slab_report flat_kt = slab_constant(flat, normalization::katz_tao, sp);
    const slab_report spread_kt = slab_constant(spread, normalization::katz_tao, sp);
    CHECK(flat_kt.constant > 5 * spread_kt.constant);
    CHECK(flat_kt.witness.kind == body_kind::slab);
    CHECK(flat_kt.witness_count == 20);
    // the witness is a thin slab around the common plane
    CHECK(flat_kt.witness.min_dim() <= 4 * d);
    CHECK(std::fabs(flat_kt.witness.plane_normal().z) > 0.9);

    const slab_report flat_fr = slab_constant(flat, normalization::frostman, sp);
    CHECK(flat_fr.constant == doctest::Approx(flat_kt.constant / flat_kt.total_mass).epsilon(1e-9));
}

TEST_CASE("thickened_box swaps the mid dim for the long one") {
    const convex_body p = convex_body::make_prism(vec3{0.1, 0, 0}, mat3::identity(), vec3{0.1, 0.2, 0.4});
    const convex_body t = thickened_box(p);
    CHECK(t.dims[0] == doctest::Approx(0.1 * 0.4 / 0.2));
    CHECK(t.dims[1] == doctest::Approx(0.4));
    CHECK(t.dims[2] == doctest::Approx(0.4));
    CHECK(norm(t.center - p.center) == doctest::Approx(0.0));
    CHECK(contains_body(p, t, 1e-9));
}

TEST_CASE("greedy_tube_cover partitions the family into containing covers") {
    family_spec s;
    s.kind = family_kind::direction_separated;
    s.delta = 1.0 / 32;
    s.seed = 11;
    const tube_family f = generate_family(s);
    const double rho = 1.0 / 8;
    const tube_cover cover = greedy_tube_cover(f.tubes, rho, 0.01);
    REQUIRE(!cover.covers.empty());
    CHECK(cover.owner.size() == f.tubes.size());
    size_t assigned_total = 0;
    for (size_t c = 0; c < cover.covers.size(); c++) {
        for (int m : cover.assigned[c]) {
            CHECK(cover.owner[static_cast<size_t>(m)] == static_cast<int>(c));
            CHECK(contains_body(f.tubes[static_cast<size_t>(m)], cover.covers[c], 0.02));
        }
        assigned_total += cover.assigned[c].size();
    }
    CHECK(assigned_total == f.tubes.size());

    const cover_stats st = check_cover(f.bodies(), cover.covers, 0.02);
    CHECK(st.all_covered);
    CHECK(st.balance_ratio >= 1.0);
    CHECK(st.max_multiplicity >= 1);
}

TEST_CASE("local Katz-Tao sees a dense prism pile") {
    // forty near-copies of one prism: the doubled witness box has eight times
    // one member's volume, so the pile scores about 40/8
    rng r(6);
    std::vector<convex_body> prisms;
    for (int i = 0; i < 40; i++) {
        const vec3 jitter = r.in_ball(0.002);
        prisms.push_back(convex_body::make_prism(vec3{0, 0, 0} + jitter, mat3::identity(),
                                                 vec3{0.02, 0.1, 0.4}));
    }
    candidate_params cp;
    cp.delta = 0.02;
    const wolff_report rep = local_katz_tao(prisms, cp);
    CHECK(rep.constant >= 4.0);
    CHECK(rep.constant <= 6.0);
}

TEST_CASE("axioms hold at every scale for a small sticky tree") {
    family_spec s;
    s.kind = family_kind::sticky;
    s.delta = 1.0 / 32;
    s.branching = 3;
    s.seed = 2;
    const tube_family f = generate_family(s);
    candidate_params cp;
    cp.delta = f.delta;
    const every_scale_report rep = axioms_every_scale(f, 100.0, normalization::katz_tao, cp);
    CHECK(!rep.rows.empty());
    CHECK(rep.pass);
    for (const scale_row& row : rep.rows) {
        if (!row.pass) continue;
        CHECK(row.rho >= row.rho0);
        CHECK(row.rho < 100.0 * row.rho0);
        CHECK(row.cover_size >= 1);
    }
}
