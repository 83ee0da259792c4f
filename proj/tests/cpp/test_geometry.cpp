#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tubelab/geometry.h"
#include "tubelab/rng.h"

using namespace tubelab;

namespace {

// exact volume of a slab {|x.n - off| <= s} clipped to the unit ball
double ball_slice_volume(double off, double s) {
    const double z1 = std::max(-1.0, off - s), z2 = std::min(1.0, off + s);
    if (z2 <= z1) return 0.0;
    auto f = [](double z) { return z - z * z * z / 3; };
    return std::numbers::pi * (f(z2) - f(z1));
}

mat3 random_rotation(rng& r) { return rotation_about(r.unit_vector(), r.uniform(0, std::numbers::pi)); }

} // namespace

TEST_CASE("tube volume is exactly 4 delta^2 and matches its body") {
    for (double d : {1.0 / 16, 1.0 / 64, 1.0 / 256}) {
        delta_tube t;
        t.delta = d;
        t.mid = vec3{0.1, -0.2, 0.05};
        t.dir = normalized(vec3{1, 2, 3});
        CHECK(t.volume() == 4 * d * d);
        const convex_body b = t.body();
        CHECK(b.volume() == doctest::Approx(4 * d * d).epsilon(1e-12));
        CHECK(b.dims[0] == doctest::Approx(d));
        CHECK(b.dims[1] == doctest::Approx(d));
        CHECK(b.dims[2] == doctest::Approx(0.5));
        // the body axis matches the core direction up to sign
        CHECK(std::fabs(dot(b.dir(), t.dir)) == doctest::Approx(1.0));
        CHECK(b.contains_point(t.endpoint(+1), 1e-9));
        CHECK(b.contains_point(t.endpoint(-1), 1e-9));
        CHECK(!b.contains_point(t.core_point(0.5 + 4 * d)));
    }
}

TEST_CASE("prism and ellipsoid volumes") {
    rng r(7);
    for (int i = 0; i < 20; i++) {
        const vec3 dims{r.uniform(0.01, 0.2), r.uniform(0.2, 0.5), r.uniform(0.5, 1.0)};
        const mat3 rot = random_rotation(r);
        const vec3 c = r.in_ball(0.5);
        const convex_body p = convex_body::make_prism(c, rot, dims);
        CHECK(p.volume() == doctest::Approx(8 * dims.x * dims.y * dims.z).epsilon(1e-12));
        const convex_body e = convex_body::make_ellipsoid(c, rot, dims);
        CHECK(e.volume() ==
              doctest::Approx(4 * std::numbers::pi / 3 * dims.x * dims.y * dims.z).epsilon(1e-12));
    }
}

TEST_CASE("slab volume integrates the ball slice exactly") {
    rng r(11);
    for (int i = 0; i < 30; i++) {
        const vec3 n = r.unit_vector();
        const double off = r.uniform(-0.9, 0.9);
        const double s = r.uniform(0.01, 0.5);
        const convex_body sl = convex_body::make_slab(n, off, s);
        CHECK(sl.kind == body_kind::slab);
        CHECK(sl.volume() == doctest::Approx(ball_slice_volume(off, s)).epsilon(1e-12));
        CHECK(sl.min_dim() == doctest::Approx(s));
    }
    // slab through the center with s = 1 swallows the whole ball
    const convex_body full = convex_body::make_slab(vec3{0, 0, 1}, 0, 1.0);
    CHECK(full.volume() == doctest::Approx(4 * std::numbers::pi / 3).epsilon(1e-12));
}

TEST_CASE("slab membership needs both the plane window and the ball") {
    const convex_body sl = convex_body::make_slab(vec3{0, 0, 1}, 0, 0.1);
    CHECK(sl.contains_point(vec3{0.5, 0, 0}));
    CHECK(!sl.contains_point(vec3{0, 0, 0.2}));     // outside the plane window
    CHECK(!sl.contains_point(vec3{0.9, 0.5, 0}));   // inside the window, outside the ball
}

TEST_CASE("factories normalize dims ascending with orthonormal axes") {
    rng r(3);
    for (int i = 0; i < 20; i++) {
        const vec3 dims{r.uniform(0.01, 1.0), r.uniform(0.01, 1.0), r.uniform(0.01, 1.0)};
        const convex_body p = convex_body::make_prism(vec3{}, random_rotation(r), dims);
        CHECK(p.dims[0] <= p.dims[1]);
        CHECK(p.dims[1] <= p.dims[2]);
        for (int a = 0; a < 3; a++) {
            CHECK(norm(p.axes.row(a)) == doctest::Approx(1.0).epsilon(1e-10));
            for (int b = a + 1; b < 3; b++) {
                CHECK(dot(p.axes.row(a), p.axes.row(b)) == doctest::Approx(0.0).epsilon(1e-10));
            }
        }
        CHECK(std::fabs(dot(p.dir(), p.axes.row(2))) == doctest::Approx(1.0));
        CHECK(std::fabs(dot(p.plane_normal(), p.axes.row(0))) == doctest::Approx(1.0));
    }
}

TEST_CASE("support and corners agree for prisms") {
    rng r(5);
    for (int i = 0; i < 10; i++) {
        const convex_body p = convex_body::make_prism(
            r.in_ball(0.3), random_rotation(r), vec3{r.uniform(0.05, 0.2), r.uniform(0.2, 0.4), r.uniform(0.4, 0.8)});
        const vec3 n = r.unit_vector();
        double reach = 0;
        for (const vec3& c : p.corners()) reach = std::max(reach, std::fabs(dot(c - p.center, n)));
        CHECK(p.support(n) == doctest::Approx(reach).epsilon(1e-10));
    }
}

TEST_CASE("dilated scales every dim, neighborhood adds to every dim") {
    const convex_body p = convex_body::make_prism(vec3{0.1, 0, 0}, mat3::identity(), vec3{0.1, 0.2, 0.4});
    const convex_body d = p.dilated(3.0);
    CHECK(d.volume() == doctest::Approx(27 * p.volume()).epsilon(1e-12));
    CHECK(d.dims[0] == doctest::Approx(0.3));
    const convex_body nb = p.neighborhood(0.05);
    CHECK(nb.dims[0] == doctest::Approx(0.15));
    CHECK(nb.dims[1] == doctest::Approx(0.25));
    CHECK(nb.dims[2] == doctest::Approx(0.45));
    CHECK(norm(nb.center - p.center) == 0.0);
}

TEST_CASE("contains_body accepts nested boxes and rejects escapes") {
    rng r(13);
    for (int i = 0; i < 20; i++) {
        const convex_body outer = convex_body::make_prism(
            r.in_ball(0.2), random_rotation(r), vec3{r.uniform(0.1, 0.2), r.uniform(0.2, 0.4), r.uniform(0.4, 0.6)});
        CHECK(contains_body(outer.dilated(0.5), outer, 0.0));
        CHECK(contains_body(outer, outer, 1e-9));
        CHECK(!contains_body(outer.dilated(1.2), outer, 0.01));
        convex_body moved = outer;
        moved.center += outer.dir() * (2.5 * outer.dims[2]);
        CHECK(!contains_body(moved, outer, 0.01));
    }
    // tubes fit in modestly padded copies of themselves
    delta_tube t;
    t.delta = 1.0 / 64;
    t.dir = normalized(vec3{1, 1, 1});
    CHECK(contains_body(t, t.body().neighborhood(0.001), 0.0));
}

TEST_CASE("same_dyadic_shape compares sorted dims up to a factor") {
    const convex_body a = convex_body::make_prism(vec3{}, mat3::identity(), vec3{0.1, 0.2, 0.4});
    convex_body b = convex_body::make_prism(vec3{0.5, 0, 0}, mat3::identity(), vec3{0.15, 0.3, 0.5});
    CHECK(a.same_dyadic_shape(b, 2.0));
    b = convex_body::make_prism(vec3{}, mat3::identity(), vec3{0.1, 0.2, 0.9});
    CHECK(!a.same_dyadic_shape(b, 2.0));
}

TEST_CASE("rescale_map sends a prism onto the half-unit cube") {
    rng r(17);
    for (int i = 0; i < 20; i++) {
        const convex_body w = convex_body::make_prism(
            r.in_ball(0.4), random_rotation(r), vec3{r.uniform(0.02, 0.1), r.uniform(0.1, 0.3), r.uniform(0.3, 0.6)});
        const affine_map m = rescale_map(w);
        for (const vec3& c : w.corners()) {
            const vec3 q = m.apply(c);
            CHECK(std::fabs(q.x) <= 0.5 + 1e-9);
            CHECK(std::fabs(q.y) <= 0.5 + 1e-9);
            CHECK(std::fabs(q.z) <= 0.5 + 1e-9);
        }
        // center goes to the origin, round trip recovers the point
        const vec3 z = m.apply(w.center);
        CHECK(norm(z) == doctest::Approx(0.0).epsilon(1e-9));
        const vec3 p = r.in_ball(0.8);
        const vec3 back = m.inverse().apply(m.apply(p));
        CHECK(norm(back - p) == doctest::Approx(0.0).epsilon(1e-8));
    }
}

TEST_CASE("rescale_body scales volume by |W| for aligned frames, bounds it otherwise") {
    rng r(19);
    for (int i = 0; i < 20; i++) {
        const mat3 rot = random_rotation(r);
        const convex_body w = convex_body::make_prism(
            r.in_ball(0.3), rot, vec3{r.uniform(0.05, 0.1), r.uniform(0.1, 0.3), r.uniform(0.3, 0.5)});
        // same frame: the image is an exact box, volume scales by 1/|W|
        const convex_body u = convex_body::make_prism(
            w.center + w.dir() * 0.01, rot,
            vec3{r.uniform(0.005, 0.01), r.uniform(0.01, 0.03), r.uniform(0.03, 0.05)});
        const convex_body img = rescale_body(w, u);
        CHECK(img.volume() == doctest::Approx(u.volume() / w.volume()).epsilon(1e-9));
        // rotated frame: the sheared image gets boxed, never undercounted
        const convex_body v = convex_body::make_prism(u.center, random_rotation(r), u.dims);
        CHECK(rescale_body(w, v).volume() >= (1 - 1e-9) * v.volume() / w.volume());
    }
    // the rescale of W itself is the half-unit cube
    const convex_body w = convex_body::make_prism(vec3{0.1, 0.2, 0.0}, mat3::identity(), vec3{0.1, 0.2, 0.4});
    const convex_body self = rescale_body(w, w);
    CHECK(self.volume() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(self.dims[2] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("rescale_map fixes the unit ball for ellipsoid targets") {
    rng r(23);
    const convex_body e = convex_body::make_ellipsoid(r.in_ball(0.2), random_rotation(r),
                                                      vec3{0.1, 0.25, 0.5});
    const affine_map m = rescale_map(e);
    for (int i = 0; i < 50; i++) {
        // boundary points of the ellipsoid land on the unit sphere
        const vec3 q = r.unit_vector();
        const vec3 boundary = e.from_local(vec3{q.x * e.dims[0], q.y * e.dims[1], q.z * e.dims[2]});
        CHECK(norm(m.apply(boundary)) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("rigid motions carry an exact corner displacement bound") {
    CHECK(rigid_motion::identity_motion().displacement_bound == 0.0);
    rng r(29);
    for (int i = 0; i < 20; i++) {
        const rigid_motion a = rigid_motion::make(random_rotation(r), r.in_ball(0.2));
        double worst = 0;
        for (int m = 0; m < 8; m++) {
            const vec3 c{m & 1 ? 1.0 : -1.0, m & 2 ? 1.0 : -1.0, m & 4 ? 1.0 : -1.0};
            worst = std::max(worst, norm(a.apply(c) - c));
        }
        CHECK(a.displacement_bound == doctest::Approx(worst).epsilon(1e-12));
        // points of the cube move at most the bound (convexity of the norm)
        for (int j = 0; j < 10; j++) {
            const vec3 p{r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(-1, 1)};
            CHECK(norm(a.apply(p) - p) <= a.displacement_bound + 1e-12);
        }
        // moving a tube preserves delta and unit direction
        delta_tube t;
        t.delta = 1.0 / 32;
        t.dir = r.unit_vector();
        t.mid = r.in_ball(0.3);
        const delta_tube moved = a.apply(t);
        CHECK(moved.delta == t.delta);
        CHECK(norm(moved.dir) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(norm(moved.mid - a.apply(t.mid)) == doctest::Approx(0.0).epsilon(1e-10));
        // moving a body preserves volume
        const convex_body b = convex_body::make_prism(t.mid, random_rotation(r), vec3{0.05, 0.1, 0.2});
        CHECK(a.apply(b).volume() == doctest::Approx(b.volume()).epsilon(1e-10));
    }
}

TEST_CASE("validation rejects malformed tubes and bodies") {
    delta_tube t;
    t.delta = 1.0 / 64;
    t.dir = vec3{0, 0, 2};   // not unit
    CHECK_THROWS_AS(validate_tube(t), validation_error);
    t.dir = vec3{0, 0, 1};
    t.delta = 0;
    CHECK_THROWS_AS(validate_tube(t), validation_error);
    t.delta = 1.0 / 64;
    CHECK_NOTHROW(validate_tube(t));

    convex_body b = convex_body::make_prism(vec3{}, mat3::identity(), vec3{0.1, 0.2, 0.3});
    b.dims[0] = -0.1;
    CHECK_THROWS_AS(validate_body(b), validation_error);
    b.dims[0] = 0.1;
    b.axes.row(0) = vec3{1, 1, 0};   // not orthonormal
    CHECK_THROWS_AS(validate_body(b), validation_error);
}

TEST_CASE("bounds covers all corners") {
    rng r(31);
    const convex_body p = convex_body::make_prism(r.in_ball(0.3), random_rotation(r), vec3{0.1, 0.2, 0.4});
    const aabb box = p.bounds();
    for (const vec3& c : p.corners()) {
        for (int i = 0; i < 3; i++) {
            CHECK(c[i] >= box.lo[i] - 1e-12);
            CHECK(c[i] <= box.hi[i] + 1e-12);
        }
    }
}
