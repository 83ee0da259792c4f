// geometry.h -- delta-tubes, convex bodies, rigid motions.
//
// Conventions used throughout the lab:
//   * A delta-tube is the 2d x 2d box around a unit-length core segment, so
//     its volume is exactly 4d^2 and it coincides with its own bounding prism.
//   * convex_body::dims are HALF-dimensions sorted ascending; prism volume is
//     8abc, ellipsoid volume (4pi/3)abc.
//   * A slab is a thickened plane clipped to the unit ball: dims = (s, 2, 2)
//     with s the half-thickness, membership additionally requires |p| <= 1,
//     and volume() integrates the ball slice exactly.
//   * dir(W) is the longest axis, pi(W) the span of the two longest axes.
#pragma once

#include <array>
#include <optional>
#include <vector>

#include "tubelab/errors.h"
#include "tubelab/vec.h"

namespace tubelab {

enum class body_kind { prism, ellipsoid, slab };

struct convex_body {
    body_kind kind = body_kind::prism;
    vec3 center{};
    mat3 axes;  // row i is the unit axis paired with dims[i]
    vec3 dims{1, 1, 1};

    // Factories normalize the representation: axes orthonormal, dims ascending,
    // per-axis sign fixed (first nonzero component positive) and equal-dims ties
    // broken by lexicographic axis comparison, so equal bodies compare equal.
    static convex_body make_prism(const vec3& center, const mat3& axes, const vec3& half_dims);
    static convex_body make_ellipsoid(const vec3& center, const mat3& axes, const vec3& semi_axes);
    static convex_body make_slab(const vec3& unit_normal, double plane_offset, double half_thickness);
    static convex_body cube(const vec3& center, double half_side);

    double volume() const;
    vec3 to_local(const vec3& p) const { return axes.apply(p - center); }
    vec3 from_local(const vec3& q) const { return center + axes.transpose().apply(q); }
    bool contains_point(const vec3& p, double slack = 0.0) const;

    // Support half-width along unit direction n (of the bounding prism for
    // slabs, i.e. ignoring the ball clip).
    double support(const vec3& n) const;

    // Corners of the bounding prism.
    std::array<vec3, 8> corners() const;
    aabb bounds() const;

    vec3 dir() const { return axes.row(2); }           // longest axis
    vec3 plane_normal() const { return axes.row(0); }  // normal of the two-longest-axes plane

    convex_body dilated(double factor) const;      // scales dims about the center
    convex_body neighborhood(double r) const;      // adds r to every half-dim

    double min_dim() const { return dims[0]; }
    bool same_dyadic_shape(const convex_body& o, double factor) const;
};

struct delta_tube {
    vec3 mid{};   // anchor: core segment midpoint
    vec3 dir{0, 0, 1};
    double delta = 1.0 / 64;

    vec3 endpoint(int sign) const { return mid + dir * (0.5 * sign); }
    vec3 core_point(double t) const { return mid + dir * t; }  // t in [-1/2, 1/2]
    double volume() const { return 4 * delta * delta; }
    convex_body body() const;
};

// Throws validation_error on malformed input.
void validate_tube(const delta_tube& t);
void validate_body(const convex_body& b);

struct rigid_motion {
    mat3 rot;    // det +1 within 1e-10, orthonormal rows
    vec3 trans{};
    double displacement_bound = 0;  // max |Ax - x| over the corners of [-1,1]^3

    static rigid_motion make(const mat3& rot, const vec3& trans);
    static rigid_motion identity_motion();

    vec3 apply(const vec3& p) const { return rot.apply(p) + trans; }
    delta_tube apply(const delta_tube& t) const;
    convex_body apply(const convex_body& b) const;
};

// Every corner of inner's bounding prism inside outer dilated by (1 + slack).
bool contains_body(const convex_body& inner, const convex_body& outer, double slack = 0.01);
inline bool contains_body(const delta_tube& inner, const convex_body& outer, double slack = 0.01) {
    return contains_body(inner.body(), outer, slack);
}

// The normalizing affine map of a body: prisms and slabs map onto the
// half-unit cube [-1/2,1/2]^3 (so image volumes are |U|/|W| exactly for prism
// targets), ellipsoids map onto the unit ball (so the unit ball is a fixed
// point). Axes land on the coordinate axes ordered by length.
struct affine_map {
    mat3 lin;
    vec3 off{};
    vec3 apply(const vec3& p) const { return lin.apply(p) + off; }
    affine_map inverse() const;
};

affine_map rescale_map(const convex_body& w);

// Image of `u` under rescale_map(w), returned as the minimal oriented bounding
// prism in the Gram-Schmidt frame of the mapped axes (longest first).
convex_body rescale_body(const convex_body& w, const convex_body& u);
inline convex_body rescale_body(const convex_body& w, const delta_tube& u) { return rescale_body(w, u.body()); }

} // namespace tubelab
