// geometry.cpp -- bodies, tubes, rigid motions, and the rescaling maps.
#include "tubelab/geometry.h"

#include <algorithm>
#include <cmath>

namespace tubelab {

namespace {

constexpr double kPi = 3.14159265358979323846;

vec3 sign_normalized(const vec3& v) {
    for (int i = 0; i < 3; i++) {
        if (std::fabs(v[i]) > 1e-12) return v[i] < 0 ? -v : v;
    }
    return v;
}

void check_orthonormal(const mat3& axes) {
    for (int i = 0; i < 3; i++) {
        if (std::fabs(norm(axes.row(i)) - 1.0) > 1e-9)
            throw validation_error("body axes must be unit vectors");
        for (int j = i + 1; j < 3; j++) {
            if (std::fabs(dot(axes.row(i), axes.row(j))) > 1e-9)
                throw validation_error("body axes must be orthogonal");
        }
    }
}

// Shared normalization: dims ascending, deterministic axis signs, lexicographic
// tie-break on equal dims.
convex_body normalize_body(body_kind kind, const vec3& center, const mat3& axes, const vec3& dims) {
    check_orthonormal(axes);
    for (int i = 0; i < 3; i++) {
        if (!(dims[i] > 0)) throw validation_error("body dims must be positive");
    }
    struct entry {
        double d;
        vec3 u;
    };
    std::array<entry, 3> e;
    for (int i = 0; i < 3; i++) e[static_cast<size_t>(i)] = {dims[i], sign_normalized(axes.row(i))};
    std::sort(e.begin(), e.end(), [](const entry& a, const entry& b) {
        if (a.d != b.d) return a.d < b.d;
        return lex_less(a.u, b.u);
    });
    convex_body b;
    b.kind = kind;
    b.center = center;
    for (int i = 0; i < 3; i++) {
        b.axes.row(i) = e[static_cast<size_t>(i)].u;
        b.dims[i] = e[static_cast<size_t>(i)].d;
    }
    return b;
}

// Volume of { |<p,n>-offset| <= s } intersected with the unit ball.
double clipped_slab_volume(double offset, double s) {
    const double z1 = std::max(-1.0, offset - s);
    const double z2 = std::min(1.0, offset + s);
    if (z2 <= z1) return 0;
    auto f = [](double z) { return z - z * z * z / 3.0; };
    return kPi * (f(z2) - f(z1));
}

} // namespace

convex_body convex_body::make_prism(const vec3& center, const mat3& axes, const vec3& half_dims) {
    return normalize_body(body_kind::prism, center, axes, half_dims);
}

convex_body convex_body::make_ellipsoid(const vec3& center, const mat3& axes, const vec3& semi_axes) {
    return normalize_body(body_kind::ellipsoid, center, axes, semi_axes);
}

convex_body convex_body::make_slab(const vec3& unit_normal, double plane_offset, double half_thickness) {
    if (std::fabs(norm(unit_normal) - 1.0) > 1e-9) throw validation_error("slab normal must be unit");
    if (!(half_thickness > 0) || half_thickness > 1.5) throw validation_error("slab half-thickness out of range");
    vec3 u, v;
    frame_from_axis(unit_normal, u, v);
    mat3 axes;
    axes.row(0) = unit_normal;
    axes.row(1) = u;
    axes.row(2) = v;
    convex_body b = normalize_body(body_kind::slab, unit_normal * plane_offset, axes, {half_thickness, 2, 2});
    return b;
}

convex_body convex_body::cube(const vec3& center, double half_side) {
    return make_prism(center, mat3::identity(), {half_side, half_side, half_side});
}

double convex_body::volume() const {
    switch (kind) {
        case body_kind::prism: return 8 * dims[0] * dims[1] * dims[2];
        case body_kind::ellipsoid: return (4.0 / 3.0) * kPi * dims[0] * dims[1] * dims[2];
        case body_kind::slab: {
            const double offset = dot(center, axes.row(0));
            return clipped_slab_volume(offset, dims[0]);
        }
    }
    return 0;
}

bool convex_body::contains_point(const vec3& p, double slack) const {
    const vec3 q = to_local(p);
    switch (kind) {
        case body_kind::prism:
            return std::fabs(q.x) <= dims[0] * (1 + slack) && std::fabs(q.y) <= dims[1] * (1 + slack) &&
                   std::fabs(q.z) <= dims[2] * (1 + slack);
        case body_kind::ellipsoid: {
            const double r = (q.x / dims[0]) * (q.x / dims[0]) + (q.y / dims[1]) * (q.y / dims[1]) +
                             (q.z / dims[2]) * (q.z / dims[2]);
            return r <= (1 + slack) * (1 + slack);
        }
        case body_kind::slab:
            if (std::fabs(q.x) > dims[0] * (1 + slack)) return false;
            return norm2(p) <= (1 + slack) * (1 + slack);
    }
    return false;
}

double convex_body::support(const vec3& n) const {
    if (kind == body_kind::ellipsoid) {
        const double a = dims[0] * dot(axes.row(0), n);
        const double b = dims[1] * dot(axes.row(1), n);
        const double c = dims[2] * dot(axes.row(2), n);
        return std::sqrt(a * a + b * b + c * c);
    }
    return dims[0] * std::fabs(dot(axes.row(0), n)) + dims[1] * std::fabs(dot(axes.row(1), n)) +
           dims[2] * std::fabs(dot(axes.row(2), n));
}

std::array<vec3, 8> convex_body::corners() const {
    std::array<vec3, 8> out;
    int idx = 0;
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (int sz : {-1, 1})
                out[static_cast<size_t>(idx++)] =
                    center + axes.row(0) * (dims[0] * sx) + axes.row(1) * (dims[1] * sy) + axes.row(2) * (dims[2] * sz);
    return out;
}

aabb convex_body::bounds() const {
    aabb box;
    for (const vec3& c : corners()) box.grow(c);
    if (kind == body_kind::slab) {
        // Membership clips to the unit ball, so the scan window may too.
        for (int i = 0; i < 3; i++) {
            box.lo[i] = std::max(box.lo[i], -1.0);
            box.hi[i] = std::min(box.hi[i], 1.0);
        }
    }
    return box;
}

convex_body convex_body::dilated(double factor) const {
    if (!(factor > 0)) throw validation_error("dilation factor must be positive");
    convex_body b = *this;
    b.dims = dims * factor;
    return b;
}

convex_body convex_body::neighborhood(double r) const {
    if (r < 0) throw validation_error("neighborhood radius must be nonnegative");
    convex_body b = *this;
    b.dims = {dims[0] + r, dims[1] + r, dims[2] + r};
    return b;
}

bool convex_body::same_dyadic_shape(const convex_body& o, double factor) const {
    for (int i = 0; i < 3; i++) {
        const double r = dims[i] / o.dims[i];
        if (r > factor || r < 1.0 / factor) return false;
    }
    return true;
}

convex_body delta_tube::body() const {
    vec3 u, v;
    frame_from_axis(dir, u, v);
    mat3 axes;
    axes.row(0) = u;
    axes.row(1) = v;
    axes.row(2) = dir;
    return convex_body::make_prism(mid, axes, {delta, delta, 0.5});
}

void validate_tube(const delta_tube& t) {
    if (std::fabs(norm(t.dir) - 1.0) > 1e-12) throw validation_error("tube direction must be unit length");
    if (t.delta < 0x1.0p-20 || t.delta > 0.25) throw validation_error("tube delta out of [2^-20, 1/4]");
    if (norm(t.mid) >= 2.0) throw validation_error("tube anchor must lie inside B(0,2)");
}

void validate_body(const convex_body& b) {
    check_orthonormal(b.axes);
    if (!(b.dims[0] > 0) || b.dims[0] > b.dims[1] || b.dims[1] > b.dims[2])
        throw validation_error("body dims must be positive and ascending");
    if (b.kind == body_kind::slab && (b.dims[1] != 2 || b.dims[2] != 2))
        throw validation_error("slab lateral half-dims must be 2");
}

rigid_motion rigid_motion::make(const mat3& rot, const vec3& trans) {
    check_orthonormal(rot);
    if (std::fabs(rot.det() - 1.0) > 1e-10) throw validation_error("rotation must have determinant +1");
    rigid_motion m;
    m.rot = rot;
    m.trans = trans;
    double worst = 0;
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (int sz : {-1, 1}) {
                const vec3 x{static_cast<double>(sx), static_cast<double>(sy), static_cast<double>(sz)};
                worst = std::max(worst, norm(m.apply(x) - x));
            }
    m.displacement_bound = worst;
    return m;
}

rigid_motion rigid_motion::identity_motion() { return make(mat3::identity(), {}); }

delta_tube rigid_motion::apply(const delta_tube& t) const {
    return {apply(t.mid), rot.apply(t.dir), t.delta};
}

convex_body rigid_motion::apply(const convex_body& b) const {
    if (b.kind == body_kind::slab) throw validation_error("rigid motions on clipped slabs are not supported");
    mat3 axes;
    for (int i = 0; i < 3; i++) axes.row(i) = rot.apply(b.axes.row(i));
    return normalize_body(b.kind, apply(b.center), axes, b.dims);
}

bool contains_body(const convex_body& inner, const convex_body& outer, double slack) {
    if (slack < 0 || slack > 0.1) throw validation_error("containment slack out of [0, 0.1]");
    if (inner.kind == body_kind::slab) {
        // a slab is its prism clipped to the unit ball, so the ball part of
        // any outer slab is automatic and a ball-covering outer prism wins
        if (outer.kind == body_kind::slab) {
            for (const vec3& c : inner.corners()) {
                for (int a = 0; a < 3; a++) {
                    if (std::fabs(dot(c - outer.center, outer.axes.row(a))) > outer.dims[a] * (1 + slack))
                        return false;
                }
            }
            return true;
        }
        if (outer.kind == body_kind::prism) {
            bool ball_inside = true;
            for (int a = 0; a < 3; a++) {
                if (std::fabs(dot(outer.center, outer.axes.row(a))) + 1 > outer.dims[a] * (1 + slack))
                    ball_inside = false;
            }
            if (ball_inside) return true;
        }
    }
    for (const vec3& c : inner.corners()) {
        if (!outer.contains_point(c, slack)) return false;
    }
    return true;
}

affine_map rescale_map(const convex_body& w) {
    const bool ball_norm = (w.kind == body_kind::ellipsoid);
    affine_map m;
    for (int i = 0; i < 3; i++) {
        const double s = ball_norm ? 1.0 / w.dims[i] : 1.0 / (2 * w.dims[i]);
        m.lin.row(i) = w.axes.row(i) * s;
    }
    m.off = -m.lin.apply(w.center);
    return m;
}

affine_map affine_map::inverse() const {
    const vec3 c0 = lin.col(0), c1 = lin.col(1), c2 = lin.col(2);
    const double d = dot(c0, cross(c1, c2));
    if (std::fabs(d) < 1e-30) throw validation_error("affine map is singular");
    affine_map inv;
    // rows of the inverse are cross products of columns over the determinant
    inv.lin.row(0) = cross(c1, c2) / d;
    inv.lin.row(1) = cross(c2, c0) / d;
    inv.lin.row(2) = cross(c0, c1) / d;
    inv.off = -inv.lin.apply(off);
    return inv;
}

convex_body rescale_body(const convex_body& w, const convex_body& u) {
    const affine_map m = rescale_map(w);
    std::array<vec3, 3> img;
    for (int i = 0; i < 3; i++) img[static_cast<size_t>(i)] = m.lin.apply(u.axes.row(i) * u.dims[i]);
    // Frame from the images, longest first, Gram-Schmidt.
    std::array<int, 3> ord{0, 1, 2};
    std::sort(ord.begin(), ord.end(), [&](int a, int b) {
        return norm2(img[static_cast<size_t>(a)]) > norm2(img[static_cast<size_t>(b)]);
    });
    const vec3 f2 = normalized(img[static_cast<size_t>(ord[0])]);
    vec3 t = img[static_cast<size_t>(ord[1])] - f2 * dot(f2, img[static_cast<size_t>(ord[1])]);
    if (norm(t) < 1e-14) {
        vec3 a, b;
        frame_from_axis(f2, a, b);
        t = a;
    }
    const vec3 f1 = normalized(t);
    const vec3 f0 = cross(f1, f2);
    auto half_dim = [&](const vec3& f) {
        if (u.kind == body_kind::ellipsoid) {
            const double a = dot(img[0], f), b = dot(img[1], f), c = dot(img[2], f);
            return std::sqrt(a * a + b * b + c * c);
        }
        return std::fabs(dot(img[0], f)) + std::fabs(dot(img[1], f)) + std::fabs(dot(img[2], f));
    };
    mat3 axes;
    axes.row(0) = f0;
    axes.row(1) = f1;
    axes.row(2) = f2;
    return convex_body::make_prism(m.apply(u.center), axes, {half_dim(f0), half_dim(f1), half_dim(f2)});
}

} // namespace tubelab
