// vec.h -- small fixed-size linear algebra for the tube lab.
// Hand-rolled 3-vectors and 3x3 matrices; everything here is cheap enough
// that we prefer transparency over a library dependency.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace tubelab {

struct vec3 {
    double x = 0, y = 0, z = 0;

    vec3 operator+(const vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    vec3 operator-(const vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    vec3 operator-() const { return {-x, -y, -z}; }
    vec3& operator+=(const vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    vec3& operator-=(const vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

inline vec3 operator*(double s, const vec3& v) { return v * s; }

inline double dot(const vec3& a, const vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline vec3 cross(const vec3& a, const vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm2(const vec3& v) { return dot(v, v); }
inline double norm(const vec3& v) { return std::sqrt(norm2(v)); }
inline vec3 normalized(const vec3& v) { return v / norm(v); }

// Robust angle in [0, pi]; never NaNs on nearly-parallel input.
inline double angle_between(const vec3& a, const vec3& b) {
    return std::atan2(norm(cross(a, b)), dot(a, b));
}

// Angle between directions identified with their negatives, in [0, pi/2].
inline double line_angle(const vec3& a, const vec3& b) {
    return std::atan2(norm(cross(a, b)), std::fabs(dot(a, b)));
}

// Lexicographic comparison used for deterministic tie-breaks.
inline bool lex_less(const vec3& a, const vec3& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.z < b.z;
}

struct mat3 {
    // Rows. apply() treats the matrix as acting on column vectors.
    std::array<vec3, 3> r{vec3{1, 0, 0}, vec3{0, 1, 0}, vec3{0, 0, 1}};

    static mat3 identity() { return mat3{}; }

    const vec3& row(int i) const { return r[static_cast<size_t>(i)]; }
    vec3& row(int i) { return r[static_cast<size_t>(i)]; }

    vec3 apply(const vec3& v) const { return {dot(r[0], v), dot(r[1], v), dot(r[2], v)}; }

    vec3 col(int i) const { return {r[0][i], r[1][i], r[2][i]}; }

    mat3 transpose() const {
        mat3 t;
        t.r[0] = col(0);
        t.r[1] = col(1);
        t.r[2] = col(2);
        return t;
    }

    mat3 mul(const mat3& o) const {
        mat3 p;
        for (int i = 0; i < 3; i++)
            for (int j = 0; j < 3; j++) p.r[static_cast<size_t>(i)][j] = dot(r[static_cast<size_t>(i)], o.col(j));
        return p;
    }

    double det() const { return dot(r[0], cross(r[1], r[2])); }
};

// Rotation by `angle` about unit `axis` (Rodrigues).
inline mat3 rotation_about(const vec3& axis, double angle) {
    const double c = std::cos(angle), s = std::sin(angle), t = 1 - c;
    const vec3 u = axis;
    mat3 m;
    m.r[0] = {c + u.x * u.x * t, u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s};
    m.r[1] = {u.y * u.x * t + u.z * s, c + u.y * u.y * t, u.y * u.z * t - u.x * s};
    m.r[2] = {u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t};
    return m;
}

// Deterministic orthonormal frame (u, v, w) with w given.
inline void frame_from_axis(const vec3& w, vec3& u, vec3& v) {
    const double ax = std::fabs(w.x), ay = std::fabs(w.y), az = std::fabs(w.z);
    vec3 e = (ax <= ay && ax <= az) ? vec3{1, 0, 0} : (ay <= az ? vec3{0, 1, 0} : vec3{0, 0, 1});
    u = normalized(cross(w, e));
    v = cross(w, u);
}

struct aabb {
    vec3 lo{1e30, 1e30, 1e30};
    vec3 hi{-1e30, -1e30, -1e30};
    void grow(const vec3& p) {
        for (int i = 0; i < 3; i++) {
            if (p[i] < lo[i]) lo[i] = p[i];
            if (p[i] > hi[i]) hi[i] = p[i];
        }
    }
    void grow(const aabb& b) { grow(b.lo); grow(b.hi); }
    bool overlaps(const aabb& b) const {
        for (int i = 0; i < 3; i++)
            if (lo[i] > b.hi[i] || hi[i] < b.lo[i]) return false;
        return true;
    }
};

} // namespace tubelab
