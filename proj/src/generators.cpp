// generators.cpp -- reproducible example families.
#include "tubelab/generators.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tubelab/errors.h"
#include "tubelab/rng.h"

namespace tubelab {

namespace {

constexpr double golden_angle = 2.399963229728653;

// i-th of n points on the open upper hemisphere, spacing about 2.5 / sqrt(n)
vec3 fibonacci_dir(int i, int n) {
    const double z = (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden_angle * i;
    return vec3{r * std::cos(a), r * std::sin(a), z};
}

void subsample(std::vector<delta_tube>& tubes, int cap, rng& r) {
    if (cap <= 0 || tubes.size() <= static_cast<size_t>(cap)) return;
    std::vector<size_t> idx(tubes.size());
    for (size_t i = 0; i < idx.size(); i++) idx[i] = i;
    r.shuffle(idx);
    idx.resize(static_cast<size_t>(cap));
    std::sort(idx.begin(), idx.end());
    std::vector<delta_tube> kept;
    kept.reserve(idx.size());
    for (size_t i : idx) kept.push_back(tubes[i]);
    tubes.swap(kept);
}

std::vector<delta_tube> gen_direction_separated(const family_spec& spec, rng& r) {
    const int n = spec.count > 0 ? spec.count : static_cast<int>(std::floor(1.0 / (spec.delta * spec.delta)));
    if (n < 1) throw validation_error("direction count must be positive");
    std::vector<delta_tube> tubes;
    tubes.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; i++) {
        delta_tube t;
        t.delta = spec.delta;
        t.dir = fibonacci_dir(i, n);
        t.mid = r.in_ball(0.3);
        tubes.push_back(t);
    }
    return tubes;
}

std::vector<delta_tube> gen_well_spaced(const family_spec& spec, rng& r) {
    const double s = spec.s_scale > 0 ? spec.s_scale : std::pow(spec.delta, 0.625);
    if (s < spec.delta || s > 0.25) throw validation_error("well-spaced scale must lie in [delta, 1/4]");
    const int n_dirs = std::max(1, static_cast<int>(std::floor(2.0 / (s * s))));
    const int m = static_cast<int>(std::floor(0.25 / s));
    std::vector<delta_tube> tubes;
    for (int d = 0; d < n_dirs; d++) {
        const vec3 axis = fibonacci_dir(d, n_dirs);
        vec3 u, v;
        frame_from_axis(axis, u, v);
        for (int i = -m; i <= m; i++) {
            for (int j = -m; j <= m; j++) {
                // one tube per s-tube: offset and tilt jitter stay below s/2
                delta_tube t;
                t.delta = spec.delta;
                t.dir = normalized(axis + u * r.uniform(-s / 4, s / 4) + v * r.uniform(-s / 4, s / 4));
                t.mid = u * (i * s + r.uniform(-s / 4, s / 4)) + v * (j * s + r.uniform(-s / 4, s / 4)) +
                        axis * r.uniform(-s / 4, s / 4);
                tubes.push_back(t);
            }
        }
    }
    return tubes;
}

std::vector<delta_tube> gen_sticky(const family_spec& spec, rng& r) {
    if (spec.branching < 1 || spec.branching > 6) throw validation_error("sticky branching must lie in [1, 6]");
    struct node {
        vec3 dir, mid;
    };
    std::vector<node> level{{vec3{0, 0, 1}, vec3{0, 0, 0}}};
    const int depth = std::max(1, static_cast<int>(std::llround(std::log2(0.5 / spec.delta))));
    double w = 0.5;
    for (int l = 0; l < depth; l++) {
        const double wc = w / 2;
        std::vector<node> next;
        next.reserve(level.size() * static_cast<size_t>(spec.branching));
        for (const node& p : level) {
            vec3 u, v;
            frame_from_axis(p.dir, u, v);
            // children directions on a rotated polygon at half the parent cap
            // radius, pairwise at least sin(pi/b) * w apart
            const double phase = r.uniform(0, 2 * std::numbers::pi);
            for (int c = 0; c < spec.branching; c++) {
                const double a = phase + 2 * std::numbers::pi * c / spec.branching;
                node ch;
                ch.dir = normalized(p.dir + (u * std::cos(a) + v * std::sin(a)) * (w / 2));
                ch.mid = p.mid + u * r.uniform(-wc / 2, wc / 2) + v * r.uniform(-wc / 2, wc / 2);
                next.push_back(ch);
            }
        }
        level.swap(next);
        w = wc;
    }
    std::vector<delta_tube> tubes;
    tubes.reserve(level.size());
    for (const node& n : level) {
        delta_tube t;
        t.delta = spec.delta;
        t.dir = n.dir;
        t.mid = n.mid;
        tubes.push_back(t);
    }
    if (spec.count > 0) subsample(tubes, spec.count, r);
    return tubes;
}

std::vector<delta_tube> gen_besicovitch(const family_spec& spec) {
    int k = spec.count > 0 ? static_cast<int>(std::ceil(std::log2(static_cast<double>(spec.count))))
                           : static_cast<int>(std::floor(std::log2(1.0 / spec.delta)));
    k = std::clamp(k, 1, 12);
    const int n = 1 << k;
    const double base = std::pow(0.5, k);
    if (!(spec.merge_ratio > 0) || spec.merge_ratio > 1)
        throw validation_error("merge ratio must lie in (0, 1]");

    // collapse-height offsets: the two halves of a size-2^(l+1) block are
    // exact translates, so sliding the right half left by (1 - z_l)*2^l*base
    // makes the block coincide with its left half at height z_l. Spreading
    // the collapse heights over (0, 1) keeps every height band thin, which is
    // what drives the union volume down as the depth grows. merge_ratio
    // scales the slide; 1 means full collapse.
    std::vector<double> off(static_cast<size_t>(n), 0.0);
    int level = 0;
    for (int span = 1; span < n; span *= 2, level++) {
        const double z = static_cast<double>(level + 1) / static_cast<double>(k + 1);
        const double shift = spec.merge_ratio * (1.0 - z) * span * base;
        for (int lo = 0; lo < n; lo += 2 * span) {
            for (int j = lo + span; j < std::min(lo + 2 * span, n); j++) {
                off[static_cast<size_t>(j)] -= shift;
            }
        }
    }

    std::vector<delta_tube> tubes;
    tubes.reserve(static_cast<size_t>(n));
    double xmin = 1e30, xmax = -1e30;
    std::vector<vec3> p0(static_cast<size_t>(n)), p1(static_cast<size_t>(n));
    for (int j = 0; j < n; j++) {
        const double bx = (j + 0.5) * base + off[static_cast<size_t>(j)];
        const double ax = 0.5 + off[static_cast<size_t>(j)];
        p0[static_cast<size_t>(j)] = vec3{bx, 0, 0};
        p1[static_cast<size_t>(j)] = vec3{ax, 0, 1};
        xmin = std::min({xmin, bx, ax});
        xmax = std::max({xmax, bx, ax});
    }
    const vec3 center{(xmin + xmax) / 2, 0, 0.5};
    for (int j = 0; j < n; j++) {
        delta_tube t;
        t.delta = spec.delta;
        t.dir = normalized(p1[static_cast<size_t>(j)] - p0[static_cast<size_t>(j)]);
        if (t.dir.z < 0) t.dir = -t.dir;
        t.mid = (p0[static_cast<size_t>(j)] + p1[static_cast<size_t>(j)]) * 0.5 - center;
        tubes.push_back(t);
    }
    return tubes;
}

void plant_prisms(const family_spec& spec, std::vector<convex_body>& out) {
    const double a_half = (spec.prism_a > 0 ? spec.prism_a : 4 * spec.delta) / 2;
    const double b_half = (spec.prism_b > 0 ? spec.prism_b : 64 * spec.delta) / 2;
    if (!(a_half >= spec.delta) || !(a_half <= b_half) || !(b_half <= 1))
        throw validation_error("prism dims must satisfy delta <= a/2 <= b/2 <= 1");
    if (spec.planted < 1) throw validation_error("need at least one prism");
    rng r(derive_seed(spec.seed, "planted-prisms"));
    out.reserve(static_cast<size_t>(spec.planted));
    for (int i = 0; i < spec.planted; i++) {
        const vec3 axis = r.unit_vector();
        mat3 rot = rotation_about(r.unit_vector(), r.uniform(0, 2 * std::numbers::pi));
        vec3 u = rot.apply(vec3{1, 0, 0});
        u = normalized(u - axis * dot(u, axis));
        const vec3 v = cross(axis, u);
        mat3 axes;
        axes.row(0) = u;
        axes.row(1) = v;
        axes.row(2) = axis.z >= 0 ? axis : -axis;
        out.push_back(convex_body::make_prism(r.in_ball(0.3), axes, vec3{a_half, b_half, 1.0}));
    }
}

std::vector<delta_tube> gen_prism_clustered(const family_spec& spec, rng& r) {
    std::vector<convex_body> prisms;
    plant_prisms(spec, prisms);
    if (spec.per_prism < 1) throw validation_error("need at least one tube per prism");
    std::vector<delta_tube> tubes;
    tubes.reserve(prisms.size() * static_cast<size_t>(spec.per_prism));
    for (const convex_body& p : prisms) {
        const vec3 axis = p.dir();
        const vec3 u = p.axes.row(0), v = p.axes.row(1);
        // lateral budget per thin axis: offset plus half the tilt excursion
        // plus the tube's own half-width must stay inside the prism
        const double bu = std::max(0.0, p.dims[0] - 1.3 * spec.delta);
        const double bv = std::max(0.0, p.dims[1] - 1.3 * spec.delta);
        for (int i = 0; i < spec.per_prism; i++) {
            delta_tube best;
            bool found = false;
            for (int attempt = 0; attempt < 400 && !found; attempt++) {
                const double shrink = attempt < 200 ? 1.0 : 0.25;
                delta_tube t;
                t.delta = spec.delta;
                const double tu = r.uniform(-0.8 * bu, 0.8 * bu) * shrink;
                const double tv = r.uniform(-0.8 * bv, 0.8 * bv) * shrink;
                t.dir = normalized(axis + u * tu + v * tv);
                if (t.dir.z < 0) t.dir = -t.dir;
                t.mid = p.center + u * r.uniform(-0.55, 0.55) * bu + v * r.uniform(-0.55, 0.55) * bv +
                        axis * r.uniform(-0.15, 0.15) * shrink;
                const bool in_ball = norm(t.core_point(-0.5)) <= 0.9 && norm(t.core_point(0.5)) <= 0.9;
                if (in_ball && contains_body(t.body(), p, 0.005)) {
                    best = t;
                    found = true;
                }
            }
            if (!found) throw statistical_error("could not place a tube inside a planted prism");
            tubes.push_back(best);
        }
    }
    return tubes;
}

std::vector<delta_tube> gen_random_uniform(const family_spec& spec, rng& r) {
    const int n = spec.count > 0 ? spec.count : 256;
    std::vector<delta_tube> tubes;
    tubes.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; i++) {
        delta_tube t;
        t.delta = spec.delta;
        t.dir = r.unit_vector();
        if (t.dir.z < 0) t.dir = -t.dir;
        t.mid = r.in_ball(0.3);
        tubes.push_back(t);
    }
    return tubes;
}

} // namespace

family_kind family_kind_from(const std::string& name) {
    if (name == "direction_separated") return family_kind::direction_separated;
    if (name == "well_spaced") return family_kind::well_spaced;
    if (name == "sticky") return family_kind::sticky;
    if (name == "besicovitch") return family_kind::besicovitch;
    if (name == "prism_clustered") return family_kind::prism_clustered;
    if (name == "random_uniform") return family_kind::random_uniform;
    throw validation_error("unknown family kind: " + name);
}

std::string family_kind_name(family_kind k) {
    switch (k) {
        case family_kind::direction_separated: return "direction_separated";
        case family_kind::well_spaced: return "well_spaced";
        case family_kind::sticky: return "sticky";
        case family_kind::besicovitch: return "besicovitch";
        case family_kind::prism_clustered: return "prism_clustered";
        case family_kind::random_uniform: return "random_uniform";
    }
    throw validation_error("unknown family kind");
}

tube_family generate_family(const family_spec& spec) {
    if (!(spec.delta >= std::pow(2.0, -20)) || spec.delta > 0.25)
        throw validation_error("delta out of [2^-20, 1/4]");
    tube_family f;
    f.delta = spec.delta;
    f.kind = family_kind_name(spec.kind);
    f.seed = spec.seed;
    rng r(derive_seed(spec.seed, f.kind));
    switch (spec.kind) {
        case family_kind::direction_separated: f.tubes = gen_direction_separated(spec, r); break;
        case family_kind::well_spaced: f.tubes = gen_well_spaced(spec, r); break;
        case family_kind::sticky: f.tubes = gen_sticky(spec, r); break;
        case family_kind::besicovitch: f.tubes = gen_besicovitch(spec); break;
        case family_kind::prism_clustered: f.tubes = gen_prism_clustered(spec, r); break;
        case family_kind::random_uniform: f.tubes = gen_random_uniform(spec, r); break;
    }
    subsample(f.tubes, spec.max_tubes, r);
    f.validate();
    return f;
}

std::vector<convex_body> planted_prisms(const family_spec& spec) {
    if (spec.kind != family_kind::prism_clustered)
        throw validation_error("planted prisms only exist for prism_clustered specs");
    std::vector<convex_body> out;
    plant_prisms(spec, out);
    return out;
}

shading_mode shading_mode_from(const std::string& name) {
    if (name == "full") return shading_mode::full;
    if (name == "random_subset") return shading_mode::random_subset;
    if (name == "two_ends") return shading_mode::two_ends;
    throw validation_error("unknown shading mode: " + name);
}

void apply_shading(tube_family& f, shading_mode mode, double lambda, double grid_factor, uint64_t seed) {
    if (f.tubes.empty()) throw validation_error("cannot shade an empty family");
    if (mode == shading_mode::full) lambda = 1;
    if (!(lambda > 0) || lambda > 1) throw validation_error("density out of (0, 1]");
    const voxel_grid g = voxel_grid::for_delta(f.delta, grid_factor);
    const uint64_t base = derive_seed(seed, "shading");
    f.shadings.clear();
    f.shadings.reserve(f.tubes.size());
    for (size_t i = 0; i < f.tubes.size(); i++) {
        const delta_tube& t = f.tubes[i];
        std::vector<uint64_t> vox = voxelize(t.body(), g);
        if (mode != shading_mode::full) {
            rng r(base + 0x9e3779b97f4a7c15ULL * (i + 1));
            if (mode == shading_mode::random_subset) {
                std::vector<uint64_t> kept;
                kept.reserve(vox.size());
                for (uint64_t v : vox) {
                    if (r.uniform() < lambda) kept.push_back(v);
                }
                vox.swap(kept);
            } else {
                const double t0 = -0.5 + r.uniform() * (1 - lambda);
                const double pad = g.h / 2;
                std::vector<uint64_t> kept;
                kept.reserve(vox.size());
                for (uint64_t v : vox) {
                    const double axial = dot(g.cell_center(v) - t.mid, t.dir);
                    if (axial >= t0 - pad && axial <= t0 + lambda + pad) kept.push_back(v);
                }
                vox.swap(kept);
            }
        }
        shading y;
        y.body = static_cast<int>(i);
        y.vox = std::move(vox);
        f.shadings.push_back(std::move(y));
    }
    f.grid = g;
    f.lambda = lambda;
    f.shaded = true;
    f.validate();
}

} // namespace tubelab
