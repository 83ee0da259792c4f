// volume.cpp -- union volumes and measured inequality reports.
#include "tubelab/volume.h"

#include <algorithm>
#include <cmath>

namespace tubelab {

namespace {

aabb shading_bounds(const std::vector<shading>& shadings, const voxel_grid& g) {
    aabb box;
    for (const shading& y : shadings) {
        if (!y.vox.empty()) box.grow(voxel_bounds(y.vox, g));
    }
    if (box.lo.x > box.hi.x) throw validation_error("all shadings are empty");
    return box;
}

} // namespace

double union_volume(const std::vector<shading>& shadings, const voxel_grid& g) {
    bit_grid bits(g, shading_bounds(shadings, g));
    int64_t i, j, k;
    for (const shading& y : shadings) {
        for (uint64_t v : y.vox) {
            g.unpack(v, i, j, k);
            bits.set(i, j, k);
        }
    }
    return static_cast<double>(bits.count()) * g.cell_volume();
}

double union_volume_bodies(const std::vector<convex_body>& bodies, const voxel_grid& g) {
    if (bodies.empty()) throw validation_error("no bodies to union");
    aabb box;
    for (const convex_body& b : bodies) box.grow(b.bounds());
    bit_grid bits(g, box);
    for (const convex_body& b : bodies) voxelize_into(b, bits);
    return static_cast<double>(bits.count()) * g.cell_volume();
}

double l2_overlap(const std::vector<shading>& shadings, const voxel_grid& g) {
    // sum over cells of multiplicity^2, via one sort of all voxel ids
    std::vector<uint64_t> all;
    size_t total = 0;
    for (const shading& y : shadings) total += y.vox.size();
    all.reserve(total);
    for (const shading& y : shadings) all.insert(all.end(), y.vox.begin(), y.vox.end());
    std::sort(all.begin(), all.end());
    double sum = 0;
    size_t i = 0;
    while (i < all.size()) {
        size_t j = i;
        while (j < all.size() && all[j] == all[i]) j++;
        const double m = static_cast<double>(j - i);
        sum += m * m;
        i = j;
    }
    return sum * g.cell_volume();
}

cordoba_report cordoba_bound(const std::vector<convex_body>& slabs, const std::vector<shading>& shadings,
                             const voxel_grid& g, double lambda, double m) {
    if (slabs.empty() || slabs.size() != shadings.size())
        throw validation_error("slab family and shadings must align");
    if (!(lambda > 0) || lambda > 1) throw validation_error("density out of (0, 1]");
    if (!(m >= 1)) throw validation_error("overlap constant must be >= 1");
    cordoba_report rep;
    rep.m = m;
    rep.lambda = lambda;
    double thickness = 0, vol_sum = 0, shade_sum = 0;
    for (const convex_body& s : slabs) {
        if (s.kind != body_kind::slab) throw validation_error("cordoba members must be slabs");
        thickness = std::max(thickness, s.dims[0]);
        vol_sum += s.volume();
    }
    for (const shading& y : shadings) shade_sum += y.measure(g);
    rep.slab_volume = vol_sum / static_cast<double>(slabs.size());
    rep.l2 = l2_overlap(shadings, g);
    rep.cs_lower = rep.l2 > 0 ? shade_sum * shade_sum / rep.l2 : 0;
    rep.row.name = "cordoba-union";
    rep.row.lhs = union_volume(shadings, g);
    rep.row.rhs = 0.01 * (1.0 / std::fabs(std::log2(thickness))) * (1.0 / m) * lambda * lambda *
                  static_cast<double>(slabs.size()) * rep.slab_volume;
    rep.row.ratio = rep.row.rhs > 0 ? rep.row.lhs / rep.row.rhs : 0;
    rep.row.pass = rep.row.lhs >= rep.row.rhs;
    return rep;
}

hairbrush_report hairbrush_bound(const tube_family& f, const candidate_params& cp, const slab_sweep_params& sp) {
    f.validate();
    if (!f.shaded) throw validation_error("hairbrush bound needs a shaded family");
    hairbrush_report rep;
    const std::vector<convex_body> bodies = f.bodies();
    const candidate_family cands = build_convex_candidates(bodies, cp);
    rep.kt_constant = katz_tao_constant(bodies, cands, cp.slack).constant;
    rep.slab_constant = slab_constant(bodies, normalization::frostman, sp).constant;
    rep.gate = std::pow(f.delta, -0.1);
    rep.hypotheses_ok = rep.kt_constant <= rep.gate && rep.slab_constant <= rep.gate;
    rep.row.name = rep.hypotheses_ok ? "hairbrush-union" : "hairbrush-union-not-applicable";
    rep.row.lhs = union_volume(f.shadings, f.grid);
    rep.row.rhs = 0.01 * std::pow(f.delta, 1.6) * std::sqrt(static_cast<double>(f.tubes.size()));
    rep.row.ratio = rep.row.rhs > 0 ? rep.row.lhs / rep.row.rhs : 0;
    rep.row.pass = rep.row.lhs >= rep.row.rhs;
    return rep;
}

doubling_report doubling_ratio(const tube_family& f, double R) {
    f.validate();
    if (!f.shaded) throw validation_error("doubling ratio needs a shaded family");
    if (!(R >= 1) || R > 64) throw validation_error("doubling factor out of [1, 64]");
    doubling_report rep;
    rep.delta = f.delta;
    rep.R = R;
    rep.union_vol = union_volume(f.shadings, f.grid);
    std::vector<convex_body> dilated;
    dilated.reserve(f.tubes.size());
    for (const delta_tube& t : f.tubes) dilated.push_back(t.body().dilated(R));
    // coarser grid matched to the dilated thickness
    const voxel_grid coarse = voxel_grid::for_delta(std::min(0.25, R * f.delta), 2.0);
    rep.dilated_vol = union_volume_bodies(dilated, coarse);
    rep.ratio = rep.dilated_vol / (R * R * R * rep.union_vol);
    return rep;
}

concentration_report packing_concentration(const std::vector<convex_body>& members, double a, double b, double slack) {
    if (members.empty()) throw validation_error("empty member family");
    if (!(a > 0) || a > b) throw validation_error("concentration scales need 0 < a <= b");
    concentration_report rep;
    for (size_t i = 0; i < members.size(); i++) {
        for (double rho = a; rho <= b * (1 + 1e-12); rho *= 2) {
            const convex_body nbhd = members[i].neighborhood(rho);
            int inside = 0;
            for (const convex_body& m : members) {
                if (contains_body(m, nbhd, slack)) inside++;
            }
            const double val = members[i].volume() / nbhd.volume() * std::sqrt(static_cast<double>(inside));
            if (val > rep.value) {
                rep.value = val;
                rep.argmax = static_cast<int>(i);
                rep.rho = rho;
            }
        }
    }
    return rep;
}

tangency_report tangency_stats(const std::vector<convex_body>& prisms, const std::vector<shading>& shadings,
                               const voxel_grid& g, int base_index) {
    if (prisms.empty() || prisms.size() != shadings.size())
        throw validation_error("prisms and shadings must align");
    if (base_index < 0 || static_cast<size_t>(base_index) >= prisms.size())
        throw validation_error("base prism index out of range");
    tangency_report rep;
    const convex_body& base = prisms[static_cast<size_t>(base_index)];
    rep.a_over_b = base.dims[0] / base.dims[1];

    double min_density = 1;
    for (size_t i = 0; i < prisms.size(); i++) {
        min_density = std::min(min_density, shadings[i].measure(g) / prisms[i].volume());
    }
    rep.lambda = min_density;

    // (voxel, prism) pairs sorted by voxel: runs give the shading multiset at x
    std::vector<std::pair<uint64_t, int32_t>> pairs;
    size_t total = 0;
    for (const shading& y : shadings) total += y.vox.size();
    pairs.reserve(total);
    for (size_t i = 0; i < shadings.size(); i++) {
        for (uint64_t v : shadings[i].vox) pairs.emplace_back(v, static_cast<int32_t>(i));
    }
    std::sort(pairs.begin(), pairs.end());

    double theta_min = 1e300;
    double global_max_pair = 0;
    size_t i = 0;
    while (i < pairs.size()) {
        size_t j = i;
        while (j < pairs.size() && pairs[j].first == pairs[i].first) j++;
        double max_pair = 0;
        for (size_t p = i; p < j; p++) {
            for (size_t q = p + 1; q < j; q++) {
                const vec3& n1 = prisms[static_cast<size_t>(pairs[p].second)].plane_normal();
                const vec3& n2 = prisms[static_cast<size_t>(pairs[q].second)].plane_normal();
                max_pair = std::max(max_pair, line_angle(n1, n2));
            }
        }
        global_max_pair = std::max(global_max_pair, max_pair);
        theta_min = std::min(theta_min, rep.a_over_b + max_pair);
        i = j;
    }
    if (theta_min > 1e299) throw validation_error("no shaded voxels");
    rep.theta_min = theta_min;
    rep.max_pair_angle = global_max_pair;

    const convex_body nbhd = base.neighborhood(base.dims[1] * theta_min);
    const std::vector<uint64_t> nvox = voxelize(nbhd, g);
    rep.nbhd_volume = static_cast<double>(nvox.size()) * g.cell_volume();
    // fraction of the neighborhood covered by the union of shadings
    std::vector<uint64_t> uni;
    uni.reserve(pairs.size());
    for (const auto& [v, p] : pairs) {
        if (uni.empty() || uni.back() != v) uni.push_back(v);
    }
    const uint64_t hit = intersection_count(uni, nvox);
    rep.covered = nvox.empty() ? 0 : static_cast<double>(hit) / static_cast<double>(nvox.size());
    rep.row.name = "tangency-coverage";
    rep.row.lhs = rep.covered;
    rep.row.rhs = 0.01 * std::pow(rep.lambda, 4.0);
    rep.row.ratio = rep.row.rhs > 0 ? rep.row.lhs / rep.row.rhs : 0;
    rep.row.pass = rep.row.lhs >= rep.row.rhs;
    return rep;
}

bool long_end_exit(const delta_tube& t, const convex_body& p, double tol) {
    if (!(tol >= 0)) throw validation_error("tolerance must be nonnegative");
    // clip the core segment to the prism constraints
    double lo = -0.5, hi = 0.5;
    for (int a = 0; a < 3; a++) {
        const double den = dot(p.axes.row(a), t.dir);
        const double num = dot(p.axes.row(a), t.mid - p.center);
        if (std::fabs(den) < 1e-14) {
            if (std::fabs(num) > p.dims[a]) return false;
            continue;
        }
        double s0 = (-p.dims[a] - num) / den, s1 = (p.dims[a] - num) / den;
        if (s0 > s1) std::swap(s0, s1);
        lo = std::max(lo, s0);
        hi = std::min(hi, s1);
    }
    if (lo >= hi) return false;
    const double q0 = dot(p.axes.row(2), t.core_point(lo) - p.center);
    const double q1 = dot(p.axes.row(2), t.core_point(hi) - p.center);
    if (q0 * q1 >= 0) return false;  // must exit through opposite faces
    return std::fabs(q0) >= p.dims[2] - tol && std::fabs(q1) >= p.dims[2] - tol;
}

kakeya_report kakeya_bound_report(const tube_family& f, char flavor, double omega, double eps, double sigma,
                                  double kappa, const candidate_params& cp, const slab_sweep_params& sp) {
    f.validate();
    if (!f.shaded) throw validation_error("report needs a shaded family");
    if (flavor != 'D' && flavor != 'E' && flavor != 'F') throw validation_error("unknown report flavor");
    kakeya_report rep;
    rep.flavor = flavor;
    rep.omega = omega;
    rep.eps = eps;
    rep.sigma = sigma;
    rep.kappa = kappa;
    const double n = static_cast<double>(f.tubes.size());
    const double tv = f.tube_volume();
    const double mass = n * tv;
    const double half_mass = std::sqrt(tv) * n;

    rep.row.name = std::string("kakeya-") + flavor;
    rep.row.lhs = union_volume(f.shadings, f.grid);
    const double scale = kappa * std::pow(f.delta, omega + eps);
    if (flavor == 'D') {
        rep.row.rhs = scale * mass * std::pow(half_mass, -sigma);
    } else if (flavor == 'E') {
        const std::vector<convex_body> bodies = f.bodies();
        const candidate_family cands = build_convex_candidates(bodies, cp);
        rep.m = std::max(1.0, katz_tao_constant(bodies, cands, cp.slack).constant);
        rep.l = std::max(1.0, slab_constant(bodies, normalization::katz_tao, sp).constant);
        rep.row.rhs = scale / rep.m * mass * std::pow(std::pow(rep.m, -1.5) * rep.l * half_mass, -sigma);
    } else {
        const std::vector<convex_body> bodies = f.bodies();
        rep.D = std::max(1.0, packing_concentration(bodies, f.delta, 1.0, cp.slack).value);
        rep.row.rhs = scale / rep.D * mass * std::pow(std::pow(rep.D, -1.5) * half_mass, -sigma);
    }
    rep.row.ratio = rep.row.rhs > 0 ? rep.row.lhs / rep.row.rhs : 0;
    rep.row.pass = rep.row.lhs >= rep.row.rhs;
    return rep;
}

} // namespace tubelab
