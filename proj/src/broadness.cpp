// broadness.cpp -- angular non-concentration: predicate, greedy pieces,
// scale search, and shading regularization.
#include "tubelab/broadness.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "tubelab/wolff.h"

namespace tubelab {

namespace {

std::vector<vec3> sphere_net(int count) {
    std::vector<vec3> net;
    net.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; i++) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1 - z * z));
        const double ang = 2.399963229728653 * i;
        net.push_back({r * std::cos(ang), r * std::sin(ang), z});
    }
    return net;
}

std::vector<double> dyadic_scales(double delta, double top) {
    std::vector<double> out;
    for (double r = delta; r <= top * (1 + 1e-12); r *= 2) out.push_back(r);
    if (out.empty() || out.back() < top * (1 - 1e-12)) out.push_back(top);
    return out;
}

} // namespace

broad_report is_broad(const std::vector<vec3>& dirs, const broad_params& p, const direction_cap& domain) {
    if (dirs.empty()) throw validation_error("empty direction set");
    if (!(p.beta > 0) || p.beta > 2) throw validation_error("broadness beta out of (0, 2]");
    if (!(p.delta > 0) || p.delta > 1) throw validation_error("broadness delta out of (0, 1]");
    const double top = domain.whole_sphere ? 2.0 : domain.rho;
    const std::vector<double> scales = dyadic_scales(p.delta, top);
    const double n = static_cast<double>(dirs.size());

    std::vector<vec3> centers = dirs;
    for (const vec3& v : sphere_net(512)) {
        if (domain.whole_sphere || angle_between(v, domain.center) <= domain.rho) centers.push_back(v);
    }
    if (!domain.whole_sphere) centers.push_back(domain.center);

    broad_report rep;
    rep.broad = true;
    double worst_ratio = -1;
    std::vector<int> bins(scales.size() + 1, 0);
    for (const vec3& v0 : centers) {
        std::fill(bins.begin(), bins.end(), 0);
        for (const vec3& v : dirs) {
            const double a = angle_between(v, v0);
            const size_t idx =
                static_cast<size_t>(std::lower_bound(scales.begin(), scales.end(), a - 1e-12) - scales.begin());
            bins[idx]++;
        }
        int cum = 0;
        for (size_t s = 0; s < scales.size(); s++) {
            cum += bins[s];
            if (cum == 0) continue;
            const double rel = domain.whole_sphere ? scales[s] : scales[s] / domain.rho;
            const double allowed = p.error * std::pow(rel, p.beta) * n;
            const double ratio = static_cast<double>(cum) / allowed;
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                rep.worst = {v0, scales[s], cum, allowed};
            }
            if (ratio > 1 + 1e-12) rep.broad = false;
        }
    }
    return rep;
}

broad_pieces_result find_broad_pieces(const std::vector<vec3>& dirs, double delta, double beta) {
    if (dirs.empty()) throw validation_error("empty direction set");
    if (!(beta > 0) || beta > 1) throw validation_error("pieces beta out of (0, 1]");
    if (!(delta > 0) || delta > 0.5) throw validation_error("pieces delta out of (0, 1/2]");
    broad_pieces_result res;
    res.total = dirs.size();

    std::vector<vec3> centers = dirs;
    for (const vec3& v : sphere_net(512)) centers.push_back(v);
    const std::vector<double> scales = dyadic_scales(delta, 2.0);

    std::vector<char> alive(dirs.size(), 1);
    size_t pool = dirs.size();
    struct raw_piece {
        vec3 center;
        double r;
        std::vector<int> members;
    };
    std::vector<raw_piece> raw;
    std::vector<int> bins(scales.size() + 1, 0);
    // greedy: grab the cap maximizing r^-beta * count, peel its 100x dilate,
    // stop once half the mass is spoken for
    while (2 * pool > dirs.size()) {
        double best_score = -1;
        vec3 best_v{};
        double best_r = 0;
        for (const vec3& v0 : centers) {
            std::fill(bins.begin(), bins.end(), 0);
            for (size_t i = 0; i < dirs.size(); i++) {
                if (!alive[i]) continue;
                const double a = angle_between(dirs[i], v0);
                const size_t idx =
                    static_cast<size_t>(std::lower_bound(scales.begin(), scales.end(), a - 1e-12) - scales.begin());
                bins[idx]++;
            }
            int cum = 0;
            for (size_t s = 0; s < scales.size(); s++) {
                cum += bins[s];
                if (cum == 0) continue;
                const double score = std::pow(scales[s], -beta) * cum;
                if (score > best_score) {
                    best_score = score;
                    best_v = v0;
                    best_r = scales[s];
                }
            }
        }
        if (best_score <= 0) break;
        raw_piece piece;
        piece.center = best_v;
        piece.r = best_r;
        for (size_t i = 0; i < dirs.size(); i++) {
            if (alive[i] && angle_between(dirs[i], best_v) <= best_r + 1e-12) piece.members.push_back(static_cast<int>(i));
        }
        for (size_t i = 0; i < dirs.size(); i++) {
            if (alive[i] && angle_between(dirs[i], best_v) <= 100 * best_r + 1e-12) {
                alive[i] = 0;
                pool--;
            }
        }
        if (piece.members.empty()) break;
        raw.push_back(std::move(piece));
    }

    // dyadic pigeonhole: keep the radius bucket holding the most members
    std::map<int64_t, size_t> bucket;
    for (const raw_piece& pc : raw) bucket[std::llround(std::log2(pc.r) * 8)] += pc.members.size();
    int64_t best_key = 0;
    size_t best_mass = 0;
    for (const auto& [key, mass] : bucket) {
        if (mass > best_mass) {
            best_mass = mass;
            best_key = key;
        }
    }
    for (raw_piece& pc : raw) {
        if (std::llround(std::log2(pc.r) * 8) != best_key) continue;
        res.rho = pc.r;
        res.kept += pc.members.size();
        res.pieces.push_back({pc.center, pc.r, std::move(pc.members)});
    }
    return res;
}

broad_report union_is_broad(const std::vector<std::vector<vec3>>& parts, const broad_params& p,
                            const direction_cap& domain) {
    std::vector<vec3> all;
    for (const auto& part : parts) all.insert(all.end(), part.begin(), part.end());
    return is_broad(all, p, domain);
}

broad_scale_result find_broad_scale(const tube_family& f, const broad_scale_params& p) {
    f.validate();
    if (!f.shaded) throw validation_error("scale search needs a shaded family");
    broad_scale_result res;

    // branch A: high-multiplicity certificate from the union of shadings
    {
        aabb box;
        for (const delta_tube& t : f.tubes)
            for (const vec3& c : t.body().corners()) box.grow(c);
        bit_grid bits(f.grid, box);
        for (const shading& y : f.shadings) {
            int64_t i, j, k;
            for (uint64_t v : y.vox) {
                f.grid.unpack(v, i, j, k);
                bits.set(i, j, k);
            }
        }
        const double union_vol = static_cast<double>(bits.count()) * f.grid.cell_volume();
        const double sum_vol = f.total_shading();
        if (sum_vol <= 0) throw validation_error("family has empty shadings");
        res.certificate = union_vol / (std::pow(f.delta, p.omega / 2) * sum_vol);
        if (res.certificate <= 1) {
            res.branch = 'A';
            res.pass = true;
            return res;
        }
    }

    // branch B: find a cover scale whose rescaled sub-families are broad
    res.branch = 'B';
    const double delta_floor = 1.0 / (8 * std::log2(1.0 / f.delta));
    for (double rho = 4 * f.delta; rho <= 0.25 + 1e-12; rho *= 2) {
        const tube_cover cover = greedy_tube_cover(f.tubes, rho, p.slack);
        const double inner_delta = std::clamp(f.delta / rho, 0x1.0p-20, 0.25);
        bool all_broad = true;
        size_t refined_total = 0;
        std::vector<std::vector<int>> refined_lists(cover.covers.size());
        for (size_t c = 0; c < cover.covers.size() && all_broad; c++) {
            const std::vector<int>& mine = cover.assigned[c];
            if (mine.empty()) continue;
            std::vector<vec3> dirs;
            dirs.reserve(mine.size());
            for (int m : mine) dirs.push_back(rescale_body(cover.covers[c], f.tubes[static_cast<size_t>(m)]).dir());
            const broad_pieces_result pieces = find_broad_pieces(dirs, inner_delta, p.beta);
            for (const broad_piece& pc : pieces.pieces) {
                std::vector<vec3> sub;
                for (int i : pc.members) sub.push_back(dirs[static_cast<size_t>(i)]);
                broad_params bp;
                bp.beta = p.beta;
                bp.delta = inner_delta;
                bp.error = p.error;
                direction_cap cap{pc.center, pc.r, false};
                if (!is_broad(sub, bp, cap).broad) {
                    all_broad = false;
                    break;
                }
                for (int i : pc.members) refined_lists[c].push_back(mine[static_cast<size_t>(i)]);
            }
            refined_total += refined_lists[c].size();
        }
        const double fraction = static_cast<double>(refined_total) / static_cast<double>(f.tubes.size());
        if (all_broad && fraction >= delta_floor) {
            res.rho = rho;
            res.covers = cover.covers;
            res.cover_members = std::move(refined_lists);
            res.refined_fraction = fraction;
            res.pass = true;
            return res;
        }
        if (fraction > res.refined_fraction) {
            res.rho = rho;
            res.covers = cover.covers;
            res.cover_members = refined_lists;
            res.refined_fraction = fraction;
        }
    }
    res.pass = false;
    return res;
}

namespace {

struct block_counts {
    // level -> packed block id -> count
    std::vector<std::unordered_map<uint64_t, uint32_t>> levels;
};

block_counts count_blocks(const std::vector<uint64_t>& vox, const voxel_grid& g, int max_level) {
    block_counts bc;
    bc.levels.resize(static_cast<size_t>(max_level) + 1);
    int64_t i, j, k;
    for (uint64_t v : vox) {
        g.unpack(v, i, j, k);
        for (int l = 0; l <= max_level; l++) bc.levels[static_cast<size_t>(l)][g.pack(i >> l, j >> l, k >> l)]++;
    }
    return bc;
}

} // namespace

bool is_regular_shading(const convex_body& w, const shading& y, const voxel_grid& g, double delta) {
    if (y.vox.empty()) return true;
    const std::vector<uint64_t> wvox = voxelize(w, g);
    if (wvox.empty()) throw validation_error("body has no voxels on this grid");
    const aabb box = w.bounds();
    double extent = 0;
    for (int a = 0; a < 3; a++) extent = std::max(extent, box.hi[a] - box.lo[a]);
    const int max_level = std::max(0, static_cast<int>(std::ceil(std::log2(std::max(extent / g.h, 1.0)))));
    const block_counts wc = count_blocks(wvox, g, max_level);
    const block_counts yc = count_blocks(y.vox, g, max_level);
    const double c0 = 1.0 / (100 * std::log2(1.0 / delta));
    const double y_total = static_cast<double>(y.vox.size());
    const double w_total = static_cast<double>(wvox.size());
    for (int l = 0; l <= max_level; l++) {
        for (const auto& [block, cnt] : yc.levels[static_cast<size_t>(l)]) {
            const auto it = wc.levels[static_cast<size_t>(l)].find(block);
            const double wq = it == wc.levels[static_cast<size_t>(l)].end() ? 0.0 : static_cast<double>(it->second);
            const double need = c0 * y_total * wq / w_total;
            if (static_cast<double>(cnt) < need - 1e-9) return false;
        }
    }
    return true;
}

regular_report regularize_shading(const convex_body& w, const shading& y, const voxel_grid& g, double delta) {
    if (!(delta > 0) || delta >= 1) throw validation_error("regularization delta out of (0, 1)");
    const std::vector<uint64_t> wvox = voxelize(w, g);
    if (wvox.empty()) throw validation_error("body has no voxels on this grid");
    const aabb box = w.bounds();
    double extent = 0;
    for (int a = 0; a < 3; a++) extent = std::max(extent, box.hi[a] - box.lo[a]);
    const int max_level = std::max(0, static_cast<int>(std::ceil(std::log2(std::max(extent / g.h, 1.0)))));
    const block_counts wc = count_blocks(wvox, g, max_level);
    const double c0 = 1.0 / (100 * std::log2(1.0 / delta));
    const double w_total = static_cast<double>(wvox.size());

    regular_report rep;
    rep.kept = y;
    const size_t before = y.vox.size();
    for (int round = 0; round < 64; round++) {
        rep.rounds = round + 1;
        const block_counts yc = count_blocks(rep.kept.vox, g, max_level);
        const double y_total = static_cast<double>(rep.kept.vox.size());
        if (y_total == 0) break;
        // collect deficient blocks per level
        std::vector<std::unordered_map<uint64_t, char>> bad(static_cast<size_t>(max_level) + 1);
        bool any = false;
        for (int l = 0; l <= max_level; l++) {
            for (const auto& [block, cnt] : yc.levels[static_cast<size_t>(l)]) {
                const auto it = wc.levels[static_cast<size_t>(l)].find(block);
                const double wq = it == wc.levels[static_cast<size_t>(l)].end() ? 0.0 : static_cast<double>(it->second);
                const double need = c0 * y_total * wq / w_total;
                if (static_cast<double>(cnt) < need - 1e-9) {
                    bad[static_cast<size_t>(l)][block] = 1;
                    any = true;
                }
            }
        }
        if (!any) break;
        std::vector<uint64_t> survive;
        survive.reserve(rep.kept.vox.size());
        int64_t i, j, k;
        for (uint64_t v : rep.kept.vox) {
            g.unpack(v, i, j, k);
            bool dead = false;
            for (int l = 0; l <= max_level && !dead; l++) {
                if (bad[static_cast<size_t>(l)].count(g.pack(i >> l, j >> l, k >> l))) dead = true;
            }
            if (!dead) survive.push_back(v);
        }
        rep.kept.vox = std::move(survive);
    }
    rep.removed = before - rep.kept.vox.size();
    rep.verified = is_regular_shading(w, rep.kept, g, delta);
    return rep;
}

} // namespace tubelab
