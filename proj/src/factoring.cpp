// factoring.cpp -- structure-finding decompositions.
#include "tubelab/factoring.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <queue>

#include "tubelab/rng.h"

namespace tubelab {

prune_result prune_bipartite(const bipartite_graph& g) {
    if (g.n_left < 0 || g.n_right < 0) throw validation_error("negative vertex count");
    for (const auto& [l, r] : g.edges) {
        if (l < 0 || l >= g.n_left || r < 0 || r >= g.n_right) throw validation_error("edge endpoint out of range");
    }
    // Thresholds frozen from the input graph. A vertex is deficient when its
    // current degree falls below (#E / (4 * side size)); deleting deficient
    // vertices removes < #E/4 edges per side, so at least half survive.
    const uint64_t e0 = g.edges.size();
    const uint64_t nl = static_cast<uint64_t>(std::max(g.n_left, 1));
    const uint64_t nr = static_cast<uint64_t>(std::max(g.n_right, 1));

    std::vector<std::vector<int>> adj_l(static_cast<size_t>(g.n_left)), adj_r(static_cast<size_t>(g.n_right));
    for (size_t e = 0; e < g.edges.size(); e++) {
        adj_l[static_cast<size_t>(g.edges[e].first)].push_back(static_cast<int>(e));
        adj_r[static_cast<size_t>(g.edges[e].second)].push_back(static_cast<int>(e));
    }
    std::vector<uint64_t> deg_l(static_cast<size_t>(g.n_left), 0), deg_r(static_cast<size_t>(g.n_right), 0);
    for (const auto& [l, r] : g.edges) {
        deg_l[static_cast<size_t>(l)]++;
        deg_r[static_cast<size_t>(r)]++;
    }
    std::vector<char> live_l(static_cast<size_t>(g.n_left), 1), live_r(static_cast<size_t>(g.n_right), 1);
    std::vector<char> edge_live(g.edges.size(), 1);

    auto deficient_l = [&](int v) { return 4 * nl * deg_l[static_cast<size_t>(v)] < e0; };
    auto deficient_r = [&](int v) { return 4 * nr * deg_r[static_cast<size_t>(v)] < e0; };

    std::deque<std::pair<char, int>> work;  // ('L'|'R', vertex)
    for (int v = 0; v < g.n_left; v++)
        if (deficient_l(v)) work.emplace_back('L', v);
    for (int v = 0; v < g.n_right; v++)
        if (deficient_r(v)) work.emplace_back('R', v);

    while (!work.empty()) {
        const auto [side, v] = work.front();
        work.pop_front();
        auto& live = side == 'L' ? live_l : live_r;
        if (!live[static_cast<size_t>(v)]) continue;
        live[static_cast<size_t>(v)] = 0;
        const auto& adj = side == 'L' ? adj_l : adj_r;
        for (int e : adj[static_cast<size_t>(v)]) {
            if (!edge_live[static_cast<size_t>(e)]) continue;
            edge_live[static_cast<size_t>(e)] = 0;
            const auto [l, r] = g.edges[static_cast<size_t>(e)];
            deg_l[static_cast<size_t>(l)]--;
            deg_r[static_cast<size_t>(r)]--;
            if (side == 'L') {
                if (live_r[static_cast<size_t>(r)] && deficient_r(r)) work.emplace_back('R', r);
            } else {
                if (live_l[static_cast<size_t>(l)] && deficient_l(l)) work.emplace_back('L', l);
            }
        }
    }

    prune_result out;
    for (int v = 0; v < g.n_left; v++)
        if (live_l[static_cast<size_t>(v)]) out.left.push_back(v);
    for (int v = 0; v < g.n_right; v++)
        if (live_r[static_cast<size_t>(v)]) out.right.push_back(v);
    for (size_t e = 0; e < g.edges.size(); e++)
        if (edge_live[e]) out.edges.push_back(g.edges[e]);
    if (2 * out.edges.size() < e0) throw check_error("pruning lost more than half the edges");
    return out;
}

namespace {

int dyadic_exp(double v) { return static_cast<int>(std::floor(std::log2(std::max(v, 1e-300)))); }

double family_mass(const std::vector<convex_body>& members, const std::vector<char>& alive) {
    double m = 0;
    for (size_t i = 0; i < members.size(); i++)
        if (alive[i]) m += members[i].volume();
    return m;
}

size_t alive_count(const std::vector<char>& alive) {
    size_t n = 0;
    for (char c : alive) n += static_cast<size_t>(c);
    return n;
}

} // namespace

convex_factor_result factor_convex(const std::vector<convex_body>& members, double delta, const factor_params& p) {
    if (members.empty()) throw validation_error("cannot factor an empty family");
    convex_factor_result res;
    candidate_params cp = p.cands;
    cp.delta = delta;
    const candidate_family cands = build_convex_candidates(members, cp);
    const size_t n0 = members.size();

    // step 1: peel along Katz-Tao witnesses; keep the chain element with the
    // best balance between how little was discarded and how small the
    // constant got.
    std::vector<char> alive(members.size(), 1);
    std::vector<char> best_alive = alive;
    double best_score = 1e300;
    double best_constant = 0;
    for (int step = 0; step < p.max_chain; step++) {
        const wolff_report rep = katz_tao_constant(members, cands, p.slack, &alive);
        const size_t na = alive_count(alive);
        const double shrink = std::log(static_cast<double>(n0) / static_cast<double>(na));
        const double score = std::exp(shrink * shrink) * rep.constant;
        if (score < best_score) {
            best_score = score;
            best_alive = alive;
            best_constant = rep.constant;
        }
        if (rep.witness < 0 || static_cast<size_t>(rep.witness_count) == na) break;
        // delete the witness contents so the concentrated spot stops driving
        // the constant, then re-evaluate on the remainder
        std::vector<char> next = alive;
        const convex_body& w = cands.bodies[static_cast<size_t>(rep.witness)];
        size_t removed = 0;
        for (size_t i = 0; i < members.size(); i++) {
            if (alive[i] && contains_body(members[i], w, p.slack)) {
                next[i] = 0;
                removed++;
            }
        }
        if (removed == 0 || removed == na) break;
        alive = std::move(next);
    }
    alive = best_alive;

    // step 2: greedily pick covers until they hold most of the surviving mass
    // (lazy greedy over the shared candidate family). The score is
    // count * density, so a prism holding a whole cluster beats the
    // single-member boxes that bare density would always prefer.
    const std::vector<std::vector<int>> cand_members = members_in(cands.bodies, members, p.slack);
    const double target_mass = family_mass(members, alive) * p.cover_fraction;
    std::vector<char> covered(members.size(), 0);
    std::vector<int> chosen;
    {
        auto gain = [&](size_t w) {
            double cnt = 0;
            for (int m : cand_members[w])
                if (alive[static_cast<size_t>(m)] && !covered[static_cast<size_t>(m)]) cnt += 1;
            return cnt * cnt / cands.bodies[w].volume();
        };
        std::priority_queue<std::pair<double, size_t>> heap;
        for (size_t w = 0; w < cands.bodies.size(); w++) {
            const double g = gain(w);
            if (g > 0) heap.emplace(g, w);
        }
        double covered_mass = 0;
        while (covered_mass < target_mass && !heap.empty()) {
            auto [g, w] = heap.top();
            heap.pop();
            const double fresh = gain(w);
            if (!heap.empty() && fresh < heap.top().first) {
                if (fresh > 0) heap.emplace(fresh, w);
                continue;
            }
            if (fresh <= 0) continue;
            chosen.push_back(static_cast<int>(w));
            for (int m : cand_members[w]) {
                if (alive[static_cast<size_t>(m)] && !covered[static_cast<size_t>(m)]) {
                    covered[static_cast<size_t>(m)] = 1;
                    covered_mass += members[static_cast<size_t>(m)].volume();
                }
            }
        }
    }
    for (size_t i = 0; i < members.size(); i++)
        if (!covered[i]) alive[i] = 0;

    // step 3: pigeonhole the covers onto a common dyadic shape.
    {
        std::map<std::array<int, 3>, std::vector<int>> buckets;
        for (int w : chosen) {
            const vec3 d = cands.bodies[static_cast<size_t>(w)].dims;
            buckets[{dyadic_exp(d[0]), dyadic_exp(d[1]), dyadic_exp(d[2])}].push_back(w);
        }
        double best_mass = -1;
        std::vector<int> best_bucket;
        for (const auto& [shape, ws] : buckets) {
            std::vector<char> in_bucket(members.size(), 0);
            for (int w : ws)
                for (int m : cand_members[static_cast<size_t>(w)])
                    if (alive[static_cast<size_t>(m)]) in_bucket[static_cast<size_t>(m)] = 1;
            double mass = 0;
            for (size_t i = 0; i < members.size(); i++)
                if (in_bucket[i]) mass += members[i].volume();
            if (mass > best_mass) {
                best_mass = mass;
                best_bucket = ws;
            }
        }
        chosen = best_bucket;
        std::vector<char> still(members.size(), 0);
        for (int w : chosen)
            for (int m : cand_members[static_cast<size_t>(w)])
                if (alive[static_cast<size_t>(m)]) still[static_cast<size_t>(m)] = 1;
        alive = std::move(still);
    }

    // step 4: pigeonhole members onto a dyadic multiplicity, then prune the
    // incidence graph so degrees even out on both sides.
    {
        std::vector<int> mult(members.size(), 0);
        for (int w : chosen)
            for (int m : cand_members[static_cast<size_t>(w)])
                if (alive[static_cast<size_t>(m)]) mult[static_cast<size_t>(m)]++;
        std::map<int, double> bucket_mass;
        for (size_t i = 0; i < members.size(); i++)
            if (alive[i] && mult[i] > 0) bucket_mass[dyadic_exp(mult[i])] += members[i].volume();
        int best_exp = 0;
        double best_mass = -1;
        for (const auto& [e, mass] : bucket_mass) {
            if (mass > best_mass) {
                best_mass = mass;
                best_exp = e;
            }
        }
        for (size_t i = 0; i < members.size(); i++)
            if (alive[i] && (mult[i] == 0 || dyadic_exp(mult[i]) != best_exp)) alive[i] = 0;

        // compact ids for the bipartite prune
        std::vector<int> mem_ids, cov_ids;
        std::vector<int> mem_pos(members.size(), -1), cov_pos(cands.bodies.size(), -1);
        for (size_t i = 0; i < members.size(); i++) {
            if (alive[i]) {
                mem_pos[i] = static_cast<int>(mem_ids.size());
                mem_ids.push_back(static_cast<int>(i));
            }
        }
        for (int w : chosen) {
            cov_pos[static_cast<size_t>(w)] = static_cast<int>(cov_ids.size());
            cov_ids.push_back(w);
        }
        bipartite_graph bg;
        bg.n_left = static_cast<int>(mem_ids.size());
        bg.n_right = static_cast<int>(cov_ids.size());
        for (int w : chosen) {
            for (int m : cand_members[static_cast<size_t>(w)]) {
                if (alive[static_cast<size_t>(m)])
                    bg.edges.emplace_back(mem_pos[static_cast<size_t>(m)], cov_pos[static_cast<size_t>(w)]);
            }
        }
        if (!bg.edges.empty()) {
            const prune_result pr = prune_bipartite(bg);
            std::vector<char> keep_mem(members.size(), 0);
            for (int l : pr.left) keep_mem[static_cast<size_t>(mem_ids[static_cast<size_t>(l)])] = 1;
            for (size_t i = 0; i < members.size(); i++)
                if (alive[i] && !keep_mem[i]) alive[i] = 0;
            std::vector<int> kept_covers;
            for (int r : pr.right) kept_covers.push_back(cov_ids[static_cast<size_t>(r)]);
            chosen = kept_covers;
        }
    }

    for (size_t i = 0; i < members.size(); i++)
        if (alive[i]) res.kept.push_back(static_cast<int>(i));
    if (res.kept.empty()) throw check_error("factoring discarded every member");
    for (int w : chosen) {
        std::vector<int> list;
        for (int m : cand_members[static_cast<size_t>(w)])
            if (alive[static_cast<size_t>(m)]) list.push_back(m);
        if (list.empty()) continue;
        res.covers.push_back(cands.bodies[static_cast<size_t>(w)]);
        res.cover_members.push_back(std::move(list));
    }
    if (res.covers.empty()) throw check_error("factoring kept no covers");

    // step 5: verify the conclusions a posteriori.
    const wolff_report kept_rep = katz_tao_constant(members, cands, p.slack, &alive);
    res.kept_constant = kept_rep.constant;
    (void)best_constant;

    auto add = [&](const std::string& name, double achieved) {
        res.conclusions.push_back({name, achieved, achieved <= p.k_cap});
    };
    add("kept-fraction", static_cast<double>(n0) / static_cast<double>(res.kept.size()));
    {
        double worst = 0;
        for (size_t c = 0; c < res.covers.size(); c++) {
            double mass = 0;
            for (int m : res.cover_members[c]) mass += members[static_cast<size_t>(m)].volume();
            worst = std::max(worst, res.kept_constant * res.covers[c].volume() / mass);
        }
        add("cover-density", worst);
    }
    {
        candidate_params cov_cp = cp;
        cov_cp.seed = derive_seed(cp.seed, "cover-constant");
        const candidate_family cov_cands = build_convex_candidates(res.covers, cov_cp);
        add("cover-family-constant", katz_tao_constant(res.covers, cov_cands, p.slack).constant);
    }
    if (p.verify_rescaled) {
        double worst = 0;
        for (size_t c = 0; c < res.covers.size(); c++) {
            std::vector<convex_body> rescaled;
            for (int m : res.cover_members[c]) rescaled.push_back(rescale_body(res.covers[c], members[static_cast<size_t>(m)]));
            candidate_params in_cp = cp;
            in_cp.seed = derive_seed(cp.seed, "rescaled-constant");
            in_cp.max_body_prisms = std::min(cp.max_body_prisms, 64);
            in_cp.max_cluster = std::min(cp.max_cluster, 128);
            in_cp.max_lattice = std::min(cp.max_lattice, 256);
            in_cp.max_large = std::min(cp.max_large, 8);
            const candidate_family in_cands = build_convex_candidates(rescaled, in_cp);
            worst = std::max(worst, frostman_constant(rescaled, in_cands, p.slack).constant);
        }
        add("rescaled-frostman", worst);
    }
    res.achieved_K = 0;
    for (const conclusion& c : res.conclusions) res.achieved_K = std::max(res.achieved_K, c.achieved);
    res.ok = res.achieved_K <= p.k_cap;
    return res;
}

brunn_report brunn_envelope(const convex_body& u, const vec3& unit_normal, double plane_offset, double s,
                            double grid_factor) {
    if (std::fabs(norm(unit_normal) - 1.0) > 1e-9) throw validation_error("envelope normal must be unit");
    if (!(s > 0)) throw validation_error("envelope thickness must be positive");
    brunn_report rep;
    const double fine = std::min(u.min_dim(), s);
    const voxel_grid g = voxel_grid::for_delta(std::max(fine, 0x1.0p-20), grid_factor);
    const std::vector<uint64_t> vox = voxelize(u, g);
    if (vox.empty()) throw validation_error("body has no voxels at envelope resolution");
    uint64_t inside = 0;
    for (uint64_t v : vox) {
        if (std::fabs(dot(g.cell_center(v), unit_normal) - plane_offset) <= s) inside++;
    }
    rep.t = static_cast<double>(inside) / static_cast<double>(vox.size());
    rep.halfwidth = rep.t > 0 ? 10 * s / rep.t : 1e300;
    rep.reach = 0;
    for (const vec3& c : u.corners()) rep.reach = std::max(rep.reach, std::fabs(dot(c, unit_normal) - plane_offset));
    rep.contained = rep.reach <= rep.halfwidth;
    return rep;
}

namespace {

struct slab_pick {
    bool found = false;
    convex_body slab;
    double s = 0;
    double score = 0;
    std::vector<int> inside;
};

// Best slab by thinness-weighted mass sum_{U in S} |U| / s over alive members.
slab_pick best_slab_by_density(const std::vector<convex_body>& members, const std::vector<char>& alive,
                               const slab_sweep_params& p) {
    slab_pick best;
    rng gen(derive_seed(p.seed, "slab-peel"));
    std::vector<vec3> normals;
    const int net = std::max(8, p.max_normals * 2 / 3);
    for (int i = 0; i < net; i++) {
        const double t = (static_cast<double>(i) + 0.5) / net;
        const double phi = std::acos(1 - t);
        const double ang = 2.399963229728653 * i;
        normals.push_back({std::sin(phi) * std::cos(ang), std::sin(phi) * std::sin(ang), std::cos(phi)});
    }
    std::vector<int> alive_ids;
    for (size_t i = 0; i < members.size(); i++)
        if (alive[i]) alive_ids.push_back(static_cast<int>(i));
    if (alive_ids.empty()) return best;
    for (int i = net; i < p.max_normals; i++) {
        const int a = alive_ids[gen.below(alive_ids.size())];
        const int b = alive_ids[gen.below(alive_ids.size())];
        const vec3 c = cross(members[static_cast<size_t>(a)].dir(), members[static_cast<size_t>(b)].dir());
        if (norm(c) > 1e-6) normals.push_back(normalized(c));
    }
    const double min_half = p.min_half > 0 ? p.min_half : p.delta;
    std::vector<double> proj(alive_ids.size()), reach(alive_ids.size());
    std::vector<char> in_ball(alive_ids.size());
    std::vector<int> order(alive_ids.size());
    for (const vec3& nrm : normals) {
        for (size_t i = 0; i < alive_ids.size(); i++) {
            const convex_body& m = members[static_cast<size_t>(alive_ids[i])];
            proj[i] = dot(m.center, nrm);
            reach[i] = m.support(nrm);
            double worst = 0;
            for (const vec3& c : m.corners()) worst = std::max(worst, norm(c));
            in_ball[i] = worst <= 1 + p.slack;
        }
        for (size_t i = 0; i < order.size(); i++) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return proj[static_cast<size_t>(a)] < proj[static_cast<size_t>(b)]; });
        for (double s = min_half; s <= p.max_half * (1 + 1e-12); s *= 2) {
            std::vector<double> offs;
            for (size_t i = 0; i < alive_ids.size(); i++) {
                if (reach[i] <= s * (1 + p.slack)) offs.push_back(std::round(proj[i] / (s / 2)) * (s / 2));
            }
            std::sort(offs.begin(), offs.end());
            offs.erase(std::unique(offs.begin(), offs.end()), offs.end());
            if (static_cast<int>(offs.size()) > p.max_offsets) {
                std::vector<double> keep;
                for (int i = 0; i < p.max_offsets; i++)
                    keep.push_back(offs[offs.size() * static_cast<size_t>(i) / static_cast<size_t>(p.max_offsets)]);
                keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
                offs.swap(keep);
            }
            const double smax = s * (1 + p.slack);
            for (double o : offs) {
                const auto lo = std::lower_bound(order.begin(), order.end(), o - smax,
                                                 [&](int i, double v) { return proj[static_cast<size_t>(i)] < v; });
                double mass = 0;
                std::vector<int> inside;
                for (auto it = lo; it != order.end(); ++it) {
                    const size_t i = static_cast<size_t>(*it);
                    if (proj[i] > o + smax) break;
                    if (!in_ball[i]) continue;
                    if (std::fabs(proj[i] - o) + reach[i] <= smax) {
                        mass += members[static_cast<size_t>(alive_ids[i])].volume();
                        inside.push_back(alive_ids[i]);
                    }
                }
                if (inside.empty()) continue;
                const double score = mass / s;
                if (score > best.score) {
                    best.found = true;
                    best.slab = convex_body::make_slab(nrm, o, s);
                    best.s = s;
                    best.score = score;
                    std::sort(inside.begin(), inside.end());
                    best.inside = std::move(inside);
                }
            }
        }
    }
    return best;
}

} // namespace

slab_factor_result factor_slab(const tube_family& f, const slab_factor_params& p) {
    f.validate();
    if (!f.shaded) throw validation_error("slab factoring needs a shaded family");
    slab_factor_result res;
    const std::vector<convex_body> members = f.bodies();
    std::vector<shading> current = f.shadings;
    res.initial_mass = f.total_shading();
    if (res.initial_mass <= 0) throw validation_error("family has empty shadings");
    const double tube_floor = (f.lambda / 2) * f.tube_volume();

    std::vector<char> alive(members.size(), 1);
    for (size_t i = 0; i < members.size(); i++)
        if (current[i].measure(f.grid) < tube_floor) alive[i] = 0;

    slab_sweep_params sweep = p.sweep;
    sweep.delta = f.delta;
    const double thin_cut = std::pow(f.delta, p.eps);

    struct work_item {
        std::vector<char> alive;
        int depth;
    };
    std::deque<work_item> queue;
    queue.push_back({alive, 0});
    // voxels already owned by a finished group; later groups may not reuse them
    std::vector<uint64_t> claimed;
    int guard = 0;
    while (!queue.empty() && guard++ < 256) {
        work_item item = std::move(queue.front());
        queue.pop_front();
        std::vector<char> pool = item.alive;
        while (alive_count(pool) > 0) {
            slab_sweep_params sp = sweep;
            sp.seed = derive_seed(sweep.seed, "peel-round") + static_cast<uint64_t>(guard) * 1000 +
                      static_cast<uint64_t>(res.groups.size());
            const slab_pick pick = best_slab_by_density(members, pool, sp);
            if (!pick.found) break;
            slab_group grp;
            grp.slab_body = pick.slab;
            grp.half_thickness = pick.s;
            grp.depth = item.depth;
            grp.members = pick.inside;
            // retire picked members from the pool
            for (int m : pick.inside) pool[static_cast<size_t>(m)] = 0;
            // clip member shadings to the slab so groups stay voxel-disjoint,
            // then subtract the slab from everyone still in the pool
            for (int m : pick.inside) {
                shading y = current[static_cast<size_t>(m)];
                remove_voxels_if(y, f.grid, [&](const vec3& c) { return !pick.slab.contains_point(c, p.slack); });
                y.vox.erase(std::remove_if(y.vox.begin(), y.vox.end(),
                                           [&](uint64_t v) {
                                               return std::binary_search(claimed.begin(), claimed.end(), v);
                                           }),
                            y.vox.end());
                grp.shadings.push_back(std::move(y));
            }
            for (size_t i = 0; i < members.size(); i++) {
                if (!pool[i]) continue;
                remove_voxels_if(current[i], f.grid, [&](const vec3& c) { return pick.slab.contains_point(c, p.slack); });
                if (current[i].measure(f.grid) < tube_floor) pool[i] = 0;
            }
            // thin groups may be split once more at a strictly smaller scale
            if (grp.half_thickness < thin_cut && item.depth < p.max_depth) {
                bool split = false;
                std::vector<char> sub(members.size(), 0);
                for (int m : grp.members) sub[static_cast<size_t>(m)] = 1;
                slab_sweep_params sub_sp = sweep;
                sub_sp.max_half = grp.half_thickness / 2;
                sub_sp.seed = derive_seed(sweep.seed, "thin-split") + static_cast<uint64_t>(res.groups.size());
                if (sub_sp.max_half >= f.delta) {
                    const slab_pick sub_pick = best_slab_by_density(members, sub, sub_sp);
                    if (sub_pick.found && sub_pick.inside.size() >= 2 &&
                        sub_pick.inside.size() < grp.members.size()) {
                        // push the carved-out part for deeper processing and
                        // keep the remainder in this group
                        std::vector<char> carved(members.size(), 0);
                        for (int m : sub_pick.inside) carved[static_cast<size_t>(m)] = 1;
                        std::vector<int> rest;
                        std::vector<shading> rest_sh;
                        for (size_t gi = 0; gi < grp.members.size(); gi++) {
                            if (!carved[static_cast<size_t>(grp.members[gi])]) {
                                rest.push_back(grp.members[gi]);
                                rest_sh.push_back(std::move(grp.shadings[gi]));
                            } else {
                                current[static_cast<size_t>(grp.members[gi])] = std::move(grp.shadings[gi]);
                            }
                        }
                        grp.members = std::move(rest);
                        grp.shadings = std::move(rest_sh);
                        queue.push_back({carved, item.depth + 1});
                        split = true;
                    }
                }
                if (split && grp.members.empty()) continue;
            }
            const size_t old = claimed.size();
            for (const shading& y : grp.shadings) claimed.insert(claimed.end(), y.vox.begin(), y.vox.end());
            std::sort(claimed.begin() + static_cast<ptrdiff_t>(old), claimed.end());
            std::inplace_merge(claimed.begin(), claimed.begin() + static_cast<ptrdiff_t>(old), claimed.end());
            claimed.erase(std::unique(claimed.begin(), claimed.end()), claimed.end());
            res.groups.push_back(std::move(grp));
        }
    }

    // measure each group's rescaled Frostman slab constant
    res.retained_mass = 0;
    bool constants_ok = true;
    for (slab_group& grp : res.groups) {
        for (const shading& y : grp.shadings) res.retained_mass += y.measure(f.grid);
        std::vector<convex_body> rescaled;
        for (int m : grp.members) rescaled.push_back(rescale_body(grp.slab_body, members[static_cast<size_t>(m)]));
        double fine = 1;
        for (const convex_body& b : rescaled) fine = std::min(fine, b.min_dim());
        slab_sweep_params rp = p.sweep;
        rp.delta = std::max(fine, 1e-6);
        rp.seed = derive_seed(p.sweep.seed, "group-constant");
        grp.rescaled_constant = slab_constant(rescaled, normalization::frostman, rp).constant;
        grp.rescaled_bound = 10 / grp.half_thickness;
        grp.constant_ok = grp.rescaled_constant <= grp.rescaled_bound;
        if (!grp.constant_ok) constants_ok = false;
    }
    res.retention = res.retained_mass / res.initial_mass;
    const double n = static_cast<double>(f.tubes.size());
    res.floor = p.kappa * std::pow(f.delta, p.eps) / std::pow(std::max(std::log2(n), 1.0), p.log_power);
    res.ok = res.retention >= res.floor && constants_ok;
    return res;
}

rigid_factor_result random_rigid_factor(const std::vector<std::vector<delta_tube>>& families, double delta,
                                        double rho, uint64_t seed, const rigid_params& p) {
    if (families.empty()) throw validation_error("no families given");
    if (!(rho > 0) || rho > 1) throw validation_error("motion scale out of (0, 1]");
    for (const auto& fam : families) {
        if (fam.empty()) throw validation_error("empty family in motion factorization");
    }
    rigid_factor_result res;
    const double m = static_cast<double>(families.size());
    res.target_count = static_cast<size_t>(std::ceil(rho * rho / (m * delta * delta)));

    candidate_params cp = p.cands;
    cp.delta = delta;

    // baseline constants and allowances per family
    std::vector<double> base(families.size()), allowed(families.size());
    std::vector<std::vector<convex_body>> bodies(families.size());
    for (size_t j = 0; j < families.size(); j++) {
        for (const delta_tube& t : families[j]) bodies[j].push_back(t.body());
        cp.seed = derive_seed(seed, "rigid-base") + j;
        const candidate_family cands = build_convex_candidates(bodies[j], cp);
        base[j] = katz_tao_constant(bodies[j], cands, p.slack).constant;
        allowed[j] = p.k_cal * std::log(2 + base[j]) * base[j];
    }

    if (res.target_count <= 1) {
        res.motions = {rigid_motion::identity_motion()};
        res.success = true;
        res.rounds = 0;
        double worst = 0;
        for (size_t j = 0; j < families.size(); j++) worst = std::max(worst, base[j] / allowed[j]);
        res.worst_ratio = worst;
        return res;
    }

    rng gen(derive_seed(seed, "rigid-motions"));
    for (int round = 1; round <= p.max_rounds; round++) {
        res.rounds = round;
        std::vector<rigid_motion> motions;
        for (size_t i = 0; i < res.target_count; i++) {
            const vec3 axis = gen.unit_vector();
            const double angle = gen.uniform(0, rho / 4);
            const vec3 shift = gen.in_ball(rho / 2);
            motions.push_back(rigid_motion::make(rotation_about(axis, angle), shift));
        }
        double worst = 0;
        bool all_ok = true;
        for (size_t j = 0; j < families.size(); j++) {
            std::vector<convex_body> moved;
            moved.reserve(motions.size() * bodies[j].size());
            for (const rigid_motion& mo : motions)
                for (const delta_tube& t : families[j]) moved.push_back(mo.apply(t).body());
            cp.seed = derive_seed(seed, "rigid-union") + static_cast<uint64_t>(round) * 100 + j;
            const candidate_family cands = build_convex_candidates(moved, cp);
            const double c = katz_tao_constant(moved, cands, p.slack).constant;
            worst = std::max(worst, c / allowed[j]);
            if (c > allowed[j]) all_ok = false;
        }
        res.worst_ratio = worst;
        if (all_ok) {
            res.motions = std::move(motions);
            res.success = true;
            return res;
        }
    }
    throw statistical_error("rigid motion sampling failed in every round");
}

} // namespace tubelab
