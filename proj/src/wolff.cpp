// wolff.cpp -- candidate families and the convex / slab Wolff constants.
#include "tubelab/wolff.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "tubelab/rng.h"

namespace tubelab {

namespace {

// Uniform spatial hash over body centers: candidate containment implies the
// member's center lies in the candidate's bounding box, so bucket lookups cut
// the pair tests down to near-misses.
struct center_index {
    double cell = 0.125;
    int64_t n = 0;
    std::vector<std::vector<int>> buckets;

    explicit center_index(const std::vector<convex_body>& members) {
        n = static_cast<int64_t>(std::ceil(4.0 / cell));
        buckets.assign(static_cast<size_t>(n * n * n), {});
        for (size_t i = 0; i < members.size(); i++) {
            buckets[slot(members[i].center)].push_back(static_cast<int>(i));
        }
    }
    int64_t coord(double x) const {
        return std::clamp<int64_t>(static_cast<int64_t>(std::floor((x + 2.0) / cell)), 0, n - 1);
    }
    size_t slot(const vec3& p) const {
        return static_cast<size_t>(coord(p.x) + n * (coord(p.y) + n * coord(p.z)));
    }

    template <class F>
    void for_box(const aabb& box, F&& f) const {
        const int64_t ix0 = coord(box.lo.x), ix1 = coord(box.hi.x);
        const int64_t iy0 = coord(box.lo.y), iy1 = coord(box.hi.y);
        const int64_t iz0 = coord(box.lo.z), iz1 = coord(box.hi.z);
        for (int64_t z = iz0; z <= iz1; z++)
            for (int64_t y = iy0; y <= iy1; y++)
                for (int64_t x = ix0; x <= ix1; x++)
                    for (int m : buckets[static_cast<size_t>(x + n * (y + n * z))]) f(m);
    }
};

template <class F>
void for_each_containment(const std::vector<convex_body>& candidates, const std::vector<convex_body>& members,
                          double slack, const std::vector<char>* alive, F&& f) {
    const center_index idx(members);
    for (size_t w = 0; w < candidates.size(); w++) {
        const convex_body& cand = candidates[w];
        idx.for_box(cand.bounds(), [&](int m) {
            if (alive && !(*alive)[static_cast<size_t>(m)]) return;
            if (contains_body(members[static_cast<size_t>(m)], cand, slack)) f(static_cast<int>(w), m);
        });
    }
}

// Mean direction of a set of tubes-as-prisms, sign-aligned to the first.
vec3 mean_dir(const std::vector<convex_body>& members, const std::vector<int>& which) {
    const vec3 ref = members[static_cast<size_t>(which.front())].dir();
    vec3 acc{};
    for (int i : which) {
        const vec3 d = members[static_cast<size_t>(i)].dir();
        acc += dot(d, ref) < 0 ? -d : d;
    }
    const double len = norm(acc);
    return len > 1e-12 ? acc / len : ref;
}

// Minimal bounding prism of member corners in the frame of a given long axis.
// The in-plane frame is rotated onto the principal axes of the member centers
// so elongated clusters get a genuinely thin cross-section.
convex_body bounding_prism(const std::vector<convex_body>& members, const std::vector<int>& which, const vec3& axis) {
    vec3 u, v;
    frame_from_axis(axis, u, v);
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (int i : which) {
            const vec3& c = members[static_cast<size_t>(i)].center;
            const double x = dot(c, u), y = dot(c, v);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
        }
        const double n = static_cast<double>(which.size());
        const double cxx = sxx - sx * sx / n, cxy = sxy - sx * sy / n, cyy = syy - sy * sy / n;
        const double phi = 0.5 * std::atan2(2 * cxy, cxx - cyy);
        const vec3 major = normalized(u * std::cos(phi) + v * std::sin(phi));
        v = major;
        u = cross(v, axis);
    }
    vec3 clo{1e30, 1e30, 1e30}, chi{-1e30, -1e30, -1e30};
    for (int i : which) {
        for (const vec3& c : members[static_cast<size_t>(i)].corners()) {
            const vec3 q{dot(c, u), dot(c, v), dot(c, axis)};
            for (int a = 0; a < 3; a++) {
                clo[a] = std::min(clo[a], q[a]);
                chi[a] = std::max(chi[a], q[a]);
            }
        }
    }
    const vec3 mid_local = (clo + chi) / 2;
    const vec3 center = u * mid_local.x + v * mid_local.y + axis * mid_local.z;
    vec3 dims = (chi - clo) / 2;
    for (int a = 0; a < 3; a++) dims[a] = std::max(dims[a], 1e-9);
    mat3 axes;
    axes.row(0) = u;
    axes.row(1) = v;
    axes.row(2) = axis;
    return convex_body::make_prism(center, axes, dims);
}

} // namespace

candidate_family build_convex_candidates(const std::vector<convex_body>& members, const candidate_params& p) {
    if (members.empty()) throw validation_error("cannot build candidates for an empty family");
    candidate_family fam;
    rng gen(derive_seed(p.seed, "convex-candidates"));
    const int n = static_cast<int>(members.size());

    // 1. member bounding prisms themselves plus a mild dilate.
    {
        std::vector<int> order(members.size());
        for (size_t i = 0; i < order.size(); i++) order[i] = static_cast<int>(i);
        if (n > p.max_body_prisms) gen.shuffle(order);
        const int take = std::min(n, p.max_body_prisms);
        for (int i = 0; i < take; i++) {
            const convex_body& b = members[static_cast<size_t>(order[static_cast<size_t>(i)])];
            fam.bodies.push_back(b);
            fam.bodies.push_back(b.dilated(2));
        }
    }

    // 2. direction/offset clusters at dyadic scales around seeded anchors.
    {
        const double base = members.front().min_dim();
        int levels = 0;
        while (base * std::pow(2.0, levels) < 1.0) levels++;
        levels = std::max(levels, 1);
        const int anchors = std::max(1, p.max_cluster / (2 * levels));
        for (int l = 0; l < levels; l++) {
            const double theta = std::min(1.0, base * std::pow(2.0, l));
            for (int a = 0; a < anchors; a++) {
                const int pick = static_cast<int>(gen.below(static_cast<uint64_t>(n)));
                const convex_body& anchor = members[static_cast<size_t>(pick)];
                std::vector<int> close;
                for (int i = 0; i < n; i++) {
                    const convex_body& m = members[static_cast<size_t>(i)];
                    if (line_angle(m.dir(), anchor.dir()) > theta) continue;
                    const vec3 off = m.center - anchor.center;
                    const vec3 lat = off - anchor.dir() * dot(off, anchor.dir());
                    if (norm(lat) > theta) continue;
                    close.push_back(i);
                }
                if (close.size() < 2) continue;
                fam.bodies.push_back(bounding_prism(members, close, mean_dir(members, close)));
            }
        }
    }

    // 3. anchored dyadic-dimension prisms around member midpoints.
    {
        const double base = members.front().min_dim();
        std::vector<std::pair<double, double>> dims_menu;
        for (double a = base; a <= 1.0 + 1e-12; a *= 2)
            for (double b = a; b <= 1.0 + 1e-12; b *= 2) dims_menu.emplace_back(a, b);
        const int per_pair = std::max(1, p.max_lattice / std::max<int>(1, static_cast<int>(dims_menu.size())));
        for (const auto& [da, db] : dims_menu) {
            for (int a = 0; a < per_pair; a++) {
                const int pick = static_cast<int>(gen.below(static_cast<uint64_t>(n)));
                const convex_body& m = members[static_cast<size_t>(pick)];
                const double dc = std::max(db, m.dims[2]);
                vec3 u, v;
                frame_from_axis(m.dir(), u, v);
                mat3 axes;
                axes.row(0) = u;
                axes.row(1) = v;
                axes.row(2) = m.dir();
                fam.bodies.push_back(convex_body::make_prism(m.center, axes, {da, db, dc}));
            }
        }
    }

    // 4. whole-domain boxes so globally dense families get a fair witness.
    {
        aabb box;
        for (const convex_body& m : members)
            for (const vec3& c : m.corners()) box.grow(c);
        const vec3 c = (box.lo + box.hi) / 2;
        vec3 half = (box.hi - box.lo) / 2;
        for (int a = 0; a < 3; a++) half[a] = std::max(half[a], 1e-6);
        int used = 0;
        for (double scale : {1.0, 0.5, 0.25}) {
            if (used >= p.max_large) break;
            fam.bodies.push_back(convex_body::make_prism(c, mat3::identity(), half * scale));
            used++;
        }
        for (double r : {0.25, 0.5, 0.75, 0.9, 1.0, 1.5}) {
            if (used >= p.max_large) break;
            if (r < p.large_threshold) continue;
            fam.bodies.push_back(convex_body::cube({0, 0, 0}, r));
            used++;
        }
    }
    return fam;
}

namespace {

wolff_report best_candidate(const std::vector<convex_body>& members, const candidate_family& cands, double slack,
                            const std::vector<char>* alive, bool frostman) {
    if (cands.bodies.empty()) throw validation_error("empty candidate family");
    wolff_report rep;
    for (size_t i = 0; i < members.size(); i++) {
        if (alive && !(*alive)[i]) continue;
        rep.total_mass += members[i].volume();
    }
    if (rep.total_mass <= 0) throw validation_error("no alive members");
    std::vector<double> mass(cands.bodies.size(), 0);
    std::vector<int> count(cands.bodies.size(), 0);
    for_each_containment(cands.bodies, members, slack, alive, [&](int w, int m) {
        mass[static_cast<size_t>(w)] += members[static_cast<size_t>(m)].volume();
        count[static_cast<size_t>(w)]++;
    });
    for (size_t w = 0; w < cands.bodies.size(); w++) {
        if (count[w] == 0) continue;
        double c = mass[w] / cands.bodies[w].volume();
        if (frostman) c /= rep.total_mass;
        if (c > rep.constant) {
            rep.constant = c;
            rep.witness = static_cast<int>(w);
            rep.witness_body = cands.bodies[w];
            rep.witness_count = count[w];
        }
    }
    return rep;
}

} // namespace

wolff_report katz_tao_constant(const std::vector<convex_body>& members, const candidate_family& cands, double slack,
                               const std::vector<char>* alive) {
    return best_candidate(members, cands, slack, alive, false);
}

wolff_report frostman_constant(const std::vector<convex_body>& members, const candidate_family& cands, double slack,
                               const std::vector<char>* alive) {
    return best_candidate(members, cands, slack, alive, true);
}

std::vector<std::vector<int>> members_in(const std::vector<convex_body>& candidates,
                                         const std::vector<convex_body>& members, double slack) {
    std::vector<std::vector<int>> lists(candidates.size());
    for_each_containment(candidates, members, slack, nullptr,
                         [&](int w, int m) { lists[static_cast<size_t>(w)].push_back(m); });
    return lists;
}

slab_report slab_constant(const std::vector<convex_body>& members, normalization mode, const slab_sweep_params& p) {
    if (members.empty()) throw validation_error("empty member family");
    rng gen(derive_seed(p.seed, "slab-sweep"));
    const double min_half = p.min_half > 0 ? p.min_half : p.delta;

    // Normal menu: a Fibonacci hemisphere net plus normals spanned by pairs of
    // member long axes (slabs that hold many tubes have such normals).
    std::vector<vec3> normals;
    const int net = std::max(8, p.max_normals * 2 / 3);
    for (int i = 0; i < net; i++) {
        const double t = (static_cast<double>(i) + 0.5) / net;
        const double phi = std::acos(1 - t);  // upper hemisphere
        const double ang = 2.399963229728653 * i;
        normals.push_back({std::sin(phi) * std::cos(ang), std::sin(phi) * std::sin(ang), std::cos(phi)});
    }
    const int pair_budget = p.max_normals - net;
    for (int i = 0; i < pair_budget; i++) {
        const auto a = gen.below(members.size()), b = gen.below(members.size());
        const vec3 c = cross(members[a].dir(), members[b].dir());
        if (norm(c) > 1e-6) normals.push_back(normalized(c));
    }

    double total = 0;
    for (const convex_body& m : members) total += m.volume();

    slab_report rep;
    rep.total_mass = total;
    std::vector<double> proj(members.size()), reach(members.size());
    std::vector<char> in_ball(members.size());
    std::vector<int> order(members.size());
    for (const vec3& nrm : normals) {
        for (size_t i = 0; i < members.size(); i++) {
            proj[i] = dot(members[i].center, nrm);
            reach[i] = members[i].support(nrm);
            double worst = 0;
            for (const vec3& c : members[i].corners()) worst = std::max(worst, norm(c));
            in_ball[i] = worst <= 1 + p.slack;
        }
        for (size_t i = 0; i < order.size(); i++) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return proj[static_cast<size_t>(a)] < proj[static_cast<size_t>(b)]; });
        for (double s = min_half; s <= p.max_half * (1 + 1e-12); s *= 2) {
            // candidate offsets: member projections snapped to an s/2 grid
            std::vector<double> offs;
            for (size_t i = 0; i < members.size(); i++) {
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
            for (double o : offs) {
                const double smax = s * (1 + p.slack);
                const auto lo = std::lower_bound(order.begin(), order.end(), o - smax,
                                                 [&](int i, double v) { return proj[static_cast<size_t>(i)] < v; });
                double mass = 0;
                int cnt = 0;
                for (auto it = lo; it != order.end(); ++it) {
                    const size_t i = static_cast<size_t>(*it);
                    if (proj[i] > o + smax) break;
                    if (!in_ball[i]) continue;
                    if (std::fabs(proj[i] - o) + reach[i] <= smax) {
                        mass += members[i].volume();
                        cnt++;
                    }
                }
                if (cnt == 0) continue;
                const convex_body slab = convex_body::make_slab(nrm, o, s);
                const double vol = slab.volume();
                if (vol <= 0) continue;
                double c = mode == normalization::katz_tao ? mass / vol : mass / (vol * total);
                if (c > rep.constant) {
                    rep.constant = c;
                    rep.witness = slab;
                    rep.witness_count = cnt;
                }
            }
        }
    }
    return rep;
}

convex_body thickened_box(const convex_body& p) {
    const double a = p.dims[0], b = p.dims[1], c = p.dims[2];
    return convex_body::make_prism(p.center, p.axes, {std::min(a * c / b, c), c, c});
}

wolff_report local_katz_tao(const std::vector<convex_body>& prisms, const candidate_params& p) {
    // Lower bound: candidates are the doubled boxes themselves; for each P we
    // score the subfamily sitting inside 2*box(P) against candidates drawn
    // from that subfamily's doubled boxes.
    if (prisms.empty()) throw validation_error("empty prism family");
    std::vector<convex_body> doubled;
    doubled.reserve(prisms.size());
    for (const convex_body& b : prisms) doubled.push_back(b.dilated(2));
    const std::vector<std::vector<int>> inside = members_in(doubled, prisms, p.slack);
    wolff_report best;
    for (size_t i = 0; i < prisms.size(); i++) {
        if (inside[i].empty()) continue;
        std::vector<convex_body> sub;
        for (int m : inside[i]) sub.push_back(prisms[static_cast<size_t>(m)]);
        candidate_family cands;
        for (const convex_body& b : sub) cands.bodies.push_back(b.dilated(2));
        cands.bodies.push_back(doubled[i]);
        const wolff_report rep = katz_tao_constant(sub, cands, p.slack);
        if (rep.constant > best.constant) {
            best = rep;
            best.witness = static_cast<int>(i);
        }
    }
    return best;
}

tube_cover greedy_tube_cover(const std::vector<delta_tube>& tubes, double rho, double slack) {
    if (tubes.empty()) throw validation_error("empty tube family");
    if (!(rho > 0) || rho > 0.5) throw validation_error("cover scale out of (0, 1/2]");
    tube_cover out;
    out.owner.assign(tubes.size(), -1);
    std::vector<delta_tube> anchors;
    for (size_t i = 0; i < tubes.size(); i++) {
        const convex_body tb = tubes[i].body();
        for (size_t c = 0; c < out.covers.size(); c++) {
            // cheap rejects before the corner test
            if (line_angle(tubes[i].dir, anchors[c].dir) > 2.5 * rho) continue;
            if (norm(tubes[i].mid - anchors[c].mid) > 0.6 + 2 * rho) continue;
            if (contains_body(tb, out.covers[c], slack)) {
                out.owner[i] = static_cast<int>(c);
                break;
            }
        }
        if (out.owner[i] < 0) {
            delta_tube cover{tubes[i].mid, tubes[i].dir, rho};
            anchors.push_back(cover);
            out.covers.push_back(cover.body());
            out.owner[i] = static_cast<int>(out.covers.size()) - 1;
        }
    }
    out.assigned.assign(out.covers.size(), {});
    for (size_t i = 0; i < tubes.size(); i++) out.assigned[static_cast<size_t>(out.owner[i])].push_back(static_cast<int>(i));
    return out;
}

cover_stats check_cover(const std::vector<convex_body>& members, const std::vector<convex_body>& covers, double slack) {
    cover_stats st;
    std::vector<double> mass(covers.size(), 0);
    std::vector<int> mult(members.size(), 0);
    for_each_containment(covers, members, slack, nullptr, [&](int w, int m) {
        mass[static_cast<size_t>(w)] += members[static_cast<size_t>(m)].volume();
        mult[static_cast<size_t>(m)]++;
    });
    st.all_covered = true;
    for (size_t m = 0; m < members.size(); m++) {
        st.max_multiplicity = std::max(st.max_multiplicity, mult[m]);
        if (mult[m] == 0) st.all_covered = false;
    }
    double lo = 1e30, hi = 0;
    for (double v : mass) {
        if (v <= 0) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    st.balance_ratio = hi > 0 ? hi / lo : 0;
    return st;
}

every_scale_report axioms_every_scale(const tube_family& f, double K, normalization variant,
                                      const candidate_params& p) {
    if (!(K >= 2)) throw validation_error("scale axiom constant must be >= 2");
    every_scale_report rep;
    rep.K = K;
    rep.pass = true;
    const std::vector<convex_body> members = f.bodies();
    for (double rho0 = f.delta; rho0 <= 0.5 + 1e-12; rho0 *= 2) {
        scale_row best_row;
        best_row.rho0 = rho0;
        bool found = false;
        for (double rho = rho0; rho < K * rho0 && rho <= 0.5 + 1e-12; rho *= 2) {
            scale_row row;
            row.rho0 = rho0;
            row.rho = rho;
            const tube_cover cover = greedy_tube_cover(f.tubes, rho, p.slack);
            row.cover_size = static_cast<int>(cover.covers.size());
            const cover_stats st = check_cover(members, cover.covers, p.slack);
            row.balance_ratio = st.balance_ratio;
            row.max_multiplicity = st.max_multiplicity;
            if (!st.all_covered || st.balance_ratio > K || st.max_multiplicity > K) {
                if (!found) best_row = row;
                continue;
            }
            if (variant == normalization::katz_tao) {
                candidate_params cp = p;
                cp.delta = rho;
                const candidate_family cands = build_convex_candidates(cover.covers, cp);
                row.constant = katz_tao_constant(cover.covers, cands, p.slack).constant;
            } else {
                double worst = 0;
                for (size_t c = 0; c < cover.covers.size(); c++) {
                    if (cover.assigned[c].empty()) continue;
                    std::vector<convex_body> rescaled;
                    for (int m : cover.assigned[c]) rescaled.push_back(rescale_body(cover.covers[c], members[static_cast<size_t>(m)]));
                    candidate_params cp = p;
                    cp.delta = f.delta / rho;
                    cp.max_body_prisms = std::min(p.max_body_prisms, 64);
                    cp.max_cluster = std::min(p.max_cluster, 128);
                    cp.max_lattice = std::min(p.max_lattice, 256);
                    cp.max_large = std::min(p.max_large, 8);
                    const candidate_family cands = build_convex_candidates(rescaled, cp);
                    worst = std::max(worst, frostman_constant(rescaled, cands, p.slack).constant);
                }
                row.constant = worst;
            }
            row.pass = row.constant <= K;
            if (row.pass) {
                best_row = row;
                found = true;
                break;
            }
            if (!found) best_row = row;
        }
        rep.rows.push_back(best_row);
        if (!found) rep.pass = false;
    }
    return rep;
}

} // namespace tubelab
