// grid.cpp -- center-in-body rasterization onto the lab grid.
//
// The scan avoids O(bbox^3) work: bodies are cut into blocks along the world
// axis closest to their long axis, and each (j,k) column inside a block is
// resolved to an x-interval analytically (linear constraints for prisms, a
// quadratic for ellipsoids, prism constraints plus the ball for slabs).
#include "tubelab/grid.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace tubelab {

namespace {

// |bx*x + cy*y + cz*z + c0| <= d
struct lin_c {
    double bx, cy, cz, c0, d;
};

lin_c axis_constraint(const convex_body& b, int i) {
    const vec3 u = b.axes.row(i);
    return {u.x, u.y, u.z, -dot(u, b.center), b.dims[i]};
}

struct column_solver {
    std::array<lin_c, 3> lin{};
    bool ellip = false;  // lin entries reinterpreted: sum of squares of (val/d) <= 1
    bool ball = false;   // additionally x^2 + y^2 + z^2 <= 1

    bool solve(double y, double z, double& lo, double& hi) const {
        lo = -std::numeric_limits<double>::infinity();
        hi = std::numeric_limits<double>::infinity();
        if (ellip) {
            double qa = 0, qb = 0, qc = -1;
            for (const lin_c& c : lin) {
                const double t = (c.cy * y + c.cz * z + c.c0) / c.d;
                const double s = c.bx / c.d;
                qa += s * s;
                qb += 2 * s * t;
                qc += t * t;
            }
            const double disc = qb * qb - 4 * qa * qc;
            if (disc <= 0) return false;
            const double r = std::sqrt(disc);
            lo = (-qb - r) / (2 * qa);
            hi = (-qb + r) / (2 * qa);
        } else {
            for (const lin_c& c : lin) {
                const double t = c.cy * y + c.cz * z + c.c0;
                if (std::fabs(c.bx) < 1e-13) {
                    if (std::fabs(t) > c.d) return false;
                    continue;
                }
                double x1 = (-c.d - t) / c.bx, x2 = (c.d - t) / c.bx;
                if (x1 > x2) std::swap(x1, x2);
                lo = std::max(lo, x1);
                hi = std::min(hi, x2);
            }
        }
        if (ball) {
            const double rr = 1 - y * y - z * z;
            if (rr <= 0) return false;
            const double s = std::sqrt(rr);
            lo = std::max(lo, -s);
            hi = std::min(hi, s);
        }
        return lo <= hi;
    }
};

int64_t cell_lo(double w, double origin, double h) {
    return static_cast<int64_t>(std::ceil((w - origin) / h - 0.5));
}
int64_t cell_hi(double w, double origin, double h) {
    return static_cast<int64_t>(std::floor((w - origin) / h - 0.5));
}

struct cell_box {
    int64_t lo[3], hi[3];
    bool empty() const { return lo[0] > hi[0] || lo[1] > hi[1] || lo[2] > hi[2]; }
};

cell_box to_cells(const aabb& box, const voxel_grid& g) {
    cell_box c{};
    for (int a = 0; a < 3; a++) {
        c.lo[a] = std::max<int64_t>(0, cell_lo(box.lo[a], g.origin[a], g.h));
        c.hi[a] = std::min<int64_t>(g.n - 1, cell_hi(box.hi[a], g.origin[a], g.h));
    }
    return c;
}

} // namespace

voxel_grid voxel_grid::for_delta(double delta, double factor) {
    if (!(delta >= 0x1.0p-20) || !(delta <= 0.25)) throw validation_error("grid delta out of [2^-20, 1/4]");
    if (!(factor >= 2.0)) throw validation_error("grid factor must be >= 2");
    voxel_grid g;
    g.h = delta / factor;
    g.n = static_cast<int64_t>(std::ceil(4.0 / g.h - 1e-9));
    if (g.n > 2'000'000) throw validation_error("grid resolution too fine for packed indices");
    return g;
}

bit_grid::bit_grid(const voxel_grid& g, const aabb& world_box) : g_(g) {
    const cell_box c = to_cells(world_box, g);
    if (c.empty()) throw validation_error("bit grid window is empty");
    i0_ = std::max<int64_t>(0, c.lo[0] - 1);
    j0_ = std::max<int64_t>(0, c.lo[1] - 1);
    k0_ = std::max<int64_t>(0, c.lo[2] - 1);
    ni_ = std::min<int64_t>(g.n - 1, c.hi[0] + 1) - i0_ + 1;
    nj_ = std::min<int64_t>(g.n - 1, c.hi[1] + 1) - j0_ + 1;
    nk_ = std::min<int64_t>(g.n - 1, c.hi[2] + 1) - k0_ + 1;
    const uint64_t bits = static_cast<uint64_t>(ni_) * static_cast<uint64_t>(nj_) * static_cast<uint64_t>(nk_);
    if (bits > 3'200'000'000ull) throw validation_error("bit grid window exceeds memory budget");
    words_.assign((bits + 63) / 64, 0);
}

void bit_grid::set(int64_t i, int64_t j, int64_t k) {
    if (i < i0_ || i >= i0_ + ni_ || j < j0_ || j >= j0_ + nj_ || k < k0_ || k >= k0_ + nk_)
        throw validation_error("cell outside bit grid window");
    const uint64_t b = static_cast<uint64_t>(i - i0_) +
                       static_cast<uint64_t>(ni_) * (static_cast<uint64_t>(j - j0_) +
                                                     static_cast<uint64_t>(nj_) * static_cast<uint64_t>(k - k0_));
    words_[b >> 6] |= 1ull << (b & 63);
}

bool bit_grid::covers(int64_t i, int64_t j, int64_t k) const {
    if (i < i0_ || i >= i0_ + ni_ || j < j0_ || j >= j0_ + nj_ || k < k0_ || k >= k0_ + nk_) return false;
    const uint64_t b = static_cast<uint64_t>(i - i0_) +
                       static_cast<uint64_t>(ni_) * (static_cast<uint64_t>(j - j0_) +
                                                     static_cast<uint64_t>(nj_) * static_cast<uint64_t>(k - k0_));
    return (words_[b >> 6] >> (b & 63)) & 1ull;
}

uint64_t bit_grid::count() const {
    uint64_t c = 0;
    for (uint64_t w : words_) c += static_cast<uint64_t>(std::popcount(w));
    return c;
}

// Core scan. Exactly one sink is typically non-null; all three are honored.
void rasterize(const convex_body& b, const voxel_grid& g, bit_grid* bits, std::vector<uint64_t>* out, uint64_t* cnt) {
    if (g.h > b.dims[0] * (1 + 1e-9)) throw validation_error("grid too coarse to measure this body");
    const aabb box = b.bounds();
    const double wlo = g.origin.x, whi = g.origin.x + g.h * static_cast<double>(g.n);
    for (int a = 0; a < 3; a++) {
        if (box.lo[a] < wlo - 1e-9 || box.hi[a] > whi + 1e-9) throw validation_error("body exits the grid domain");
    }
    column_solver solver;
    for (int i = 0; i < 3; i++) solver.lin[static_cast<size_t>(i)] = axis_constraint(b, i);
    solver.ellip = (b.kind == body_kind::ellipsoid);
    solver.ball = (b.kind == body_kind::slab);

    const cell_box whole = to_cells(box, g);
    if (whole.empty()) return;

    // Blocks along the world axis best aligned with the long axis keep the
    // per-block (j,k) footprint close to the body's cross-section.
    const vec3 dir = b.dir();
    int axis = 0;
    for (int a = 1; a < 3; a++)
        if (std::fabs(dir[a]) > std::fabs(dir[axis])) axis = a;
    const double lateral = b.dims[0] * std::fabs(b.axes.row(0)[axis]) + b.dims[1] * std::fabs(b.axes.row(1)[axis]);
    const double block_w = std::max(8 * g.h, 4 * b.dims[1]);
    const int64_t block_cells = std::max<int64_t>(1, static_cast<int64_t>(std::llround(block_w / g.h)));

    auto emit = [&](int64_t i0r, int64_t i1r, int64_t j, int64_t k) {
        if (cnt) *cnt += static_cast<uint64_t>(i1r - i0r + 1);
        if (out)
            for (int64_t i = i0r; i <= i1r; i++) out->push_back(g.pack(i, j, k));
        if (bits) {
            if (i0r < bits->i0_ || i1r >= bits->i0_ + bits->ni_ || j < bits->j0_ || j >= bits->j0_ + bits->nj_ ||
                k < bits->k0_ || k >= bits->k0_ + bits->nk_)
                throw validation_error("rasterized cell outside bit grid window");
            const uint64_t base = static_cast<uint64_t>(i0r - bits->i0_) +
                                  static_cast<uint64_t>(bits->ni_) *
                                      (static_cast<uint64_t>(j - bits->j0_) +
                                       static_cast<uint64_t>(bits->nj_) * static_cast<uint64_t>(k - bits->k0_));
            const uint64_t b0 = base, b1 = base + static_cast<uint64_t>(i1r - i0r);
            const uint64_t w0 = b0 >> 6, w1 = b1 >> 6;
            const uint64_t m0 = ~0ull << (b0 & 63);
            const uint64_t m1 = ~0ull >> (63 - (b1 & 63));
            if (w0 == w1) {
                bits->words_[w0] |= m0 & m1;
            } else {
                bits->words_[w0] |= m0;
                for (uint64_t w = w0 + 1; w < w1; w++) bits->words_[w] = ~0ull;
                bits->words_[w1] |= m1;
            }
        }
    };

    for (int64_t blk = whole.lo[axis]; blk <= whole.hi[axis]; blk += block_cells) {
        const int64_t blk_hi = std::min(whole.hi[axis], blk + block_cells - 1);
        // World extent of this block, padded by the lateral reach, pulled back
        // to a parameter range along the long axis.
        const double w0 = g.origin[axis] + g.h * static_cast<double>(blk);
        const double w1 = g.origin[axis] + g.h * static_cast<double>(blk_hi + 1);
        aabb sub{};
        if (std::fabs(dir[axis]) > 0.5) {
            const double da = dir[axis];
            double t0 = (w0 - b.center[axis] - lateral) / da;
            double t1 = (w1 - b.center[axis] + lateral) / da;
            if (t0 > t1) std::swap(t0, t1);
            t0 = std::max(t0, -b.dims[2]);
            t1 = std::min(t1, b.dims[2]);
            if (t0 > t1) continue;
            const vec3 c0 = b.center + dir * t0, c1 = b.center + dir * t1;
            for (const vec3& c : {c0, c1})
                for (int sx : {-1, 1})
                    for (int sy : {-1, 1})
                        sub.grow(c + b.axes.row(0) * (b.dims[0] * sx) + b.axes.row(1) * (b.dims[1] * sy));
        } else {
            sub = box;  // nearly perpendicular; fall back to the whole box
        }
        cell_box cb = to_cells(sub, g);
        if (cb.empty()) continue;
        cb.lo[axis] = std::max(cb.lo[axis], blk);
        cb.hi[axis] = std::min(cb.hi[axis], blk_hi);
        if (cb.empty()) continue;
        for (int64_t k = cb.lo[2]; k <= cb.hi[2]; k++) {
            const double z = g.origin.z + g.h * (static_cast<double>(k) + 0.5);
            for (int64_t j = cb.lo[1]; j <= cb.hi[1]; j++) {
                const double y = g.origin.y + g.h * (static_cast<double>(j) + 0.5);
                double lo, hi;
                if (!solver.solve(y, z, lo, hi)) continue;
                const int64_t ia = std::max(cb.lo[0], cell_lo(lo, g.origin.x, g.h));
                const int64_t ib = std::min(cb.hi[0], cell_hi(hi, g.origin.x, g.h));
                if (ia <= ib) emit(ia, ib, j, k);
            }
        }
    }
}

std::vector<uint64_t> voxelize(const convex_body& b, const voxel_grid& g) {
    std::vector<uint64_t> out;
    rasterize(b, g, nullptr, &out, nullptr);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

uint64_t voxel_count(const convex_body& b, const voxel_grid& g) {
    uint64_t c = 0;
    rasterize(b, g, nullptr, nullptr, &c);
    return c;
}

void voxelize_into(const convex_body& b, bit_grid& bits) { rasterize(b, bits.grid(), &bits, nullptr, nullptr); }

uint64_t intersection_count(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b) {
    uint64_t c = 0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            i++;
        } else if (b[j] < a[i]) {
            j++;
        } else {
            c++;
            i++;
            j++;
        }
    }
    return c;
}

bool essentially_distinct(const convex_body& u, const convex_body& v, const voxel_grid& g) {
    if (!u.bounds().overlaps(v.bounds())) return true;
    const std::vector<uint64_t> a = voxelize(u, g), b = voxelize(v, g);
    const uint64_t cap = intersection_count(a, b);
    return 2 * cap <= std::max(a.size(), b.size());
}

size_t remove_voxels_if(shading& s, const voxel_grid& g, const std::function<bool(const vec3&)>& pred) {
    const size_t before = s.vox.size();
    s.vox.erase(std::remove_if(s.vox.begin(), s.vox.end(), [&](uint64_t v) { return pred(g.cell_center(v)); }),
                s.vox.end());
    return before - s.vox.size();
}

aabb voxel_bounds(const std::vector<uint64_t>& vox, const voxel_grid& g) {
    aabb box;
    for (uint64_t v : vox) box.grow(g.cell_center(v));
    box.lo -= vec3{g.h / 2, g.h / 2, g.h / 2};
    box.hi += vec3{g.h / 2, g.h / 2, g.h / 2};
    return box;
}

} // namespace tubelab
