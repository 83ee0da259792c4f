// grid.h -- voxel grid over [-2,2]^3, rasterization, shadings.
//
// Measurement rule: a grid used to measure bodies of smallest half-dimension
// d must have h <= d (cell at most half the full thickness 2d). voxelize()
// enforces it. Volumes are (cell count) * h^3 with centers-in-body counting.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tubelab/geometry.h"

namespace tubelab {

struct voxel_grid {
    double h = 1.0 / 16;
    int64_t n = 64;           // cells per side
    vec3 origin{-2, -2, -2};

    // h = delta / factor, factor >= 2 so tubes of this delta are measurable.
    static voxel_grid for_delta(double delta, double factor = 4.0);

    uint64_t pack(int64_t i, int64_t j, int64_t k) const {
        return static_cast<uint64_t>(i) + static_cast<uint64_t>(n) * (static_cast<uint64_t>(j) + static_cast<uint64_t>(n) * static_cast<uint64_t>(k));
    }
    void unpack(uint64_t v, int64_t& i, int64_t& j, int64_t& k) const {
        const uint64_t un = static_cast<uint64_t>(n);
        i = static_cast<int64_t>(v % un);
        j = static_cast<int64_t>((v / un) % un);
        k = static_cast<int64_t>(v / (un * un));
    }
    vec3 cell_center(uint64_t v) const {
        int64_t i, j, k;
        unpack(v, i, j, k);
        return {origin.x + h * (static_cast<double>(i) + 0.5), origin.y + h * (static_cast<double>(j) + 0.5),
                origin.z + h * (static_cast<double>(k) + 0.5)};
    }
    double cell_volume() const { return h * h * h; }
    bool same_as(const voxel_grid& o) const { return h == o.h && n == o.n; }
};

// Dense bit set over a cell-range window of the grid; used for unions so the
// memory cost tracks the family bounding box instead of the whole domain.
class bit_grid {
  public:
    bit_grid(const voxel_grid& g, const aabb& world_box);
    void set(int64_t i, int64_t j, int64_t k);
    bool covers(int64_t i, int64_t j, int64_t k) const;
    uint64_t count() const;
    const voxel_grid& grid() const { return g_; }

    int64_t i0() const { return i0_; }
    int64_t j0() const { return j0_; }
    int64_t k0() const { return k0_; }

  private:
    voxel_grid g_;
    int64_t i0_, j0_, k0_, ni_, nj_, nk_;
    std::vector<uint64_t> words_;
    friend void rasterize(const convex_body&, const voxel_grid&, bit_grid*, std::vector<uint64_t>*, uint64_t*);
};

// Sorted unique cell indices whose centers lie in the body.
std::vector<uint64_t> voxelize(const convex_body& b, const voxel_grid& g);
inline std::vector<uint64_t> voxelize(const delta_tube& t, const voxel_grid& g) { return voxelize(t.body(), g); }

// Count-only and union-accumulating variants (same scan, no storage).
uint64_t voxel_count(const convex_body& b, const voxel_grid& g);
void voxelize_into(const convex_body& b, bit_grid& bits);

struct shading {
    int32_t body = -1;                 // index of the shaded tube/prism in its family
    std::vector<uint64_t> vox;         // sorted unique cell indices
    double measure(const voxel_grid& g) const { return static_cast<double>(vox.size()) * g.cell_volume(); }
};

uint64_t intersection_count(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b);

// |U cap V| <= 1/2 max(|U|, |V|), measured on the grid.
bool essentially_distinct(const convex_body& u, const convex_body& v, const voxel_grid& g);
inline bool essentially_distinct(const delta_tube& u, const delta_tube& v, const voxel_grid& g) {
    return essentially_distinct(u.body(), v.body(), g);
}

// Remove voxels whose centers satisfy pred; returns removed count.
size_t remove_voxels_if(shading& s, const voxel_grid& g, const std::function<bool(const vec3&)>& pred);

// Bounding box (in world coordinates) of a voxel set.
aabb voxel_bounds(const std::vector<uint64_t>& vox, const voxel_grid& g);

} // namespace tubelab
