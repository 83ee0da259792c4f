// generators.h -- reproducible example families.
// All generators keep core segments inside B(0, 0.9) so slabs (which live in
// the unit ball) can genuinely contain tubes.
#pragma once

#include <string>
#include <vector>

#include "tubelab/family.h"

namespace tubelab {

enum class family_kind {
    direction_separated,   // one tube per delta-separated hemisphere direction
    well_spaced,           // one tube per s-tube, s = delta^(5/8) by default
    sticky,                // nested tree, `branching` children per scale halving
    besicovitch,           // planar overlapping-triangles family, 2^k tubes
    prism_clustered,       // planted prisms, `per_prism` tubes inside each
    random_uniform,        // iid directions and midpoints
};

family_kind family_kind_from(const std::string& name);
std::string family_kind_name(family_kind k);

struct family_spec {
    family_kind kind = family_kind::random_uniform;
    double delta = 1.0 / 64;
    uint64_t seed = 1;
    int count = 0;          // random_uniform size; elsewhere 0 means the kind's default
    int max_tubes = 0;      // optional subsample cap (keeps separations intact)
    int branching = 4;      // sticky
    double s_scale = 0;     // well_spaced: 0 means delta^(5/8)
    int planted = 20;       // prism_clustered prism count
    int per_prism = 50;
    double prism_a = 0, prism_b = 0;   // full dims; 0 means (4 delta, 64 delta)
    double merge_ratio = 0.9;          // besicovitch slide scale, 1 = full collapse
};

tube_family generate_family(const family_spec& spec);

// The planted prisms for a prism_clustered spec (deterministic re-derivation).
std::vector<convex_body> planted_prisms(const family_spec& spec);

enum class shading_mode { full, random_subset, two_ends };
shading_mode shading_mode_from(const std::string& name);

// Attach shadings on a grid with h = delta / grid_factor.
//   full          -> every tube voxel
//   random_subset -> iid voxel keep with probability lambda
//   two_ends      -> a contiguous lambda-fraction sub-segment at random offset
void apply_shading(tube_family& f, shading_mode mode, double lambda, double grid_factor, uint64_t seed);

} // namespace tubelab
