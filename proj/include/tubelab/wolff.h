// wolff.h -- Katz-Tao / Frostman convex and slab Wolff constants.
//
// All reported constants are maxima over an explicit, seeded candidate family
// and are therefore LOWER bounds for the corresponding suprema over all convex
// sets (or all slabs). Candidate generation is data-driven and capped; the
// caps are part of candidate_params so runs are reproducible.
#pragma once

#include <vector>

#include "tubelab/family.h"
#include "tubelab/geometry.h"

namespace tubelab {

enum class normalization { katz_tao, frostman };

struct candidate_params {
    double delta = 1.0 / 64;
    uint64_t seed = 1;
    double slack = 0.01;
    int max_body_prisms = 512;   // per-member bounding prisms (subsampled)
    int max_cluster = 2048;      // greedy direction/position cluster prisms
    int max_lattice = 4096;      // dyadic-dims x net-direction x snapped-position prisms
    int max_large = 96;          // cap on candidates with min half-dim >= large_threshold
    double large_threshold = 0.125;
};

struct candidate_family {
    std::vector<convex_body> bodies;
};

candidate_family build_convex_candidates(const std::vector<convex_body>& members, const candidate_params& p);

struct wolff_report {
    double constant = 0;
    int witness = -1;
    convex_body witness_body;
    double total_mass = 0;   // sum of member volumes
    int witness_count = 0;   // members contained in the witness
};

// max over candidates W of sum_{U in W} |U| / |W|; `alive` optionally masks members.
wolff_report katz_tao_constant(const std::vector<convex_body>& members, const candidate_family& cands,
                               double slack, const std::vector<char>* alive = nullptr);
// Same, divided additionally by sum |U| over (alive) members.
wolff_report frostman_constant(const std::vector<convex_body>& members, const candidate_family& cands,
                               double slack, const std::vector<char>* alive = nullptr);

// Per-candidate member lists (containment with slack).
std::vector<std::vector<int>> members_in(const std::vector<convex_body>& candidates,
                                         const std::vector<convex_body>& members, double slack);

// Slab constants via a 1-D sweep per (normal, thickness); offsets are snapped
// member projections. Returns the best slab as a convex_body of kind slab.
struct slab_sweep_params {
    double delta = 1.0 / 64;
    uint64_t seed = 1;
    double slack = 0.01;
    int max_normals = 288;
    int max_offsets = 160;       // per (normal, thickness)
    double min_half = 0;         // 0 means delta
    double max_half = 1.0;
};

struct slab_report {
    double constant = 0;
    convex_body witness;
    double total_mass = 0;
    int witness_count = 0;
};

slab_report slab_constant(const std::vector<convex_body>& members, normalization norm, const slab_sweep_params& p);

// (ac/b) x c x c thickening of an a<=b<=c prism, same center and plane.
convex_body thickened_box(const convex_body& p);

// max over P of the Katz-Tao constant of {Q : box(Q) inside 2*box(P)}.
wolff_report local_katz_tao(const std::vector<convex_body>& prisms, const candidate_params& p);

// Greedy partition of tubes into rho-tubes (covers contain their members).
struct tube_cover {
    std::vector<convex_body> covers;
    std::vector<std::vector<int>> assigned;   // partition
    std::vector<int> owner;                   // tube -> cover
};
tube_cover greedy_tube_cover(const std::vector<delta_tube>& tubes, double rho, double slack);

// At-every-scale axiom check. For every dyadic rho0 in [delta, 1] there must
// be rho in [rho0, K rho0) whose greedy cover is a K-balanced partitioning
// cover and whose constant passes: the katz_tao variant bounds the cover
// family's own constant, the frostman variant bounds the rescaled per-cover
// constants (these deliberately differ).
struct scale_row {
    double rho0 = 0, rho = 0;
    int cover_size = 0;
    double balance_ratio = 0;
    int max_multiplicity = 0;
    double constant = 0;
    bool pass = false;
};
struct every_scale_report {
    bool pass = false;
    double K = 0;
    std::vector<scale_row> rows;
};
every_scale_report axioms_every_scale(const tube_family& f, double K, normalization variant,
                                      const candidate_params& p);

// Balancedness / multiplicity of a cover relative to members (volume masses).
struct cover_stats {
    double balance_ratio = 0;   // max mass / min mass over nonempty covers
    int max_multiplicity = 0;   // max #covers containing one member
    bool all_covered = false;
};
cover_stats check_cover(const std::vector<convex_body>& members, const std::vector<convex_body>& covers, double slack);

} // namespace tubelab
