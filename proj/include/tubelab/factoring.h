// factoring.h -- structure-finding decompositions of convex families.
//
// factor_convex: peel the family along its own Katz-Tao witnesses to a
// structured subset, cover it greedily by density-maximizing prisms, force a
// common dyadic shape, prune the incidence graph to even out degrees, then
// verify every claimed conclusion a posteriori and report the achieved K.
//
// factor_slab: greedy slab peeling of a shaded family; groups get disjoint
// shadings by construction and each group's rescaled Frostman slab constant
// is measured and reported.
#pragma once

#include <string>
#include <vector>

#include "tubelab/family.h"
#include "tubelab/wolff.h"

namespace tubelab {

struct bipartite_graph {
    int n_left = 0, n_right = 0;
    std::vector<std::pair<int, int>> edges;
};

struct prune_result {
    std::vector<int> left, right;                // kept vertex ids
    std::vector<std::pair<int, int>> edges;      // induced edges (original ids)
};

// Iteratively delete vertices that are deficient for the final degree bounds,
// with thresholds frozen from the INPUT graph: left degrees satisfy
// 4 * n_left * deg >= #E, right degrees 4 * n_right * deg >= #E, and at least
// half the edges survive. All comparisons are exact integer arithmetic.
prune_result prune_bipartite(const bipartite_graph& g);

struct conclusion {
    std::string name;
    double achieved = 0;   // the K this conclusion needs
    bool ok = true;
};

struct factor_params {
    candidate_params cands;
    double slack = 0.01;
    double k_cap = 1e4;
    int max_chain = 64;          // witness-peeling chain length cap
    double cover_fraction = 0.95; // stop the cover greedy at this share of surviving mass
    bool verify_rescaled = true; // conclusion (iv) costs extra wolff evaluations
};

struct convex_factor_result {
    std::vector<int> kept;                         // indices into the input family
    std::vector<convex_body> covers;
    std::vector<std::vector<int>> cover_members;   // containment lists after pruning
    double achieved_K = 0;
    bool ok = false;                               // achieved_K <= k_cap
    double kept_constant = 0;                      // KT constant of the kept subset
    std::vector<conclusion> conclusions;
};

convex_factor_result factor_convex(const std::vector<convex_body>& members, double delta, const factor_params& p);

// Convexity envelope: if |U cap N_s(H)| = t|U| then U lies in N_{10 s / t}(H).
struct brunn_report {
    double t = 0;              // measured overlap fraction
    double halfwidth = 0;      // 10 * s / t
    double reach = 0;          // max corner distance from the plane
    bool contained = false;
};
brunn_report brunn_envelope(const convex_body& u, const vec3& unit_normal, double plane_offset, double s,
                            double grid_factor = 4.0);

struct slab_factor_params {
    double slack = 0.01;
    double eps = 0.1;            // groups with half-thickness >= delta^eps are terminal
    double kappa = 0.01;         // retention floor kappa * delta^eps * (log2 #U)^-log_power
    int log_power = 3;
    int max_depth = 2;           // extra peeling passes inside thin groups
    slab_sweep_params sweep;
};

struct slab_group {
    convex_body slab_body;
    double half_thickness = 0;
    int depth = 0;
    std::vector<int> members;            // indices into the input family
    std::vector<shading> shadings;       // member shadings at join time (pairwise disjoint across groups)
    double rescaled_constant = 0;        // Frostman slab constant of the rescaled group
    double rescaled_bound = 0;           // 10 / s
    bool constant_ok = false;
};

struct slab_factor_result {
    std::vector<slab_group> groups;
    double initial_mass = 0, retained_mass = 0, retention = 0;
    double floor = 0;
    bool ok = false;                     // retention >= floor and every group constant passes
};

slab_factor_result factor_slab(const tube_family& f, const slab_factor_params& p);

// Randomized rigid-motion factorization: find motions A with displacement at
// most rho on the unit ball such that every family keeps its Katz-Tao
// constant (up to k_cal * log(2+K)) after the union of moved copies.
struct rigid_params {
    double k_cal = 100;
    int max_rounds = 8;
    double slack = 0.01;
    candidate_params cands;
};

struct rigid_factor_result {
    std::vector<rigid_motion> motions;
    size_t target_count = 0;             // ceil(rho^2 / (M delta^2))
    int rounds = 0;
    bool success = false;
    double worst_ratio = 0;              // max_j achieved / allowed
};

// Throws statistical_error when max_rounds resamples all fail.
rigid_factor_result random_rigid_factor(const std::vector<std::vector<delta_tube>>& families, double delta,
                                        double rho, uint64_t seed, const rigid_params& p);

} // namespace tubelab
