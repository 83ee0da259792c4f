// broadness.h -- angular non-concentration of direction sets.
//
// A direction multiset V is broad with error K at scales >= delta when no
// spherical cap B(v0, r), r in [delta, 1], holds more than K r^beta #V of its
// members. Inside a cap of radius rho the bound is K (r/rho)^beta #V instead.
#pragma once

#include <vector>

#include "tubelab/family.h"
#include "tubelab/geometry.h"

namespace tubelab {

struct direction_cap {
    vec3 center{0, 0, 1};
    double rho = 1.0;            // 1 means the whole sphere normalization
    bool whole_sphere = true;
};

struct broad_params {
    double beta = 0.05;
    double delta = 1.0 / 64;
    double error = 100;          // K
};

struct broad_witness {
    vec3 v0{};
    double r = 0;
    int count = 0;
    double allowed = 0;
};

struct broad_report {
    bool broad = false;
    broad_witness worst;         // max count/allowed candidate, witness when not broad
};

// Candidate centers are the directions themselves plus a fixed net; r runs
// over dyadic scales in [delta, rho].
broad_report is_broad(const std::vector<vec3>& dirs, const broad_params& p, const direction_cap& domain);

inline broad_report is_broad(const std::vector<vec3>& dirs, const broad_params& p) {
    return is_broad(dirs, p, direction_cap{});
}

// Greedy cap peeling: repeatedly grab the cap maximizing r^-beta (members
// inside), remove a 100x dilate, stop at half mass, then pick the dominant
// dyadic radius. Every returned piece is broad with error 100 inside its cap
// and carries at least 2^-2 rho^beta #V members; pieces at the chosen radius
// together keep at least (4 log2(1/delta))^-1 #V members.
struct broad_piece {
    vec3 center{};
    double r = 0;                // the greedy radius (in [rho/2, rho])
    std::vector<int> members;
};

struct broad_pieces_result {
    double rho = 0;
    std::vector<broad_piece> pieces;
    size_t kept = 0;
    size_t total = 0;
};

broad_pieces_result find_broad_pieces(const std::vector<vec3>& dirs, double delta, double beta);

// Union of N families, each broad with error K inside a common cap, is broad
// with the same error (counts add); across scales the errors multiply with a
// fixed factor 64. These are the verifiable forms used by the tests.
broad_report union_is_broad(const std::vector<std::vector<vec3>>& parts, const broad_params& p,
                            const direction_cap& domain);

// Scale-splitting branch decision for a shaded family: either the union is
// already a delta^(omega/2) fraction of the shading sum (branch A), or there
// is an intermediate scale rho with a partitioning rho-tube cover whose
// per-cover direction sets are broad relative to their caps (branch B).
struct broad_scale_result {
    char branch = 'A';
    double rho = 0;
    double certificate = 0;      // branch A: |union Y| / (delta^(omega/2) sum |Y|)
    std::vector<convex_body> covers;
    std::vector<std::vector<int>> cover_members;
    double refined_fraction = 0; // tubes kept in passing covers
    bool pass = false;
};

struct broad_scale_params {
    double omega = 1.0;
    double beta = 0.05;
    double error = 100;          // per-cover broadness error after rescaling
    double slack = 0.01;
};

broad_scale_result find_broad_scale(const tube_family& f, const broad_scale_params& p);

// Regular shadings: every dyadic block (side 2^l h, l >= 0) through a shaded
// voxel must carry at least (100 log2(1/delta))^-1 |Y| |Q cap W| / |W|.
// Violating blocks are emptied until a fixed point; at least half the shading
// always survives (each block can only be charged once).
struct regular_report {
    shading kept;
    size_t removed = 0;
    int rounds = 0;
    bool verified = false;       // fixed point re-checked
};

regular_report regularize_shading(const convex_body& w, const shading& y, const voxel_grid& g, double delta);
bool is_regular_shading(const convex_body& w, const shading& y, const voxel_grid& g, double delta);

} // namespace tubelab
