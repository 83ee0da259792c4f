// volume.h -- union volumes and the measured inequality reports.
// Every report row carries lhs, rhs and the formula inputs so the CLI can
// print provenance (measured vs configured vs calibrated constants).
#pragma once

#include <string>
#include <vector>

#include "tubelab/family.h"
#include "tubelab/wolff.h"

namespace tubelab {

double union_volume(const std::vector<shading>& shadings, const voxel_grid& g);
double union_volume_bodies(const std::vector<convex_body>& bodies, const voxel_grid& g);

struct bound_row {
    std::string name;
    double lhs = 0, rhs = 0;
    double ratio = 0;            // lhs / rhs
    bool pass = false;
};

// ||sum chi_Y||_2^2 in volume units: sum over ordered pairs of |Y_i cap Y_j|.
double l2_overlap(const std::vector<shading>& shadings, const voxel_grid& g);

// Union lower bound for shaded slabs: lhs = |union Y|,
// rhs = (1/100) |log2 delta|^-1 m^-1 lambda^2 (#S) |S|, with m the Katz-Tao
// constant of the slab family and |S| the mean slab volume.
struct cordoba_report {
    bound_row row;
    double m = 0, lambda = 0, slab_volume = 0;
    double l2 = 0;               // measured overlap mass
    double cs_lower = 0;         // (sum |Y|)^2 / l2, the Cauchy-Schwarz bound
};
cordoba_report cordoba_bound(const std::vector<convex_body>& slabs, const std::vector<shading>& shadings,
                             const voxel_grid& g, double lambda, double m);

// Hairbrush lower bound |union Y| >= (1/100) delta^1.6 sqrt(#T). Hypotheses
// (Katz-Tao convex and Frostman slab constants at most delta^-0.1) are
// measured and reported; when unmet the row is marked not applicable.
struct hairbrush_report {
    bound_row row;
    bool hypotheses_ok = false;
    double kt_constant = 0, slab_constant = 0, gate = 0;
};
hairbrush_report hairbrush_bound(const tube_family& f, const candidate_params& cp, const slab_sweep_params& sp);

// doubling(T, R) = |union of R-dilates| / (R^3 |union Y|). The dilate union is
// measured on a coarser grid matching the dilated thickness.
struct doubling_report {
    double delta = 0, R = 2;
    double union_vol = 0, dilated_vol = 0;
    double ratio = 0;
};
doubling_report doubling_ratio(const tube_family& f, double R);

// Packing concentration: max over members of sup_{rho in [a,b]}
// (|P| / |N_rho(P)|) sqrt(#members inside N_rho(P)), dyadic rho.
struct concentration_report {
    double value = 0;
    int argmax = -1;
    double rho = 0;
};
concentration_report packing_concentration(const std::vector<convex_body>& members, double a, double b, double slack);

// Tangency geometry of shaded prisms around a base prism: theta(x) = a/b +
// max pairwise plane angle over prisms shading x; theta_min over shaded
// voxels; the b*theta_min neighborhood of the base must be at least
// (1/100) lambda^4 covered by the union of shadings.
struct tangency_report {
    double theta_min = 0, a_over_b = 0, max_pair_angle = 0;
    double nbhd_volume = 0, covered = 0;
    double lambda = 0;
    bound_row row;
};
tangency_report tangency_stats(const std::vector<convex_body>& prisms, const std::vector<shading>& shadings,
                               const voxel_grid& g, int base_index);

// Whether the clipped core of t inside p enters and exits through the two
// faces orthogonal to p's longest axis (within one cell width).
bool long_end_exit(const delta_tube& t, const convex_body& p, double tol);

// Volume inequality report card for a shaded family. Flavors:
//   'D' : rhs = kappa delta^(omega+eps) (#T)|T| ((#T)|T|^(1/2))^-sigma
//   'E' : rhs = kappa delta^(omega+eps) m^-1 (#T)|T| (m^(-3/2) l (#T)|T|^(1/2))^-sigma
//   'F' : prism form with the packing concentration D in place of m:
//         rhs = kappa delta^(omega+eps) D^-1 (#P)|P| (D^(-3/2) (#P)|P|^(1/2))^-sigma
// This is a report, not a pass/fail gate: the asymptotic exponents are not
// meaningful at desk delta, so callers decide what to do with the ratios.
struct kakeya_report {
    char flavor = 'D';
    double omega = 0, eps = 0, sigma = 0, kappa = 0;
    double m = 0, l = 0, D = 0;
    bound_row row;
};
kakeya_report kakeya_bound_report(const tube_family& f, char flavor, double omega, double eps, double sigma,
                                  double kappa, const candidate_params& cp, const slab_sweep_params& sp);

} // namespace tubelab
