// family.h -- a delta-tube family with optional shadings, plus JSON I/O.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tubelab/grid.h"

namespace tubelab {

struct tube_family {
    double delta = 1.0 / 64;
    std::string kind = "custom";
    uint64_t seed = 0;
    std::vector<delta_tube> tubes;

    // Shadings are aligned with tubes when present (shadings[i].body == i).
    double lambda = 1.0;            // target density used when shading
    std::vector<shading> shadings;
    voxel_grid grid;                // meaningful when shadings exist
    bool shaded = false;

    double tube_volume() const { return 4 * delta * delta; }
    double total_volume() const { return tube_volume() * static_cast<double>(tubes.size()); }
    double total_shading() const;
    std::vector<convex_body> bodies() const;
    void validate() const;
};

// JSON schema (schema_version 1): delta, kind, seed, lambda, tubes as
// {mid, dir} triples, grid {h, n, origin}, shadings as run-length pairs.
void save_family(const std::string& path, const tube_family& f);
tube_family load_family(const std::string& path);

std::vector<uint64_t> rle_decode(const std::vector<uint64_t>& runs);
std::vector<uint64_t> rle_encode(const std::vector<uint64_t>& sorted);

} // namespace tubelab
