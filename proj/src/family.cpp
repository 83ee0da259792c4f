// family.cpp -- tube family validation and JSON round-trip.
#include "tubelab/family.h"

#include <fstream>

#include <json.hpp>

namespace tubelab {

using json = nlohmann::ordered_json;

double tube_family::total_shading() const {
    double s = 0;
    for (const shading& y : shadings) s += y.measure(grid);
    return s;
}

std::vector<convex_body> tube_family::bodies() const {
    std::vector<convex_body> out;
    out.reserve(tubes.size());
    for (const delta_tube& t : tubes) out.push_back(t.body());
    return out;
}

void tube_family::validate() const {
    if (!(delta >= 0x1.0p-20) || !(delta <= 0.25)) throw validation_error("family delta out of [2^-20, 1/4]");
    if (tubes.empty()) throw validation_error("family has no tubes");
    for (const delta_tube& t : tubes) {
        validate_tube(t);
        if (std::fabs(t.delta - delta) > 1e-12) throw validation_error("tube delta differs from family delta");
    }
    if (shaded) {
        if (shadings.size() != tubes.size()) throw validation_error("shadings are not aligned with tubes");
        if (!(lambda > 0) || lambda > 1) throw validation_error("shading density out of (0, 1]");
        if (grid.h > delta * (1 + 1e-9)) throw validation_error("shading grid too coarse for delta");
        for (size_t i = 0; i < shadings.size(); i++) {
            if (shadings[i].body != static_cast<int32_t>(i)) throw validation_error("shading body index mismatch");
            if (!std::is_sorted(shadings[i].vox.begin(), shadings[i].vox.end()))
                throw validation_error("shading voxels must be sorted");
        }
    } else if (!shadings.empty()) {
        throw validation_error("shadings present but family not marked shaded");
    }
}

std::vector<uint64_t> rle_encode(const std::vector<uint64_t>& sorted) {
    std::vector<uint64_t> runs;
    size_t i = 0;
    while (i < sorted.size()) {
        size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[j - 1] + 1) j++;
        runs.push_back(sorted[i]);
        runs.push_back(static_cast<uint64_t>(j - i));
        i = j;
    }
    return runs;
}

std::vector<uint64_t> rle_decode(const std::vector<uint64_t>& runs) {
    if (runs.size() % 2 != 0) throw validation_error("run-length data must have even length");
    std::vector<uint64_t> out;
    for (size_t i = 0; i < runs.size(); i += 2) {
        for (uint64_t k = 0; k < runs[i + 1]; k++) out.push_back(runs[i] + k);
    }
    return out;
}

void save_family(const std::string& path, const tube_family& f) {
    json j;
    j["schema_version"] = 1;
    j["delta"] = f.delta;
    j["kind"] = f.kind;
    j["seed"] = f.seed;
    j["lambda"] = f.lambda;
    json tubes = json::array();
    for (const delta_tube& t : f.tubes) {
        tubes.push_back(json{{"mid", {t.mid.x, t.mid.y, t.mid.z}}, {"dir", {t.dir.x, t.dir.y, t.dir.z}}});
    }
    j["tubes"] = std::move(tubes);
    j["shaded"] = f.shaded;
    if (f.shaded) {
        j["grid"] = json{{"h", f.grid.h}, {"n", f.grid.n}, {"origin", {f.grid.origin.x, f.grid.origin.y, f.grid.origin.z}}};
        json sh = json::array();
        for (const shading& y : f.shadings) sh.push_back(rle_encode(y.vox));
        j["shadings"] = std::move(sh);
    }
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << j.dump(1) << "\n";
    if (!out) throw io_error("write failed: " + path);
}

namespace {

vec3 vec_from(const json& a) {
    if (!a.is_array() || a.size() != 3) throw validation_error("expected a 3-vector");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

} // namespace

tube_family load_family(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw validation_error("bad family file " + path + ": " + e.what());
    }
    if (j.value("schema_version", 0) != 1) throw validation_error("unsupported family schema in " + path);
    tube_family f;
    f.delta = j.at("delta").get<double>();
    f.kind = j.value("kind", "custom");
    f.seed = j.value("seed", 0ull);
    f.lambda = j.value("lambda", 1.0);
    for (const json& t : j.at("tubes")) {
        delta_tube tube;
        tube.mid = vec_from(t.at("mid"));
        tube.dir = normalized(vec_from(t.at("dir")));
        tube.delta = f.delta;
        f.tubes.push_back(tube);
    }
    f.shaded = j.value("shaded", false);
    if (f.shaded) {
        const json& g = j.at("grid");
        f.grid.h = g.at("h").get<double>();
        f.grid.n = g.at("n").get<int64_t>();
        f.grid.origin = vec_from(g.at("origin"));
        int32_t idx = 0;
        for (const json& runs : j.at("shadings")) {
            shading y;
            y.body = idx++;
            y.vox = rle_decode(runs.get<std::vector<uint64_t>>());
            f.shadings.push_back(std::move(y));
        }
    }
    f.validate();
    return f;
}

} // namespace tubelab
