// python bindings for the main tubelab operations
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tubelab/broadness.h"
#include "tubelab/experiment.h"
#include "tubelab/generators.h"
#include "tubelab/volume.h"
#include "tubelab/wolff.h"

namespace py = pybind11;
using namespace tubelab;

namespace {

tube_family make_family(const std::string& kind, double delta, uint64_t seed, int count, int max_tubes,
                        int branching, double s_scale, int planted, int per_prism, double prism_a,
                        double prism_b, double merge_ratio) {
    family_spec s;
    s.kind = family_kind_from(kind);
    s.delta = delta;
    s.seed = seed;
    s.count = count;
    s.max_tubes = max_tubes;
    s.branching = branching;
    s.s_scale = s_scale;
    s.planted = planted;
    s.per_prism = per_prism;
    s.prism_a = prism_a;
    s.prism_b = prism_b;
    s.merge_ratio = merge_ratio;
    return generate_family(s);
}

double family_katz_tao(const tube_family& f) {
    candidate_params cp;
    cp.delta = f.delta;
    cp.seed = f.seed + 1;
    const std::vector<convex_body> bodies = f.bodies();
    return katz_tao_constant(bodies, build_convex_candidates(bodies, cp), cp.slack).constant;
}

double family_slab_constant(const tube_family& f, const std::string& norm) {
    slab_sweep_params sp;
    sp.delta = f.delta;
    sp.seed = f.seed + 2;
    return slab_constant(f.bodies(), norm == "frostman" ? normalization::frostman : normalization::katz_tao, sp)
        .constant;
}

double family_union_volume(const tube_family& f) {
    if (!f.shaded) throw validation_error("shade the family first");
    return union_volume(f.shadings, f.grid);
}

bool family_is_broad(const tube_family& f, double beta, double error) {
    broad_params p;
    p.beta = beta;
    p.delta = f.delta;
    p.error = error;
    std::vector<vec3> dirs;
    dirs.reserve(f.tubes.size());
    for (const delta_tube& t : f.tubes) dirs.push_back(t.dir);
    return is_broad(dirs, p).broad;
}

std::string run_experiments_json(const std::string& config_text) {
    return run_experiments(json::parse(config_text)).dump(1);
}

py::list acceptance(const std::string& config_path, const std::vector<int>& only) {
    const acceptance_outcome out = run_acceptance(load_json_file(config_path), only);
    py::list rows;
    for (const criterion_result& r : out.rows) {
        rows.append(py::make_tuple(r.id, r.name, r.pass, r.detail));
    }
    return rows;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "finite tube and prism arrangement laboratory";

    py::class_<tube_family>(m, "Family")
        .def_readonly("delta", &tube_family::delta)
        .def_readonly("kind", &tube_family::kind)
        .def_readonly("shaded", &tube_family::shaded)
        .def_readonly("lam", &tube_family::lambda)
        .def("__len__", [](const tube_family& f) { return f.tubes.size(); })
        .def("total_volume", &tube_family::total_volume)
        .def("total_shading", &tube_family::total_shading)
        .def("validate", &tube_family::validate)
        .def("save", [](const tube_family& f, const std::string& path) { save_family(path, f); })
        .def("shade",
             [](tube_family& f, const std::string& mode, double lam, double grid_factor, uint64_t seed) {
                 apply_shading(f, shading_mode_from(mode), lam, grid_factor, seed);
             },
             py::arg("mode") = "full", py::arg("lam") = 1.0, py::arg("grid_factor") = 4.0,
             py::arg("seed") = 1)
        .def("directions", [](const tube_family& f) {
            py::list out;
            for (const delta_tube& t : f.tubes) out.append(py::make_tuple(t.dir.x, t.dir.y, t.dir.z));
            return out;
        });

    m.def("generate", &make_family, py::arg("kind"), py::arg("delta") = 1.0 / 64, py::arg("seed") = 1,
          py::arg("count") = 0, py::arg("max_tubes") = 0, py::arg("branching") = 4, py::arg("s_scale") = 0.0,
          py::arg("planted") = 20, py::arg("per_prism") = 50, py::arg("prism_a") = 0.0,
          py::arg("prism_b") = 0.0, py::arg("merge_ratio") = 0.9, "generate a reproducible family");
    m.def("load", &load_family, py::arg("path"));
    m.def("katz_tao", &family_katz_tao, py::arg("family"), "Katz-Tao convex constant (lower bound)");
    m.def("slab_wolff", &family_slab_constant, py::arg("family"), py::arg("norm") = "katz_tao");
    m.def("union_volume", &family_union_volume, py::arg("family"));
    m.def("doubling_ratio", [](const tube_family& f, double R) { return doubling_ratio(f, R).ratio; },
          py::arg("family"), py::arg("R") = 2.0);
    m.def("is_broad", &family_is_broad, py::arg("family"), py::arg("beta") = 0.05, py::arg("error") = 100.0);
    m.def("run_experiments", &run_experiments_json, py::arg("config_json"),
          "run an experiment config (json text in, json text out)");
    m.def("acceptance", &acceptance, py::arg("config_path"), py::arg("only") = std::vector<int>{},
          "run acceptance criteria; returns (id, name, pass, detail) tuples");

    py::register_exception<validation_error>(m, "ValidationError");
    py::register_exception<check_error>(m, "CheckError");
    py::register_exception<statistical_error>(m, "StatisticalError");
    py::register_exception<io_error>(m, "IoError");
}
