// experiment.h -- config-driven experiment engine and the acceptance suite.
//
// A config is JSON: { schema_version, seed, experiments: [ { name, family,
// shading?, analyses: [ { op, ...params, gates? } ], criterion? } ] }.
// run_experiments() produces a report with one row per analysis carrying lhs,
// rhs, measured values and per-constant provenance. Reports are byte-stable
// for a fixed seed; the only volatile field is "generated_at".
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "tubelab/family.h"

namespace tubelab {

using json = nlohmann::ordered_json;

json run_experiments(const json& config);

// Remove volatile fields (timestamps) for determinism comparisons.
json strip_volatile(const json& report);

struct criterion_result {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

struct acceptance_outcome {
    bool pass = false;
    std::vector<criterion_result> rows;
    json report;                // first full run
    bool deterministic = false; // second run byte-identical (timestamp excluded)
};

// Runs the config twice (determinism gate), then folds analysis rows into the
// numbered criteria. `only` restricts to a subset of criterion ids.
acceptance_outcome run_acceptance(const json& config, const std::vector<int>& only = {});

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

// report.json plus rows.csv plus gnuplot-ready .dat files for sweep rows.
void write_report_files(const json& report, const std::string& outdir);

int thread_budget();   // TUBELAB_THREADS override, default 1

} // namespace tubelab
