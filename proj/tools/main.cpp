// tubelab CLI: generate families, run analyses, factor, verify acceptance.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tubelab/experiment.h"
#include "tubelab/errors.h"
#include "tubelab/generators.h"

using tubelab::json;

namespace {

struct generate_opts {
    std::string kind = "random_uniform";
    double delta = 1.0 / 64;
    uint64_t seed = 1;
    int count = 0, max_tubes = 0, branching = 4, planted = 20, per_prism = 50;
    double s_scale = 0, prism_a = 0, prism_b = 0, merge_ratio = 0.9;
    std::string out = "family.json";
    std::string shade;       // empty means unshaded
    double lambda = 1.0, grid_factor = 4.0;
};

int cmd_generate(const generate_opts& o) {
    tubelab::family_spec spec;
    spec.kind = tubelab::family_kind_from(o.kind);
    spec.delta = o.delta;
    spec.seed = o.seed;
    spec.count = o.count;
    spec.max_tubes = o.max_tubes;
    spec.branching = o.branching;
    spec.s_scale = o.s_scale;
    spec.planted = o.planted;
    spec.per_prism = o.per_prism;
    spec.prism_a = o.prism_a;
    spec.prism_b = o.prism_b;
    spec.merge_ratio = o.merge_ratio;
    tubelab::tube_family f = tubelab::generate_family(spec);
    if (!o.shade.empty()) {
        tubelab::apply_shading(f, tubelab::shading_mode_from(o.shade), o.lambda, o.grid_factor, o.seed + 1);
    }
    tubelab::save_family(o.out, f);
    std::printf("wrote %s: kind=%s delta=%g tubes=%zu shaded=%d\n", o.out.c_str(), f.kind.c_str(), f.delta,
                f.tubes.size(), f.shaded ? 1 : 0);
    return tubelab::exit_ok;
}

json analysis_from_op(const std::string& op) {
    json a;
    a["op"] = op;
    return a;
}

int run_config_and_write(const json& config, const std::string& outdir, bool print_rows) {
    const json report = tubelab::run_experiments(config);
    if (!outdir.empty()) tubelab::write_report_files(report, outdir);
    bool all_pass = true;
    for (const json& e : report["experiments"]) {
        for (const json& row : e["rows"]) {
            const bool gated = row.value("gated", true);
            const bool pass = row.value("pass", false);
            if (gated && !pass) all_pass = false;
            if (print_rows) {
                std::printf("%-24s %-28s lhs=%-12.6g rhs=%-12.6g %s%s\n",
                            e.value("name", std::string()).c_str(), row.value("name", std::string()).c_str(),
                            row.value("lhs", 0.0), row.value("rhs", 0.0), pass ? "pass" : "FAIL",
                            gated ? "" : " (report-only)");
            }
        }
    }
    if (!outdir.empty()) std::printf("report written to %s\n", outdir.c_str());
    return all_pass ? tubelab::exit_ok : tubelab::exit_check_failure;
}

int cmd_family_ops(const std::string& family_path, const std::vector<std::string>& ops, uint64_t seed,
                   const std::string& outdir, const std::string& shade, double lambda, double grid_factor) {
    json config;
    config["schema_version"] = 1;
    config["seed"] = seed;
    json e;
    e["name"] = "analyze";
    e["family"] = json{{"load", family_path}};
    if (!shade.empty()) {
        e["shading"] = json{{"mode", shade}, {"lambda", lambda}, {"grid_factor", grid_factor}};
    }
    e["analyses"] = json::array();
    for (const std::string& op : ops) e["analyses"].push_back(analysis_from_op(op));
    config["experiments"] = json::array({e});
    return run_config_and_write(config, outdir, true);
}

int cmd_verify(const std::string& config_path, const std::vector<int>& only, const std::string& outdir) {
    const json config = tubelab::load_json_file(config_path);
    const tubelab::acceptance_outcome out = tubelab::run_acceptance(config, only);
    for (const tubelab::criterion_result& r : out.rows) {
        std::printf("criterion %2d  %-32s %s  (%.1fs)  %s\n", r.id, r.name.c_str(), r.pass ? "PASS" : "FAIL",
                    r.seconds, r.detail.c_str());
    }
    if (!outdir.empty()) tubelab::write_report_files(out.report, outdir);
    std::printf("%s\n", out.pass ? "ALL CRITERIA PASS" : "ACCEPTANCE FAILED");
    return out.pass ? tubelab::exit_ok : tubelab::exit_check_failure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tubelab: a computational laboratory for finite tube and prism arrangements"};
    app.require_subcommand(1);

    generate_opts g;
    CLI::App* gen = app.add_subcommand("generate", "generate a reproducible tube family");
    gen->add_option("--kind", g.kind, "family kind");
    gen->add_option("--delta", g.delta, "tube thickness");
    gen->add_option("--seed", g.seed, "rng seed");
    gen->add_option("--count", g.count, "size override (0 = kind default)");
    gen->add_option("--max-tubes", g.max_tubes, "subsample cap");
    gen->add_option("--branching", g.branching, "sticky branching");
    gen->add_option("--s-scale", g.s_scale, "well_spaced coarse scale");
    gen->add_option("--planted", g.planted, "prism_clustered prism count");
    gen->add_option("--per-prism", g.per_prism, "tubes per prism");
    gen->add_option("--prism-a", g.prism_a, "planted prism thin dim");
    gen->add_option("--prism-b", g.prism_b, "planted prism mid dim");
    gen->add_option("--merge-ratio", g.merge_ratio, "besicovitch translation parameter");
    gen->add_option("--shade", g.shade, "shading mode: full, random_subset, two_ends");
    gen->add_option("--lambda", g.lambda, "shading density");
    gen->add_option("--grid-factor", g.grid_factor, "grid h = delta / factor");
    gen->add_option("--out", g.out, "output family json");

    std::string family_path, outdir, shade;
    std::vector<std::string> ops;
    uint64_t seed = 1;
    double lambda = 1.0, grid_factor = 4.0;
    int threads = 0;

    CLI::App* an = app.add_subcommand("analyze", "measure constants and volumes of a saved family");
    an->add_option("--family", family_path, "family json")->required();
    an->add_option("--op", ops, "ops: wolff slab_wolff measure is_broad broad_scale local_kt every_scale doubling kakeya_report");
    an->add_option("--seed", seed, "rng seed");
    an->add_option("--outdir", outdir, "report directory");
    an->add_option("--shade", shade, "shade before analysis");
    an->add_option("--lambda", lambda, "shading density");
    an->add_option("--grid-factor", grid_factor, "grid h = delta / factor");

    std::string factor_mode = "convex";
    CLI::App* fa = app.add_subcommand("factor", "run a factoring decomposition on a saved family");
    fa->add_option("--family", family_path, "family json")->required();
    fa->add_option("--mode", factor_mode, "convex or slab")->check(CLI::IsMember({"convex", "slab"}));
    fa->add_option("--seed", seed, "rng seed");
    fa->add_option("--outdir", outdir, "report directory");
    fa->add_option("--shade", shade, "shade before factoring (slab mode needs shadings)");
    fa->add_option("--lambda", lambda, "shading density");
    fa->add_option("--grid-factor", grid_factor, "grid h = delta / factor");

    std::string config_path;
    std::vector<int> only;
    CLI::App* ve = app.add_subcommand("verify", "run the acceptance criteria from a config");
    ve->add_option("config", config_path, "acceptance config json")->required();
    ve->add_option("--only", only, "restrict to criterion ids");
    ve->add_option("--outdir", outdir, "report directory");

    CLI::App* re = app.add_subcommand("report", "run an experiment config and write reports");
    re->add_option("config", config_path, "experiment config json")->required();
    re->add_option("--outdir", outdir, "report directory")->required();

    CLI::App* sw = app.add_subcommand("sweep", "run a sweep config and write gnuplot data");
    sw->add_option("config", config_path, "sweep config json")->required();
    sw->add_option("--outdir", outdir, "report directory")->required();

    for (CLI::App* sub : {gen, an, fa, ve, re, sw}) {
        sub->add_option("--threads", threads, "thread budget override");
    }

    CLI11_PARSE(app, argc, argv);
    if (threads > 0) setenv("TUBELAB_THREADS", std::to_string(threads).c_str(), 1);

    try {
        if (gen->parsed()) return cmd_generate(g);
        if (an->parsed()) {
            if (ops.empty()) ops = {"wolff", "slab_wolff"};
            return cmd_family_ops(family_path, ops, seed, outdir, shade, lambda, grid_factor);
        }
        if (fa->parsed()) {
            const std::vector<std::string> fops = {factor_mode == "convex" ? "factor_convex" : "factor_slab"};
            return cmd_family_ops(family_path, fops, seed, outdir, shade, lambda, grid_factor);
        }
        if (ve->parsed()) return cmd_verify(config_path, only, outdir);
        if (re->parsed() || sw->parsed()) {
            return run_config_and_write(tubelab::load_json_file(config_path), outdir, sw->parsed());
        }
    } catch (const tubelab::check_error& e) {
        std::fprintf(stderr, "check failed: %s\n", e.what());
        return tubelab::exit_check_failure;
    } catch (const tubelab::validation_error& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return tubelab::exit_validation;
    } catch (const tubelab::statistical_error& e) {
        std::fprintf(stderr, "retry budget exhausted: %s\n", e.what());
        return tubelab::exit_statistical;
    } catch (const tubelab::io_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return tubelab::exit_io;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return tubelab::exit_validation;
    }
    return tubelab::exit_ok;
}
