// towerlab command-line front end.
//
// One subcommand per run kind plus `report`. Every run subcommand accepts
// --config FILE (JSON), convenience flags for the common knobs, and repeated
// --override KEY=VALUE edits applied on top (dot paths, JSON-parsed values).
// Records land append-only in the registry directory: --registry flag,
// else $TOWERLAB_REGISTRY, else <outdir>/registry from the config.
//
// Exit codes: 0 all verdicts passed, 1 configuration or usage error,
// 2 the run finished but a verdict failed (or the computation broke down).

#include <CLI11.hpp>

#include <deque>
#include <iostream>
#include <string>
#include <vector>

#include "towerlab/harness.hpp"

namespace {

using towerlab::json;

struct RunFlags {
    std::string config_path;
    std::vector<std::string> overrides;
    int k = 1;
    double lambda_value = 1e-3;
    double lambda_from = 1e-2;
    double lambda_to = 1e-6;
    int lambda_points = 6;
    std::vector<double> p_list;
    std::vector<double> alphas;
    std::string method;
    std::string modes;
    std::string projection;
    std::string outdir;
    std::string registry;
    double nodes_per_unit = 64.0;
    double pad = 6.0;
    double r_cut_frac = 0.5;
    int threads = 0;
    long long seed = 2026;

    CLI::App* sub = nullptr;
};

void add_run_options(CLI::App* sub, RunFlags& f) {
    sub->add_option("--config", f.config_path, "JSON config file to start from");
    sub->add_option("--override", f.overrides,
                    "config edit as KEY=VALUE with dot paths, e.g. "
                    "--override lambda.value=1e-4 (VALUE parsed as JSON when possible)");
    sub->add_option("--k", f.k, "tower height (number of bubbles)");
    sub->add_option("--lambda", f.lambda_value, "single coupling value");
    sub->add_option("--lambda-from", f.lambda_from, "sweep start (largest lambda)");
    sub->add_option("--lambda-to", f.lambda_to, "sweep end (smallest lambda)");
    sub->add_option("--lambda-points", f.lambda_points, "sweep point count (log-spaced)");
    sub->add_option("--p", f.p_list, "norm exponents, e.g. --p 1 1.05 1.1");
    sub->add_option("--alphas", f.alphas, "concentration exponents for limit-checks");
    sub->add_option("--method", f.method, "solve path: newton | contraction | both");
    sub->add_option("--modes", f.modes, "spectrum mode set: even | all");
    sub->add_option("--projection", f.projection, "bubble projection: exact | asymptotic");
    sub->add_option("--nodes-per-unit", f.nodes_per_unit, "radial mesh density in s = ln r");
    sub->add_option("--pad", f.pad, "mesh padding below the innermost scale (s units)");
    sub->add_option("--r-cut-frac", f.r_cut_frac, "mass cut radius as a fraction of the inradius");
    sub->add_option("--threads", f.threads, "worker threads for sweep points (0 = auto)");
    sub->add_option("--seed", f.seed, "seed for randomized linear algebra");
    sub->add_option("--outdir", f.outdir, "output directory (registry defaults below it)");
    sub->add_option("--registry", f.registry, "registry directory (overrides TOWERLAB_REGISTRY)");
}

// Set root[a][b][c] = value for path "a.b.c", creating objects along the way.
void set_dot_path(json& root, const std::string& path, const json& value) {
    json* cur = &root;
    size_t pos = 0;
    while (true) {
        const size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (key.empty())
            throw std::invalid_argument("override: empty key segment in '" + path + "'");
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        json& next = (*cur)[key];
        if (next.is_null()) next = json::object();
        if (!next.is_object())
            throw std::invalid_argument("override: '" + path + "' crosses a non-object at '" +
                                        key + "'");
        cur = &next;
        pos = dot + 1;
    }
}

json parse_override_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);  // bare strings stay strings
    }
}

json build_config_json(const std::string& kind, const RunFlags& f) {
    json base = json::object();
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw std::invalid_argument("config: cannot open '" + f.config_path + "'");
        try {
            base = json::parse(in);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("config: '" + f.config_path + "': " + e.what());
        }
        if (!base.is_object()) throw std::invalid_argument("config: root must be an object");
        if (base.contains("kind") && base["kind"] != kind)
            throw std::invalid_argument("config: file says kind '" +
                                        base["kind"].get<std::string>() +
                                        "' but the subcommand is '" + kind + "'");
    }
    base["kind"] = kind;

    const CLI::App* sub = f.sub;
    const bool single = sub->count("--lambda") > 0;
    const bool sweep = sub->count("--lambda-from") + sub->count("--lambda-to") +
                           sub->count("--lambda-points") >
                       0;
    if (single && sweep)
        throw std::invalid_argument("usage: --lambda conflicts with the sweep flags");
    if (single) base["lambda"] = {{"value", f.lambda_value}};
    if (sweep)
        base["lambda"] = {{"from", f.lambda_from},
                          {"to", f.lambda_to},
                          {"points", f.lambda_points}};

    if (sub->count("--k")) base["k"] = f.k;
    if (sub->count("--p")) base["p_list"] = f.p_list;
    if (sub->count("--alphas")) base["alphas"] = f.alphas;
    if (sub->count("--method")) base["method"] = f.method;
    if (sub->count("--modes")) base["modes"] = f.modes;
    if (sub->count("--projection")) base["projection"] = f.projection;
    if (sub->count("--nodes-per-unit")) base["mesh"]["nodes_per_unit"] = f.nodes_per_unit;
    if (sub->count("--pad")) base["mesh"]["pad"] = f.pad;
    if (sub->count("--r-cut-frac")) base["r_cut_frac"] = f.r_cut_frac;
    if (sub->count("--threads")) base["threads"] = f.threads;
    if (sub->count("--seed")) base["seed"] = f.seed;
    if (sub->count("--outdir")) base["outdir"] = f.outdir;

    for (const std::string& ov : f.overrides) {
        const size_t eq = ov.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("override: expected KEY=VALUE, got '" + ov + "'");
        set_dot_path(base, ov.substr(0, eq), parse_override_value(ov.substr(eq + 1)));
    }
    return base;
}

int execute_run(const std::string& kind, const RunFlags& f) {
    const towerlab::RunConfig cfg = towerlab::parse_config(build_config_json(kind, f));
    const towerlab::RunRecord rec = towerlab::run(cfg);

    const std::filesystem::path dir =
        f.registry.empty() ? towerlab::registry_dir(cfg) : std::filesystem::path(f.registry);
    const std::filesystem::path record_path = towerlab::write_record(rec, dir);

    std::printf("%s: %s in %lld ms, hash %s\n", kind.c_str(),
                rec.overall_pass ? "all checks passed" : "CHECKS FAILED", rec.duration_ms,
                rec.hash.c_str());
    for (const towerlab::Verdict& v : rec.verdicts)
        std::printf("  [%s] %-28s value %.6g  threshold %.6g  (%s)\n",
                    v.pass ? "PASS" : "FAIL", v.name.c_str(), v.value, v.threshold,
                    v.note.c_str());
    std::printf("record: %s\n", record_path.string().c_str());
    for (const towerlab::CsvTable& t : rec.tables)
        std::printf("table:  %s\n",
                    (dir / (record_path.stem().string() + "_" + t.name + ".csv")).string().c_str());
    return rec.overall_pass ? 0 : 2;
}

const char* kind_blurb(const std::string& kind) {
    if (kind == "params")
        return "Select tower scales for (k, lambda) and verify the matching balances.\n"
               "Writes parameters.csv: lambda,level,alpha,log_delta,delta,exponent,d,balance";
    if (kind == "ansatz")
        return "Assemble the projected-bubble ansatz; check boundary trace and the\n"
               "per-level mismatch certificates.\n"
               "Writes ansatz.csv: lambda,level,theta_max_ratio,theta_max_abs,boundary_trace";
    if (kind == "residual-scan")
        return "Evaluate the cancellation-free residual and linear-error fields, take\n"
               "weighted L^p norms per annulus, and fit decay exponents over a sweep.\n"
               "Writes residual_norms.csv: lambda,p,r_norm,s_norm,quad_err,"
               "r_annulus_1..k,s_annulus_1..k; final '# {...}' line carries the fits";
    if (kind == "linear-spectrum")
        return "Smallest eigenvalues of the linearized operator per angular mode.\n"
               "Writes spectrum.csv: lambda,mode,sigma,abs_sigma_times_log_lambda";
    if (kind == "solve")
        return "Newton and/or contraction solves along a descending lambda sweep with\n"
               "mass, far-field, and quantization diagnostics.\n"
               "Writes solve_sweep.csv: lambda,converged,iterations,final_residual,"
               "phi_energy,m_plus,m_minus,os_residual,farfield_gap,sign_flips,"
               "contraction_ratio,agreement";
    if (kind == "limit-checks")
        return "Closed-form checks on single-bubble limit objects: mass, kernel\n"
               "integrals, stereographic norm and gradient identities.\n"
               "Writes limit_checks.csv: alpha,mass,mass_rel_err,i1_abs,i2_err,i3_err,"
               "stereo_rel_err,grad_rel_err";
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "towerlab: numerical laboratory for sign-alternating bubble towers of the\n"
        "sinh-Poisson equation on symmetric planar domains.\n"
        "Exit codes: 0 = run ok and all verdicts passed, 1 = config/usage error,\n"
        "2 = run finished with failing verdicts (or broke down)."};
    app.require_subcommand(1);

    std::deque<RunFlags> flag_sets;
    std::vector<std::pair<std::string, RunFlags*>> run_subs;
    for (const std::string& kind : towerlab::run_kinds()) {
        flag_sets.emplace_back();
        RunFlags& f = flag_sets.back();
        CLI::App* sub = app.add_subcommand(kind, kind_blurb(kind));
        f.sub = sub;
        add_run_options(sub, f);
        run_subs.emplace_back(kind, &f);
    }

    std::string rep_registry, rep_kind, rep_verdict, rep_out;
    CLI::App* rep = app.add_subcommand(
        "report",
        "Aggregate a registry of run records into one summary (JSON to stdout).\n"
        "CSV columns: file,kind,hash,started_at,duration_ms,overall_pass,failed_verdicts");
    rep->add_option("--registry", rep_registry,
                    "registry directory (default: $TOWERLAB_REGISTRY, else out/registry)");
    rep->add_option("--kind", rep_kind, "only records of this run kind");
    rep->add_option("--verdict", rep_verdict, "only records that pass | fail");
    rep->add_option("--out", rep_out, "write the summary CSV to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 1;
    }

    try {
        for (const auto& [kind, flags] : run_subs)
            if (flags->sub->parsed()) return execute_run(kind, *flags);

        if (rep->parsed()) {
            std::filesystem::path dir;
            if (!rep_registry.empty()) {
                dir = rep_registry;
            } else if (const char* env = std::getenv("TOWERLAB_REGISTRY"); env && *env) {
                dir = env;
            } else {
                dir = std::filesystem::path("out") / "registry";
            }
            const towerlab::Report report =
                towerlab::build_report(dir, {rep_kind, rep_verdict});
            std::cout << report.summary.dump(2) << '\n';
            if (!rep_out.empty()) {
                std::ofstream out(rep_out);
                if (!out)
                    throw std::invalid_argument("report: cannot write '" + rep_out + "'");
                out << report.csv;
                std::cout << "csv: " << rep_out << '\n';
            }
            if (report.selected == 0)
                std::cout << "note: no records matched the selection\n";
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
