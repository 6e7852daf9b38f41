#pragma once

// Run harness: JSON configs in, archived JSON records + CSV tables out.
//
// A config names one of six run kinds (params, ansatz, residual-scan,
// linear-spectrum, solve, limit-checks) plus the numerical knobs. run()
// executes the kind and returns a RunRecord carrying a canonical echo of the
// config, a payload of raw numbers, a list of named pass/fail verdicts, and
// rendered CSV tables. write_record() archives the record append-only into a
// registry directory (TOWERLAB_REGISTRY overrides the config's choice), and
// build_report() aggregates a registry back into one summary.
//
// Payloads are deterministic for a given config: sweep points may be computed
// on a worker pool, but results land in index order and timestamps live
// outside the hashed portion of the record.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "towerlab/common.hpp"
#include "towerlab/greens.hpp"
#include "towerlab/linearized.hpp"
#include "towerlab/profiles.hpp"
#include "towerlab/residual.hpp"
#include "towerlab/solver.hpp"
#include "towerlab/tower.hpp"

namespace towerlab {

using json = nlohmann::ordered_json;

// --- configuration ----------------------------------------------------------

struct LambdaSpec {
    bool sweep = false;
    double value = 1e-3;
    double from = 1e-2;
    double to = 1e-6;
    int points = 6;

    std::vector<double> values() const {
        return sweep ? log_spaced(from, to, points) : std::vector<double>{value};
    }
};

struct RunConfig {
    std::string kind = "params";
    int k = 1;
    LambdaSpec lambda;
    DomainSpec domain = DomainSpec::disk();
    double nodes_per_unit = 64.0;
    double pad = 6.0;
    std::vector<double> p_list = {1.0, 1.05, 1.1};
    std::vector<double> alphas = {2.0, 6.0, 10.0};
    std::string method = "newton";      // solve: newton | contraction | both
    std::string modes = "even";         // linear-spectrum: even | all
    std::string projection = "exact";   // ansatz: exact | asymptotic
    double tol_newton = 1e-11;
    double tol_sigma = 1e-10;
    double r_cut_frac = 0.5;
    int samples = 400;
    std::string outdir = "out";
    std::uint64_t seed = 2026;
    int threads = 0;  // 0 = hardware concurrency
};

inline const std::vector<std::string>& run_kinds() {
    static const std::vector<std::string> kinds = {
        "params", "ansatz", "residual-scan", "linear-spectrum", "solve", "limit-checks"};
    return kinds;
}

namespace cfg {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
    throw std::invalid_argument("config: " + where + ": " + what);
}

inline void check_keys(const json& obj, const std::string& where,
                       const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) fail(where + "." + it.key(), "unknown key");
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

inline int integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<int>();
}

inline std::string text(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

}  // namespace cfg

inline RunConfig parse_config(const json& in) {
    if (!in.is_object()) cfg::fail("(root)", "expected an object");
    cfg::check_keys(in, "(root)",
                    {"kind", "k", "lambda", "domain", "mesh", "p_list", "alphas",
                     "method", "modes", "projection", "tolerances", "r_cut_frac",
                     "samples", "outdir", "seed", "threads"});
    RunConfig c;

    if (!in.contains("kind")) cfg::fail("kind", "missing (one of params, ansatz, "
                                                "residual-scan, linear-spectrum, solve, limit-checks)");
    c.kind = cfg::text(in.at("kind"), "kind");
    bool known = false;
    for (const auto& k : run_kinds()) known = known || k == c.kind;
    if (!known) cfg::fail("kind", "unknown run kind '" + c.kind + "'");

    if (in.contains("k")) {
        c.k = cfg::integer(in.at("k"), "k");
        if (c.k < 1 || c.k > 8) cfg::fail("k", "tower height must lie in 1..8");
    }

    if (in.contains("lambda")) {
        const json& L = in.at("lambda");
        if (!L.is_object()) cfg::fail("lambda", "expected an object");
        if (L.contains("value")) {
            cfg::check_keys(L, "lambda", {"value"});
            c.lambda.sweep = false;
            c.lambda.value = cfg::number(L.at("value"), "lambda.value");
            if (!(c.lambda.value > 0)) cfg::fail("lambda.value", "must be positive");
        } else if (L.contains("from") || L.contains("to") || L.contains("points")) {
            cfg::check_keys(L, "lambda", {"from", "to", "points"});
            if (!L.contains("from") || !L.contains("to") || !L.contains("points"))
                cfg::fail("lambda", "a sweep needs from, to, and points");
            c.lambda.sweep = true;
            c.lambda.from = cfg::number(L.at("from"), "lambda.from");
            c.lambda.to = cfg::number(L.at("to"), "lambda.to");
            c.lambda.points = cfg::integer(L.at("points"), "lambda.points");
            if (!(c.lambda.from > 0) || !(c.lambda.to > 0))
                cfg::fail("lambda", "sweep endpoints must be positive");
            if (c.lambda.points < 2) cfg::fail("lambda.points", "need at least 2");
            if (c.lambda.points > 1000) cfg::fail("lambda.points", "at most 1000");
        } else {
            cfg::fail("lambda", "expected {value} or {from,to,points}");
        }
    }

    if (in.contains("domain")) {
        const json& D = in.at("domain");
        if (!D.is_object()) cfg::fail("domain", "expected an object");
        const std::string kind = D.contains("kind") ? cfg::text(D.at("kind"), "domain.kind") : "disk";
        if (kind == "disk") {
            cfg::check_keys(D, "domain", {"kind", "radius"});
            c.domain = DomainSpec::disk(D.contains("radius")
                                            ? cfg::number(D.at("radius"), "domain.radius")
                                            : 1.0);
            if (!(c.domain.radius > 0)) cfg::fail("domain.radius", "must be positive");
        } else if (kind == "rectangle") {
            cfg::check_keys(D, "domain", {"kind", "a", "b", "grid_n"});
            const double a = D.contains("a") ? cfg::number(D.at("a"), "domain.a") : 1.0;
            const double b = D.contains("b") ? cfg::number(D.at("b"), "domain.b") : 1.0;
            const int gn = D.contains("grid_n") ? cfg::integer(D.at("grid_n"), "domain.grid_n") : 257;
            if (!(a > 0) || !(b > 0)) cfg::fail("domain", "half-widths must be positive");
            if (gn < 17 || gn % 2 == 0) cfg::fail("domain.grid_n", "must be odd and >= 17");
            c.domain = DomainSpec::rectangle(a, b, gn);
        } else {
            cfg::fail("domain.kind", "must be disk or rectangle");
        }
    }

    if (in.contains("mesh")) {
        const json& M = in.at("mesh");
        if (!M.is_object()) cfg::fail("mesh", "expected an object");
        cfg::check_keys(M, "mesh", {"nodes_per_unit", "pad"});
        if (M.contains("nodes_per_unit"))
            c.nodes_per_unit = cfg::number(M.at("nodes_per_unit"), "mesh.nodes_per_unit");
        if (M.contains("pad")) c.pad = cfg::number(M.at("pad"), "mesh.pad");
        if (c.nodes_per_unit < 8) cfg::fail("mesh.nodes_per_unit", "must be >= 8");
        if (!(c.pad > 0)) cfg::fail("mesh.pad", "must be positive");
    }

    if (in.contains("p_list")) {
        const json& P = in.at("p_list");
        if (!P.is_array() || P.empty()) cfg::fail("p_list", "expected a non-empty array");
        c.p_list.clear();
        for (size_t i = 0; i < P.size(); ++i) {
            const double p = cfg::number(P[i], "p_list[" + std::to_string(i) + "]");
            if (p < 1.0 || p >= 2.0)
                cfg::fail("p_list[" + std::to_string(i) + "]", "p must lie in [1, 2)");
            c.p_list.push_back(p);
        }
    }

    if (in.contains("alphas")) {
        const json& A = in.at("alphas");
        if (!A.is_array() || A.empty()) cfg::fail("alphas", "expected a non-empty array");
        c.alphas.clear();
        for (size_t i = 0; i < A.size(); ++i) {
            const double a = cfg::number(A[i], "alphas[" + std::to_string(i) + "]");
            if (!(a > 0)) cfg::fail("alphas[" + std::to_string(i) + "]", "must be positive");
            c.alphas.push_back(a);
        }
    }

    if (in.contains("method")) {
        c.method = cfg::text(in.at("method"), "method");
        if (c.method != "newton" && c.method != "contraction" && c.method != "both")
            cfg::fail("method", "must be newton, contraction, or both");
    }
    if (in.contains("modes")) {
        c.modes = cfg::text(in.at("modes"), "modes");
        if (c.modes != "even" && c.modes != "all")
            cfg::fail("modes", "must be even or all");
    }
    if (in.contains("projection")) {
        c.projection = cfg::text(in.at("projection"), "projection");
        if (c.projection != "exact" && c.projection != "asymptotic")
            cfg::fail("projection", "must be exact or asymptotic");
    }

    if (in.contains("tolerances")) {
        const json& T = in.at("tolerances");
        if (!T.is_object()) cfg::fail("tolerances", "expected an object");
        cfg::check_keys(T, "tolerances", {"newton", "sigma"});
        if (T.contains("newton")) c.tol_newton = cfg::number(T.at("newton"), "tolerances.newton");
        if (T.contains("sigma")) c.tol_sigma = cfg::number(T.at("sigma"), "tolerances.sigma");
        if (!(c.tol_newton > 0) || !(c.tol_sigma > 0))
            cfg::fail("tolerances", "tolerances must be positive");
    }

    if (in.contains("r_cut_frac")) {
        c.r_cut_frac = cfg::number(in.at("r_cut_frac"), "r_cut_frac");
        if (!(c.r_cut_frac > 0) || c.r_cut_frac > 1.0)
            cfg::fail("r_cut_frac", "must lie in (0, 1]");
    }
    if (in.contains("samples")) {
        c.samples = cfg::integer(in.at("samples"), "samples");
        if (c.samples < 16 || c.samples > 100000) cfg::fail("samples", "must lie in 16..100000");
    }
    if (in.contains("outdir")) c.outdir = cfg::text(in.at("outdir"), "outdir");
    if (in.contains("seed")) {
        if (!in.at("seed").is_number_unsigned() && !in.at("seed").is_number_integer())
            cfg::fail("seed", "expected an integer");
        const long long s = in.at("seed").get<long long>();
        if (s < 0) cfg::fail("seed", "must be non-negative");
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (in.contains("threads")) {
        c.threads = cfg::integer(in.at("threads"), "threads");
        if (c.threads < 0 || c.threads > 256) cfg::fail("threads", "must lie in 0..256");
    }
    return c;
}

// Canonical JSON form: every field, fixed order; parse(to_json(c)) == c.
inline json to_json(const RunConfig& c) {
    json j;
    j["kind"] = c.kind;
    j["k"] = c.k;
    if (c.lambda.sweep)
        j["lambda"] = {{"from", c.lambda.from}, {"to", c.lambda.to}, {"points", c.lambda.points}};
    else
        j["lambda"] = {{"value", c.lambda.value}};
    if (c.domain.kind == DomainSpec::Kind::disk)
        j["domain"] = {{"kind", "disk"}, {"radius", c.domain.radius}};
    else
        j["domain"] = {{"kind", "rectangle"}, {"a", c.domain.a}, {"b", c.domain.b},
                       {"grid_n", c.domain.grid_n}};
    j["mesh"] = {{"nodes_per_unit", c.nodes_per_unit}, {"pad", c.pad}};
    j["p_list"] = c.p_list;
    j["alphas"] = c.alphas;
    j["method"] = c.method;
    j["modes"] = c.modes;
    j["projection"] = c.projection;
    j["tolerances"] = {{"newton", c.tol_newton}, {"sigma", c.tol_sigma}};
    j["r_cut_frac"] = c.r_cut_frac;
    j["samples"] = c.samples;
    j["outdir"] = c.outdir;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    return j;
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: '" + path + "': " + e.what());
    }
    return parse_config(j);
}

// --- records ----------------------------------------------------------------

struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

struct CsvTable {
    std::string name;     // file stem, e.g. "residual_norms"
    std::string content;  // rendered text, possibly with a JSON footer line
};

struct RunRecord {
    json config;
    std::string kind;
    std::string hash;  // 16 hex digits over config + payload
    std::string started_at;
    std::string finished_at;
    long long duration_ms = 0;
    json payload;
    std::vector<Verdict> verdicts;
    bool overall_pass = true;
    std::vector<CsvTable> tables;
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string iso8601_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string fmt_short(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

// Index-parallel map with deterministic output slots; rethrows the first
// exception raised by any worker.
template <typename Body>
void parallel_for(int n, int threads, Body&& body) {
    if (n <= 0) return;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

inline json verdict_to_json(const Verdict& v) {
    return json{{"name", v.name},
                {"pass", v.pass},
                {"value", v.value},
                {"threshold", v.threshold},
                {"note", v.note}};
}

inline json record_to_json(const RunRecord& r) {
    json j;
    j["kind"] = r.kind;
    j["hash"] = r.hash;
    j["started_at"] = r.started_at;
    j["finished_at"] = r.finished_at;
    j["duration_ms"] = r.duration_ms;
    j["overall_pass"] = r.overall_pass;
    j["config"] = r.config;
    j["verdicts"] = json::array();
    for (const auto& v : r.verdicts) j["verdicts"].push_back(verdict_to_json(v));
    j["payload"] = r.payload;
    j["tables"] = json::array();
    for (const auto& t : r.tables) j["tables"].push_back(t.name);
    return j;
}

// --- run kinds ----------------------------------------------------------------

namespace runs {

inline void add_verdict(RunRecord& rec, const std::string& name, bool pass,
                        double value, double threshold, const std::string& note = "") {
    rec.verdicts.push_back({name, pass, value, threshold, note});
    rec.overall_pass = rec.overall_pass && pass;
}

inline double domain_h00(const DomainSpec& d) { return build_green(d).h00; }

inline void run_params(const RunConfig& c, RunRecord& rec) {
    const double h00 = domain_h00(c.domain);
    const std::vector<double> lambdas = c.lambda.values();
    std::vector<BubbleParams> all(lambdas.size());
    for (size_t q = 0; q < lambdas.size(); ++q)
        all[q] = select_parameters(c.k, lambdas[q], h00);

    double max_balance = 0.0;
    json rows = json::array();
    std::ostringstream csv;
    csv << "lambda,level,alpha,log_delta,delta,exponent,d,balance\n";
    for (size_t q = 0; q < all.size(); ++q) {
        const BubbleParams& p = all[q];
        json levels = json::array();
        for (int i = 1; i <= p.k; ++i) {
            const double bal = matching_balance(p, i);
            max_balance = std::max(max_balance, std::abs(bal));
            levels.push_back({{"level", i},
                              {"alpha", p.alpha[i - 1]},
                              {"log_delta", p.log_delta[i - 1]},
                              {"exponent", p.exponent[i - 1]},
                              {"d", p.d(i - 1)},
                              {"balance", bal}});
            csv << detail::fmt(p.lambda) << ',' << i << ',' << p.alpha[i - 1] << ','
                << detail::fmt(p.log_delta[i - 1]) << ',' << detail::fmt(p.delta(i - 1))
                << ',' << detail::fmt(p.exponent[i - 1]) << ',' << detail::fmt(p.d(i - 1))
                << ',' << detail::fmt(bal) << '\n';
        }
        rows.push_back({{"lambda", p.lambda},
                        {"alternating_sum", check_alternating_sum(p)},
                        {"levels", levels}});
    }
    rec.payload["h00"] = h00;
    rec.payload["rows"] = rows;
    rec.payload["max_balance"] = max_balance;
    add_verdict(rec, "scale-balance", max_balance < 1e-9, max_balance, 1e-9,
                "largest row defect of the scale-selection system");

    if (lambdas.size() >= 2) {
        double drift = 0.0;
        for (int i = 0; i < c.k; ++i)
            for (size_t q = 1; q < all.size(); ++q)
                drift = std::max(drift,
                                 std::abs(std::expm1(all[q].log_d[i] - all[0].log_d[i])));
        rec.payload["max_prefactor_drift"] = drift;
        add_verdict(rec, "prefactor-drift", drift < 1e-10, drift, 1e-10,
                    "relative spread of the lambda-independent scale prefactors");
    }
    rec.tables.push_back({"parameters", csv.str()});
}

inline void run_ansatz(const RunConfig& c, RunRecord& rec) {
    if (c.domain.kind == DomainSpec::Kind::rectangle) {
        // 2D path: check the boundary trace of the assembled ansatz.
        const std::vector<double> lambdas = c.lambda.values();
        double worst_boundary = 0.0;
        json rows = json::array();
        for (double lambda : lambdas) {
            const GreenData green = build_green(c.domain);
            const BubbleParams p = select_parameters(c.k, lambda, green.h00);
            const ProjectionMode mode = c.projection == "exact" ? ProjectionMode::exact
                                                                : ProjectionMode::asymptotic;
            const RectangleAnsatz a = assemble_ansatz_rectangle(p, c.domain, mode);
            double trace = 0.0;
            const Grid2D& g = a.W.grid;
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    if (g.boundary(i, j)) trace = std::max(trace, std::abs(a.W.at(i, j)));
            worst_boundary = std::max(worst_boundary, trace);
            rows.push_back({{"lambda", lambda}, {"boundary_trace", trace}});
        }
        rec.payload["rows"] = rows;
        const double tol = c.projection == "exact" ? 1e-10 : 1e-2;
        add_verdict(rec, "boundary-trace", worst_boundary <= tol, worst_boundary, tol,
                    "sup |W| on the rectangle boundary");
        return;
    }

    const double h00 = domain_h00(c.domain);
    const std::vector<double> lambdas = c.lambda.values();
    const ProjectionMode mode = c.projection == "exact" ? ProjectionMode::exact
                                                        : ProjectionMode::asymptotic;
    struct Point {
        double lambda;
        double boundary;
        std::vector<ThetaCertificate> certs;
        std::vector<double> inner_edge;  // innermost sampled radius per level
    };
    std::vector<Point> pts(lambdas.size());
    detail::parallel_for(static_cast<int>(lambdas.size()), c.threads, [&](int q) {
        const BubbleParams p = select_parameters(c.k, lambdas[static_cast<size_t>(q)], h00);
        const Ansatz a = assemble_ansatz(p, c.domain, mode, c.nodes_per_unit, c.pad);
        Point pt;
        pt.lambda = lambdas[static_cast<size_t>(q)];
        pt.boundary = std::abs(a.W.back());
        for (int j = 1; j <= c.k; ++j) {
            pt.certs.push_back(theta_certificate(a, j, c.samples));
            pt.inner_edge.push_back(j == 1 ? p.delta(0) * 1e-4
                                           : a.annuli.radii[static_cast<size_t>(j - 1)]);
        }
        pts[static_cast<size_t>(q)] = std::move(pt);
    });

    json rows = json::array();
    std::ostringstream csv;
    csv << "lambda,level,theta_max_ratio,theta_max_abs,inner_edge,boundary_trace\n";
    double worst_boundary = 0.0;
    std::vector<double> ratio_min(static_cast<size_t>(c.k), 1e300);
    std::vector<double> ratio_max(static_cast<size_t>(c.k), 0.0);
    std::vector<double> ratio_anchor(static_cast<size_t>(c.k), 0.0);
    std::vector<bool> sharp(static_cast<size_t>(c.k), true);
    double lambda_anchor = 0.0;
    for (const Point& pt : pts) lambda_anchor = std::max(lambda_anchor, pt.lambda);
    for (const Point& pt : pts) {
        worst_boundary = std::max(worst_boundary, pt.boundary);
        json certs = json::array();
        for (size_t q = 0; q < pt.certs.size(); ++q) {
            const ThetaCertificate& ct = pt.certs[q];
            // A level "resolves the lambda scale" when its annulus reaches radii
            // below lambda; only there is the (r + lambda) bound tight enough to
            // pin the fitted constant from both sides. Outer annuli sit entirely
            // above that scale, so their fit may slacken as lambda shrinks and we
            // only insist it never grows past the coarsest-lambda fit.
            const bool resolves = pt.inner_edge[q] <= pt.lambda;
            if (!resolves) sharp[static_cast<size_t>(ct.j - 1)] = false;
            certs.push_back({{"level", ct.j},
                             {"max_ratio", ct.max_ratio},
                             {"max_abs", ct.max_abs},
                             {"inner_edge", pt.inner_edge[q]},
                             {"resolves_lambda_scale", resolves}});
            ratio_min[static_cast<size_t>(ct.j - 1)] =
                std::min(ratio_min[static_cast<size_t>(ct.j - 1)], ct.max_ratio);
            ratio_max[static_cast<size_t>(ct.j - 1)] =
                std::max(ratio_max[static_cast<size_t>(ct.j - 1)], ct.max_ratio);
            if (pt.lambda == lambda_anchor)
                ratio_anchor[static_cast<size_t>(ct.j - 1)] = ct.max_ratio;
            csv << detail::fmt(pt.lambda) << ',' << ct.j << ',' << detail::fmt(ct.max_ratio)
                << ',' << detail::fmt(ct.max_abs) << ',' << detail::fmt(pt.inner_edge[q])
                << ',' << detail::fmt(pt.boundary) << '\n';
        }
        rows.push_back({{"lambda", pt.lambda},
                        {"boundary_trace", pt.boundary},
                        {"certificates", certs}});
    }
    rec.payload["rows"] = rows;
    const double btol = mode == ProjectionMode::exact ? 1e-12 : 1e-2;
    add_verdict(rec, "boundary-trace", worst_boundary <= btol, worst_boundary, btol,
                "sup |W(R)| over the sweep");
    if (lambdas.size() >= 2) {
        double stability = 0.0, spread_all = 0.0;
        for (int j = 0; j < c.k; ++j) {
            const double spread =
                ratio_max[static_cast<size_t>(j)] / ratio_min[static_cast<size_t>(j)];
            const double updrift =
                ratio_max[static_cast<size_t>(j)] / ratio_anchor[static_cast<size_t>(j)];
            spread_all = std::max(spread_all, spread);
            stability = std::max(stability, sharp[static_cast<size_t>(j)] ? spread : updrift);
        }
        rec.payload["certificate_spread"] = spread_all;
        rec.payload["certificate_stability"] = stability;
        add_verdict(rec, "certificate-stability", stability < 2.0, stability, 2.0,
                    "two-sided fit spread on levels resolving the lambda scale; "
                    "upward drift only on coarser levels");
    }
    rec.tables.push_back({"ansatz", csv.str()});
}

inline void run_residual_scan(const RunConfig& c, RunRecord& rec) {
    require(c.domain.kind == DomainSpec::Kind::disk,
            "residual-scan: only disk domains are supported");
    const double h00 = domain_h00(c.domain);
    const std::vector<double> lambdas = c.lambda.values();

    struct Point {
        double lambda;
        std::vector<NormReport> r_norms;  // one per p
        std::vector<NormReport> s_norms;
    };
    std::vector<Point> pts(lambdas.size());
    detail::parallel_for(static_cast<int>(lambdas.size()), c.threads, [&](int q) {
        const BubbleParams p = select_parameters(c.k, lambdas[static_cast<size_t>(q)], h00);
        const Ansatz a = assemble_ansatz(p, c.domain, ProjectionMode::exact,
                                         c.nodes_per_unit, c.pad);
        const Field R = residual_field(a);
        const Field S = linear_error_field(a);
        Point pt;
        pt.lambda = lambdas[static_cast<size_t>(q)];
        for (double pp : c.p_list) {
            pt.r_norms.push_back(lp_norm(a.mesh, R, pp, a.annuli));
            pt.s_norms.push_back(lp_norm(a.mesh, S, pp, a.annuli));
        }
        pts[static_cast<size_t>(q)] = std::move(pt);
    });

    json rows = json::array();
    std::ostringstream csv;
    csv << "lambda,p,r_norm,s_norm,quad_err";
    for (int j = 1; j <= c.k; ++j) csv << ",r_annulus_" << j;
    for (int j = 1; j <= c.k; ++j) csv << ",s_annulus_" << j;
    csv << '\n';
    for (const Point& pt : pts) {
        for (size_t ip = 0; ip < c.p_list.size(); ++ip) {
            const NormReport& rn = pt.r_norms[ip];
            const NormReport& sn = pt.s_norms[ip];
            json row = {{"lambda", pt.lambda},
                        {"p", c.p_list[ip]},
                        {"r_norm", rn.total},
                        {"s_norm", sn.total},
                        {"r_per_annulus", rn.per_annulus},
                        {"s_per_annulus", sn.per_annulus},
                        {"quadrature_error_estimate", rn.quadrature_error_estimate}};
            rows.push_back(row);
            csv << detail::fmt(pt.lambda) << ',' << detail::fmt(c.p_list[ip]) << ','
                << detail::fmt(rn.total) << ',' << detail::fmt(sn.total) << ','
                << detail::fmt(rn.quadrature_error_estimate);
            for (double v : rn.per_annulus) csv << ',' << detail::fmt(v);
            for (double v : sn.per_annulus) csv << ',' << detail::fmt(v);
            csv << '\n';
        }
    }
    rec.payload["rows"] = rows;

    json fits = json::array();
    if (lambdas.size() >= 3) {
        for (size_t ip = 0; ip < c.p_list.size(); ++ip) {
            std::vector<double> ls, rn, sn;
            for (const Point& pt : pts) {
                ls.push_back(pt.lambda);
                rn.push_back(pt.r_norms[ip].total);
                sn.push_back(pt.s_norms[ip].total);
            }
            const double predicted = predicted_exponent(c.k, c.p_list[ip]);
            const ScalingFit fr = scaling_fit(ls, rn, predicted);
            const ScalingFit fs = scaling_fit(ls, sn, predicted);
            fits.push_back({{"p", c.p_list[ip]},
                            {"field", "residual"},
                            {"slope", fr.slope},
                            {"predicted", predicted},
                            {"rms", fr.rms_residual}});
            fits.push_back({{"p", c.p_list[ip]},
                            {"field", "linear-error"},
                            {"slope", fs.slope},
                            {"predicted", predicted},
                            {"rms", fs.rms_residual}});
            const std::string tag = detail::fmt_short(c.p_list[ip]);
            add_verdict(rec, "residual-scaling-p=" + tag, fr.meets_prediction, fr.slope,
                        predicted - 0.05, "fitted ln-ln slope vs predicted decay rate");
            add_verdict(rec, "linear-error-scaling-p=" + tag, fs.meets_prediction, fs.slope,
                        predicted - 0.05, "fitted ln-ln slope vs predicted decay rate");
        }
        rec.payload["fits"] = fits;
    }
    csv << "# " << json({{"fits", fits}}).dump() << '\n';
    rec.tables.push_back({"residual_norms", csv.str()});
}

inline void run_linear_spectrum(const RunConfig& c, RunRecord& rec) {
    require(c.domain.kind == DomainSpec::Kind::disk,
            "linear-spectrum: only disk domains are supported");
    const std::vector<double> lambdas = c.lambda.values();
    const bool even_only = c.modes == "even";
    const std::vector<SpectrumRow> rows =
        min_singular_sweep(c.k, lambdas, c.domain, even_only, c.nodes_per_unit, c.pad);

    json jrows = json::array();
    std::ostringstream csv;
    csv << "lambda,mode,sigma,abs_sigma_times_log_lambda\n";
    for (const SpectrumRow& r : rows) {
        const double scaled = std::abs(r.sigma) * std::abs(std::log(r.lambda));
        jrows.push_back({{"lambda", r.lambda},
                         {"mode", r.mode},
                         {"sigma", r.sigma},
                         {"converged", r.converged}});
        csv << detail::fmt(r.lambda) << ',' << r.mode << ',' << detail::fmt(r.sigma) << ','
            << detail::fmt(scaled) << '\n';
    }
    rec.payload["rows"] = jrows;

    // per-lambda minima over the requested mode set
    json minima = json::array();
    double band_lo = 1e300, band_hi = 0.0;
    std::vector<double> all_min(lambdas.size(), 1e300);
    std::vector<double> even_min(lambdas.size(), 1e300);
    std::vector<int> min_mode(lambdas.size(), -1);
    bool all_converged = true;
    for (size_t q = 0; q < lambdas.size(); ++q) {
        for (const SpectrumRow& r : rows) {
            if (r.lambda != lambdas[q]) continue;
            all_converged = all_converged && r.converged;
            if (std::abs(r.sigma) < all_min[q]) {
                all_min[q] = std::abs(r.sigma);
                min_mode[q] = r.mode;
            }
            if (r.mode % 2 == 0) even_min[q] = std::min(even_min[q], std::abs(r.sigma));
        }
        const double scaled = even_min[q] * std::abs(std::log(lambdas[q]));
        band_lo = std::min(band_lo, scaled);
        band_hi = std::max(band_hi, scaled);
        minima.push_back({{"lambda", lambdas[q]},
                          {"sigma_even_min", even_min[q]},
                          {"sigma_all_min", all_min[q]},
                          {"min_mode", min_mode[q]},
                          {"even_min_scaled", scaled}});
    }
    rec.payload["minima"] = minima;
    add_verdict(rec, "eigensolver-converged", all_converged, all_converged ? 1.0 : 0.0, 1.0,
                "inverse iteration reached its tolerance for every (lambda, mode)");
    if (lambdas.size() >= 2) {
        const double band = band_hi / band_lo;
        rec.payload["even_band"] = band;
        add_verdict(rec, "even-sector-band", band <= 5.0, band, 5.0,
                    "spread of sigma_min(even) * |ln lambda| across the sweep");
        if (!even_only) {
            // With the odd modes admitted, the smallest singular value should
            // slide monotonically toward zero as lambda shrinks and end up far
            // below the even-sector floor: that contrast is the whole point of
            // restricting the construction to the symmetric sector.
            std::vector<size_t> order(lambdas.size());
            for (size_t q = 0; q < order.size(); ++q) order[q] = q;
            std::sort(order.begin(), order.end(),
                      [&](size_t a, size_t b) { return lambdas[a] > lambdas[b]; });
            double worst_step = 0.0;
            for (size_t t = 1; t < order.size(); ++t)
                worst_step = std::max(worst_step, all_min[order[t]] / all_min[order[t - 1]]);
            const size_t qlo = order.back();
            const double decline = all_min[qlo] / all_min[order.front()];
            const double separation = all_min[qlo] / even_min[qlo];
            rec.payload["unrestricted_decline"] = decline;
            rec.payload["unrestricted_worst_step"] = worst_step;
            rec.payload["unrestricted_separation"] = separation;
            std::ostringstream note;
            note << "unrestricted minimum (mode " << min_mode[qlo]
                 << " at the smallest lambda) relative to the largest lambda; worst step ratio "
                 << detail::fmt_short(worst_step);
            add_verdict(rec, "forbidden-mode-collapse",
                        decline <= 0.9 && worst_step <= 1.05, decline, 0.9, note.str());
            add_verdict(rec, "symmetry-separation", separation <= 0.25, separation, 0.25,
                        "unrestricted minimum over the even-sector minimum at the smallest "
                        "lambda");
        }
    }
    rec.tables.push_back({"spectrum", csv.str()});
}

inline void run_solve(const RunConfig& c, RunRecord& rec) {
    require(c.domain.kind == DomainSpec::Kind::disk, "solve: only disk domains are supported");
    const std::vector<SweepPoint> pts =
        solve_sweep(c.k, c.lambda.values(), c.domain, c.method, c.nodes_per_unit, c.pad,
                    c.tol_newton, c.r_cut_frac);

    json rows = json::array();
    std::ostringstream csv;
    csv << "lambda,converged,iterations,final_residual,phi_energy,m_plus,m_minus,"
           "os_residual,farfield_gap,sign_flips,contraction_ratio,agreement\n";
    bool all_converged = true;
    double worst_agreement = 0.0;
    bool have_agreement = false;
    for (const SweepPoint& pt : pts) {
        all_converged = all_converged && pt.result.converged;
        if (c.method == "both" && std::isfinite(pt.agreement_sup)) {
            worst_agreement = std::max(worst_agreement, pt.agreement_sup);
            have_agreement = true;
        }
        const double final_res =
            pt.result.residual_history.empty() ? 0.0 : pt.result.residual_history.back();
        rows.push_back({{"lambda", pt.lambda},
                        {"converged", pt.result.converged},
                        {"method", pt.result.method},
                        {"failure", pt.result.failure},
                        {"iterations", pt.result.iterations},
                        {"final_residual", final_res},
                        {"phi_energy", pt.phi_energy},
                        {"m_plus", pt.m_plus},
                        {"m_minus", pt.m_minus},
                        {"os_residual", pt.os_residual},
                        {"farfield_gap", pt.farfield_gap},
                        {"sign_flips", pt.sign_flips},
                        {"contraction_ratio", pt.contraction_ratio},
                        {"agreement_sup", std::isfinite(pt.agreement_sup)
                                              ? json(pt.agreement_sup)
                                              : json()}});
        csv << detail::fmt(pt.lambda) << ',' << (pt.result.converged ? 1 : 0) << ','
            << pt.result.iterations << ',' << detail::fmt(final_res) << ','
            << detail::fmt(pt.phi_energy) << ',' << detail::fmt(pt.m_plus) << ','
            << detail::fmt(pt.m_minus) << ',' << detail::fmt(pt.os_residual) << ','
            << detail::fmt(pt.farfield_gap) << ',' << pt.sign_flips << ','
            << detail::fmt(pt.contraction_ratio) << ','
            << (std::isfinite(pt.agreement_sup) ? detail::fmt(pt.agreement_sup) : "") << '\n';
    }
    rec.payload["rows"] = rows;
    add_verdict(rec, "all-converged", all_converged, all_converged ? 1.0 : 0.0, 1.0,
                "every sweep point reached its solver tolerance");
    if (have_agreement)
        add_verdict(rec, "path-agreement", worst_agreement <= 1e-8, worst_agreement, 1e-8,
                    "sup difference between the Newton and contraction solutions");

    // Diagnostics across the sweep (lambda descending after solve_sweep sorts).
    if (pts.size() >= 2 && all_converged) {
        const double first_far = pts.front().farfield_gap;
        const double last_far = pts.back().farfield_gap;
        rec.payload["farfield_first"] = first_far;
        rec.payload["farfield_last"] = last_far;
        add_verdict(rec, "farfield-decreasing", last_far < first_far, last_far, first_far,
                    "far-field gap at the smallest lambda vs the largest");
        const double os_first = std::abs(pts.front().os_residual);
        const double os_last = std::abs(pts.back().os_residual);
        add_verdict(rec, "os-decreasing", os_last < os_first, os_last, os_first,
                    "mass-identity residual at the smallest lambda vs the largest");
    }

    // Size of the correction against the lambda^{1/(2(2k-1))} * |ln lambda|
    // yardstick — the same power that rules the residual, times the inverse
    // operator's logarithmic loss. "Bounded" is one-sided: the ratio must not
    // grow as lambda shrinks (it is allowed to decay, and at desk scale for
    // k = 1 it does).
    {
        const double power = 1.0 / (2.0 * (2.0 * c.k - 1.0));
        json ratios = json::array();
        double first_ratio = 0.0, max_ratio = 0.0;
        int n_ratio = 0;
        for (const SweepPoint& pt : pts) {
            if (!pt.result.converged) continue;
            const double yard = std::pow(pt.lambda, power) * std::abs(std::log(pt.lambda));
            const double ratio = pt.phi_energy / yard;
            ratios.push_back({{"lambda", pt.lambda}, {"ratio", ratio}});
            if (n_ratio == 0) first_ratio = ratio;
            max_ratio = std::max(max_ratio, ratio);
            ++n_ratio;
        }
        rec.payload["correction_ratios"] = ratios;
        if (n_ratio >= 3 && first_ratio > 0.0) {
            const double growth = max_ratio / first_ratio;
            add_verdict(rec, "correction-bounded", growth <= 2.0, growth, 2.0,
                        "peak of |phi| / (lambda^{1/(2(2k-1))} |ln lambda|) relative to its "
                        "value at the largest lambda");
        }
    }

    // Contraction quality at the most asymptotic point that ran the fixed-point
    // path (lambda ascending would hide it; sweep order is descending).
    if (c.method != "newton") {
        for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
            if (!it->result.converged || it->contraction_ratio <= 0.0) continue;
            add_verdict(rec, "contraction-ratio", it->contraction_ratio < 0.5,
                        it->contraction_ratio, 0.5,
                        "largest step-to-step ratio of the fixed-point iteration at the "
                        "smallest converged lambda");
            break;
        }
    }

    if (!pts.empty() && pts.back().result.converged) {
        const SweepPoint& last = pts.back();
        const double expect_dom = 4.0 * pi * c.k * (c.k + 1.0);
        const double expect_sub = 4.0 * pi * c.k * (c.k - 1.0);
        // parity decides which exponential carries the big mass
        const double big = std::max(last.m_plus, last.m_minus);
        const double small = std::min(last.m_plus, last.m_minus);
        const double rel_big = std::abs(big - expect_dom) / expect_dom;
        const double rel_small = expect_sub > 0.0
                                     ? std::abs(small - expect_sub) / expect_sub
                                     : small / expect_dom;  // k = 1: deviation from zero
        const double pair_err = std::max(rel_big, rel_small);
        rec.payload["mass_rel_err_dominant"] = rel_big;
        rec.payload["mass_rel_err_subordinate"] = rel_small;
        rec.payload["os_residual_last"] = last.os_residual;
        const double mtol = (c.k == 1) ? 0.02 : 0.05;
        add_verdict(rec, "mass-quantization", pair_err <= mtol, pair_err, mtol,
                    "worst deviation of the mass pair from its quantized targets at the "
                    "smallest lambda");
        add_verdict(rec, "quantization-os", std::abs(last.os_residual) <= 1e-2,
                    std::abs(last.os_residual), 1e-2,
                    "scaled identity linking the two masses at the smallest lambda");
    }
    rec.tables.push_back({"solve_sweep", csv.str()});
}

inline void run_limit_checks(const RunConfig& c, RunRecord& rec) {
    json rows = json::array();
    std::ostringstream csv;
    csv << "alpha,mass,mass_rel_err,i1_abs,i2_err,i3_err,stereo_rel_err,grad_rel_err\n";
    double worst_mass = 0.0, worst_kernel = 0.0, worst_stereo = 0.0, worst_grad = 0.0;
    for (double alpha : c.alphas) {
        const double mass = limit_mass(alpha);
        const double mass_err = std::abs(mass - 4.0 * pi * alpha) / (4.0 * pi * alpha);
        const KernelIntegrals ki = kernel_integrals(alpha);
        const double k_err = std::max({std::abs(ki.i1),
                                       std::abs(ki.i2 + 4.0 * pi * alpha),
                                       std::abs(ki.i3 + 4.0 * pi)});

        // bounded radial test battery for the stereographic norm identity
        const std::vector<std::function<double(double)>> battery = {
            [](double) { return 1.0; },
            [alpha](double r) { return std::exp(-log_add(0.0, alpha * std::log(r))); },
            [alpha](double r) { return kernel_z0(alpha, r); },
            [alpha](double r) {
                return std::exp(alpha * std::log(r) - log_add(0.0, alpha * std::log(r)));
            },
            [alpha](double r) { return kernel_phi1(alpha, r, 0.0); }};
        double stereo_err = 0.0;
        for (const auto& u : battery) {
            const double ratio = stereographic_norm_ratio(alpha, u);
            stereo_err = std::max(stereo_err, std::abs(ratio / (0.5 * alpha) - 1.0));
        }

        // radial gradient identity: transformed energy = (2/alpha) * energy
        const std::vector<std::function<double(double)>> slopes = {
            [alpha](double r) {  // d/dr of 1/(1+r^a)
                const double lr = std::log(r);
                return -alpha * std::exp((alpha - 1.0) * lr - 2.0 * log_add(0.0, alpha * lr));
            },
            [alpha](double r) {  // d/dr of the radial mode-a/2 kernel
                const double lr = std::log(r);
                const double ra = std::exp(alpha * lr);
                return 0.5 * alpha * std::exp((0.5 * alpha - 1.0) * lr) * (1.0 - ra) /
                       std::pow(1.0 + ra, 2.0);
            }};
        double grad_err = 0.0;
        for (const auto& du : slopes) {
            const GradientComparison g = stereographic_gradient_comparison(alpha, du);
            grad_err = std::max(grad_err,
                                std::abs(g.transformed_energy / g.energy - 2.0 / alpha) /
                                    (2.0 / alpha));
        }

        worst_mass = std::max(worst_mass, mass_err);
        worst_kernel = std::max(worst_kernel, k_err);
        worst_stereo = std::max(worst_stereo, stereo_err);
        worst_grad = std::max(worst_grad, grad_err);
        rows.push_back({{"alpha", alpha},
                        {"mass", mass},
                        {"mass_rel_err", mass_err},
                        {"kernel", {{"i1", ki.i1}, {"i2", ki.i2}, {"i3", ki.i3}}},
                        {"kernel_abs_err", k_err},
                        {"stereo_rel_err", stereo_err},
                        {"gradient_rel_err", grad_err}});
        csv << detail::fmt(alpha) << ',' << detail::fmt(mass) << ',' << detail::fmt(mass_err)
            << ',' << detail::fmt(std::abs(ki.i1)) << ','
            << detail::fmt(std::abs(ki.i2 + 4.0 * pi * alpha)) << ','
            << detail::fmt(std::abs(ki.i3 + 4.0 * pi)) << ',' << detail::fmt(stereo_err)
            << ',' << detail::fmt(grad_err) << '\n';
    }
    rec.payload["rows"] = rows;
    add_verdict(rec, "limit-mass", worst_mass <= 1e-8, worst_mass, 1e-8,
                "relative error of the concentrated bubble mass vs 4 pi alpha");
    add_verdict(rec, "kernel-integrals", worst_kernel <= 1e-6, worst_kernel, 1e-6,
                "largest absolute error among the three closed-form kernel integrals");
    add_verdict(rec, "stereographic-ratio", worst_stereo <= 1e-8, worst_stereo, 1e-8,
                "weighted-norm ratio vs alpha/2 over the test battery");
    add_verdict(rec, "gradient-transform", worst_grad <= 1e-8, worst_grad, 1e-8,
                "radial gradient energies match the exact transform factor");
    rec.tables.push_back({"limit_checks", csv.str()});
}

}  // namespace runs

inline RunRecord run(const RunConfig& c) {
    RunRecord rec;
    rec.kind = c.kind;
    rec.config = to_json(c);
    rec.started_at = detail::iso8601_now();
    const auto t0 = std::chrono::steady_clock::now();

    if (c.kind == "params") runs::run_params(c, rec);
    else if (c.kind == "ansatz") runs::run_ansatz(c, rec);
    else if (c.kind == "residual-scan") runs::run_residual_scan(c, rec);
    else if (c.kind == "linear-spectrum") runs::run_linear_spectrum(c, rec);
    else if (c.kind == "solve") runs::run_solve(c, rec);
    else if (c.kind == "limit-checks") runs::run_limit_checks(c, rec);
    else throw std::invalid_argument("config: kind: unknown run kind '" + c.kind + "'");

    rec.finished_at = detail::iso8601_now();
    rec.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    rec.hash = detail::hex16(detail::fnv1a64(rec.config.dump() + rec.payload.dump()));
    return rec;
}

// --- registry ----------------------------------------------------------------

inline std::filesystem::path registry_dir(const RunConfig& c) {
    if (const char* env = std::getenv("TOWERLAB_REGISTRY"); env && *env)
        return std::filesystem::path(env);
    return std::filesystem::path(c.outdir) / "registry";
}

// Append-only: a fresh filename per record (epoch-ms prefix, hash suffix, and
// a counter if both collide). Returns the path of the record JSON.
inline std::filesystem::path write_record(const RunRecord& rec,
                                          const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto now_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
    std::string stem = std::to_string(now_ms) + "_" + rec.kind + "_" + rec.hash.substr(0, 8);
    std::filesystem::path path = dir / (stem + ".json");
    for (int salt = 1; std::filesystem::exists(path); ++salt)
        path = dir / (stem + "-" + std::to_string(salt) + ".json");

    json j = record_to_json(rec);
    j["tables"] = json::array();
    for (const CsvTable& t : rec.tables) {
        const std::string csv_name = path.stem().string() + "_" + t.name + ".csv";
        std::ofstream out(dir / csv_name);
        if (!out) throw std::runtime_error("write_record: cannot write " + csv_name);
        out << t.content;
        j["tables"].push_back(csv_name);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_record: cannot write " + path.string());
    out << j.dump(2) << '\n';
    return path;
}

// --- reporting ----------------------------------------------------------------

struct ReportFilter {
    std::string kind;     // empty = all kinds
    std::string verdict;  // empty | "pass" | "fail"
};

struct Report {
    json summary;
    std::string csv;
    int selected = 0;
};

inline Report build_report(const std::filesystem::path& dir, const ReportFilter& filter) {
    if (!filter.verdict.empty() && filter.verdict != "pass" && filter.verdict != "fail")
        throw std::invalid_argument("report: verdict filter must be pass or fail");
    Report rep;
    std::ostringstream csv;
    csv << "file,kind,hash,started_at,duration_ms,overall_pass,failed_verdicts\n";
    json entries = json::array();
    int unreadable = 0, total = 0;
    std::map<std::string, std::pair<int, int>> kind_counts;  // kind -> {pass, fail}

    std::vector<std::filesystem::path> files;
    if (std::filesystem::exists(dir))
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    for (const auto& f : files) {
        ++total;
        json j;
        try {
            std::ifstream in(f);
            j = json::parse(in);
        } catch (...) {
            ++unreadable;
            continue;
        }
        if (!j.contains("kind") || !j.contains("overall_pass")) {
            ++unreadable;
            continue;
        }
        const std::string kind = j["kind"].get<std::string>();
        const bool pass = j["overall_pass"].get<bool>();
        if (!filter.kind.empty() && kind != filter.kind) continue;
        if (filter.verdict == "pass" && !pass) continue;
        if (filter.verdict == "fail" && pass) continue;

        std::string failed;
        if (j.contains("verdicts"))
            for (const auto& v : j["verdicts"])
                if (!v.value("pass", true)) {
                    if (!failed.empty()) failed += ';';
                    failed += v.value("name", "?");
                }
        auto& counts = kind_counts[kind];
        (pass ? counts.first : counts.second) += 1;
        ++rep.selected;
        entries.push_back({{"file", f.filename().string()},
                           {"kind", kind},
                           {"hash", j.value("hash", "")},
                           {"started_at", j.value("started_at", "")},
                           {"overall_pass", pass},
                           {"failed_verdicts", failed}});
        csv << f.filename().string() << ',' << kind << ',' << j.value("hash", "") << ','
            << j.value("started_at", "") << ',' << j.value("duration_ms", 0) << ','
            << (pass ? 1 : 0) << ',' << failed << '\n';
    }

    json per_kind = json::object();
    for (const auto& [kind, counts] : kind_counts)
        per_kind[kind] = {{"pass", counts.first}, {"fail", counts.second}};
    rep.summary = {{"registry", dir.string()},
                   {"records_seen", total},
                   {"records_selected", rep.selected},
                   {"unreadable", unreadable},
                   {"per_kind", per_kind},
                   {"entries", entries}};
    rep.csv = csv.str();
    return rep;
}

}  // namespace towerlab
