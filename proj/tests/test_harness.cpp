// Run harness: config parsing and canonicalization, the six run kinds with
// their verdicts and payload schemas, record archival, and registry reports.

#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "towerlab/harness.hpp"

using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
using namespace towerlab;
namespace fs = std::filesystem;

namespace {

bool is_hex16(const std::string& s) {
    return s.size() == 16 && std::all_of(s.begin(), s.end(), [](unsigned char c) {
               return std::isxdigit(c) != 0;
           });
}

const Verdict* find_verdict(const RunRecord& rec, const std::string& name) {
    for (const auto& v : rec.verdicts)
        if (v.name == name) return &v;
    return nullptr;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir =
        fs::temp_directory_path() / ("towerlab_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct RegistryEnvGuard {
    explicit RegistryEnvGuard(const std::string& dir) {
        ::setenv("TOWERLAB_REGISTRY", dir.c_str(), 1);
    }
    ~RegistryEnvGuard() { ::unsetenv("TOWERLAB_REGISTRY"); }
};

// Re-derive the certificate stability figure from the archived payload: a
// two-sided spread on levels whose sampled annulus dips below lambda at every
// sweep point, an anchored upward drift elsewhere.
double recompute_stability(const json& payload) {
    const json& rows = payload.at("rows");
    const std::size_t k = rows.at(0).at("certificates").size();
    std::size_t anchor_row = 0;
    double lmax = 0.0;
    for (std::size_t q = 0; q < rows.size(); ++q) {
        const double l = rows.at(q).at("lambda").get<double>();
        if (l > lmax) {
            lmax = l;
            anchor_row = q;
        }
    }
    double stability = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double lo = 1e300, hi = 0.0, anchor = 0.0;
        bool sharp = true;
        for (std::size_t q = 0; q < rows.size(); ++q) {
            const json& ct = rows.at(q).at("certificates").at(j);
            const double ratio = ct.at("max_ratio").get<double>();
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            sharp = sharp && ct.at("resolves_lambda_scale").get<bool>();
            if (q == anchor_row) anchor = ratio;
        }
        stability = std::max(stability, sharp ? hi / lo : hi / anchor);
    }
    return stability;
}

}  // namespace

TEST_CASE("configs round-trip through their canonical JSON form", "[harness][config]") {
    const json custom = json::parse(R"({
        "kind": "solve",
        "k": 2,
        "lambda": {"from": 1e-2, "to": 1e-6, "points": 4},
        "domain": {"kind": "rectangle", "a": 1.0, "b": 0.5, "grid_n": 65},
        "mesh": {"nodes_per_unit": 32, "pad": 4},
        "p_list": [1.0, 1.3],
        "alphas": [2.0, 6.0],
        "method": "both",
        "modes": "all",
        "projection": "asymptotic",
        "tolerances": {"newton": 1e-9, "sigma": 1e-8},
        "r_cut_frac": 0.4,
        "samples": 64,
        "outdir": "records",
        "seed": 7,
        "threads": 2
    })");
    const RunConfig c = parse_config(custom);
    REQUIRE(c.kind == "solve");
    REQUIRE(c.k == 2);
    REQUIRE(c.lambda.sweep);
    REQUIRE(c.domain.kind == DomainSpec::Kind::rectangle);
    REQUIRE(c.method == "both");

    const json j1 = to_json(c);
    const json j2 = to_json(parse_config(j1));
    REQUIRE(j1.dump() == j2.dump());
}

TEST_CASE("a minimal config picks up every documented default", "[harness][config]") {
    const RunConfig c = parse_config(json::parse(R"({"kind": "limit-checks"})"));
    REQUIRE(c.k == 1);
    REQUIRE_FALSE(c.lambda.sweep);
    REQUIRE(c.lambda.value == 1e-3);
    REQUIRE(c.domain.kind == DomainSpec::Kind::disk);
    REQUIRE(c.domain.radius == 1.0);
    REQUIRE(c.nodes_per_unit == 64.0);
    REQUIRE(c.pad == 6.0);
    REQUIRE(c.p_list == std::vector<double>{1.0, 1.05, 1.1});
    REQUIRE(c.alphas == std::vector<double>{2.0, 6.0, 10.0});
    REQUIRE(c.method == "newton");
    REQUIRE(c.modes == "even");
    REQUIRE(c.projection == "exact");
    REQUIRE(c.tol_newton == 1e-11);
    REQUIRE(c.tol_sigma == 1e-10);
    REQUIRE(c.r_cut_frac == 0.5);
    REQUIRE(c.samples == 400);
    REQUIRE(c.outdir == "out");
    REQUIRE(c.seed == 2026);
    REQUIRE(c.threads == 0);
}

TEST_CASE("config errors carry a field path and a reason", "[harness][config][errors]") {
    auto parse = [](const std::string& text) { return parse_config(json::parse(text)); };

    REQUIRE_THROWS_WITH(parse(R"({"kind": "params", "bogus": 1})"),
                        ContainsSubstring("(root).bogus: unknown key"));
    REQUIRE_THROWS_WITH(parse(R"({"k": 1})"),
                        ContainsSubstring("kind: missing (one of params, ansatz, "
                                          "residual-scan, linear-spectrum, solve, limit-checks)"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "nope"})"),
                        ContainsSubstring("kind: unknown run kind 'nope'"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "params", "k": 9})"),
                        ContainsSubstring("k: tower height must lie in 1..8"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "params", "lambda": {"value": -1.0}})"),
                        ContainsSubstring("lambda.value: must be positive"));
    REQUIRE_THROWS_WITH(
        parse(R"({"kind": "params", "lambda": {"from": 1e-2, "to": 1e-6, "points": 1}})"),
        ContainsSubstring("lambda.points: need at least 2"));
    REQUIRE_THROWS_WITH(
        parse(R"({"kind": "ansatz", "domain": {"kind": "rectangle", "grid_n": 16}})"),
        ContainsSubstring("domain.grid_n: must be odd and >= 17"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "residual-scan", "p_list": [2.5]})"),
                        ContainsSubstring("p_list[0]: p must lie in [1, 2)"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "solve", "method": "speedy"})"),
                        ContainsSubstring("method: must be newton, contraction, or both"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "linear-spectrum", "modes": "odd"})"),
                        ContainsSubstring("modes: must be even or all"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "ansatz", "projection": "none"})"),
                        ContainsSubstring("projection: must be exact or asymptotic"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "ansatz", "samples": 8})"),
                        ContainsSubstring("samples: must lie in 16..100000"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "params", "mesh": {"nodes_per_unit": 4}})"),
                        ContainsSubstring("mesh.nodes_per_unit: must be >= 8"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "solve", "r_cut_frac": 1.5})"),
                        ContainsSubstring("r_cut_frac: must lie in (0, 1]"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "params", "threads": 300})"),
                        ContainsSubstring("threads: must lie in 0..256"));
    REQUIRE_THROWS_WITH(parse(R"({"kind": "params", "seed": -1})"),
                        ContainsSubstring("seed: must be non-negative"));

    REQUIRE_THROWS_WITH(load_config_file("/no/such/file.json"),
                        ContainsSubstring("config: cannot open '/no/such/file.json'"));
}

TEST_CASE("lambda specs expand to log-spaced sweeps", "[harness][config]") {
    LambdaSpec single;
    single.value = 3e-4;
    REQUIRE(single.values() == std::vector<double>{3e-4});

    LambdaSpec sweep;
    sweep.sweep = true;
    sweep.from = 1e-2;
    sweep.to = 1e-6;
    sweep.points = 3;
    const auto v = sweep.values();
    REQUIRE(v.size() == 3);
    REQUIRE(v[0] == Approx(1e-2).epsilon(1e-12));
    REQUIRE(v[1] == Approx(1e-4).epsilon(1e-12));
    REQUIRE(v[2] == Approx(1e-6).epsilon(1e-12));
}

TEST_CASE("params runs archive the scale table and pass their verdicts", "[harness][params]") {
    const RunConfig c = parse_config(json::parse(
        R"({"kind": "params", "k": 2, "lambda": {"from": 1e-2, "to": 1e-8, "points": 3}})"));
    const RunRecord rec = run(c);
    REQUIRE(rec.overall_pass);
    REQUIRE(is_hex16(rec.hash));

    const Verdict* bal = find_verdict(rec, "scale-balance");
    const Verdict* drift = find_verdict(rec, "prefactor-drift");
    REQUIRE(bal != nullptr);
    REQUIRE(drift != nullptr);
    REQUIRE(bal->pass);
    REQUIRE(drift->pass);

    // The first level's prefactor is a lambda-free closed form.
    const json& levels = rec.payload.at("rows").at(0).at("levels");
    REQUIRE(levels.size() == 2);
    REQUIRE(levels.at(0).at("d").get<double>() ==
            Approx(0.004910463758239913).epsilon(1e-12));

    REQUIRE(rec.tables.size() == 1);
    REQUIRE(rec.tables.front().name == "parameters");
    REQUIRE_THAT(rec.tables.front().content,
                 ContainsSubstring("lambda,level,alpha,log_delta,delta,exponent,d,balance\n"));

    SECTION("payloads and hashes are reproducible") {
        const RunRecord again = run(c);
        REQUIRE(again.payload.dump() == rec.payload.dump());
        REQUIRE(again.hash == rec.hash);
    }
}

TEST_CASE("limit-check runs verify the concentrated-profile identities", "[harness][limit]") {
    const RunRecord rec = run(parse_config(json::parse(R"({"kind": "limit-checks"})")));
    REQUIRE(rec.overall_pass);
    for (const char* name :
         {"limit-mass", "kernel-integrals", "stereographic-ratio", "gradient-transform"}) {
        const Verdict* v = find_verdict(rec, name);
        REQUIRE(v != nullptr);
        REQUIRE(v->pass);
    }
    const json& rows = rec.payload.at("rows");
    REQUIRE(rows.size() == 3);
    const double expected[] = {8.0 * pi, 24.0 * pi, 40.0 * pi};
    for (std::size_t i = 0; i < rows.size(); ++i)
        REQUIRE(rows.at(i).at("mass").get<double>() == Approx(expected[i]).epsilon(1e-9));
}

TEST_CASE("ansatz runs certify the mismatch constants", "[harness][ansatz]") {
    SECTION("two levels: both annuli resolve the lambda scale") {
        const RunConfig c = parse_config(json::parse(
            R"({"kind": "ansatz", "k": 2, "lambda": {"from": 1e-2, "to": 1e-5, "points": 4}})"));
        const RunRecord rec = run(c);
        REQUIRE(rec.overall_pass);
        REQUIRE(rec.payload.at("certificate_stability").get<double>() ==
                Approx(1.37279).epsilon(0.02));
        const Verdict* bt = find_verdict(rec, "boundary-trace");
        REQUIRE(bt != nullptr);
        REQUIRE(bt->pass);
        const json& first_cert = rec.payload.at("rows").at(0).at("certificates").at(0);
        REQUIRE(first_cert.at("resolves_lambda_scale").get<bool>());
        REQUIRE(recompute_stability(rec.payload) ==
                Approx(rec.payload.at("certificate_stability").get<double>()).margin(1e-12));
    }

    SECTION("three levels: the outermost fit slackens but never drifts upward") {
        const RunConfig c = parse_config(json::parse(
            R"({"kind": "ansatz", "k": 3, "lambda": {"from": 1e-2, "to": 1e-5, "points": 4}})"));
        const RunRecord rec = run(c);
        REQUIRE(rec.overall_pass);
        REQUIRE(rec.payload.at("certificate_spread").get<double>() > 50.0);
        REQUIRE(rec.payload.at("certificate_stability").get<double>() < 1.05);
        REQUIRE(recompute_stability(rec.payload) ==
                Approx(rec.payload.at("certificate_stability").get<double>()).margin(1e-12));
    }

    SECTION("worker count does not change the numbers") {
        const json base = json::parse(
            R"({"kind": "ansatz", "k": 2, "lambda": {"from": 1e-2, "to": 1e-5, "points": 4}})");
        json j1 = base, j4 = base;
        j1["threads"] = 1;
        j4["threads"] = 4;
        const RunRecord r1 = run(parse_config(j1));
        const RunRecord r4 = run(parse_config(j4));
        REQUIRE(r1.payload.dump() == r4.payload.dump());
    }
}

TEST_CASE("solve runs aggregate the continuation diagnostics", "[harness][solve]") {
    const RunConfig c = parse_config(json::parse(
        R"({"kind": "solve", "k": 1, "method": "both",
            "lambda": {"from": 1e-2, "to": 1e-5, "points": 4}})"));
    const RunRecord rec = run(c);
    REQUIRE(rec.overall_pass);
    for (const char* name : {"all-converged", "path-agreement", "farfield-decreasing",
                             "os-decreasing", "correction-bounded", "contraction-ratio",
                             "mass-quantization", "quantization-os"}) {
        const Verdict* v = find_verdict(rec, name);
        REQUIRE(v != nullptr);
        REQUIRE(v->pass);
    }
    REQUIRE(find_verdict(rec, "path-agreement")->value <= 1e-8);
    REQUIRE(rec.tables.size() == 1);
    REQUIRE_THAT(rec.tables.front().content,
                 ContainsSubstring("lambda,converged,iterations,final_residual,phi_energy,"
                                   "m_plus,m_minus,os_residual,farfield_gap,sign_flips,"
                                   "contraction_ratio,agreement\n"));
}

TEST_CASE("spectrum runs measure the even-sector band", "[harness][spectrum]") {
    const RunConfig c = parse_config(json::parse(
        R"({"kind": "linear-spectrum", "k": 1, "modes": "even",
            "lambda": {"from": 1e-2, "to": 1e-6, "points": 2}})"));
    const RunRecord rec = run(c);
    REQUIRE(rec.overall_pass);
    REQUIRE(find_verdict(rec, "eigensolver-converged") != nullptr);
    const Verdict* band = find_verdict(rec, "even-sector-band");
    REQUIRE(band != nullptr);
    REQUIRE(band->pass);
    REQUIRE(rec.payload.at("even_band").get<double>() == Approx(2.82).epsilon(0.02));
}

TEST_CASE("running a hand-made config with a bad kind fails loudly", "[harness][errors]") {
    RunConfig c;
    c.kind = "nope";
    REQUIRE_THROWS_WITH(run(c), ContainsSubstring("unknown run kind 'nope'"));
}

TEST_CASE("records archive append-only into the registry", "[harness][registry]") {
    const fs::path dir = fresh_dir("registry");
    RunConfig c = parse_config(json::parse(R"({"kind": "params", "outdir": "elsewhere"})"));

    SECTION("the environment override wins over the config outdir") {
        REQUIRE(registry_dir(c) == fs::path("elsewhere") / "registry");
        RegistryEnvGuard guard(dir.string());
        REQUIRE(registry_dir(c) == dir);
    }

    const RunRecord rec = run(c);
    const fs::path p1 = write_record(rec, dir);
    REQUIRE(fs::exists(p1));

    std::string first_contents;
    {
        std::ifstream in(p1);
        std::ostringstream ss;
        ss << in.rdbuf();
        first_contents = ss.str();
    }

    const fs::path p2 = write_record(rec, dir);
    REQUIRE(p2 != p1);
    REQUIRE(fs::exists(p2));
    {
        std::ifstream in(p1);
        std::ostringstream ss;
        ss << in.rdbuf();
        REQUIRE(ss.str() == first_contents);
    }

    const json j = json::parse(first_contents);
    for (const char* key : {"kind", "hash", "started_at", "finished_at", "duration_ms",
                            "overall_pass", "config", "verdicts", "payload", "tables"})
        REQUIRE(j.contains(key));
    REQUIRE(is_hex16(j.at("hash").get<std::string>()));
    REQUIRE(j.at("started_at").get<std::string>().find('T') != std::string::npos);

    // The CSV sidecar sits next to the record and shares its stem.
    REQUIRE(j.at("tables").size() == 1);
    const std::string csv_name = j.at("tables").at(0).get<std::string>();
    REQUIRE(csv_name == p1.stem().string() + "_parameters.csv");
    std::ifstream csv(dir / csv_name);
    REQUIRE(csv.good());
    std::string header;
    std::getline(csv, header);
    REQUIRE(header == "lambda,level,alpha,log_delta,delta,exponent,d,balance");

    fs::remove_all(dir);
}

TEST_CASE("reports fold a registry back into one summary", "[harness][report]") {
    const fs::path dir = fresh_dir("report");

    const RunRecord good = run(parse_config(json::parse(R"({"kind": "params"})")));
    write_record(good, dir);

    RunRecord bad;
    bad.kind = "solve";
    bad.config = json::object();
    bad.payload = json::object();
    bad.hash = "00000000deadbeef";
    bad.started_at = bad.finished_at = "2026-08-25T12:00:00Z";
    runs::add_verdict(bad, "all-converged", false, 0.0, 1.0, "synthetic failure");
    write_record(bad, dir);

    {
        std::ofstream garbage(dir / "zz_garbage.json");
        garbage << "{ not json";
    }

    const Report all = build_report(dir, {});
    REQUIRE(all.summary.at("records_seen").get<int>() == 3);
    REQUIRE(all.summary.at("unreadable").get<int>() == 1);
    REQUIRE(all.selected == 2);
    REQUIRE(all.summary.at("per_kind").at("params").at("pass").get<int>() == 1);
    REQUIRE(all.summary.at("per_kind").at("solve").at("fail").get<int>() == 1);
    REQUIRE_THAT(all.csv, ContainsSubstring(
                              "file,kind,hash,started_at,duration_ms,overall_pass,failed_verdicts\n"));
    REQUIRE_THAT(all.csv, ContainsSubstring("all-converged"));

    ReportFilter by_kind;
    by_kind.kind = "params";
    REQUIRE(build_report(dir, by_kind).selected == 1);

    ReportFilter failing;
    failing.verdict = "fail";
    const Report fails = build_report(dir, failing);
    REQUIRE(fails.selected == 1);
    REQUIRE(fails.summary.at("entries").at(0).at("kind").get<std::string>() == "solve");

    ReportFilter bogus;
    bogus.verdict = "bogus";
    REQUIRE_THROWS_WITH(build_report(dir, bogus),
                        ContainsSubstring("verdict filter must be pass or fail"));

    const Report empty = build_report(dir / "nothing", {});
    REQUIRE(empty.summary.at("records_seen").get<int>() == 0);
    REQUIRE(empty.selected == 0);

    fs::remove_all(dir);
}
