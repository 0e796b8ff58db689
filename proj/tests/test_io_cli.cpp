#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "filigeo/experiments.hpp"
#include "filigeo/io.hpp"

using namespace filigeo;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FILIGEO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("filigeo_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Structural validator covering the subset of JSON Schema the shipped schema
// uses: type / required / properties / items.
bool validates(const json& instance, const json& schema) {
    if (schema.contains("type")) {
        const std::string t = schema.at("type");
        if (t == "object" && !instance.is_object()) return false;
        if (t == "array" && !instance.is_array()) return false;
        if (t == "string" && !instance.is_string()) return false;
        if (t == "integer" && !instance.is_number_integer()) return false;
        if (t == "number" && !instance.is_number()) return false;
        if (t == "boolean" && !instance.is_boolean()) return false;
    }
    if (schema.contains("required"))
        for (const auto& key : schema.at("required"))
            if (!instance.contains(key.get<std::string>())) return false;
    if (schema.contains("properties") && instance.is_object())
        for (const auto& [key, sub] : schema.at("properties").items())
            if (instance.contains(key) && !validates(instance.at(key), sub)) return false;
    if (schema.contains("items") && instance.is_array())
        for (const auto& el : instance)
            if (!validates(el, schema.at("items"))) return false;
    return true;
}

}  // namespace

TEST_CASE("manifest round-trips through JSON unchanged") {
    Manifest m;
    m.experiment = "hw";
    m.metric_name = "hw";
    m.lambda = 1.5;
    m.eps = 0.25;
    m.seed = 77;
    m.out_dir = "/tmp/somewhere";
    m.x0 = {0.0, 0.0};
    m.v0 = {0.5, 0.8660254};
    const json j = m.to_json();
    const Manifest back = Manifest::from_json(j);
    CHECK(back.to_json() == j);
}

TEST_CASE("manifest validation rejects bad tolerances") {
    Manifest m;
    m.rtol = -1;
    CHECK_THROWS_AS(m.validate(), ManifestError);
    Manifest m2;
    m2.format = "xml";
    CHECK_THROWS_AS(m2.validate(), ManifestError);
    Manifest m3;
    m3.x0 = {1.0};
    CHECK_THROWS_AS(m3.validate(), ManifestError);
}

TEST_CASE("trajectory CSV and events JSON") {
    PiecewiseField f;
    f.dim = 1;
    f.f_minus = [](const Vec&) { return Vec::Constant(1, 0.5); };
    f.f_plus = [](const Vec&) { return Vec::Constant(1, 1.5); };
    f.level = [](const Vec& x) { return x[0]; };
    f.level_grad = [](const Vec&) { return Vec::Constant(1, 1.0); };
    auto traj = integrate_filippov(f, Vec::Constant(1, -1.0), 0.0, 3.0);

    std::ostringstream csv;
    write_trajectory_csv(csv, traj, 16);
    std::istringstream in(csv.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,x1,side");
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 17);
    CHECK(csv.str().find("minus") != std::string::npos);
    CHECK(csv.str().find("plus") != std::string::npos);

    const json ev = events_json(traj);
    REQUIRE(ev.at("events").size() == 1);
    CHECK(ev.at("events")[0].at("kind") == "cross-up");
    CHECK(ev.at("events")[0].contains("fn_minus"));
    CHECK(ev.at("events")[0].contains("fn_plus"));
    CHECK(ev.at("termination") == "completed");
}

TEST_CASE("repulsive demo emits two continuation records") {
    PiecewiseField f;
    f.dim = 1;
    f.f_minus = [](const Vec&) { return Vec::Constant(1, -1.0); };
    f.f_plus = [](const Vec&) { return Vec::Constant(1, 1.0); };
    f.level = [](const Vec& x) { return x[0]; };
    f.level_grad = [](const Vec&) { return Vec::Constant(1, 1.0); };
    auto traj = integrate_filippov(f, Vec::Zero(1), 0.0, 1.0);
    const json ev = events_json(traj);
    CHECK(ev.at("termination") == "repulsive-stop");
    CHECK(ev.at("continuations").size() == 2);
}

TEST_CASE("experiment reports are deterministic and schema-valid") {
    Manifest m;
    m.experiment = "filippov-demos";
    m.seed = 11;
    auto r1 = run_experiment("filippov-demos", m);
    auto r2 = run_experiment("filippov-demos", m);
    CHECK(r1.to_json().dump(2) == r2.to_json().dump(2));

    std::ifstream sf(FILIGEO_SOURCE_DIR "/docs/report.schema.json");
    REQUIRE(sf.good());
    json schema;
    sf >> schema;
    CHECK(validates(r1.to_json(), schema));
}

TEST_CASE("unknown experiment name is rejected") {
    Manifest m;
    CHECK_THROWS_AS(run_experiment("nope", m), ManifestError);
}

TEST_CASE("cli: hw integrate end-to-end") {
    const auto dir = temp_dir("hw");
    const int code =
        run_cli("integrate --metric hw --lambda 1.5 --eps 0.25 --out-dir " + dir.string());
    CHECK(code == 0);
    CHECK(fs::exists(dir / "trajectory.csv"));
    CHECK(fs::exists(dir / "events.json"));
    CHECK(fs::exists(dir / "family.json"));

    std::ifstream fam(dir / "family.json");
    json j;
    fam >> j;
    CHECK(j.at("lambda") == 1.5);
    CHECK(j.at("s0").get<double>() == doctest::Approx(1.2658694324300275).epsilon(1e-9));
}

TEST_CASE("cli: missing --lambda exits 2") {
    const auto dir = temp_dir("nolambda");
    CHECK(run_cli("integrate --metric hw --out-dir " + dir.string()) == 2);
}

TEST_CASE("cli: unknown experiment exits 2") {
    const auto dir = temp_dir("unknown");
    CHECK(run_cli("experiment nonsense --out-dir " + dir.string()) == 2);
}

TEST_CASE("cli: repulsive demo exit code and records") {
    const auto dir = temp_dir("repulsive");
    const int code = run_cli("integrate --metric demo-repulsive --out-dir " + dir.string());
    CHECK(code == 3);
    std::ifstream ev(dir / "events.json");
    json j;
    ev >> j;
    CHECK(j.at("termination") == "repulsive-stop");
    CHECK(j.at("continuations").size() == 2);
}

TEST_CASE("cli: filippov-demos experiment passes and writes a valid report") {
    const auto dir = temp_dir("demos");
    const int code = run_cli("experiment filippov-demos --out-dir " + dir.string());
    CHECK(code == 0);
    std::ifstream rf(dir / "report.json");
    REQUIRE(rf.good());
    json rep;
    rf >> rep;
    CHECK(rep.at("all_pass") == true);

    std::ifstream sf(FILIGEO_SOURCE_DIR "/docs/report.schema.json");
    json schema;
    sf >> schema;
    CHECK(validates(rep, schema));
}

TEST_CASE("cli: bubble experiment reports the reachability verdicts") {
    const auto dir = temp_dir("bubble");
    const int code = run_cli("experiment bubble --grid-h 0.03125 --out-dir " + dir.string());
    CHECK(code == 0);
    std::ifstream rf(dir / "report.json");
    REQUIRE(rf.good());
    json rep;
    rf >> rep;
    REQUIRE(rep.at("checks").size() == 1);
    const auto& a7 = rep.at("checks")[0];
    CHECK(a7.at("id") == "A7");
    CHECK(a7.at("details").at("causal") == true);
    CHECK(a7.at("details").at("timelike") == false);
    CHECK(fs::exists(dir / "reach_causal.pgm"));
    CHECK(fs::exists(dir / "maximizer.csv"));
}

TEST_CASE("cli: byte-identical reports for identical manifests") {
    const auto d1 = temp_dir("det1");
    const auto d2 = temp_dir("det2");
    REQUIRE(run_cli("experiment filippov-demos --seed 5 --out-dir " + d1.string()) == 0);
    REQUIRE(run_cli("experiment filippov-demos --seed 5 --out-dir " + d2.string()) == 0);
    // normalize the out_dir field, the single intentional difference
    auto load = [](const fs::path& p) {
        std::ifstream in(p / "report.json");
        json j;
        in >> j;
        j["manifest"]["out_dir"] = "";
        return j.dump(2);
    };
    CHECK(load(d1) == load(d2));
}
