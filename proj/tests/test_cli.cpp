#include "ncpb/runner.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ncpb;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = NCPB_FIXTURES;

std::string fixture(const std::string& name) { return kFixtures + "/" + name; }

std::string error_of(const std::string& text) {
    try {
        parse_scenario_text(text);
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

const std::string kMinimal = R"({"algebra": {"blocks": [1]}, "hyperstate": {"kraus": [{"matrix": [[[1, 0]]], "weight": 1}]}})";

}  // namespace

TEST_CASE("minimal scenario is the trivial algebra with the identity hyperstate") {
    Scenario s = parse_scenario_text(kMinimal);
    REQUIRE(s.algebra);
    CHECK(s.algebra->blocks == std::vector<Index>{1});
    Materialized m = materialize(s);
    REQUIRE(m.phi);
    CHECK(m.m->dim() == 1);
    CHECK(std::abs(m.phi->density()(0, 0) - 1.0) < 1e-15);
}

TEST_CASE("pauli fixture") {
    Scenario s = parse_scenario(fixture("pauli_m2.json"));
    Materialized m = materialize(s);
    REQUIRE(m.phi);
    CHECK(m.m->algebra().blocks() == std::vector<Index>{2});
    const auto& fam = m.phi->source_family();
    REQUIRE(fam.size() == 3);
    for (const auto& [x, w] : fam) CHECK(std::abs(w - 1.0 / 3) < 1e-15);
    CHECK((fam[0].first - Mat::Identity(2, 2)).norm() < 1e-15);
    CHECK((fam[1].first - pauli_x()).norm() < 1e-15);
    CHECK((fam[2].first - pauli_z()).norm() < 1e-15);
}

TEST_CASE("validation errors name the field") {
    std::string neg = R"({"algebra": {"blocks": [1]}, "hyperstate": {"kraus": [{"matrix": [[[1, 0]]], "weight": -1}]}})";
    std::string e = error_of(neg);
    CHECK(e.find("hyperstate.kraus[0].weight") != std::string::npos);
    CHECK_THROWS_AS(parse_scenario_text(neg), ValidationError);

    std::string unknown = R"({"algebra": {"blocks": [1], "colour": 3}, "hyperstate": {"kraus": [{"matrix": [[[1, 0]]], "weight": 1}]}})";
    e = error_of(unknown);
    CHECK(e.find("colour") != std::string::npos);
    CHECK(e.find("algebra") != std::string::npos);

    std::string top = R"({"algebra": {"blocks": [1]}, "extra": 1})";
    CHECK(error_of(top).find("extra") != std::string::npos);

    std::string broken = "{\n  \"algebra\": {\"blocks\": [1]},\n  \"hyperstate\": \n}";
    e = error_of(broken);
    CHECK(e.find(":4:") != std::string::npos);

    std::string bad_matrix = R"({"algebra": {"blocks": [2]}, "hyperstate": {"kraus": [{"matrix": [[[1, 0]]], "weight": 1}]}})";
    // shapes are checked against the algebra when the scenario is materialized
    std::string shape;
    try {
        materialize(parse_scenario_text(bad_matrix));
    } catch (const ValidationError& err) {
        shape = err.what();
    }
    CHECK(shape.find("hyperstate.kraus[0].matrix") != std::string::npos);

    CHECK_THROWS(parse_scenario(fixture("does_not_exist.json")));
}

TEST_CASE("scenarios round-trip through emit and parse") {
    int count = 0;
    for (const auto& entry : fs::directory_iterator(kFixtures)) {
        if (entry.path().extension() != ".json") continue;
        Scenario s = parse_scenario(entry.path().string());
        Scenario back = scenario_from_json(emit_scenario(s));
        CHECK_MESSAGE(back == s, entry.path().filename().string());
        CHECK(scenario_hash(back) == scenario_hash(s));
        ++count;
    }
    CHECK(count >= 10);
    for (const char* kind : {"random-regular", "group-walk", "non-generating-control"}) {
        Scenario s = generate_scenario(kind, 7).scenario;
        CHECK(scenario_from_json(emit_scenario(s)) == s);
        CHECK(parse_scenario_text(emit_scenario(s).dump()) == s);
    }
}

TEST_CASE("generators") {
    Generated a = generate_scenario("random-regular", 7);
    Generated b = generate_scenario("random-regular", 7);
    CHECK(a.scenario == b.scenario);
    CHECK_FALSE(generate_scenario("random-regular", 8).scenario == a.scenario);
    Classification c = classify(*materialize(a.scenario).phi);
    CHECK(c.regular);
    CHECK(c.symmetric);

    Generated z3 = generate_scenario("group-walk", 7, "Z3");
    CHECK_FALSE(z3.warnings.empty());  // the default symmetric measure misses the identity
    Materialized mz = materialize(z3.scenario);
    CHECK(mz.m->algebra().is_abelian());
    CHECK(fixed_space(poisson_superop(*mz.phi)).dim() == 3);

    Generated lazy = generate_scenario("group-walk", 7, "Z3", std::vector<double>{0, 1, 0});
    CHECK(lazy.warnings.empty());  // not symmetric, so full support is not asked for

    Generated s3 = generate_scenario("group-walk", 7, "S3");
    CHECK(materialize(s3.scenario).m->dim() == 6);

    Generated ng = generate_scenario("non-generating-control", 7);
    Materialized mn = materialize(ng.scenario);
    const auto& fam = mn.phi->source_family();
    REQUIRE(fam.size() == 2);
    CHECK((fam[0].first - Mat::Identity(2, 2)).norm() < 1e-15);
    CHECK((fam[1].first - pauli_x()).norm() < 1e-15);
    CHECK(std::abs(fam[1].second - 0.5) < 1e-15);

    CHECK_THROWS_AS(generate_scenario("nonsense", 1), ValidationError);
}

TEST_CASE("run: verdicts and exit codes") {
    RunFlags flags;
    Report ok = run_file("boundary", fixture("pauli_m2.json"), flags);
    CHECK(ok.exit_code() == 0);
    CHECK_FALSE(ok.input_error);
    Json j = report_json(ok);
    CHECK(j["schema"] == "ncpb-report/1");
    CHECK(j["verdict"] == "pass");
    CHECK(j["analyses"][0]["results"]["boundary_blocks"] == Json::array({2}));

    Report missing = run_file("classify", fixture("does_not_exist.json"), flags);
    CHECK(missing.exit_code() == 3);
    REQUIRE(missing.input_error);

    RunFlags perturbed;
    perturbed.perturb = 1e-3;
    Report p = run_file("classify", fixture("pauli_m2.json"), perturbed);
    CHECK(p.exit_code() == 1);

    Report dl = run_file("dilate", fixture("trace_channel.json"), [] {
        RunFlags f;
        f.depth = 2;
        return f;
    }());
    CHECK(dl.exit_code() == 0);

    CHECK(exit_code({ok, p}) == 1);
    CHECK(exit_code({ok, missing, p}) == 3);
    CHECK(exit_code({ok}) == 0);
}

TEST_CASE("report formats") {
    Report r = run_file("entropy", fixture("c2_projections.json"), RunFlags{});
    std::string csv = reports_csv({r});
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header.find("n,H_n,H_n/n,h_est,h_furst,gap_bound") != std::string::npos);
    CHECK(reports_text({r}).find("c2_projections") != std::string::npos);

    Json agg = reports_json(verify_all(fixture("pauli_m2.json"), RunFlags{}));
    CHECK(agg["schema"] == "ncpb-report/1");

    fs::path tmp = fs::temp_directory_path() / "ncpb_write_test.json";
    write_atomically(tmp.string(), "{}\n");
    std::ifstream f(tmp);
    std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(content == "{}\n");
    fs::remove(tmp);
}
