#include "doctest.h"

#include "scbn/error.hpp"
#include "scbn/pipeline.hpp"
#include "scbn/study_io.hpp"

#include "json.hpp"

#include <sstream>

using namespace scbn;

namespace {

StudySpec spec_from(const std::string& text) {
    std::istringstream in(text);
    return parse_study_spec(in, "spec.json");
}

SimConfig config_from(const std::string& text) {
    std::istringstream in(text);
    return parse_sim_config(in, "config.json");
}

} // namespace

TEST_CASE("sim config keys override the defaults") {
    const auto cfg = config_from(R"({"n_orthologs": 300, "fold": 1.5, "noise_rate": 0.2, "seed": 9})");
    CHECK(cfg.n_orthologs == 300);
    CHECK(cfg.fold == 1.5);
    CHECK(cfg.noise_rate == 0.2);
    CHECK(cfg.seed == 9);
    CHECK(cfg.de_rate == SimConfig().de_rate);
}

TEST_CASE("sim config errors") {
    CHECK_THROWS_AS(config_from(R"({"n_orthologs": 300, "colour": 1})"), ValidationError);
    CHECK_THROWS_AS(config_from(R"({"n_orthologs": -3})"), ValidationError);
    CHECK_THROWS_AS(config_from(R"({"fold": "big"})"), ValidationError);
    CHECK_THROWS_AS(config_from("[1, 2]"), ValidationError);
    try {
        config_from("{\n  \"fold\": 1.5,\n  oops\n}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("spec") == std::string::npos);
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
}

TEST_CASE("study spec with a sweep") {
    const auto spec = spec_from(R"({
        "name": "sweep_test",
        "replicates": 4,
        "master_seed": 11,
        "cutoff": 0.05,
        "methods": ["median"],
        "grid": {"points": 200, "refine_rounds": 1},
        "base": {"n_orthologs": 500, "conserved_size": 50},
        "sweep": {"parameter": "noise_rate", "values": [0, 0.25]}
    })");
    CHECK(spec.name == "sweep_test");
    CHECK(spec.replicates == 4);
    CHECK(spec.master_seed == 11);
    CHECK(spec.cutoff_for(1) == 0.05);
    REQUIRE(spec.methods.size() == 1);
    CHECK(spec.methods[0] == Method::median);
    CHECK(spec.grid.coarse_points == 200);
    CHECK(spec.grid.refine_rounds == 1);
    REQUIRE(spec.configs.size() == 2);
    CHECK(spec.configs[1].noise_rate == 0.25);
    CHECK(spec.configs[1].n_orthologs == 500);
    CHECK(spec.labels[1] == "noise_rate=0.25");
}

TEST_CASE("study spec preset with a base override") {
    const auto spec = spec_from(R"({"preset": 2, "replicates": 3, "base": {"n_orthologs": 4000}})");
    CHECK(spec.configs.size() == study_preset(2).configs.size());
    for (const auto& cfg : spec.configs) {
        CHECK(cfg.n_orthologs == 4000);
        CHECK(cfg.fold == 1.5);
    }
    CHECK(spec.replicates == 3);
}

TEST_CASE("study spec errors") {
    CHECK_THROWS_AS(spec_from(R"({"configs": [{}], "sweep": {"parameter": "fold", "values": [2]}})"), ValidationError);
    CHECK_THROWS_AS(spec_from(R"({"replicate": 3})"), ValidationError);
    CHECK_THROWS_AS(spec_from(R"({"sweep": {"parameter": "fold"}})"), ValidationError);
    CHECK_THROWS_AS(spec_from(R"({"configs": []})"), ValidationError);
    CHECK_THROWS_AS(spec_from(R"({"preset": 9})"), DomainError);
    CHECK_THROWS_AS(spec_from(R"({"methods": ["tmm"]})"), Error);
    CHECK_THROWS_AS(spec_from("{"), ParseError);
}

TEST_CASE("study JSON lists every cell") {
    auto spec = spec_from(R"({"replicates": 1, "base": {"n_orthologs": 400, "conserved_size": 40, "n_unique_sp1": 10,
        "n_unique_sp2": 10, "n_unmapped_sp1": 10, "n_unmapped_sp2": 10}})");
    spec.grid.coarse_points = 100;
    const auto cells = run_study(spec);
    std::ostringstream out;
    write_study_json(out, spec, cells);
    const auto j = nlohmann::json::parse(out.str());
    CHECK(j["cells"].size() == 2);
    CHECK(j["cells"][0]["method"] == "scbn");
    CHECK(j["grid"]["points"] == 100);
    CHECK(j["grid"]["center"].is_null());
}

TEST_CASE("results TSV round-trips") {
    std::vector<TestResult> results(3);
    results[0] = {"a", 1e-300, 2e-300, Direction::higher_sp1, true};
    results[1] = {"b", 0.123456789012345, 0.5, Direction::none, false};
    results[2] = {"c", std::nullopt, std::nullopt, Direction::none, false};
    std::ostringstream out;
    write_results_tsv(out, results);
    std::istringstream in(out.str());
    const auto back = parse_results_tsv(in);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].gene_id == results[i].gene_id);
        CHECK(back[i].p_value == results[i].p_value);
        CHECK(back[i].q_value == results[i].q_value);
        CHECK(back[i].direction == results[i].direction);
        CHECK(back[i].de_call == results[i].de_call);
    }
    std::istringstream bad("gene_id\tp\n");
    CHECK_THROWS_AS(parse_results_tsv(bad), ParseError);
}
