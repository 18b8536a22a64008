#include "doctest.h"

#include "scbn/error.hpp"
#include "scbn/exact_test.hpp"
#include "scbn/pipeline.hpp"
#include "scbn/simulation.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

using namespace scbn;
namespace fs = std::filesystem;

namespace {

const char* kHeader = "gene_id\tlength_sp1\tcount_sp1\tlength_sp2\tcount_sp2\n";

OrthologTable parse(const std::string& body) {
    std::istringstream in(body);
    return parse_counts_tsv(in, "counts.tsv");
}

// Brute-force step-up: q_i = min over all j with p_j >= p_i of p_j * m / rank_j, where rank_j
// counts entries <= p_j.
std::vector<double> bh_oracle(const std::vector<double>& p) {
    const auto m = static_cast<double>(p.size());
    std::vector<double> q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        double best = 1.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (p[j] < p[i]) {
                continue;
            }
            const auto rank = static_cast<double>(std::count_if(p.begin(), p.end(), [&](double v) { return v <= p[j]; }));
            best = std::min(best, p[j] * m / rank);
        }
        q[i] = best;
    }
    return q;
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("scbn_test_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

SimConfig small_config(std::uint64_t seed) {
    auto cfg = SimConfig::study2();
    cfg.n_orthologs = 2000;
    cfg.n_unique_sp1 = 100;
    cfg.n_unique_sp2 = 200;
    cfg.n_unmapped_sp1 = 200;
    cfg.n_unmapped_sp2 = 400;
    cfg.conserved_size = 200;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("parse_counts_tsv reads a well-formed file") {
    const auto table = parse(std::string(kHeader) + "a\t100\t5\t120\t7\nb\t50\t0\t60\t1\r\n\nc\t10\t7\t10\t0\n");
    REQUIRE(table.size() == 3);
    CHECK(table[0] == GeneRecord{"a", 100, 5, 120, 7});
    CHECK(table[1] == GeneRecord{"b", 50, 0, 60, 1});
    CHECK(table.total_sp1() == 12);

    std::ostringstream out;
    write_counts_tsv(out, table);
    CHECK(parse(out.str()) == table);
}

TEST_CASE("parse_counts_tsv reports the offending line") {
    CHECK_THROWS_WITH_AS(parse(std::string(kHeader) + "a\t100\t5\t120\t7\nb\t50\t3.5\t60\t1\n"),
                         doctest::Contains("counts.tsv:3"), ParseError);
    try {
        parse(std::string(kHeader) + "a\t100\t5\t120\t7\nb\t50\t3.5\t60\t1\n");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse("gene\tlen\n"), ParseError);
    CHECK_THROWS_WITH_AS(parse(std::string(kHeader) + "a\t1\t1\t1\n"), doctest::Contains(":2"), ParseError);
    CHECK_THROWS_WITH_AS(parse(std::string(kHeader) + "a\t0\t1\t1\t1\n"), doctest::Contains(":2"), ParseError);
    CHECK_THROWS_WITH_AS(parse(std::string(kHeader) + "a\t1\t-1\t1\t1\n"), doctest::Contains(":2"), ParseError);
    CHECK_THROWS_WITH_AS(parse(std::string(kHeader) + "a\t1\t1\t1\t1\na\t2\t2\t2\t2\n"), doctest::Contains(":3"),
                         ParseError);
    CHECK_THROWS_AS(parse(std::string(kHeader) + "a\t1\t1x\t1\t1\n"), ParseError);
    CHECK_THROWS_AS(parse(kHeader), Error);
}

TEST_CASE("conserved lists") {
    std::string body = kHeader;
    std::vector<std::string> ids;
    for (int i = 0; i < 200; ++i) {
        body += "g" + std::to_string(i) + "\t100\t" + std::to_string(i % 7) + "\t100\t3\n";
        if (i < 143) {
            ids.push_back("g" + std::to_string(i));
        }
    }
    const auto table = parse(body);
    CHECK(resolve_conserved(ids, table).set.size() == 143);

    std::istringstream list("# header comment\ng1\n  g2  \n\ng3 # trailing\nnope1\ng4\ng5\ng6\ng7\nnope2\ng8\n");
    const auto parsed = parse_id_list(list);
    CHECK(parsed.size() == 10);
    const auto load = resolve_conserved(parsed, table);
    CHECK(load.set.size() == 8);
    CHECK(load.unknown_ids == std::vector<std::string>{"nope1", "nope2"});

    const std::vector<std::string> none{"x", "y"};
    CHECK_THROWS_AS(resolve_conserved(none, table), ValidationError);
}

TEST_CASE("bh_adjust examples") {
    CHECK(bh_adjust(std::vector<double>{0.01, 0.02, 0.03, 0.04}) == std::vector<double>{0.04, 0.04, 0.04, 0.04});
    CHECK(bh_adjust(std::vector<double>{0.3, 0.3, 0.3}) == std::vector<double>{0.3, 0.3, 0.3});
    CHECK(bh_adjust(std::vector<double>{0.2}) == std::vector<double>{0.2});
    CHECK(bh_adjust(std::vector<double>{}).empty());
    CHECK_THROWS_AS(bh_adjust(std::vector<double>{0.1, 0.0}), DomainError);
    CHECK_THROWS_AS(bh_adjust(std::vector<double>{1.5}), DomainError);
    CHECK_THROWS_AS(bh_adjust(std::vector<double>{std::nan("")}), DomainError);

    const std::vector<std::optional<double>> mixed{0.04, std::nullopt, 0.01, std::nullopt};
    const auto q = bh_adjust(std::span<const std::optional<double>>(mixed));
    CHECK(*q[0] == 0.04);
    CHECK_FALSE(q[1].has_value());
    CHECK(*q[2] == 0.02);
    CHECK_FALSE(q[3].has_value());
}

TEST_CASE("bh_adjust matches a brute-force step-up and is monotone") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
        std::vector<double> p(m);
        for (auto& v : p) {
            // Mix of ties and tiny values.
            v = std::bernoulli_distribution(0.2)(rng) ? 0.05
                                                      : std::pow(std::uniform_real_distribution<double>(0, 1)(rng), 4);
            v = std::max(v, 1e-300);
        }
        const auto q = bh_adjust(p);
        const auto expected = bh_oracle(p);
        for (std::size_t i = 0; i < m; ++i) {
            CHECK(q[i] == doctest::Approx(expected[i]).epsilon(1e-12));
            CHECK(q[i] >= p[i]);
            CHECK(q[i] <= 1.0);
            for (std::size_t j = 0; j < m; ++j) {
                if (p[i] <= p[j]) {
                    CHECK(q[i] <= q[j]);
                }
            }
        }
    }
}

TEST_CASE("call_de examples") {
    const auto table = validate_table({
        {"balanced", 100, 3, 100, 3},
        {"skewed", 100, 50, 100, 0},
        {"empty", 100, 0, 100, 0},
        {"other", 100, 0, 100, 50},
    });
    REQUIRE(table.total_sp1() == table.total_sp2());
    const auto results = call_de(table, ScalingFactor(1), 1e-6);
    REQUIRE(results.size() == 4);

    CHECK(*results[0].p_value == 1.0);
    CHECK_FALSE(results[0].de_call);
    CHECK(results[0].direction == Direction::none);

    CHECK(*results[1].p_value == doctest::Approx(std::ldexp(1.0, -49)).epsilon(1e-12));
    CHECK(results[1].de_call);
    CHECK(results[1].direction == Direction::higher_sp1);

    CHECK_FALSE(results[2].p_value.has_value());
    CHECK_FALSE(results[2].q_value.has_value());
    CHECK_FALSE(results[2].de_call);

    CHECK(results[3].direction == Direction::higher_sp2);
    for (const auto& r : results) {
        if (r.p_value) {
            CHECK(*r.q_value >= *r.p_value);
            CHECK(*r.q_value <= 1.0);
        }
    }

    std::ostringstream out;
    write_results_tsv(out, results);
    CHECK(out.str().find("empty\tNA\tNA\tnone\tfalse\n") != std::string::npos);
    CHECK(out.str().find("balanced\t1\t1\tnone\tfalse\n") != std::string::npos);
}

TEST_CASE("call_de directions are anti-symmetric under a species swap") {
    const auto data = generate_dataset(small_config(31));
    const ScalingFactor c(1.37);
    const auto a = call_de(data.table, c, 1e-3);
    const auto b = call_de(data.table.swapped(), c.inverse(), 1e-3);
    REQUIRE(a.size() == b.size());
    std::size_t called = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].p_value.has_value() == b[i].p_value.has_value());
        if (!a[i].p_value) {
            continue;
        }
        CHECK(std::abs(*a[i].p_value - *b[i].p_value) <= 1e-12);
        if (a[i].de_call && b[i].de_call) {
            ++called;
            const auto flipped = a[i].direction == Direction::higher_sp1 ? Direction::higher_sp2 : Direction::higher_sp1;
            CHECK(b[i].direction == flipped);
        }
    }
    CHECK(called > 50);
}

TEST_CASE("tallies add up") {
    const auto data = generate_dataset(small_config(4));
    const auto conserved = data.reported_conserved;
    for (auto method : {Method::scbn, Method::median}) {
        const auto report = analyze(data.table, conserved, method, GridConfig(), 1e-3);
        CHECK(report.all.total == report.all.higher_sp1 + report.all.higher_sp2);
        CHECK(report.testable == data.table.size() - data.table.untestable_count());
        CHECK_FALSE(report.eval.has_value());
    }
}

TEST_CASE("report false discoveries agree with evaluate_run") {
    const auto data = generate_dataset(small_config(12));
    const auto report = analyze(data.table, data.reported_conserved, Method::scbn, GridConfig(), 0.01);
    auto calls = std::make_unique<bool[]>(report.results.size());
    std::vector<std::string> null_ids;
    for (std::size_t i = 0; i < report.results.size(); ++i) {
        calls[i] = report.results[i].de_call;
        if (data.truth[i] == TruthLabel::null) {
            null_ids.push_back(data.table[i].gene_id);
        }
    }
    const auto m = evaluate_run(std::span<const bool>(calls.get(), report.results.size()), data.truth);
    const auto restricted =
        analyze(data.table, data.reported_conserved, Method::scbn, GridConfig(), 0.01, std::span<const std::string>(null_ids));
    REQUIRE(restricted.eval.has_value());
    CHECK(restricted.eval_size == null_ids.size());
    CHECK(restricted.eval->total == m.false_discoveries);
    CHECK(restricted.estimate.factor.value() == report.estimate.factor.value());
}

TEST_CASE("run_pipeline writes byte-identical reports on repeated runs") {
    TempDir dir;
    const auto data = generate_dataset(small_config(8));
    {
        std::ofstream counts(dir.path / "counts.tsv", std::ios::binary);
        write_counts_tsv(counts, data.table);
        std::ofstream conserved(dir.path / "conserved.txt", std::ios::binary);
        conserved << "# reported conserved genes\n";
        for (auto i : data.reported_conserved.indices()) {
            conserved << data.table[i].gene_id << '\n';
        }
        conserved << "not_in_table\n";
        std::ofstream eval(dir.path / "eval.txt", std::ios::binary);
        eval << data.table[0].gene_id << '\n' << data.table[1].gene_id << '\n';
    }

    RunConfig cfg;
    cfg.counts_path = dir.path / "counts.tsv";
    cfg.conserved_path = dir.path / "conserved.txt";
    cfg.eval_list_path = dir.path / "eval.txt";
    cfg.cutoff = 1e-4;
    cfg.output_prefix = dir.path / "first";
    const auto first = run_pipeline(cfg);
    cfg.output_prefix = dir.path / "second";
    run_pipeline(cfg);

    CHECK(slurp(dir.path / "first.json") == slurp(dir.path / "second.json"));
    CHECK(slurp(dir.path / "first.tsv") == slurp(dir.path / "second.tsv"));
    CHECK(first.conserved_unknown == 1);
    CHECK(first.conserved_size == data.reported_conserved.size());
    CHECK(first.eval_size == 2);

    const auto json = nlohmann::json::parse(slurp(dir.path / "first.json"));
    CHECK(json["method"] == "scbn");
    CHECK(json["de"]["total"].get<std::size_t>() == first.all.total);
    CHECK(json["config"]["cutoff"].get<double>() == 1e-4);
    CHECK(json["config"]["conserved_unknown"].get<int>() == 1);
    CHECK(json["eval"]["size"].get<int>() == 2);
    CHECK(json["objective"]["tested"].get<std::size_t>() > 0);

    // The per-gene TSV keeps full precision p-values.
    std::istringstream tsv(slurp(dir.path / "first.tsv"));
    std::string line;
    std::getline(tsv, line);
    CHECK(line == "gene_id\tp_value\tq_value\tdirection\tde_call");
    std::getline(tsv, line);
    const auto p_text = line.substr(line.find('\t') + 1, line.find('\t', line.find('\t') + 1) - line.find('\t') - 1);
    CHECK(std::stod(p_text) == *first.results[0].p_value);

    RunConfig bad = cfg;
    bad.cutoff = 0;
    CHECK_THROWS_AS(run_pipeline(bad), DomainError);
    bad = cfg;
    bad.counts_path = dir.path / "missing.tsv";
    CHECK_THROWS_AS(run_pipeline(bad), Error);
}

TEST_CASE("scbn makes no more false discoveries than median under a noisy conserved set") {
    double fd_scbn = 0, fd_median = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto cfg = small_config(1000 + seed);
        cfg.noise_rate = 0.4;
        const auto data = generate_dataset(cfg);
        for (auto method : {Method::scbn, Method::median}) {
            const auto report = analyze(data.table, data.reported_conserved, method, GridConfig(), 0.01);
            auto calls = std::make_unique<bool[]>(report.results.size());
            for (std::size_t i = 0; i < report.results.size(); ++i) {
                calls[i] = report.results[i].de_call;
            }
            const auto m = evaluate_run(std::span<const bool>(calls.get(), report.results.size()), data.truth);
            (method == Method::scbn ? fd_scbn : fd_median) += static_cast<double>(m.false_discoveries);
        }
    }
    MESSAGE("mean false discoveries: scbn " << fd_scbn / 20 << ", median " << fd_median / 20);
    CHECK(fd_scbn <= fd_median);
}

TEST_CASE("number formatting") {
    CHECK(format_roundtrip(0.1) == "0.1");
    CHECK(format_roundtrip(std::ldexp(1.0, -49)) == "1.7763568394002505e-15");
    CHECK(std::stod(format_roundtrip(1.0 / 3)) == 1.0 / 3);
    CHECK(format_sig6(1.0 / 3) == "0.333333");
    CHECK(format_sig6(1234567.0) == "1.23457e+06");
    CHECK(round_sig6(1.0 / 3) == 0.333333);
    CHECK(parse_method("median") == Method::median);
    CHECK_THROWS_AS(parse_method("tmm"), DomainError);
}
