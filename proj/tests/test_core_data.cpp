#include "doctest.h"

#include "scbn/core_data.hpp"
#include "scbn/error.hpp"

#include <cmath>
#include <string>
#include <vector>

using namespace scbn;

TEST_CASE("validate_table computes exact totals") {
    const auto table = validate_table({{"g1", 100, 5, 120, 2}, {"g2", 50, 0, 60, 1}, {"g3", 10, 7, 10, 7}});
    CHECK(table.size() == 3);
    CHECK(table.total_sp1() == 12);
    CHECK(table.total_sp2() == 10);
    CHECK(table.untestable_count() == 0);
    CHECK(table.find("g2") == std::optional<std::size_t>(1));
    CHECK_FALSE(table.find("G2").has_value());
}

TEST_CASE("validate_table rejects invariant violations") {
    CHECK_THROWS_WITH_AS(validate_table({{"g1", 1, 1, 1, 1}, {"g1", 2, 2, 2, 2}}), doctest::Contains("g1"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(validate_table({{"g1", 1, 1, 1, 1}, {"bad", 5, 1, 0, 1}}), doctest::Contains("bad"),
                         ValidationError);
    CHECK_THROWS_AS(validate_table({{"g1", 1, -1, 1, 1}}), ValidationError);
    CHECK_THROWS_AS(validate_table({{"g1", 1, 0, 1, 0}}), ValidationError);
    CHECK_THROWS_AS(validate_table({{"g1", 1, 3, 1, 0}}), ValidationError);
    CHECK_THROWS_AS(validate_table({}), ValidationError);
}

TEST_CASE("zero-count genes are kept and flagged untestable") {
    const auto table = validate_table({{"g1", 10, 4, 10, 0}, {"g2", 10, 0, 10, 0}, {"g3", 10, 0, 10, 9}});
    CHECK(table.size() == 3);
    CHECK(table.untestable_count() == 1);
    CHECK_FALSE(table[1].testable());
    CHECK(table.total_sp1() == 4);
    CHECK(table.total_sp2() == 9);
}

TEST_CASE("validate_table is idempotent") {
    const auto once = validate_table({{"a", 3, 1, 4, 1}, {"b", 5, 9, 2, 6}, {"c", 5, 0, 3, 0}});
    const auto twice = validate_table(once.records());
    CHECK(once == twice);
    CHECK(twice.total_sp1() == once.total_sp1());
    CHECK(twice.total_sp2() == once.total_sp2());
    CHECK(twice.untestable_count() == once.untestable_count());
}

TEST_CASE("swapped exchanges the species") {
    const auto table = validate_table({{"a", 3, 1, 4, 2}, {"b", 5, 9, 2, 6}});
    const auto s = table.swapped();
    CHECK(s.total_sp1() == table.total_sp2());
    CHECK(s.total_sp2() == table.total_sp1());
    CHECK(s[1] == GeneRecord{"b", 2, 6, 5, 9});
    CHECK(s.swapped() == table);
}

TEST_CASE("ConservedSet resolves ids and rejects unknown or empty sets") {
    const auto table = validate_table({{"a", 3, 1, 4, 2}, {"b", 5, 9, 2, 6}, {"c", 1, 1, 1, 1}});
    const std::vector<std::string> ids{"c", "a", "c"};
    const auto set = ConservedSet::from_ids(table, ids);
    CHECK(set.size() == 2);
    CHECK(set.indices() == std::vector<std::size_t>{2, 0});

    const std::vector<std::string> unknown{"a", "zzz"};
    CHECK_THROWS_WITH_AS(ConservedSet::from_ids(table, unknown), doctest::Contains("zzz"), ValidationError);
    CHECK_THROWS_AS(ConservedSet::from_ids(table, std::vector<std::string>{}), ValidationError);
    CHECK_THROWS_AS(ConservedSet::from_indices(table, {5}), ValidationError);
}

TEST_CASE("ScalingFactor") {
    CHECK(ScalingFactor(2.5).value() == 2.5);
    CHECK(ScalingFactor(4).inverse().value() == 0.25);
    CHECK_THROWS_AS(ScalingFactor(std::nan("")), DomainError);
}
