#ifndef SCBN_CORE_DATA_HPP
#define SCBN_CORE_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

/**
 * @file core_data.hpp
 *
 * @brief Domain types for a one-sample-per-species ortholog count table.
 */

namespace scbn {

/**
 * @brief One one-to-one orthologous gene with its length and read count in each species.
 */
struct GeneRecord {
    std::string gene_id;
    std::int64_t length_sp1 = 1;
    std::int64_t count_sp1 = 0;
    std::int64_t length_sp2 = 1;
    std::int64_t count_sp2 = 0;

    /** Conditional total used by the exact test. */
    std::int64_t total_count() const { return count_sp1 + count_sp2; }

    /** Genes with no reads in either species carry no information and are never tested. */
    bool testable() const { return total_count() > 0; }

    bool operator==(const GeneRecord&) const = default;
};

/**
 * @brief Validated, immutable set of orthologs plus exact per-species read totals.
 *
 * Construct through `validate_table()`.
 * Gene identifiers are compared byte-for-byte, so "ENSG1" and "ensg1" are distinct genes.
 */
class OrthologTable {
public:
    const std::vector<GeneRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    const GeneRecord& operator[](std::size_t i) const { return records_[i]; }

    /** Sum of `count_sp1`, i.e. the species-1 depth over orthologs. */
    std::int64_t total_sp1() const { return total_sp1_; }
    /** Sum of `count_sp2`. */
    std::int64_t total_sp2() const { return total_sp2_; }

    /** Number of records with `count_sp1 + count_sp2 == 0`. */
    std::size_t untestable_count() const { return untestable_; }

    std::optional<std::size_t> find(std::string_view gene_id) const;

    /** The same table with species 1 and species 2 exchanged. */
    OrthologTable swapped() const;

    bool operator==(const OrthologTable& other) const { return records_ == other.records_; }

private:
    friend OrthologTable validate_table(std::vector<GeneRecord> raw);
    OrthologTable() = default;

    std::vector<GeneRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
    std::int64_t total_sp1_ = 0;
    std::int64_t total_sp2_ = 0;
    std::size_t untestable_ = 0;
};

/**
 * Check every record and compute the per-species totals.
 *
 * Throws `ValidationError` on a duplicate `gene_id`, a non-positive length, a negative count,
 * or when either species has zero total reads.
 * Records with zero counts in both species are kept (they contribute nothing to the totals).
 */
OrthologTable validate_table(std::vector<GeneRecord> raw);

/**
 * @brief Subset of a table's genes presumed to be non-differentially expressed.
 *
 * Stores indices into the companion `OrthologTable`, in the order the ids were supplied,
 * with duplicates removed.
 */
class ConservedSet {
public:
    /**
     * Resolve `gene_ids` against `table`.
     * Throws `ValidationError` if any id is missing from the table or if the list is empty.
     */
    static ConservedSet from_ids(const OrthologTable& table, std::span<const std::string> gene_ids);

    /** Every index must be below `table.size()`. */
    static ConservedSet from_indices(const OrthologTable& table, std::vector<std::size_t> indices);

    const std::vector<std::size_t>& indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }

private:
    explicit ConservedSet(std::vector<std::size_t> idx) : indices_(std::move(idx)) {}
    std::vector<std::size_t> indices_;
};

/**
 * @brief Ratio of total expression output between species 2 and species 1.
 */
class ScalingFactor {
public:
    /** Throws `DomainError` unless `c` is positive and finite. */
    explicit ScalingFactor(double c);

    double value() const { return value_; }
    ScalingFactor inverse() const { return ScalingFactor(1.0 / value_); }

    bool operator==(const ScalingFactor&) const = default;

private:
    double value_;
};

} // namespace scbn

#endif
