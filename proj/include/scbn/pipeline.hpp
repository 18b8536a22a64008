#ifndef SCBN_PIPELINE_HPP
#define SCBN_PIPELINE_HPP

#include "core_data.hpp"
#include "normalization.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

/**
 * @file pipeline.hpp
 *
 * @brief File formats, multiple-testing adjustment, DE calling and the end-to-end run.
 *
 * Count tables are TSV with the header `gene_id  length_sp1  count_sp1  length_sp2  count_sp2`
 * (tab separated, integers only). Conserved and evaluation lists hold one gene id per line;
 * anything after `#` is ignored.
 */

namespace scbn {

enum class Method { scbn, median };

std::string_view to_string(Method m);
/** Throws `DomainError` for anything other than "scbn" or "median". */
Method parse_method(std::string_view name);

enum class Direction { none, higher_sp1, higher_sp2 };

std::string_view to_string(Direction d);

/**
 * @brief Per-gene outcome of a DE run. Untestable genes have no p- or q-value.
 */
struct TestResult {
    std::string gene_id;
    std::optional<double> p_value;
    std::optional<double> q_value;
    Direction direction = Direction::none;
    bool de_call = false;
};

/*** Input ***/

OrthologTable parse_counts_tsv(std::istream& in, const std::string& source = "<counts>");
OrthologTable load_counts_tsv(const std::filesystem::path& path);

/** Gene ids from a one-per-line list, in file order, comments and blank lines skipped. */
std::vector<std::string> parse_id_list(std::istream& in);
std::vector<std::string> load_id_list(const std::filesystem::path& path);

struct ConservedLoad {
    ConservedSet set;
    /** Listed ids absent from the table; they are dropped rather than treated as errors. */
    std::vector<std::string> unknown_ids;
};

/** Throws `ValidationError` when no listed id is in the table. */
ConservedLoad resolve_conserved(std::span<const std::string> ids, const OrthologTable& table);
ConservedLoad load_conserved_list(const std::filesystem::path& path, const OrthologTable& table);

/*** Testing ***/

/**
 * Benjamini-Hochberg step-up adjustment, returned in input order.
 * Throws `DomainError` if any p-value lies outside `(0, 1]`.
 */
std::vector<double> bh_adjust(std::span<const double> pvalues);

/** As above, with untestable entries passed through and excluded from the ranking. */
std::vector<std::optional<double>> bh_adjust(std::span<const std::optional<double>> pvalues);

/**
 * Exact test of every gene at scaling factor `c`, BH q-values over testable genes, and calls at
 * `p < cutoff`. The direction of a called gene compares `count_sp1` with its null mean `n * p0`.
 */
std::vector<TestResult> call_de(const OrthologTable& table, ScalingFactor c, double cutoff);

/**
 * @brief Scaling factor from either estimator, with the estimator-specific diagnostics.
 */
struct FactorEstimate {
    Method method = Method::scbn;
    ScalingFactor factor{1.0};
    std::optional<ScbnFit> scbn;
    std::optional<MedianFit> median;
};

FactorEstimate estimate_factor(const OrthologTable& table, const ConservedSet& conserved, Method method,
                               const GridConfig& grid = GridConfig());

/*** End-to-end run ***/

struct Tally {
    std::size_t total = 0;
    std::size_t higher_sp1 = 0;
    std::size_t higher_sp2 = 0;
};

Tally tally_calls(std::span<const TestResult> results);

struct RunConfig {
    Method method = Method::scbn;
    /** Grid settings; `grid.alpha` is the level of the conserved-gene objective. */
    GridConfig grid;
    /** DE calls are made at `p < cutoff`. */
    double cutoff = 1e-6;
    std::filesystem::path counts_path;
    std::filesystem::path conserved_path;
    /** When set, the report is written to `<prefix>.json` and `<prefix>.tsv`. */
    std::optional<std::filesystem::path> output_prefix;
    /** Optional gene list for a restricted tally (e.g. top conserved genes assumed non-DE). */
    std::optional<std::filesystem::path> eval_list_path;

    /** Throws `DomainError` on an invalid cutoff or grid. */
    void validate() const;
};

struct Report {
    FactorEstimate estimate;
    double alpha = 0.05;
    double cutoff = 1e-6;
    std::size_t genes = 0;
    std::size_t testable = 0;
    std::size_t conserved_size = 0;
    std::size_t conserved_unknown = 0;
    Tally all;
    /** Present when an evaluation list was supplied. */
    std::optional<Tally> eval;
    std::size_t eval_size = 0;
    std::vector<TestResult> results;
};

/**
 * Normalize, test and call an in-memory table. `eval_ids`, when given, restricts a second tally.
 */
Report analyze(const OrthologTable& table, const ConservedSet& conserved, Method method, const GridConfig& grid,
               double cutoff, std::optional<std::span<const std::string>> eval_ids = std::nullopt);

/** `analyze()` on files named by `config`, writing the report files when an output prefix is set. */
Report run_pipeline(const RunConfig& config);

/*** Output ***/

/** Header `gene_id  p_value  q_value  direction  de_call`; untestable genes print `NA`. */
void write_results_tsv(std::ostream& out, std::span<const TestResult> results);
/** Reads the per-gene TSV written by `write_results_tsv`. */
std::vector<TestResult> parse_results_tsv(std::istream& in, const std::string& source = "<results>");
void write_report_json(std::ostream& out, const Report& report);
void write_counts_tsv(std::ostream& out, const OrthologTable& table);

/** Shortest representation that round-trips to the same double. */
std::string format_roundtrip(double x);
/** Six significant digits. */
std::string format_sig6(double x);
/** `x` rounded to six significant digits (for JSON output). */
double round_sig6(double x);

} // namespace scbn

#endif
