#ifndef SCBN_SIMULATION_HPP
#define SCBN_SIMULATION_HPP

#include "core_data.hpp"
#include "normalization.hpp"
#include "pipeline.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

/**
 * @file simulation.hpp
 *
 * @brief Two-species Poisson count generator, evaluation metrics and the study runner.
 */

namespace scbn {

/**
 * @brief Distribution of per-gene expression rates.
 *
 * With a non-empty `empirical` vector, rates are drawn from it with replacement. Otherwise they are
 * log-normal with the given log-mean and log-sd.
 */
struct RateSource {
    std::vector<double> empirical;
    double log_mean = 0.0;
    double log_sd = 1.5;

    /** Rates proportional to `count_sp1 / length_sp1` for every gene with reads in species 1. */
    static RateSource from_table(const OrthologTable& reference);

    std::string describe() const;
};

/** Per-species gene lengths drawn uniformly from `[min, max]`. */
struct LengthModel {
    std::int64_t min = 200;
    std::int64_t max = 10200;
};

struct SimConfig {
    std::size_t n_orthologs = 10000;
    double de_rate = 0.10;
    double fold = 1.2;
    double up_rate_sp2 = 0.90;
    std::size_t n_unique_sp1 = 1000;
    std::size_t n_unique_sp2 = 2000;
    std::size_t n_unmapped_sp1 = 2000;
    std::size_t n_unmapped_sp2 = 4000;
    std::size_t conserved_size = 1000;
    double noise_rate = 0.0;
    double depth_sp1 = 1e7;
    double depth_sp2 = 1e7;
    RateSource rate_source;
    LengthModel lengths;
    std::uint64_t seed = 1;

    /** Throws `DomainError` on out-of-range settings. */
    void validate() const;

    /** 10% DE at 1.2-fold, 90% of them up in species 2; 1000/2000 unique and 2000/4000 unmapped genes. */
    static SimConfig study1();
    /** Study 1 with 1.5-fold DE genes and 1000 conserved genes. */
    static SimConfig study2();
    /** 20% DE at 8-fold, 70% up in species 2. */
    static SimConfig study3();
    /** Study 1 with 40% DE genes. */
    static SimConfig study4();
    /** Study 4 with 1.5-fold DE genes and 20% noise in the conserved set. */
    static SimConfig study7();
};

enum class TruthLabel { null, de_up_sp1, de_up_sp2, unique_sp1, unique_sp2 };

std::string_view to_string(TruthLabel label);
/** Throws `DomainError` for an unknown label. */
TruthLabel parse_truth_label(std::string_view name);

inline bool is_de(TruthLabel l) {
    return l == TruthLabel::de_up_sp1 || l == TruthLabel::de_up_sp2;
}

struct SimulatedDataset {
    /** Shared orthologs first, then unique genes of species 1, then of species 2. */
    OrthologTable table;
    /** One label per table record. */
    std::vector<TruthLabel> truth;
    ConservedSet reported_conserved;
    /** Ratio of total expression output over the table genes, species 2 over species 1. */
    ScalingFactor true_c;
    /** Reads that went to genes present in only one species (not in the table). */
    std::int64_t unmapped_reads_sp1 = 0;
    std::int64_t unmapped_reads_sp2 = 0;
    std::string rate_source;
};

/**
 * Draw a labelled two-species dataset. Expected counts follow `mu * L * depth / S` per species,
 * where `S` sums `mu * L` over every gene of that species including the unmapped ones.
 * The same configuration always yields the same dataset.
 */
SimulatedDataset generate_dataset(const SimConfig& config);

/**
 * @brief Classification metrics over the shared orthologs. Unique genes are not scored.
 *
 * Undefined ratios (no predictions, or no true DE genes) are `std::nullopt`.
 */
struct Metrics {
    std::size_t false_discoveries = 0;
    std::size_t true_positives = 0;
    std::size_t false_negatives = 0;
    std::optional<double> precision;
    std::optional<double> sensitivity;
    /** Zero whenever precision or sensitivity is zero or undefined. */
    double f_score = 0;
};

/** `calls` and `truth` are aligned by table index; throws `ValidationError` on a size mismatch. */
Metrics evaluate_run(std::span<const bool> calls, std::span<const TruthLabel> truth);

struct MaPoint {
    std::size_t index;
    double a;
    double m;
};

struct MaPlot {
    std::vector<MaPoint> points;
    /** `log2(c)`. */
    double factor_line = 0;
    std::size_t skipped = 0;
};

/**
 * With `e_t = count_t / (length_t * total_t)`: `M = log2(e1 / e2)`, `A = log2(e1 * e2) / 2`.
 * Genes with a zero count in either species are skipped.
 */
MaPlot ma_plot_points(const OrthologTable& table, ScalingFactor c);

/*** Studies ***/

struct StudySpec {
    std::string name = "study";
    std::vector<SimConfig> configs;
    /** Optional label of each config, e.g. the swept parameter value. */
    std::vector<std::string> labels;
    std::vector<Method> methods{Method::scbn, Method::median};
    int replicates = 100;
    std::uint64_t master_seed = 1;
    double cutoff = 0.01;
    /** Per-config DE cutoffs; when non-empty it must match `configs` and overrides `cutoff`. */
    std::vector<double> cutoffs;
    GridConfig grid;

    double cutoff_for(std::size_t config_index) const {
        return cutoffs.empty() ? cutoff : cutoffs.at(config_index);
    }
};

/**
 * The sweep of simulation study `number` (1 to 7): conserved-set size, noise rate, DE cutoff or
 * DE rate, each over the published range. Throws `DomainError` for other numbers.
 */
StudySpec study_preset(int number);

struct ReplicateOutcome {
    double c_hat = 0;
    double true_c = 0;
    Metrics metrics;
    /** Calls shared with the first listed method, ignoring / respecting direction. */
    std::size_t overlap = 0;
    std::size_t overlap_directional = 0;
};

struct StudyCell {
    std::size_t config_index = 0;
    std::string label;
    Method method = Method::scbn;
    double cutoff = 0;
    std::vector<ReplicateOutcome> replicates;

    double mean_false_discoveries = 0;
    std::optional<double> mean_precision;
    /** Replicates left out of `mean_precision` because precision was undefined. */
    std::size_t precision_excluded = 0;
    std::optional<double> mean_sensitivity;
    double mean_f_score = 0;
    double mean_c_hat = 0;
    double median_c_hat = 0;
    double mean_true_c = 0;
    double mean_overlap = 0;
    double mean_overlap_directional = 0;
};

/** Seed of replicate `rep` of config `config_index` under `master`. */
std::uint64_t derive_seed(std::uint64_t master, std::size_t config_index, std::size_t rep);

/**
 * Simulate, normalize, test and evaluate each config with each method. Every method sees the same
 * simulated dataset within a replicate. Cells come back config-major, in method order.
 */
std::vector<StudyCell> run_study(const StudySpec& spec);

void write_study_tsv(std::ostream& out, std::span<const StudyCell> cells);
void write_ma_tsv(std::ostream& out, const OrthologTable& table, const MaPlot& plot);
void write_truth_tsv(std::ostream& out, const SimulatedDataset& data);

/** Labels keyed by gene id, for the `evaluate` subcommand. */
std::vector<std::pair<std::string, TruthLabel>> parse_truth_tsv(std::istream& in, const std::string& source);

} // namespace scbn

#endif
