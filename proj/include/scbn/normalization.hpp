#ifndef SCBN_NORMALIZATION_HPP
#define SCBN_NORMALIZATION_HPP

#include "core_data.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

/**
 * @file normalization.hpp
 *
 * @brief Estimation of the between-species scaling factor.
 *
 * Two estimators are provided. `scbn_scaling_factor()` chooses the factor at which the fraction
 * of conserved genes rejected by the exact test is closest to the nominal level.
 * `median_scaling_factor()` is the baseline that equates interquartile-filtered median expression.
 */

namespace scbn {

/**
 * @brief Settings for the log-spaced grid search over the scaling factor.
 */
struct GridConfig {
    struct Defaults {
        static constexpr double alpha = 0.05;
        static constexpr double span = 10;
        static constexpr int coarse_points = 1000;
        static constexpr int refine_rounds = 3;
        static constexpr double refine_shrink = 0.1;
    };

    /** Nominal type I error the conserved-gene rejection rate is matched to. */
    double alpha = Defaults::alpha;

    /** Grid center; when unset, the median baseline estimate is used. */
    std::optional<double> center;

    /** The coarse grid covers `[center / span, center * span]` in log scale. */
    double span = Defaults::span;

    /** Points per grid, both coarse and refined. */
    int coarse_points = Defaults::coarse_points;

    /** Number of refinement passes after the coarse pass. */
    int refine_rounds = Defaults::refine_rounds;

    /**
     * Each refinement shrinks the log half-width of the window by this factor, but never below one
     * step of the previous grid on either side of the incumbent.
     */
    double refine_shrink = Defaults::refine_shrink;

    /** Throws `DomainError` on out-of-range settings. */
    void validate() const;
};

/**
 * @brief Value of the type I error deviation objective at one scaling factor.
 */
struct ObjectiveValue {
    /** `|rejection_rate - alpha|`. */
    double deviation = 0;
    /** Fraction of testable conserved genes with p-value below alpha. */
    double rejection_rate = 0;
    std::size_t rejections = 0;
    /** Conserved genes actually tested (untestable ones are dropped). */
    std::size_t tested = 0;
};

/**
 * Throws `ValidationError` when no conserved gene is testable.
 */
ObjectiveValue empirical_type1_deviation(const OrthologTable& table, const ConservedSet& conserved, ScalingFactor c,
                                         double alpha);

/**
 * @brief Result of the grid search.
 */
struct ScbnFit {
    ScalingFactor factor{1.0};
    ObjectiveValue objective;
    /** Center of the coarse grid. */
    double center = 1;
    /** Ratio between adjacent points of the last grid searched. */
    double final_step_ratio = 1;
    /** Total objective evaluations. */
    std::size_t evaluations = 0;
};

/**
 * Grid-search estimate of the scaling factor.
 *
 * The objective is a step function of the factor, so the minimizer is generally a union of
 * intervals. Each pass takes the median, in log scale, of all grid points attaining the minimum;
 * refinement passes re-grid a narrower window around that point. Deterministic for fixed inputs.
 */
ScbnFit scbn_scaling_factor(const OrthologTable& table, const ConservedSet& conserved,
                            const GridConfig& grid = GridConfig());

/**
 * @brief Result of the median baseline.
 */
struct MedianFit {
    ScalingFactor factor{1.0};
    /** Genes that survived the interquartile filter in both species. */
    std::size_t kept = 0;
    /** True when the filter removed every gene and all testable conserved genes were used instead. */
    bool filter_fallback = false;
};

/**
 * Median-scaling baseline.
 *
 * With `e_t = count_t / (length_t * total_t)`, keeps testable conserved genes whose `e_t` lies in
 * `[Q1, Q3]` for both species and returns `median(e_1) / median(e_2)` over the kept genes.
 * Quantiles interpolate linearly between order statistics (`h = (n - 1) * prob`).
 *
 * Throws `ValidationError` with fewer than 4 testable conserved genes or a zero median.
 */
MedianFit median_scaling_factor(const OrthologTable& table, const ConservedSet& conserved);

/**
 * Linear-interpolation quantile of `sorted` (ascending, non-empty) at `prob` in `[0, 1]`.
 */
double interpolated_quantile(std::span<const double> sorted, double prob);

/**
 * @brief Inputs of the empirical pFDR estimate.
 */
struct PfdrInputs {
    double prior_h0 = 0.5;
    double prior_h1 = 0.5;
    /** P-values of genes known to be non-DE. */
    std::vector<double> pvalues_null;
    /** P-values of genes known to be DE. */
    std::vector<double> pvalues_alt;
    double alpha = 0.05;
};

/**
 * Empirical positive FDR at level `alpha`: `pi0 * R0 / (pi0 * R0 + pi1 * R1)` where `R0`, `R1` are
 * the fractions of null and alternative p-values below `alpha`.
 *
 * Returns `std::nullopt` when the denominator is zero (no rejections anywhere).
 * Throws `ValidationError` when either collection is empty, `DomainError` on invalid priors.
 */
std::optional<double> estimate_pfdr(const PfdrInputs& inputs);

} // namespace scbn

#endif
