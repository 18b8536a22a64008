#include "scbn/normalization.hpp"

#include "scbn/error.hpp"
#include "scbn/exact_test.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scbn {

namespace {

// Per-gene quantities the objective needs, with the scaling factor factored out of the odds.
struct PanelGene {
    std::int64_t x1;
    std::int64_t n;
    double base_odds; // L1 * N1 / (L2 * N2)
};

std::vector<PanelGene> build_panel(const OrthologTable& table, const ConservedSet& conserved) {
    const double n1 = static_cast<double>(table.total_sp1());
    const double n2 = static_cast<double>(table.total_sp2());
    std::vector<PanelGene> panel;
    panel.reserve(conserved.size());
    for (auto idx : conserved.indices()) {
        const auto& g = table[idx];
        if (!g.testable()) {
            continue;
        }
        const double side1 = static_cast<double>(g.length_sp1) * n1;
        const double side2 = static_cast<double>(g.length_sp2) * n2;
        panel.push_back(PanelGene{g.count_sp1, g.total_count(), side1 / side2});
    }
    if (panel.empty()) {
        throw ValidationError("no testable gene in the conserved set");
    }
    return panel;
}

ObjectiveValue evaluate(const std::vector<PanelGene>& panel, double c, double alpha) {
    std::size_t rejections = 0;
    for (const auto& g : panel) {
        const auto p0 = NullSuccessProb::from_odds(c * g.base_odds);
        if (exact_test_rejects(GeneTestInput(g.x1, g.n, p0), alpha)) {
            ++rejections;
        }
    }
    ObjectiveValue out;
    out.rejections = rejections;
    out.tested = panel.size();
    out.rejection_rate = static_cast<double>(rejections) / static_cast<double>(panel.size());
    out.deviation = std::abs(out.rejection_rate - alpha);
    return out;
}

// Median, in log scale, of the grid points attaining the minimum deviation. For an even number of
// minimizers the two middle points are averaged, which keeps the choice symmetric under c -> 1/c.
double median_minimizer(const std::vector<double>& log_grid, const std::vector<double>& deviations) {
    const double best = *std::min_element(deviations.begin(), deviations.end());
    std::vector<std::size_t> minimizers;
    for (std::size_t i = 0; i < deviations.size(); ++i) {
        if (deviations[i] == best) {
            minimizers.push_back(i);
        }
    }
    const std::size_t k = minimizers.size();
    if (k % 2 == 1) {
        return log_grid[minimizers[k / 2]];
    }
    return 0.5 * (log_grid[minimizers[k / 2 - 1]] + log_grid[minimizers[k / 2]]);
}

std::vector<double> sorted_copy(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

void GridConfig::validate() const {
    if (!(alpha > 0 && alpha < 1)) {
        throw DomainError("alpha must lie strictly between 0 and 1");
    }
    if (center && (!(*center > 0) || !std::isfinite(*center))) {
        throw DomainError("grid center must be positive and finite");
    }
    if (!(span > 1) || !std::isfinite(span)) {
        throw DomainError("grid span must exceed 1");
    }
    if (coarse_points < 10) {
        throw DomainError("grid needs at least 10 points");
    }
    if (refine_rounds < 0) {
        throw DomainError("refine_rounds must be non-negative");
    }
    if (!(refine_shrink > 0 && refine_shrink < 1)) {
        throw DomainError("refine_shrink must lie strictly between 0 and 1");
    }
}

ObjectiveValue empirical_type1_deviation(const OrthologTable& table, const ConservedSet& conserved, ScalingFactor c,
                                         double alpha) {
    if (!(alpha > 0 && alpha < 1)) {
        throw DomainError("alpha must lie strictly between 0 and 1");
    }
    return evaluate(build_panel(table, conserved), c.value(), alpha);
}

ScbnFit scbn_scaling_factor(const OrthologTable& table, const ConservedSet& conserved, const GridConfig& grid) {
    grid.validate();
    const auto panel = build_panel(table, conserved);

    ScbnFit fit;
    fit.center = grid.center ? *grid.center : median_scaling_factor(table, conserved).factor.value();

    const auto npoints = static_cast<std::size_t>(grid.coarse_points);
    double lower = std::log(fit.center) - std::log(grid.span);
    double upper = std::log(fit.center) + std::log(grid.span);
    double incumbent = std::log(fit.center);
    double step = 0;

    std::vector<double> log_grid(npoints);
    std::vector<double> deviations(npoints);

    for (int round = 0; round <= grid.refine_rounds; ++round) {
        step = (upper - lower) / static_cast<double>(npoints - 1);
        for (std::size_t i = 0; i < npoints; ++i) {
            log_grid[i] = (i + 1 == npoints) ? upper : lower + static_cast<double>(i) * step;
            deviations[i] = evaluate(panel, std::exp(log_grid[i]), grid.alpha).deviation;
        }
        fit.evaluations += npoints;
        incumbent = median_minimizer(log_grid, deviations);

        const double half = std::max(grid.refine_shrink * 0.5 * (upper - lower), step);
        lower = incumbent - half;
        upper = incumbent + half;
    }

    fit.factor = ScalingFactor(std::exp(incumbent));
    fit.objective = evaluate(panel, fit.factor.value(), grid.alpha);
    fit.final_step_ratio = std::exp(step);
    ++fit.evaluations;
    return fit;
}

double interpolated_quantile(std::span<const double> sorted, double prob) {
    if (sorted.empty()) {
        throw ValidationError("quantile of an empty collection");
    }
    const double h = static_cast<double>(sorted.size() - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    if (frac == 0) {
        return sorted[lo];
    }
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

MedianFit median_scaling_factor(const OrthologTable& table, const ConservedSet& conserved) {
    const double n1 = static_cast<double>(table.total_sp1());
    const double n2 = static_cast<double>(table.total_sp2());

    std::vector<double> e1;
    std::vector<double> e2;
    for (auto idx : conserved.indices()) {
        const auto& g = table[idx];
        if (!g.testable()) {
            continue;
        }
        e1.push_back(static_cast<double>(g.count_sp1) / (static_cast<double>(g.length_sp1) * n1));
        e2.push_back(static_cast<double>(g.count_sp2) / (static_cast<double>(g.length_sp2) * n2));
    }
    if (e1.size() < 4) {
        throw ValidationError("median scaling needs at least 4 testable conserved genes");
    }

    const auto s1 = sorted_copy(e1);
    const auto s2 = sorted_copy(e2);
    const double q1_lo = interpolated_quantile(s1, 0.25);
    const double q1_hi = interpolated_quantile(s1, 0.75);
    const double q2_lo = interpolated_quantile(s2, 0.25);
    const double q2_hi = interpolated_quantile(s2, 0.75);

    std::vector<double> kept1;
    std::vector<double> kept2;
    for (std::size_t i = 0; i < e1.size(); ++i) {
        if (e1[i] >= q1_lo && e1[i] <= q1_hi && e2[i] >= q2_lo && e2[i] <= q2_hi) {
            kept1.push_back(e1[i]);
            kept2.push_back(e2[i]);
        }
    }

    MedianFit fit;
    if (kept1.empty()) {
        fit.filter_fallback = true;
        kept1 = e1;
        kept2 = e2;
    }
    fit.kept = kept1.size();

    const double m1 = interpolated_quantile(sorted_copy(kept1), 0.5);
    const double m2 = interpolated_quantile(sorted_copy(kept2), 0.5);
    if (!(m1 > 0) || !(m2 > 0)) {
        throw ValidationError("median expression of the conserved genes is zero");
    }
    fit.factor = ScalingFactor(m1 / m2);
    return fit;
}

std::optional<double> estimate_pfdr(const PfdrInputs& in) {
    if (in.pvalues_null.empty() || in.pvalues_alt.empty()) {
        throw ValidationError("pFDR needs at least one null and one alternative p-value");
    }
    if (!(in.prior_h0 >= 0 && in.prior_h0 <= 1) || !(in.prior_h1 >= 0 && in.prior_h1 <= 1) ||
        std::abs(in.prior_h0 + in.prior_h1 - 1.0) > 1e-12) {
        throw DomainError("priors must lie in [0, 1] and sum to 1");
    }
    if (!(in.alpha > 0 && in.alpha < 1)) {
        throw DomainError("alpha must lie strictly between 0 and 1");
    }

    auto rejection_fraction = [&](const std::vector<double>& pvalues) {
        const auto hits = std::count_if(pvalues.begin(), pvalues.end(), [&](double p) { return p < in.alpha; });
        return static_cast<double>(hits) / static_cast<double>(pvalues.size());
    };

    const double null_part = in.prior_h0 * rejection_fraction(in.pvalues_null);
    const double alt_part = in.prior_h1 * rejection_fraction(in.pvalues_alt);
    const double denom = null_part + alt_part;
    if (denom == 0) {
        return std::nullopt;
    }
    return null_part / denom;
}

} // namespace scbn
