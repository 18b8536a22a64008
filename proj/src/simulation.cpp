#include "scbn/simulation.hpp"

#include "scbn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>

namespace scbn {

namespace {

std::string numbered_id(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, i + 1);
    return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::int64_t draw_poisson(std::mt19937_64& rng, double mean) {
    if (!(mean > 0)) {
        return 0;
    }
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(rng);
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

RateSource RateSource::from_table(const OrthologTable& reference) {
    RateSource src;
    for (const auto& g : reference.records()) {
        if (g.count_sp1 > 0) {
            src.empirical.push_back(static_cast<double>(g.count_sp1) / static_cast<double>(g.length_sp1));
        }
    }
    if (src.empirical.empty()) {
        throw ValidationError("reference table has no expressed gene in species 1");
    }
    const double mean = mean_of(src.empirical);
    for (auto& r : src.empirical) {
        r /= mean;
    }
    return src;
}

std::string RateSource::describe() const {
    if (!empirical.empty()) {
        return "empirical(" + std::to_string(empirical.size()) + " rates)";
    }
    return "lognormal(log_mean=" + format_sig6(log_mean) + ", log_sd=" + format_sig6(log_sd) + ")";
}

void SimConfig::validate() const {
    auto unit = [](double x) { return x >= 0 && x <= 1; };
    if (n_orthologs == 0) {
        throw DomainError("n_orthologs must be positive");
    }
    if (conserved_size == 0) {
        throw DomainError("conserved_size must be positive");
    }
    if (!unit(de_rate) || !unit(up_rate_sp2) || !unit(noise_rate)) {
        throw DomainError("de_rate, up_rate_sp2 and noise_rate must lie in [0, 1]");
    }
    if (!(fold > 1) || !std::isfinite(fold)) {
        throw DomainError("fold must exceed 1");
    }
    if (!(depth_sp1 > 0) || !(depth_sp2 > 0)) {
        throw DomainError("depths must be positive");
    }
    if (lengths.min < 1 || lengths.max < lengths.min) {
        throw DomainError("length model needs 1 <= min <= max");
    }
    if (!(rate_source.log_sd >= 0)) {
        throw DomainError("log-normal rate sd must be non-negative");
    }
    for (double r : rate_source.empirical) {
        if (!(r > 0) || !std::isfinite(r)) {
            throw DomainError("empirical rates must be positive and finite");
        }
    }
}

SimConfig SimConfig::study1() {
    return SimConfig{};
}

SimConfig SimConfig::study2() {
    auto cfg = study1();
    cfg.fold = 1.5;
    cfg.conserved_size = 1000;
    return cfg;
}

SimConfig SimConfig::study3() {
    auto cfg = study1();
    cfg.de_rate = 0.2;
    cfg.fold = 8;
    cfg.up_rate_sp2 = 0.7;
    return cfg;
}

SimConfig SimConfig::study4() {
    auto cfg = study1();
    cfg.de_rate = 0.4;
    return cfg;
}

SimConfig SimConfig::study7() {
    auto cfg = study4();
    cfg.fold = 1.5;
    cfg.noise_rate = 0.2;
    return cfg;
}

std::string_view to_string(TruthLabel label) {
    switch (label) {
    case TruthLabel::de_up_sp1:
        return "de_up_sp1";
    case TruthLabel::de_up_sp2:
        return "de_up_sp2";
    case TruthLabel::unique_sp1:
        return "unique_sp1";
    case TruthLabel::unique_sp2:
        return "unique_sp2";
    default:
        return "null";
    }
}

TruthLabel parse_truth_label(std::string_view name) {
    for (auto l : {TruthLabel::null, TruthLabel::de_up_sp1, TruthLabel::de_up_sp2, TruthLabel::unique_sp1,
                   TruthLabel::unique_sp2}) {
        if (name == to_string(l)) {
            return l;
        }
    }
    throw DomainError("unknown truth label '" + std::string(name) + "'");
}

SimulatedDataset generate_dataset(const SimConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);

    std::lognormal_distribution<double> lognormal(cfg.rate_source.log_mean, cfg.rate_source.log_sd);
    std::uniform_int_distribution<std::size_t> pick(0, cfg.rate_source.empirical.empty()
                                                            ? 0
                                                            : cfg.rate_source.empirical.size() - 1);
    auto draw_rate = [&]() {
        if (cfg.rate_source.empirical.empty()) {
            return lognormal(rng);
        }
        return cfg.rate_source.empirical[pick(rng)];
    };
    std::uniform_int_distribution<std::int64_t> draw_length(cfg.lengths.min, cfg.lengths.max);

    const std::size_t n = cfg.n_orthologs;
    const auto n_de = static_cast<std::size_t>(std::llround(cfg.de_rate * static_cast<double>(n)));
    const auto n_up2 = static_cast<std::size_t>(std::llround(cfg.up_rate_sp2 * static_cast<double>(n_de)));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    const std::size_t total_genes = n + cfg.n_unique_sp1 + cfg.n_unique_sp2;
    std::vector<TruthLabel> truth(total_genes, TruthLabel::null);
    for (std::size_t i = 0; i < n_de; ++i) {
        truth[order[i]] = i < n_up2 ? TruthLabel::de_up_sp2 : TruthLabel::de_up_sp1;
    }

    std::vector<double> mu1(total_genes), mu2(total_genes);
    std::vector<std::int64_t> len1(total_genes), len2(total_genes);
    for (std::size_t i = 0; i < total_genes; ++i) {
        if (i < n) {
            mu1[i] = draw_rate();
            switch (truth[i]) {
            case TruthLabel::de_up_sp2:
                mu2[i] = mu1[i] * cfg.fold;
                break;
            case TruthLabel::de_up_sp1:
                mu2[i] = mu1[i] / cfg.fold;
                break;
            default:
                mu2[i] = mu1[i];
            }
        } else if (i < n + cfg.n_unique_sp1) {
            truth[i] = TruthLabel::unique_sp1;
            mu1[i] = draw_rate();
            mu2[i] = 0;
        } else {
            truth[i] = TruthLabel::unique_sp2;
            mu1[i] = 0;
            mu2[i] = draw_rate();
        }
        len1[i] = draw_length(rng);
        len2[i] = draw_length(rng);
    }

    auto draw_unmapped = [&](std::size_t count) {
        std::vector<double> output(count);
        for (auto& o : output) {
            const double mu = draw_rate();
            o = mu * static_cast<double>(draw_length(rng));
        }
        return output;
    };
    const auto unmapped1 = draw_unmapped(cfg.n_unmapped_sp1);
    const auto unmapped2 = draw_unmapped(cfg.n_unmapped_sp2);

    double table_output1 = 0, table_output2 = 0;
    for (std::size_t i = 0; i < total_genes; ++i) {
        table_output1 += mu1[i] * static_cast<double>(len1[i]);
        table_output2 += mu2[i] * static_cast<double>(len2[i]);
    }
    const double all_output1 = table_output1 + std::accumulate(unmapped1.begin(), unmapped1.end(), 0.0);
    const double all_output2 = table_output2 + std::accumulate(unmapped2.begin(), unmapped2.end(), 0.0);

    std::vector<GeneRecord> records(total_genes);
    for (std::size_t i = 0; i < total_genes; ++i) {
        auto& r = records[i];
        if (i < n) {
            r.gene_id = numbered_id("orth", i);
        } else if (i < n + cfg.n_unique_sp1) {
            r.gene_id = numbered_id("uniq1_", i - n);
        } else {
            r.gene_id = numbered_id("uniq2_", i - n - cfg.n_unique_sp1);
        }
        r.length_sp1 = len1[i];
        r.length_sp2 = len2[i];
        r.count_sp1 = draw_poisson(rng, mu1[i] * static_cast<double>(len1[i]) * cfg.depth_sp1 / all_output1);
        r.count_sp2 = draw_poisson(rng, mu2[i] * static_cast<double>(len2[i]) * cfg.depth_sp2 / all_output2);
    }

    std::int64_t unmapped_reads1 = 0, unmapped_reads2 = 0;
    for (double o : unmapped1) {
        unmapped_reads1 += draw_poisson(rng, o * cfg.depth_sp1 / all_output1);
    }
    for (double o : unmapped2) {
        unmapped_reads2 += draw_poisson(rng, o * cfg.depth_sp2 / all_output2);
    }

    // Reported conserved set: mostly truly null orthologs, the rest secretly DE.
    std::vector<std::size_t> null_pool, de_pool;
    for (std::size_t i = 0; i < n; ++i) {
        (truth[i] == TruthLabel::null ? null_pool : de_pool).push_back(i);
    }
    const double wanted_null = (1.0 - cfg.noise_rate) * static_cast<double>(cfg.conserved_size);
    const auto n_null = std::min(cfg.conserved_size, static_cast<std::size_t>(std::ceil(wanted_null - 1e-9)));
    const std::size_t n_noise = cfg.conserved_size - n_null;
    if (n_null > null_pool.size() || n_noise > de_pool.size()) {
        throw DomainError("conserved_size " + std::to_string(cfg.conserved_size) + " with noise_rate " +
                          format_sig6(cfg.noise_rate) + " needs " + std::to_string(n_null) + " null and " +
                          std::to_string(n_noise) + " DE orthologs, but only " + std::to_string(null_pool.size()) +
                          " and " + std::to_string(de_pool.size()) + " exist");
    }
    std::shuffle(null_pool.begin(), null_pool.end(), rng);
    std::shuffle(de_pool.begin(), de_pool.end(), rng);
    std::vector<std::size_t> conserved(null_pool.begin(), null_pool.begin() + static_cast<std::ptrdiff_t>(n_null));
    conserved.insert(conserved.end(), de_pool.begin(), de_pool.begin() + static_cast<std::ptrdiff_t>(n_noise));
    std::sort(conserved.begin(), conserved.end());

    auto table = validate_table(std::move(records));
    auto conserved_set = ConservedSet::from_indices(table, std::move(conserved));
    return SimulatedDataset{std::move(table),
                            std::move(truth),
                            std::move(conserved_set),
                            ScalingFactor(table_output2 / table_output1),
                            unmapped_reads1,
                            unmapped_reads2,
                            cfg.rate_source.describe()};
}

Metrics evaluate_run(std::span<const bool> calls, std::span<const TruthLabel> truth) {
    if (calls.size() != truth.size()) {
        throw ValidationError("calls and truth labels cover different gene sets");
    }
    Metrics m;
    std::size_t predicted = 0;
    for (std::size_t i = 0; i < calls.size(); ++i) {
        const auto label = truth[i];
        if (label == TruthLabel::unique_sp1 || label == TruthLabel::unique_sp2) {
            continue;
        }
        if (calls[i]) {
            ++predicted;
            if (is_de(label)) {
                ++m.true_positives;
            } else {
                ++m.false_discoveries;
            }
        } else if (is_de(label)) {
            ++m.false_negatives;
        }
    }
    if (predicted > 0) {
        m.precision = static_cast<double>(m.true_positives) / static_cast<double>(predicted);
    }
    const auto positives = m.true_positives + m.false_negatives;
    if (positives > 0) {
        m.sensitivity = static_cast<double>(m.true_positives) / static_cast<double>(positives);
    }
    if (m.precision && m.sensitivity && *m.precision + *m.sensitivity > 0) {
        m.f_score = 2 * *m.precision * *m.sensitivity / (*m.precision + *m.sensitivity);
    }
    return m;
}

MaPlot ma_plot_points(const OrthologTable& table, ScalingFactor c) {
    MaPlot plot;
    plot.factor_line = std::log2(c.value());
    const double n1 = static_cast<double>(table.total_sp1());
    const double n2 = static_cast<double>(table.total_sp2());
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& g = table[i];
        if (g.count_sp1 == 0 || g.count_sp2 == 0) {
            ++plot.skipped;
            continue;
        }
        const double e1 = static_cast<double>(g.count_sp1) / (static_cast<double>(g.length_sp1) * n1);
        const double e2 = static_cast<double>(g.count_sp2) / (static_cast<double>(g.length_sp2) * n2);
        plot.points.push_back(MaPoint{i, 0.5 * (std::log2(e1) + std::log2(e2)), std::log2(e1) - std::log2(e2)});
    }
    return plot;
}

std::uint64_t derive_seed(std::uint64_t master, std::size_t config_index, std::size_t rep) {
    return splitmix64(splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(config_index)) ^
                      static_cast<std::uint64_t>(rep));
}

std::vector<StudyCell> run_study(const StudySpec& spec) {
    if (spec.configs.empty() || spec.methods.empty()) {
        throw ValidationError("study needs at least one config and one method");
    }
    if (spec.replicates < 1) {
        throw DomainError("study needs at least one replicate");
    }
    if (!spec.cutoffs.empty() && spec.cutoffs.size() != spec.configs.size()) {
        throw ValidationError("study lists " + std::to_string(spec.cutoffs.size()) + " cutoffs for " +
                              std::to_string(spec.configs.size()) + " configs");
    }
    for (std::size_t ci = 0; ci < spec.configs.size(); ++ci) {
        const double cutoff = spec.cutoff_for(ci);
        if (!(cutoff > 0 && cutoff < 1)) {
            throw DomainError("cutoff must lie strictly between 0 and 1");
        }
        spec.configs[ci].validate();
    }
    spec.grid.validate();

    std::vector<StudyCell> cells;
    for (std::size_t ci = 0; ci < spec.configs.size(); ++ci) {
        const std::size_t first_cell = cells.size();
        for (auto method : spec.methods) {
            StudyCell cell;
            cell.config_index = ci;
            cell.label = ci < spec.labels.size() ? spec.labels[ci] : std::to_string(ci);
            cell.method = method;
            cell.cutoff = spec.cutoff_for(ci);
            cells.push_back(std::move(cell));
        }

        for (int rep = 0; rep < spec.replicates; ++rep) {
            auto cfg = spec.configs[ci];
            cfg.seed = derive_seed(spec.master_seed, ci, static_cast<std::size_t>(rep));
            const auto data = generate_dataset(cfg);

            std::vector<std::vector<TestResult>> per_method;
            for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
                const auto est = estimate_factor(data.table, data.reported_conserved, spec.methods[mi], spec.grid);
                auto results = call_de(data.table, est.factor, spec.cutoff_for(ci));
                auto calls = std::make_unique<bool[]>(results.size());
                for (std::size_t i = 0; i < results.size(); ++i) {
                    calls[i] = results[i].de_call;
                }

                ReplicateOutcome out;
                out.c_hat = est.factor.value();
                out.true_c = data.true_c.value();
                out.metrics = evaluate_run(std::span<const bool>(calls.get(), results.size()), data.truth);
                cells[first_cell + mi].replicates.push_back(out);
                per_method.push_back(std::move(results));
            }

            if (per_method.size() >= 2) {
                std::size_t overlap = 0, directional = 0;
                for (std::size_t i = 0; i < per_method[0].size(); ++i) {
                    const auto& a = per_method[0][i];
                    const auto& b = per_method[1][i];
                    if (a.de_call && b.de_call) {
                        ++overlap;
                        if (a.direction == b.direction) {
                            ++directional;
                        }
                    }
                }
                for (std::size_t mi = 0; mi < per_method.size(); ++mi) {
                    cells[first_cell + mi].replicates.back().overlap = overlap;
                    cells[first_cell + mi].replicates.back().overlap_directional = directional;
                }
            }
        }
    }

    for (auto& cell : cells) {
        std::vector<double> fd, prec, sens, f, chat, truec, ov, ovd;
        for (const auto& r : cell.replicates) {
            fd.push_back(static_cast<double>(r.metrics.false_discoveries));
            if (r.metrics.precision) {
                prec.push_back(*r.metrics.precision);
            } else {
                ++cell.precision_excluded;
            }
            if (r.metrics.sensitivity) {
                sens.push_back(*r.metrics.sensitivity);
            }
            f.push_back(r.metrics.f_score);
            chat.push_back(r.c_hat);
            truec.push_back(r.true_c);
            ov.push_back(static_cast<double>(r.overlap));
            ovd.push_back(static_cast<double>(r.overlap_directional));
        }
        cell.mean_false_discoveries = mean_of(fd);
        if (!prec.empty()) {
            cell.mean_precision = mean_of(prec);
        }
        if (!sens.empty()) {
            cell.mean_sensitivity = mean_of(sens);
        }
        cell.mean_f_score = mean_of(f);
        cell.mean_c_hat = mean_of(chat);
        cell.mean_true_c = mean_of(truec);
        cell.mean_overlap = mean_of(ov);
        cell.mean_overlap_directional = mean_of(ovd);
        std::sort(chat.begin(), chat.end());
        cell.median_c_hat = interpolated_quantile(chat, 0.5);
    }
    return cells;
}

StudySpec study_preset(int number) {
    StudySpec spec;
    spec.name = "study" + std::to_string(number);
    auto sweep = [&spec](SimConfig base, std::string_view field, std::initializer_list<double> values,
                         auto apply) {
        for (double v : values) {
            auto cfg = base;
            apply(cfg, v);
            spec.configs.push_back(cfg);
            spec.labels.push_back(std::string(field) + "=" + format_sig6(v));
        }
    };
    auto set_conserved = [](SimConfig& c, double v) { c.conserved_size = static_cast<std::size_t>(v); };
    auto set_noise = [](SimConfig& c, double v) { c.noise_rate = v; };
    auto set_de = [](SimConfig& c, double v) { c.de_rate = v; };
    switch (number) {
    case 1:
        sweep(SimConfig::study1(), "conserved_size", {50, 100, 200, 400, 600, 800, 1000}, set_conserved);
        break;
    case 2:
    case 6:
        sweep(SimConfig::study2(), "noise_rate", {0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, set_noise);
        break;
    case 3:
        sweep(SimConfig::study3(), "noise_rate", {0, 0.4}, set_noise);
        break;
    case 4:
        spec.cutoffs = {0.0001, 0.001, 0.01, 0.05, 0.1, 0.3, 0.6};
        for (double cutoff : spec.cutoffs) {
            spec.configs.push_back(SimConfig::study4());
            spec.labels.push_back("cutoff=" + format_sig6(cutoff));
        }
        break;
    case 5:
        sweep(SimConfig::study2(), "noise_rate", {0, 0.1, 0.2, 0.3, 0.4, 0.5}, set_noise);
        break;
    case 7:
        sweep(SimConfig::study7(), "de_rate", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, set_de);
        break;
    default:
        throw DomainError("no simulation study numbered " + std::to_string(number));
    }
    return spec;
}

void write_study_tsv(std::ostream& out, std::span<const StudyCell> cells) {
    out << "config\tlabel\tmethod\tcutoff\treplicates\tmean_false_discoveries\tmean_precision\tprecision_excluded\t"
           "mean_sensitivity\tmean_f_score\tmean_c_hat\tmedian_c_hat\tmean_true_c\tmean_overlap\t"
           "mean_overlap_directional\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_sig6(*v) : std::string("NA"); };
    for (const auto& c : cells) {
        out << c.config_index << '\t' << c.label << '\t' << to_string(c.method) << '\t' << format_sig6(c.cutoff) << '\t'
            << c.replicates.size() << '\t'
            << format_sig6(c.mean_false_discoveries) << '\t' << opt(c.mean_precision) << '\t' << c.precision_excluded
            << '\t' << opt(c.mean_sensitivity) << '\t' << format_sig6(c.mean_f_score) << '\t'
            << format_sig6(c.mean_c_hat) << '\t' << format_sig6(c.median_c_hat) << '\t' << format_sig6(c.mean_true_c)
            << '\t' << format_sig6(c.mean_overlap) << '\t' << format_sig6(c.mean_overlap_directional) << '\n';
    }
}

void write_ma_tsv(std::ostream& out, const OrthologTable& table, const MaPlot& plot) {
    out << "# factor_line=" << format_sig6(plot.factor_line) << " skipped=" << plot.skipped << '\n';
    out << "gene_id\tA\tM\n";
    for (const auto& p : plot.points) {
        out << table[p.index].gene_id << '\t' << format_sig6(p.a) << '\t' << format_sig6(p.m) << '\n';
    }
}

void write_truth_tsv(std::ostream& out, const SimulatedDataset& data) {
    out << "gene_id\tlabel\n";
    for (std::size_t i = 0; i < data.table.size(); ++i) {
        out << data.table[i].gene_id << '\t' << to_string(data.truth[i]) << '\n';
    }
}

std::vector<std::pair<std::string, TruthLabel>> parse_truth_tsv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line) || (line != "gene_id\tlabel" && line != "gene_id\tlabel\r")) {
        throw ParseError(source, 1, "expected header 'gene_id\\tlabel'");
    }
    std::vector<std::pair<std::string, TruthLabel>> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw ParseError(source, lineno, "expected 2 tab-separated fields");
        }
        try {
            out.emplace_back(line.substr(0, tab), parse_truth_label(line.substr(tab + 1)));
        } catch (const DomainError& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    return out;
}

} // namespace scbn
