// Command-line front end: normalize, test, simulate, study, evaluate.

#include "scbn/error.hpp"
#include "scbn/pipeline.hpp"
#include "scbn/simulation.hpp"
#include "scbn/study_io.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>

namespace fs = std::filesystem;
using namespace scbn;

namespace {

struct GridFlags {
    double alpha = GridConfig::Defaults::alpha;
    std::optional<double> center;
    double span = GridConfig::Defaults::span;
    int points = GridConfig::Defaults::coarse_points;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--alpha", alpha, "Significance level of the conserved-gene objective")->capture_default_str();
        cmd.add_option("--grid-center", center, "Grid center (default: the median-scaling estimate)");
        cmd.add_option("--grid-span", span, "Grid covers [center/span, center*span]")->capture_default_str();
        cmd.add_option("--grid-points", points, "Points per grid round")->capture_default_str();
    }

    GridConfig config() const {
        GridConfig g;
        g.alpha = alpha;
        g.center = center;
        g.span = span;
        g.coarse_points = points;
        return g;
    }
};

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    return out;
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return in;
}

fs::path with_suffix(const fs::path& prefix, const char* suffix) {
    auto p = prefix;
    p += suffix;
    return p;
}

void warn_unknown(const ConservedLoad& load) {
    if (!load.unknown_ids.empty()) {
        std::cerr << "warning: " << load.unknown_ids.size() << " conserved id(s) not in the count table, e.g. '"
                  << load.unknown_ids.front() << "'\n";
    }
}

SimConfig sim_preset(int study) {
    switch (study) {
    case 1:
        return SimConfig::study1();
    case 2:
    case 5:
    case 6:
        return SimConfig::study2();
    case 3:
        return SimConfig::study3();
    case 4:
        return SimConfig::study4();
    case 7:
        return SimConfig::study7();
    default:
        throw DomainError("no simulation study numbered " + std::to_string(study));
    }
}

/*** normalize ***/

struct NormalizeArgs {
    std::string counts, conserved, method = "scbn";
    GridFlags grid;
    std::optional<std::string> ma_path;
};

int run_normalize(const NormalizeArgs& a) {
    const auto table = load_counts_tsv(a.counts);
    const auto conserved = load_conserved_list(a.conserved, table);
    warn_unknown(conserved);
    const auto est = estimate_factor(table, conserved.set, parse_method(a.method), a.grid.config());

    std::cout << "method\t" << to_string(est.method) << '\n';
    std::cout << "factor\t" << format_sig6(est.factor.value()) << '\n';
    std::cout << "conserved\t" << conserved.set.size() << '\n';
    if (est.scbn) {
        const auto& o = est.scbn->objective;
        std::cout << "deviation\t" << format_sig6(o.deviation) << '\n';
        std::cout << "rejection_rate\t" << format_sig6(o.rejection_rate) << '\n';
        std::cout << "rejections\t" << o.rejections << '\n';
        std::cout << "tested\t" << o.tested << '\n';
        std::cout << "final_log_step\t" << format_sig6(std::log(est.scbn->final_step_ratio)) << '\n';
    }
    if (est.median) {
        std::cout << "median_kept\t" << est.median->kept << '\n';
        std::cout << "median_filter_fallback\t" << (est.median->filter_fallback ? "true" : "false") << '\n';
    }
    if (a.ma_path) {
        auto out = open_output(*a.ma_path);
        write_ma_tsv(out, table, ma_plot_points(table, est.factor));
    }
    return 0;
}

/*** test ***/

struct TestArgs {
    std::string counts, conserved, method = "scbn";
    GridFlags grid;
    double cutoff = 1e-6;
    std::optional<std::string> output, eval_list;
};

int run_test(const TestArgs& a) {
    RunConfig cfg;
    cfg.method = parse_method(a.method);
    cfg.grid = a.grid.config();
    cfg.cutoff = a.cutoff;
    cfg.counts_path = a.counts;
    cfg.conserved_path = a.conserved;
    if (a.output) {
        cfg.output_prefix = *a.output;
    }
    if (a.eval_list) {
        cfg.eval_list_path = *a.eval_list;
    }
    const auto report = run_pipeline(cfg);
    if (report.conserved_unknown > 0) {
        std::cerr << "warning: " << report.conserved_unknown << " conserved id(s) not in the count table\n";
    }
    if (!a.output) {
        write_results_tsv(std::cout, report.results);
    }
    std::cerr << to_string(report.estimate.method) << ": factor " << format_sig6(report.estimate.factor.value())
              << ", " << report.all.total << " DE (" << report.all.higher_sp1 << " higher_sp1, "
              << report.all.higher_sp2 << " higher_sp2)";
    if (report.eval) {
        std::cerr << ", " << report.eval->total << " of " << report.eval_size << " listed genes called";
    }
    std::cerr << '\n';
    return 0;
}

/*** simulate ***/

struct SimulateArgs {
    std::optional<std::string> spec, reference;
    std::optional<int> preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_orthologs, conserved_size;
    std::optional<double> de_rate, fold, up_rate_sp2, noise_rate, depth_sp1, depth_sp2;
    std::string output;
};

int run_simulate(const SimulateArgs& a) {
    SimConfig cfg = a.preset ? sim_preset(*a.preset) : SimConfig();
    if (a.spec) {
        auto in = open_input(*a.spec);
        cfg = parse_sim_config(in, *a.spec, cfg, fs::path(*a.spec).parent_path());
    }
    if (a.reference) {
        cfg.rate_source = RateSource::from_table(load_counts_tsv(*a.reference));
    }
    auto set = [](auto& field, const auto& flag) {
        if (flag) {
            field = *flag;
        }
    };
    set(cfg.seed, a.seed);
    set(cfg.n_orthologs, a.n_orthologs);
    set(cfg.conserved_size, a.conserved_size);
    set(cfg.de_rate, a.de_rate);
    set(cfg.fold, a.fold);
    set(cfg.up_rate_sp2, a.up_rate_sp2);
    set(cfg.noise_rate, a.noise_rate);
    set(cfg.depth_sp1, a.depth_sp1);
    set(cfg.depth_sp2, a.depth_sp2);

    const auto data = generate_dataset(cfg);
    const fs::path prefix = a.output;
    {
        auto out = open_output(with_suffix(prefix, ".counts.tsv"));
        write_counts_tsv(out, data.table);
    }
    {
        auto out = open_output(with_suffix(prefix, ".conserved.txt"));
        for (auto i : data.reported_conserved.indices()) {
            out << data.table[i].gene_id << '\n';
        }
    }
    {
        auto out = open_output(with_suffix(prefix, ".truth.tsv"));
        write_truth_tsv(out, data);
    }
    {
        auto out = open_output(with_suffix(prefix, ".config.json"));
        write_sim_config_json(out, cfg);
    }
    std::cout << "true_c\t" << format_sig6(data.true_c.value()) << '\n';
    std::cout << "genes\t" << data.table.size() << '\n';
    std::cout << "unmapped_reads_sp1\t" << data.unmapped_reads_sp1 << '\n';
    std::cout << "unmapped_reads_sp2\t" << data.unmapped_reads_sp2 << '\n';
    std::cout << "rate_source\t" << data.rate_source << '\n';
    return 0;
}

/*** study ***/

struct StudyArgs {
    std::optional<std::string> spec;
    std::optional<int> preset, replicates;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
};

int run_study_command(const StudyArgs& a) {
    if (a.spec.has_value() == a.preset.has_value()) {
        throw ValidationError("give exactly one of --spec and --preset");
    }
    auto spec = a.spec ? load_study_spec(*a.spec) : study_preset(*a.preset);
    if (a.replicates) {
        spec.replicates = *a.replicates;
    }
    if (a.seed) {
        spec.master_seed = *a.seed;
    }
    const auto cells = run_study(spec);
    if (a.output) {
        auto tsv = open_output(with_suffix(*a.output, ".tsv"));
        write_study_tsv(tsv, cells);
        auto json = open_output(with_suffix(*a.output, ".json"));
        write_study_json(json, spec, cells);
    } else {
        write_study_tsv(std::cout, cells);
    }
    return 0;
}

/*** evaluate ***/

struct EvaluateArgs {
    std::string results, truth;
    std::optional<double> cutoff;
    std::optional<std::string> output;
};

int run_evaluate(const EvaluateArgs& a) {
    auto results_in = open_input(a.results);
    const auto results = parse_results_tsv(results_in, a.results);
    auto truth_in = open_input(a.truth);
    const auto truth = parse_truth_tsv(truth_in, a.truth);

    std::unordered_map<std::string, TruthLabel> label_of;
    for (const auto& [id, label] : truth) {
        if (!label_of.emplace(id, label).second) {
            throw ValidationError("duplicate gene '" + id + "' in " + a.truth);
        }
    }
    if (label_of.size() != results.size()) {
        throw ValidationError("results cover " + std::to_string(results.size()) + " genes but truth covers " +
                              std::to_string(label_of.size()));
    }
    if (a.cutoff && !(*a.cutoff > 0 && *a.cutoff < 1)) {
        throw DomainError("cutoff must lie strictly between 0 and 1");
    }

    auto calls = std::make_unique<bool[]>(results.size());
    std::vector<TruthLabel> labels;
    labels.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto it = label_of.find(results[i].gene_id);
        if (it == label_of.end()) {
            throw ValidationError("gene '" + results[i].gene_id + "' has no truth label");
        }
        labels.push_back(it->second);
        calls[i] = a.cutoff ? (results[i].p_value && *results[i].p_value < *a.cutoff) : results[i].de_call;
    }
    const auto metrics = evaluate_run(std::span<const bool>(calls.get(), results.size()), labels);
    if (a.output) {
        auto out = open_output(*a.output);
        write_metrics_json(out, metrics);
    } else {
        write_metrics_json(std::cout, metrics);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scale-based normalization and DE testing of orthologous genes across two species"};
    app.require_subcommand(1);

    NormalizeArgs norm;
    auto* normalize = app.add_subcommand("normalize", "Estimate the scaling factor from conserved genes");
    normalize->add_option("--counts", norm.counts, "Count table (TSV)")->required();
    normalize->add_option("--conserved", norm.conserved, "Conserved gene list")->required();
    normalize->add_option("--method", norm.method, "scbn or median")->capture_default_str();
    normalize->add_option("--ma", norm.ma_path, "Also write MA-plot points to this TSV");
    norm.grid.add_to(*normalize);

    TestArgs test;
    auto* test_cmd = app.add_subcommand("test", "Normalize, test every gene and call DE genes");
    test_cmd->add_option("--counts", test.counts, "Count table (TSV)")->required();
    test_cmd->add_option("--conserved", test.conserved, "Conserved gene list")->required();
    test_cmd->add_option("--method", test.method, "scbn or median")->capture_default_str();
    test_cmd->add_option("--cutoff", test.cutoff, "Call genes with p below this")->capture_default_str();
    test_cmd->add_option("--output", test.output, "Write <prefix>.json and <prefix>.tsv instead of stdout");
    test_cmd->add_option("--eval-list", test.eval_list, "Gene list for a restricted DE tally");
    test.grid.add_to(*test_cmd);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Draw a labelled two-species dataset");
    simulate->add_option("--output", sim.output, "Output prefix")->required();
    simulate->add_option("--spec", sim.spec, "JSON simulation config");
    simulate->add_option("--preset", sim.preset, "Start from the configuration of study 1-7");
    simulate->add_option("--reference", sim.reference, "Count table supplying empirical expression rates");
    simulate->add_option("--seed", sim.seed, "Random seed");
    simulate->add_option("--n-orthologs", sim.n_orthologs);
    simulate->add_option("--conserved-size", sim.conserved_size);
    simulate->add_option("--de-rate", sim.de_rate);
    simulate->add_option("--fold", sim.fold);
    simulate->add_option("--up-rate-sp2", sim.up_rate_sp2);
    simulate->add_option("--noise-rate", sim.noise_rate);
    simulate->add_option("--depth-sp1", sim.depth_sp1);
    simulate->add_option("--depth-sp2", sim.depth_sp2);

    StudyArgs study;
    auto* study_cmd = app.add_subcommand("study", "Run a replicated simulation sweep");
    study_cmd->add_option("--spec", study.spec, "JSON study spec");
    study_cmd->add_option("--preset", study.preset, "Built-in sweep of study 1-7");
    study_cmd->add_option("--replicates", study.replicates, "Override the replicate count");
    study_cmd->add_option("--seed", study.seed, "Override the master seed");
    study_cmd->add_option("--output", study.output, "Write <prefix>.tsv and <prefix>.json instead of stdout");

    EvaluateArgs eval;
    auto* evaluate = app.add_subcommand("evaluate", "Score DE calls against truth labels");
    evaluate->add_option("--results", eval.results, "Per-gene results TSV from 'test'")->required();
    evaluate->add_option("--truth", eval.truth, "Truth labels TSV from 'simulate'")->required();
    evaluate->add_option("--cutoff", eval.cutoff, "Recall genes at p below this instead of using de_call");
    evaluate->add_option("--output", eval.output, "Write metrics JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*normalize) {
            return run_normalize(norm);
        }
        if (*test_cmd) {
            return run_test(test);
        }
        if (*simulate) {
            return run_simulate(sim);
        }
        if (*study_cmd) {
            return run_study_command(study);
        }
        return run_evaluate(eval);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
