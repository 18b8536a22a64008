#include "scbn/pipeline.hpp"

#include "scbn/error.hpp"
#include "scbn/exact_test.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace scbn {

namespace {

constexpr std::string_view kCountsHeader = "gene_id\tlength_sp1\tcount_sp1\tlength_sp2\tcount_sp2";
constexpr std::string_view kResultsHeader = "gene_id\tp_value\tq_value\tdirection\tde_call";

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::int64_t parse_integer(std::string_view field, const std::string& source, std::size_t line, const char* column) {
    std::int64_t value = 0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc() || ptr != last) {
        throw ParseError(source, line, std::string(column) + " is not an integer: '" + std::string(field) + "'");
    }
    return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    return out;
}

nlohmann::ordered_json tally_json(const Tally& t) {
    return {{"total", t.total}, {"higher_sp1", t.higher_sp1}, {"higher_sp2", t.higher_sp2}};
}

} // namespace

std::string_view to_string(Method m) {
    return m == Method::scbn ? "scbn" : "median";
}

Method parse_method(std::string_view name) {
    if (name == "scbn") {
        return Method::scbn;
    }
    if (name == "median") {
        return Method::median;
    }
    throw DomainError("unknown method '" + std::string(name) + "' (expected scbn or median)");
}

std::string_view to_string(Direction d) {
    switch (d) {
    case Direction::higher_sp1:
        return "higher_sp1";
    case Direction::higher_sp2:
        return "higher_sp2";
    default:
        return "none";
    }
}

OrthologTable parse_counts_tsv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "empty file, expected header '" + std::string(kCountsHeader) + "'");
    }
    strip_cr(line);
    if (line != kCountsHeader) {
        throw ParseError(source, 1, "malformed header, expected '" + std::string(kCountsHeader) + "'");
    }

    std::vector<GeneRecord> records;
    std::unordered_set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto fields = split_tabs(line);
        if (fields.size() != 5) {
            throw ParseError(source, lineno, "expected 5 tab-separated fields, found " + std::to_string(fields.size()));
        }
        GeneRecord r;
        r.gene_id = std::string(fields[0]);
        if (r.gene_id.empty()) {
            throw ParseError(source, lineno, "empty gene_id");
        }
        r.length_sp1 = parse_integer(fields[1], source, lineno, "length_sp1");
        r.count_sp1 = parse_integer(fields[2], source, lineno, "count_sp1");
        r.length_sp2 = parse_integer(fields[3], source, lineno, "length_sp2");
        r.count_sp2 = parse_integer(fields[4], source, lineno, "count_sp2");
        if (r.length_sp1 < 1 || r.length_sp2 < 1) {
            throw ParseError(source, lineno, "gene '" + r.gene_id + "' has a non-positive length");
        }
        if (r.count_sp1 < 0 || r.count_sp2 < 0) {
            throw ParseError(source, lineno, "gene '" + r.gene_id + "' has a negative count");
        }
        if (!seen.insert(r.gene_id).second) {
            throw ParseError(source, lineno, "duplicate gene_id '" + r.gene_id + "'");
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) {
        throw ParseError(source, lineno, "no gene records");
    }
    return validate_table(std::move(records));
}

OrthologTable load_counts_tsv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_counts_tsv(in, path.string());
}

std::vector<std::string> parse_id_list(std::istream& in) {
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        ids.push_back(line.substr(first, last - first + 1));
    }
    return ids;
}

std::vector<std::string> load_id_list(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_id_list(in);
}

ConservedLoad resolve_conserved(std::span<const std::string> ids, const OrthologTable& table) {
    std::vector<std::size_t> indices;
    std::vector<std::string> unknown;
    for (const auto& id : ids) {
        if (auto idx = table.find(id)) {
            indices.push_back(*idx);
        } else {
            unknown.push_back(id);
        }
    }
    if (indices.empty()) {
        throw ValidationError("none of the " + std::to_string(ids.size()) + " conserved ids is in the count table");
    }
    return ConservedLoad{ConservedSet::from_indices(table, std::move(indices)), std::move(unknown)};
}

ConservedLoad load_conserved_list(const std::filesystem::path& path, const OrthologTable& table) {
    const auto ids = load_id_list(path);
    return resolve_conserved(ids, table);
}

std::vector<double> bh_adjust(std::span<const double> pvalues) {
    for (double p : pvalues) {
        if (!(p > 0 && p <= 1)) {
            throw DomainError("p-values must lie in (0, 1]");
        }
    }
    const std::size_t m = pvalues.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });

    std::vector<double> q(m);
    double running = 1.0;
    for (std::size_t rank = m; rank > 0; --rank) {
        const auto idx = order[rank - 1];
        const double scaled = pvalues[idx] * static_cast<double>(m) / static_cast<double>(rank);
        running = std::min(running, scaled);
        // p * m / m can round one ulp below p.
        q[idx] = std::max(running, pvalues[idx]);
    }
    return q;
}

std::vector<std::optional<double>> bh_adjust(std::span<const std::optional<double>> pvalues) {
    std::vector<double> present;
    for (const auto& p : pvalues) {
        if (p) {
            present.push_back(*p);
        }
    }
    const auto adjusted = bh_adjust(std::span<const double>(present));
    std::vector<std::optional<double>> out(pvalues.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < pvalues.size(); ++i) {
        if (pvalues[i]) {
            out[i] = adjusted[j++];
        }
    }
    return out;
}

std::vector<TestResult> call_de(const OrthologTable& table, ScalingFactor c, double cutoff) {
    if (!(cutoff > 0 && cutoff < 1)) {
        throw DomainError("cutoff must lie strictly between 0 and 1");
    }
    std::vector<TestResult> results(table.size());
    std::vector<std::optional<double>> pvalues(table.size());

    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& g = table[i];
        auto& res = results[i];
        res.gene_id = g.gene_id;
        if (!g.testable()) {
            continue;
        }
        const auto p0 = null_success_prob(c, g.length_sp1, g.length_sp2, table.total_sp1(), table.total_sp2());
        const double p = two_sided_exact_pvalue(GeneTestInput(g.count_sp1, g.total_count(), p0));
        pvalues[i] = p;
        res.p_value = p;
        res.de_call = p < cutoff;
        if (res.de_call) {
            const double expected = static_cast<double>(g.total_count()) * p0.p();
            const double observed = static_cast<double>(g.count_sp1);
            if (observed > expected) {
                res.direction = Direction::higher_sp1;
            } else if (observed < expected) {
                res.direction = Direction::higher_sp2;
            }
        }
    }

    const auto qvalues = bh_adjust(std::span<const std::optional<double>>(pvalues));
    for (std::size_t i = 0; i < table.size(); ++i) {
        results[i].q_value = qvalues[i];
    }
    return results;
}

FactorEstimate estimate_factor(const OrthologTable& table, const ConservedSet& conserved, Method method,
                               const GridConfig& grid) {
    FactorEstimate est;
    est.method = method;
    if (method == Method::scbn) {
        est.scbn = scbn_scaling_factor(table, conserved, grid);
        est.factor = est.scbn->factor;
    } else {
        est.median = median_scaling_factor(table, conserved);
        est.factor = est.median->factor;
    }
    return est;
}

Tally tally_calls(std::span<const TestResult> results) {
    Tally t;
    for (const auto& r : results) {
        if (!r.de_call) {
            continue;
        }
        ++t.total;
        if (r.direction == Direction::higher_sp1) {
            ++t.higher_sp1;
        } else if (r.direction == Direction::higher_sp2) {
            ++t.higher_sp2;
        }
    }
    return t;
}

void RunConfig::validate() const {
    if (!(cutoff > 0 && cutoff < 1)) {
        throw DomainError("cutoff must lie strictly between 0 and 1");
    }
    grid.validate();
}

Report analyze(const OrthologTable& table, const ConservedSet& conserved, Method method, const GridConfig& grid,
               double cutoff, std::optional<std::span<const std::string>> eval_ids) {
    Report report;
    report.estimate = estimate_factor(table, conserved, method, grid);
    report.alpha = grid.alpha;
    report.cutoff = cutoff;
    report.genes = table.size();
    report.testable = table.size() - table.untestable_count();
    report.conserved_size = conserved.size();
    report.results = call_de(table, report.estimate.factor, cutoff);
    report.all = tally_calls(report.results);

    if (eval_ids) {
        std::vector<TestResult> subset;
        std::unordered_set<std::size_t> seen;
        for (const auto& id : *eval_ids) {
            if (auto idx = table.find(id); idx && seen.insert(*idx).second) {
                subset.push_back(report.results[*idx]);
            }
        }
        report.eval_size = subset.size();
        report.eval = tally_calls(subset);
    }
    return report;
}

Report run_pipeline(const RunConfig& config) {
    config.validate();
    const auto table = load_counts_tsv(config.counts_path);
    const auto conserved = load_conserved_list(config.conserved_path, table);

    std::optional<std::vector<std::string>> eval_ids;
    if (config.eval_list_path) {
        eval_ids = load_id_list(*config.eval_list_path);
    }

    auto report = eval_ids ? analyze(table, conserved.set, config.method, config.grid, config.cutoff,
                                     std::span<const std::string>(*eval_ids))
                           : analyze(table, conserved.set, config.method, config.grid, config.cutoff);
    report.conserved_unknown = conserved.unknown_ids.size();

    if (config.output_prefix) {
        auto json_path = *config.output_prefix;
        json_path += ".json";
        auto tsv_path = *config.output_prefix;
        tsv_path += ".tsv";
        auto json_out = open_output(json_path);
        write_report_json(json_out, report);
        auto tsv_out = open_output(tsv_path);
        write_results_tsv(tsv_out, report.results);
    }
    return report;
}

void write_results_tsv(std::ostream& out, std::span<const TestResult> results) {
    out << kResultsHeader << '\n';
    for (const auto& r : results) {
        out << r.gene_id << '\t' << (r.p_value ? format_roundtrip(*r.p_value) : "NA") << '\t'
            << (r.q_value ? format_roundtrip(*r.q_value) : "NA") << '\t' << to_string(r.direction) << '\t'
            << (r.de_call ? "true" : "false") << '\n';
    }
}

std::vector<TestResult> parse_results_tsv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "empty file, expected header '" + std::string(kResultsHeader) + "'");
    }
    strip_cr(line);
    if (line != kResultsHeader) {
        throw ParseError(source, 1, "malformed header, expected '" + std::string(kResultsHeader) + "'");
    }
    auto parse_prob = [&](std::string_view field, std::size_t lineno) -> std::optional<double> {
        if (field == "NA") {
            return std::nullopt;
        }
        double v = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !(v > 0 && v <= 1)) {
            throw ParseError(source, lineno, "expected a probability in (0, 1] or NA, got '" + std::string(field) + "'");
        }
        return v;
    };

    std::vector<TestResult> results;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        const auto f = split_tabs(line);
        if (f.size() != 5) {
            throw ParseError(source, lineno, "expected 5 tab-separated fields, found " + std::to_string(f.size()));
        }
        TestResult r;
        r.gene_id = std::string(f[0]);
        r.p_value = parse_prob(f[1], lineno);
        r.q_value = parse_prob(f[2], lineno);
        if (f[3] == "higher_sp1") {
            r.direction = Direction::higher_sp1;
        } else if (f[3] == "higher_sp2") {
            r.direction = Direction::higher_sp2;
        } else if (f[3] != "none") {
            throw ParseError(source, lineno, "unknown direction '" + std::string(f[3]) + "'");
        }
        if (f[4] == "true") {
            r.de_call = true;
        } else if (f[4] != "false") {
            throw ParseError(source, lineno, "de_call must be true or false");
        }
        results.push_back(std::move(r));
    }
    return results;
}

void write_report_json(std::ostream& out, const Report& report) {
    nlohmann::ordered_json j;
    j["method"] = to_string(report.estimate.method);
    j["factor"] = round_sig6(report.estimate.factor.value());
    if (report.estimate.scbn) {
        const auto& obj = report.estimate.scbn->objective;
        j["objective"] = {{"deviation", round_sig6(obj.deviation)},
                          {"rejection_rate", round_sig6(obj.rejection_rate)},
                          {"rejections", obj.rejections},
                          {"tested", obj.tested}};
        j["grid"] = {{"center", round_sig6(report.estimate.scbn->center)},
                     {"final_log_step", round_sig6(std::log(report.estimate.scbn->final_step_ratio))},
                     {"evaluations", report.estimate.scbn->evaluations}};
    } else {
        j["objective"] = nullptr;
    }
    if (report.estimate.median) {
        j["median_filter"] = {{"kept", report.estimate.median->kept},
                              {"fallback", report.estimate.median->filter_fallback}};
    }
    j["genes"] = report.genes;
    j["testable"] = report.testable;
    j["de"] = tally_json(report.all);
    if (report.eval) {
        j["eval"] = tally_json(*report.eval);
        j["eval"]["size"] = report.eval_size;
    }
    j["config"] = {{"alpha", round_sig6(report.alpha)},
                   {"cutoff", round_sig6(report.cutoff)},
                   {"conserved_size", report.conserved_size},
                   {"conserved_unknown", report.conserved_unknown}};
    out << j.dump(2) << '\n';
}

void write_counts_tsv(std::ostream& out, const OrthologTable& table) {
    out << kCountsHeader << '\n';
    for (const auto& r : table.records()) {
        out << r.gene_id << '\t' << r.length_sp1 << '\t' << r.count_sp1 << '\t' << r.length_sp2 << '\t' << r.count_sp2
            << '\n';
    }
}

std::string format_roundtrip(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

std::string format_sig6(double x) {
    char buf[64];
    const int len = std::snprintf(buf, sizeof(buf), "%.6g", x);
    return std::string(buf, static_cast<std::size_t>(len));
}

double round_sig6(double x) {
    if (!std::isfinite(x)) {
        return x;
    }
    return std::stod(format_sig6(x));
}

} // namespace scbn
