// Python bindings for the scbn library.

#include "scbn/error.hpp"
#include "scbn/exact_test.hpp"
#include "scbn/normalization.hpp"
#include "scbn/pipeline.hpp"
#include "scbn/simulation.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace py = pybind11;
using namespace scbn;

namespace {

using RecordTuple = std::tuple<std::string, std::int64_t, std::int64_t, std::int64_t, std::int64_t>;

OrthologTable table_from_tuples(const std::vector<RecordTuple>& rows) {
    std::vector<GeneRecord> records;
    records.reserve(rows.size());
    for (const auto& [id, l1, x1, l2, x2] : rows) {
        records.push_back({id, l1, x1, l2, x2});
    }
    return validate_table(std::move(records));
}

std::vector<RecordTuple> table_to_tuples(const OrthologTable& t) {
    std::vector<RecordTuple> out;
    out.reserve(t.size());
    for (const auto& r : t.records()) {
        out.emplace_back(r.gene_id, r.length_sp1, r.count_sp1, r.length_sp2, r.count_sp2);
    }
    return out;
}

ConservedSet conserved_from(const OrthologTable& table, const std::vector<std::string>& ids) {
    return ConservedSet::from_ids(table, ids);
}

std::vector<std::string> truth_names(const std::vector<TruthLabel>& labels) {
    std::vector<std::string> out;
    out.reserve(labels.size());
    for (auto l : labels) {
        out.emplace_back(to_string(l));
    }
    return out;
}

std::vector<TruthLabel> truth_from_names(const std::vector<std::string>& names) {
    std::vector<TruthLabel> out;
    out.reserve(names.size());
    for (const auto& n : names) {
        out.push_back(parse_truth_label(n));
    }
    return out;
}

py::dict tally_dict(const Tally& t) {
    py::dict d;
    d["total"] = t.total;
    d["higher_sp1"] = t.higher_sp1;
    d["higher_sp2"] = t.higher_sp2;
    return d;
}

} // namespace

PYBIND11_MODULE(_scbn, m) {
    m.doc() = "Scale-based normalization and exact testing for cross-species RNA-seq counts";

    auto base = py::register_exception<Error>(m, "ScbnError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception<DomainError>(m, "DomainError", base);
    py::register_exception<ParseError>(m, "ParseError", base);

    py::class_<OrthologTable>(m, "OrthologTable")
        .def(py::init(&table_from_tuples), py::arg("records"),
             "Build a validated table from (gene_id, length_sp1, count_sp1, length_sp2, count_sp2) tuples.")
        .def_static("load", &load_counts_tsv, py::arg("path"), "Read a counts TSV file.")
        .def("records", &table_to_tuples)
        .def("swapped", &OrthologTable::swapped)
        .def("__len__", &OrthologTable::size)
        .def_property_readonly("total_sp1", &OrthologTable::total_sp1)
        .def_property_readonly("total_sp2", &OrthologTable::total_sp2)
        .def_property_readonly("untestable_count", &OrthologTable::untestable_count);

    py::class_<GridConfig>(m, "GridConfig")
        .def(py::init<>())
        .def_readwrite("alpha", &GridConfig::alpha)
        .def_readwrite("center", &GridConfig::center)
        .def_readwrite("span", &GridConfig::span)
        .def_readwrite("coarse_points", &GridConfig::coarse_points)
        .def_readwrite("refine_rounds", &GridConfig::refine_rounds)
        .def_readwrite("refine_shrink", &GridConfig::refine_shrink);

    py::class_<ObjectiveValue>(m, "ObjectiveValue")
        .def_readonly("deviation", &ObjectiveValue::deviation)
        .def_readonly("rejection_rate", &ObjectiveValue::rejection_rate)
        .def_readonly("rejections", &ObjectiveValue::rejections)
        .def_readonly("tested", &ObjectiveValue::tested);

    py::class_<ScbnFit>(m, "ScbnFit")
        .def_property_readonly("factor", [](const ScbnFit& f) { return f.factor.value(); })
        .def_readonly("objective", &ScbnFit::objective)
        .def_readonly("center", &ScbnFit::center)
        .def_readonly("final_step_ratio", &ScbnFit::final_step_ratio)
        .def_readonly("evaluations", &ScbnFit::evaluations);

    py::class_<MedianFit>(m, "MedianFit")
        .def_property_readonly("factor", [](const MedianFit& f) { return f.factor.value(); })
        .def_readonly("kept", &MedianFit::kept)
        .def_readonly("filter_fallback", &MedianFit::filter_fallback);

    m.def(
        "null_success_prob",
        [](double c, std::int64_t l1, std::int64_t l2, std::int64_t n1, std::int64_t n2) {
            return null_success_prob(ScalingFactor(c), l1, l2, n1, n2).p();
        },
        py::arg("c"), py::arg("length_sp1"), py::arg("length_sp2"), py::arg("total_sp1"), py::arg("total_sp2"));

    m.def(
        "two_sided_exact_pvalue",
        [](std::int64_t x1, std::int64_t n, double p0) {
            return two_sided_exact_pvalue(GeneTestInput(x1, n, NullSuccessProb(p0)));
        },
        py::arg("x1"), py::arg("n"), py::arg("p0"));

    m.def(
        "type1_deviation",
        [](const OrthologTable& t, const std::vector<std::string>& conserved, double c, double alpha) {
            return empirical_type1_deviation(t, conserved_from(t, conserved), ScalingFactor(c), alpha);
        },
        py::arg("table"), py::arg("conserved"), py::arg("c"), py::arg("alpha") = GridConfig::Defaults::alpha);

    m.def(
        "scbn_scaling_factor",
        [](const OrthologTable& t, const std::vector<std::string>& conserved, const GridConfig& grid) {
            return scbn_scaling_factor(t, conserved_from(t, conserved), grid);
        },
        py::arg("table"), py::arg("conserved"), py::arg("grid") = GridConfig());

    m.def(
        "median_scaling_factor",
        [](const OrthologTable& t, const std::vector<std::string>& conserved) {
            return median_scaling_factor(t, conserved_from(t, conserved));
        },
        py::arg("table"), py::arg("conserved"));

    m.def(
        "estimate_pfdr",
        [](std::vector<double> null, std::vector<double> alt, double prior_h0, double prior_h1, double alpha) {
            PfdrInputs in;
            in.pvalues_null = std::move(null);
            in.pvalues_alt = std::move(alt);
            in.prior_h0 = prior_h0;
            in.prior_h1 = prior_h1;
            in.alpha = alpha;
            return estimate_pfdr(in);
        },
        py::arg("pvalues_null"), py::arg("pvalues_alt"), py::arg("prior_h0") = 0.5, py::arg("prior_h1") = 0.5,
        py::arg("alpha") = 0.05, "Returns None when no gene is rejected.");

    m.def(
        "bh_adjust", [](const std::vector<std::optional<double>>& p) { return bh_adjust(p); }, py::arg("pvalues"),
        "Benjamini-Hochberg q-values; None entries stay None and do not count towards m.");

    py::class_<TestResult>(m, "TestResult")
        .def_readonly("gene_id", &TestResult::gene_id)
        .def_readonly("p_value", &TestResult::p_value)
        .def_readonly("q_value", &TestResult::q_value)
        .def_property_readonly("direction", [](const TestResult& r) { return std::string(to_string(r.direction)); })
        .def_readonly("de_call", &TestResult::de_call);

    m.def(
        "call_de", [](const OrthologTable& t, double c, double cutoff) { return call_de(t, ScalingFactor(c), cutoff); },
        py::arg("table"), py::arg("c"), py::arg("cutoff") = 1e-6);

    m.def(
        "analyze",
        [](const OrthologTable& t, const std::vector<std::string>& conserved, const std::string& method,
           const GridConfig& grid, double cutoff) {
            const auto r = analyze(t, conserved_from(t, conserved), parse_method(method), grid, cutoff);
            py::dict d;
            d["method"] = std::string(to_string(r.estimate.method));
            d["factor"] = r.estimate.factor.value();
            d["genes"] = r.genes;
            d["testable"] = r.testable;
            d["de"] = tally_dict(r.all);
            d["results"] = r.results;
            return d;
        },
        py::arg("table"), py::arg("conserved"), py::arg("method") = "scbn", py::arg("grid") = GridConfig(),
        py::arg("cutoff") = 1e-6, "Estimate the factor, test every gene and tally the DE calls.");

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_static("study1", &SimConfig::study1)
        .def_static("study2", &SimConfig::study2)
        .def_static("study3", &SimConfig::study3)
        .def_static("study4", &SimConfig::study4)
        .def_static("study7", &SimConfig::study7)
        .def_readwrite("n_orthologs", &SimConfig::n_orthologs)
        .def_readwrite("de_rate", &SimConfig::de_rate)
        .def_readwrite("fold", &SimConfig::fold)
        .def_readwrite("up_rate_sp2", &SimConfig::up_rate_sp2)
        .def_readwrite("n_unique_sp1", &SimConfig::n_unique_sp1)
        .def_readwrite("n_unique_sp2", &SimConfig::n_unique_sp2)
        .def_readwrite("n_unmapped_sp1", &SimConfig::n_unmapped_sp1)
        .def_readwrite("n_unmapped_sp2", &SimConfig::n_unmapped_sp2)
        .def_readwrite("conserved_size", &SimConfig::conserved_size)
        .def_readwrite("noise_rate", &SimConfig::noise_rate)
        .def_readwrite("depth_sp1", &SimConfig::depth_sp1)
        .def_readwrite("depth_sp2", &SimConfig::depth_sp2)
        .def_readwrite("seed", &SimConfig::seed)
        .def("use_reference", [](SimConfig& c, const OrthologTable& ref) { c.rate_source = RateSource::from_table(ref); })
        .def("validate", &SimConfig::validate);

    py::class_<SimulatedDataset>(m, "SimulatedDataset")
        .def_readonly("table", &SimulatedDataset::table)
        .def_property_readonly("truth", [](const SimulatedDataset& d) { return truth_names(d.truth); })
        .def_property_readonly("conserved",
                               [](const SimulatedDataset& d) {
                                   std::vector<std::string> ids;
                                   for (auto i : d.reported_conserved.indices()) {
                                       ids.push_back(d.table[i].gene_id);
                                   }
                                   return ids;
                               })
        .def_property_readonly("true_c", [](const SimulatedDataset& d) { return d.true_c.value(); })
        .def_readonly("rate_source", &SimulatedDataset::rate_source);

    m.def("generate_dataset", &generate_dataset, py::arg("config"));

    py::class_<Metrics>(m, "Metrics")
        .def_readonly("false_discoveries", &Metrics::false_discoveries)
        .def_readonly("true_positives", &Metrics::true_positives)
        .def_readonly("false_negatives", &Metrics::false_negatives)
        .def_readonly("precision", &Metrics::precision)
        .def_readonly("sensitivity", &Metrics::sensitivity)
        .def_readonly("f_score", &Metrics::f_score);

    m.def(
        "evaluate_run",
        [](const std::vector<bool>& calls, const std::vector<std::string>& truth) {
            // std::vector<bool> has no contiguous storage.
            std::unique_ptr<bool[]> flags(new bool[calls.size()]);
            std::copy(calls.begin(), calls.end(), flags.get());
            const auto labels = truth_from_names(truth);
            return evaluate_run(std::span<const bool>(flags.get(), calls.size()), labels);
        },
        py::arg("calls"), py::arg("truth"));
}
