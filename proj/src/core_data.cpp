#include "scbn/core_data.hpp"

#include "scbn/error.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace scbn {

std::optional<std::size_t> OrthologTable::find(std::string_view gene_id) const {
    auto it = index_.find(std::string(gene_id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

OrthologTable OrthologTable::swapped() const {
    std::vector<GeneRecord> flipped;
    flipped.reserve(records_.size());
    for (const auto& r : records_) {
        flipped.push_back(GeneRecord{r.gene_id, r.length_sp2, r.count_sp2, r.length_sp1, r.count_sp1});
    }
    return validate_table(std::move(flipped));
}

OrthologTable validate_table(std::vector<GeneRecord> raw) {
    OrthologTable table;
    table.index_.reserve(raw.size());

    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto& r = raw[i];
        if (r.length_sp1 < 1 || r.length_sp2 < 1) {
            throw ValidationError("gene '" + r.gene_id + "' has a non-positive length");
        }
        if (r.count_sp1 < 0 || r.count_sp2 < 0) {
            throw ValidationError("gene '" + r.gene_id + "' has a negative count");
        }
        if (!table.index_.emplace(r.gene_id, i).second) {
            throw ValidationError("duplicate gene_id '" + r.gene_id + "'");
        }
        table.total_sp1_ += r.count_sp1;
        table.total_sp2_ += r.count_sp2;
        if (!r.testable()) {
            ++table.untestable_;
        }
    }

    if (table.total_sp1_ <= 0 || table.total_sp2_ <= 0) {
        throw ValidationError("each species needs a positive total read count");
    }

    table.records_ = std::move(raw);
    return table;
}

ConservedSet ConservedSet::from_ids(const OrthologTable& table, std::span<const std::string> gene_ids) {
    std::vector<std::size_t> indices;
    indices.reserve(gene_ids.size());
    std::unordered_set<std::size_t> seen;
    for (const auto& id : gene_ids) {
        auto idx = table.find(id);
        if (!idx) {
            throw ValidationError("conserved gene '" + id + "' is not in the ortholog table");
        }
        if (seen.insert(*idx).second) {
            indices.push_back(*idx);
        }
    }
    if (indices.empty()) {
        throw ValidationError("conserved gene set is empty");
    }
    return ConservedSet(std::move(indices));
}

ConservedSet ConservedSet::from_indices(const OrthologTable& table, std::vector<std::size_t> indices) {
    std::unordered_set<std::size_t> seen;
    std::vector<std::size_t> unique;
    unique.reserve(indices.size());
    for (auto i : indices) {
        if (i >= table.size()) {
            throw ValidationError("conserved gene index " + std::to_string(i) + " is out of range");
        }
        if (seen.insert(i).second) {
            unique.push_back(i);
        }
    }
    if (unique.empty()) {
        throw ValidationError("conserved gene set is empty");
    }
    return ConservedSet(std::move(unique));
}

ScalingFactor::ScalingFactor(double c) : value_(c) {
    if (!(c > 0) || !std::isfinite(c)) {
        throw DomainError("scaling factor must be positive and finite");
    }
}

} // namespace scbn
