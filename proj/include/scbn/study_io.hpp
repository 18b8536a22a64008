#ifndef SCBN_STUDY_IO_HPP
#define SCBN_STUDY_IO_HPP

#include "simulation.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

/**
 * @file study_io.hpp
 *
 * @brief JSON forms of simulation configs, study specs and study results.
 *
 * A simulation config is an object whose keys are a subset of
 *
 *     n_orthologs de_rate fold up_rate_sp2 n_unique_sp1 n_unique_sp2 n_unmapped_sp1
 *     n_unmapped_sp2 conserved_size noise_rate depth_sp1 depth_sp2 log_mean log_sd
 *     length_min length_max seed reference
 *
 * where `reference` names a count table whose species-1 rates become the empirical rate source.
 * Missing keys keep their current value and unknown keys are errors.
 *
 * A study spec may contain `preset` (1 to 7), `name`, `replicates`, `master_seed`, `cutoff`,
 * `cutoffs`, `methods`, `grid` (`alpha`, `center`, `span`, `points`, `refine_rounds`,
 * `refine_shrink`), `base` (a config applied to every config of the sweep) and either `configs`
 * (an array of configs) or `sweep` (`{"parameter": name, "values": [...]}` over `base`).
 */

namespace scbn {

/**
 * Apply the keys of a JSON config object to `base`. Relative `reference` paths are resolved
 * against `base_dir`. Throws `ParseError` on malformed JSON and `ValidationError` on bad keys.
 */
SimConfig parse_sim_config(std::istream& in, const std::string& source, const SimConfig& base = SimConfig(),
                           const std::filesystem::path& base_dir = {});

StudySpec parse_study_spec(std::istream& in, const std::string& source, const std::filesystem::path& base_dir = {});
/** Reads a study spec, resolving relative paths against the spec's directory. */
StudySpec load_study_spec(const std::filesystem::path& path);

/** Every config field except the rate source, which is reported through `describe()`. */
void write_sim_config_json(std::ostream& out, const SimConfig& config);
void write_study_json(std::ostream& out, const StudySpec& spec, std::span<const StudyCell> cells);
void write_metrics_json(std::ostream& out, const Metrics& metrics);

} // namespace scbn

#endif
