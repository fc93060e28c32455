// Experiment configuration: schema-validated JSON in, fully-typed run
// description out, plus the deterministic formatting used by every CSV.
#ifndef DLFPKMC_CONFIG_HPP
#define DLFPKMC_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dlfpkmc/model.hpp"

namespace fpkmc::config {

struct Experiment {
  ReactionNetwork net;
  WorldSpec world;
  KmcParams params;
  std::vector<InitialPlacement> initial;
  StopRule stop;
  std::uint64_t seed = 0;
  std::uint64_t realizations = 1;
  std::vector<double> snapshot_times;
  bool timing = false;
  // Fixed-lattice runs ignore params and use this spacing instead; 0 means
  // the engine is the intended method.
  double lattice_spacing = 0.0;
  // Output plumbing, excluded from canonical()/hash(): where to write CSVs
  // (flag and environment can override) and, when nonzero, how many grid
  // points the emitted empirical survival curve gets.
  std::string out_dir;
  std::uint64_t survival_points = 0;

  std::uint64_t hash() const;  // FNV-1a over the canonical serialized form
  std::string canonical() const;
};

// Parses and validates configuration text (JSON).  Unknown keys, missing
// required keys, and out-of-range values all throw std::invalid_argument
// with the offending section and key named.
Experiment parse_experiment(const std::string& text);

// Built-in experiment presets, serialized in the same schema.
std::vector<std::string> preset_names();
std::string preset_text(const std::string& name);

// Shortest decimal form that round-trips to the same double ("nan" for
// NaN); integers in plain decimal.  Used for every CSV field.
std::string format_double(double x);

// One CSV line from preformatted fields (joined with commas, '\n' added).
std::string csv_line(const std::vector<std::string>& fields);

// Metadata comment placed above every CSV header.
std::string csv_metadata_line(std::uint64_t config_hash, std::uint64_t seed);

// Atomic-ish whole-file write: build content fully, then write in one go.
void write_file(const std::string& path, const std::string& content);

}  // namespace fpkmc::config

#endif  // DLFPKMC_CONFIG_HPP
