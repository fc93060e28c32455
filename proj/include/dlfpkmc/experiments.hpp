// Batch orchestration: run many realizations (engine or lattice), aggregate
// records, and build the CSV artifacts.  Everything here is deterministic
// for a fixed config and seed except wall-clock fields, which stay zero
// unless timing is requested.
#ifndef DLFPKMC_EXPERIMENTS_HPP
#define DLFPKMC_EXPERIMENTS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dlfpkmc/config.hpp"
#include "dlfpkmc/engine.hpp"
#include "dlfpkmc/stats.hpp"

namespace fpkmc::experiments {

struct BatchResult {
  std::vector<RealizationRecord> records;  // ordered by realization index
  WidthTally widths;                       // merged over the batch
};

// Realizations fan out over `threads` workers; records land in index order,
// so output bytes do not depend on scheduling.  Method selection: a positive
// lattice_spacing runs the fixed-lattice sampler, otherwise the engine.
BatchResult run_batch(const config::Experiment& ex, int threads);
BatchResult run_engine_batch(const config::Experiment& ex, int threads);
BatchResult run_lattice_batch(const config::Experiment& ex, int threads);

// CSV builders.  Each returns the complete file content: metadata comment,
// header row, data rows.
std::string realizations_csv(const config::Experiment& ex,
                             const BatchResult& batch);
std::string reactions_csv(const config::Experiment& ex,
                          const BatchResult& batch);
std::string meshes_csv(const config::Experiment& ex, const BatchResult& batch);
std::string survival_csv(const config::Experiment& ex,
                         const std::vector<double>& t,
                         const std::vector<double>& s);
std::string summary_csv(const config::Experiment& ex,
                        const std::vector<std::pair<std::string, double>>& rows);

// Extinction times of completed realizations (NaN rows excluded).
std::vector<double> extinction_times(const BatchResult& batch);

// Reference mean reaction time and survival curve for a two-molecule
// experiment: analytic for V = 0, the finite-difference solver otherwise
// (requires both species to share diffusion and potential).
struct Reference {
  double mean_time = 0.0;
  std::function<double(double)> survival;  // S(t), exact atom at t = 0 kept
  double t_cut = 0.0;                      // S(t_cut) = 0.01
};
Reference two_molecule_reference(const config::Experiment& ex, double dx);

struct ConvergenceLevel {
  double h_p = 0.0;
  stats::MeanCi ci;
  stats::RelativeError rel;
  double kl = 0.0;
};
struct ConvergenceResult {
  double reference_mean = 0.0;
  std::vector<ConvergenceLevel> levels;
  stats::OrderFit order;  // fitted from |mean - reference| vs h_p
};
// Runs the experiment at each pair-mesh width; h_s_max follows 8 h_p unless
// the base config already sets h_s_max = h_p (potential-comparison style).
ConvergenceResult run_convergence(const config::Experiment& base,
                                  const std::vector<double>& h_levels,
                                  int threads);
std::string levels_csv(const config::Experiment& ex,
                       const ConvergenceResult& result);

struct ScalingPoint {
  int n_molecules = 0;
  double mean_wall_seconds = 0.0;
  double mean_hops = 0.0;
  stats::MeanCi extinction;
};
struct ScalingResult {
  std::vector<ScalingPoint> engine;
  std::vector<ScalingPoint> lattice;  // empty when lattice_runs = 0
  stats::OrderFit wall_slope;         // log mean wall time vs log N
};
// Initial counts scale to N/2 per species; timing runs single-threaded.
ScalingResult run_scaling(const config::Experiment& base,
                          const std::vector<int>& n_list,
                          std::uint64_t engine_runs,
                          std::uint64_t lattice_runs);
std::string timing_csv(const config::Experiment& ex,
                       const ScalingResult& result);

}  // namespace fpkmc::experiments

#endif  // DLFPKMC_EXPERIMENTS_HPP
