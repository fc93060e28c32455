#include "dlfpkmc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <thread>

#include "dlfpkmc/oracles/analytic.hpp"
#include "dlfpkmc/oracles/fixed_lattice.hpp"
#include "dlfpkmc/oracles/fokker_planck.hpp"

namespace fpkmc::experiments {

namespace {

using config::format_double;

BatchResult run_parallel(
    const config::Experiment& ex, int threads,
    const std::function<RealizationRecord(std::uint64_t)>& one) {
  const std::uint64_t n = ex.realizations;
  BatchResult out;
  out.records.resize(n);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = static_cast<unsigned>(std::clamp<std::uint64_t>(
      threads > 0 ? static_cast<unsigned>(threads) : hw, 1, n ? n : 1));

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  auto work = [&]() {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        out.records[i] = one(i);
      } catch (...) {
        if (!failed.exchange(true)) first_error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) std::rethrow_exception(first_error);
  for (const auto& rec : out.records) out.widths.merge(rec.widths);
  return out;
}

}  // namespace

BatchResult run_engine_batch(const config::Experiment& ex, int threads) {
  return run_parallel(ex, threads, [&](std::uint64_t i) {
    return run_realization(ex.net, ex.world, ex.params, ex.initial, ex.stop,
                           ex.snapshot_times, ex.seed, i, ex.timing);
  });
}

BatchResult run_lattice_batch(const config::Experiment& ex, int threads) {
  if (!(ex.lattice_spacing > 0.0))
    throw std::invalid_argument("lattice batch needs a positive spacing");
  return run_parallel(ex, threads, [&](std::uint64_t i) {
    return lattice::run_lattice_realization(ex.net, ex.world,
                                            ex.lattice_spacing, ex.initial,
                                            ex.stop, ex.snapshot_times,
                                            ex.seed, i, ex.timing);
  });
}

BatchResult run_batch(const config::Experiment& ex, int threads) {
  return ex.lattice_spacing > 0.0 ? run_lattice_batch(ex, threads)
                                  : run_engine_batch(ex, threads);
}

std::string realizations_csv(const config::Experiment& ex,
                             const BatchResult& batch) {
  std::string out = config::csv_metadata_line(ex.hash(), ex.seed);
  out += "seed_index,n_initial_per_species,extinction_time,"
         "t0_reaction_count,hop_count,wall_seconds\n";
  for (const auto& rec : batch.records) {
    std::string counts;
    for (std::size_t s = 0; s < rec.initial_counts.size(); ++s) {
      if (s) counts += ';';
      counts += std::to_string(rec.initial_counts[s]);
    }
    out += config::csv_line(
        {std::to_string(rec.realization_index), counts,
         format_double(rec.extinction_time),
         std::to_string(rec.t0_reaction_count), std::to_string(rec.hop_count),
         format_double(ex.timing ? rec.wall_seconds : 0.0)});
  }
  return out;
}

std::string reactions_csv(const config::Experiment& ex,
                          const BatchResult& batch) {
  std::string out = config::csv_metadata_line(ex.hash(), ex.seed);
  out += "realization,reaction_index,time,location\n";
  for (const auto& rec : batch.records)
    for (std::size_t k = 0; k < rec.reactions.size(); ++k)
      out += config::csv_line({std::to_string(rec.realization_index),
                               std::to_string(k),
                               format_double(rec.reactions[k].time),
                               format_double(rec.reactions[k].location)});
  return out;
}

std::string meshes_csv(const config::Experiment& ex, const BatchResult& batch) {
  // Width keys rounded to six significant digits so endpoint-snapping dust
  // from different realizations merges into one row.
  std::map<double, std::uint64_t> rows;
  for (const auto& [width, uses] : batch.widths.entries()) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", width);
    rows[std::strtod(buf, nullptr)] += uses;
  }
  std::string out = config::csv_metadata_line(ex.hash(), ex.seed);
  out += "width,use_count\n";
  for (const auto& [width, uses] : rows)
    out += config::csv_line({format_double(width), std::to_string(uses)});
  return out;
}

std::string survival_csv(const config::Experiment& ex,
                         const std::vector<double>& t,
                         const std::vector<double>& s) {
  std::string out = config::csv_metadata_line(ex.hash(), ex.seed);
  out += "t,S\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    out += config::csv_line({format_double(t[i]), format_double(s[i])});
  return out;
}

std::string summary_csv(
    const config::Experiment& ex,
    const std::vector<std::pair<std::string, double>>& rows) {
  std::string out = config::csv_metadata_line(ex.hash(), ex.seed);
  out += "metric,value\n";
  for (const auto& [name, value] : rows)
    out += config::csv_line({name, format_double(value)});
  return out;
}

std::vector<double> extinction_times(const BatchResult& batch) {
  std::vector<double> out;
  out.reserve(batch.records.size());
  for (const auto& rec : batch.records)
    if (std::isfinite(rec.extinction_time))
      out.push_back(rec.extinction_time);
  return out;
}

Reference two_molecule_reference(const config::Experiment& ex, double dx) {
  const auto& species = ex.net.species();
  if (ex.net.bimolecular().size() != 1 || species.size() != 2)
    throw std::invalid_argument(
        "reference curves cover one bimolecular channel of two species");
  const auto& ch = ex.net.bimolecular()[0];
  const auto& a = species[0];
  const auto& b = species[1];
  if (a.diffusion != b.diffusion)
    throw std::invalid_argument("reference needs equal diffusion coefficients");
  for (int i = 0; i <= 32; ++i) {
    const double x = ex.world.length * static_cast<double>(i) / 32.0;
    if (a.potential(x) != b.potential(x))
      throw std::invalid_argument("reference needs one shared potential");
  }

  Reference ref;
  if (a.potential.is_zero() && b.potential.is_zero()) {
    analytic::TwoMoleculeSpec spec;
    spec.length = ex.world.length;
    spec.diffusion = a.diffusion;
    spec.reaction_radius = ch.reaction_radius;
    ref.mean_time = analytic::mean_reaction_time(spec);
    ref.survival = [spec](double t) { return analytic::survival(spec, t); };
    ref.t_cut = analytic::survival_inverse(spec, 0.01);
    return ref;
  }

  fp::PairPdeSpec spec;
  spec.length = ex.world.length;
  spec.diffusion = a.diffusion;
  spec.reaction_radius = ch.reaction_radius;
  spec.dx = dx;
  spec.potential = a.potential;
  fp::PairPde pde(spec);
  ref.mean_time = pde.stationary_mean_time();
  auto curve = std::make_shared<fp::SurvivalCurve>(
      pde.run_hybrid(0.07, dx / 16.0, 0.005, 50.0, {}));
  ref.survival = [curve](double t) {
    const auto& ts = curve->t;
    const auto& ss = curve->s;
    if (t <= ts.front()) return ss.front();
    if (t >= ts.back()) return ss.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - ts.begin());
    const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    return ss[i - 1] + w * (ss[i] - ss[i - 1]);
  };
  // First crossing of S = 0.01 on the curve, linearly interpolated.
  const auto& ts = curve->t;
  const auto& ss = curve->s;
  ref.t_cut = ts.back();
  for (std::size_t i = 1; i < ss.size(); ++i) {
    if (ss[i] <= 0.01) {
      const double w = (ss[i - 1] - 0.01) / (ss[i - 1] - ss[i]);
      ref.t_cut = ts[i - 1] + w * (ts[i] - ts[i - 1]);
      break;
    }
  }
  return ref;
}

ConvergenceResult run_convergence(const config::Experiment& base,
                                  const std::vector<double>& h_levels,
                                  int threads) {
  if (h_levels.size() < 2)
    throw std::invalid_argument("need at least two mesh levels");
  const bool matched_meshes = base.params.h_s_max == base.params.h_p;

  ConvergenceResult result;
  const Reference ref = two_molecule_reference(
      base, base.net.bimolecular()[0].reaction_radius / 8.0);
  result.reference_mean = ref.mean_time;
  const auto truth_bins = stats::bin_from_survival(ref.survival, 9, ref.t_cut);

  std::vector<double> widths, errors;
  for (double h_p : h_levels) {
    config::Experiment ex = base;
    ex.params.h_p = h_p;
    ex.params.h_s_max = matched_meshes ? h_p : 8.0 * h_p;
    const BatchResult batch = run_engine_batch(ex, threads);
    const auto times = extinction_times(batch);

    ConvergenceLevel level;
    level.h_p = h_p;
    level.ci = stats::mean_ci(times);
    level.rel = stats::relative_error_with_bars(ref.mean_time, level.ci);
    level.kl = stats::kl_divergence(
        truth_bins, stats::bin_reaction_times(times, 9, ref.t_cut));
    result.levels.push_back(level);
    widths.push_back(h_p);
    errors.push_back(std::abs(level.ci.mean - ref.mean_time));
  }
  if (widths.size() >= 3) {
    result.order = stats::convergence_order(widths, errors);
  } else {
    result.order.slope = std::log(errors[1] / errors[0]) /
                         std::log(widths[1] / widths[0]);
    result.order.n_used = 2;
  }
  return result;
}

std::string levels_csv(const config::Experiment& ex,
                       const ConvergenceResult& result) {
  std::string out = config::csv_metadata_line(ex.hash(), ex.seed);
  out += "h_p,mean_time,ci_half_width,reference,relative_error,"
         "relative_half_width,kl,resolved_to_noise\n";
  for (const auto& level : result.levels)
    out += config::csv_line(
        {format_double(level.h_p), format_double(level.ci.mean),
         format_double(level.ci.half_width), format_double(result.reference_mean),
         format_double(level.rel.value), format_double(level.rel.half_width),
         format_double(level.kl), level.rel.resolved_to_noise ? "1" : "0"});
  return out;
}

namespace {

ScalingPoint scaling_point(const config::Experiment& ex, bool lattice) {
  config::Experiment run = ex;
  run.timing = true;
  const BatchResult batch =
      lattice ? run_lattice_batch(run, 1) : run_engine_batch(run, 1);
  ScalingPoint pt;
  for (const auto& pl : run.initial) pt.n_molecules += pl.count;
  double wall = 0.0, hops = 0.0;
  for (const auto& rec : batch.records) {
    wall += rec.wall_seconds;
    hops += static_cast<double>(rec.hop_count);
  }
  pt.mean_wall_seconds = wall / static_cast<double>(batch.records.size());
  pt.mean_hops = hops / static_cast<double>(batch.records.size());
  pt.extinction = stats::mean_ci(extinction_times(batch));
  return pt;
}

}  // namespace

ScalingResult run_scaling(const config::Experiment& base,
                          const std::vector<int>& n_list,
                          std::uint64_t engine_runs,
                          std::uint64_t lattice_runs) {
  if (base.initial.size() != 2)
    throw std::invalid_argument("scaling expects one placement per species");
  ScalingResult result;
  std::vector<double> ns, walls;
  for (int n : n_list) {
    if (n < 2 || n % 2 != 0)
      throw std::invalid_argument("molecule counts must be even and >= 2");
    config::Experiment ex = base;
    ex.initial[0].count = ex.initial[1].count = n / 2;

    ex.realizations = engine_runs;
    ex.lattice_spacing = 0.0;
    result.engine.push_back(scaling_point(ex, false));
    ns.push_back(static_cast<double>(n));
    walls.push_back(result.engine.back().mean_wall_seconds);

    if (lattice_runs > 0) {
      ex.realizations = lattice_runs;
      ex.lattice_spacing = base.lattice_spacing;
      if (!(ex.lattice_spacing > 0.0))
        throw std::invalid_argument("lattice comparison needs lattice_spacing");
      result.lattice.push_back(scaling_point(ex, true));
    }
  }
  if (ns.size() >= 3) result.wall_slope = stats::convergence_order(ns, walls);
  return result;
}

std::string timing_csv(const config::Experiment& ex,
                       const ScalingResult& result) {
  std::string out = config::csv_metadata_line(ex.hash(), ex.seed);
  out += "method,n_molecules,mean_wall_seconds,mean_hops,"
         "mean_extinction_time,ci_half_width\n";
  const auto rows = [&](const std::vector<ScalingPoint>& pts,
                        const char* name) {
    for (const auto& pt : pts)
      out += config::csv_line(
          {name, std::to_string(pt.n_molecules),
           format_double(pt.mean_wall_seconds), format_double(pt.mean_hops),
           format_double(pt.extinction.mean),
           format_double(pt.extinction.half_width)});
  };
  rows(result.engine, "dl-fpkmc");
  rows(result.lattice, "fixed-lattice");
  return out;
}

}  // namespace fpkmc::experiments
