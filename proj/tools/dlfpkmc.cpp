// Batch front end: configure an experiment (file or preset), run it with the
// adaptive-mesh sampler, the exact references, or the fixed-lattice method,
// and write CSV artifacts.  Exit codes: 0 success, 1 runtime failure,
// 2 configuration problem (reported before any file is created).
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dlfpkmc/config.hpp"
#include "dlfpkmc/experiments.hpp"
#include "dlfpkmc/oracles/analytic.hpp"
#include "dlfpkmc/oracles/fokker_planck.hpp"
#include "dlfpkmc/stats.hpp"

namespace {

using fpkmc::config::Experiment;
using fpkmc::config::format_double;

constexpr const char* kOutDirEnvVar = "DLFPKMC_OUT";

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> realizations;
  int threads = 0;  // 0 = all hardware threads
};

void add_common(CLI::App* cmd, CommonOpts& opts, const char* default_preset,
                bool preset_flag = true) {
  auto* config =
      cmd->add_option("--config", opts.config_path, "Path to a config file");
  if (preset_flag) {
    auto* preset =
        cmd->add_option("--preset", opts.preset, "Name of a built-in preset");
    config->excludes(preset);
  }
  if (default_preset) opts.preset = default_preset;
  cmd->add_option("--seed", opts.seed, "Override the master seed");
  cmd->add_option("--realizations", opts.realizations,
                  "Override the realization count");
  cmd->add_option("--out", opts.out,
                  "Output directory (default: config out_dir, then $" +
                      std::string(kOutDirEnvVar) + ", then '.')");
  cmd->add_option("--threads", opts.threads,
                  "Worker threads (0 = all hardware threads)");
}

Experiment load_experiment(const CommonOpts& opts) {
  std::string text;
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path, std::ios::binary);
    if (!in)
      throw std::invalid_argument("cannot open config file '" +
                                  opts.config_path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    text = buffer.str();
  } else if (!opts.preset.empty()) {
    text = fpkmc::config::preset_text(opts.preset);
  } else {
    throw std::invalid_argument("give either --config or --preset");
  }
  Experiment ex = fpkmc::config::parse_experiment(text);
  if (opts.seed) ex.seed = *opts.seed;
  if (opts.realizations) ex.realizations = *opts.realizations;
  return ex;
}

std::string resolve_out_dir(const CommonOpts& opts, const Experiment& ex) {
  if (!opts.out.empty()) return opts.out;
  if (!ex.out_dir.empty()) return ex.out_dir;
  if (const char* env = std::getenv(kOutDirEnvVar); env && *env) return env;
  return ".";
}

void write_csv(const std::string& dir, const std::string& name,
               const std::string& content) {
  std::filesystem::create_directories(dir);
  fpkmc::config::write_file((std::filesystem::path(dir) / name).string(),
                            content);
  std::cout << "wrote " << (std::filesystem::path(dir) / name).string()
            << "\n";
}

// The analytic and finite-difference references cover exactly the
// two-identical-molecules problem; reject other shapes while still in the
// configuration phase so the caller sees exit code 2.
void require_two_molecule(const Experiment& ex) {
  const auto& species = ex.net.species();
  if (species.size() != 2 || ex.net.bimolecular().size() != 1 ||
      !ex.net.unimolecular().empty())
    throw std::invalid_argument(
        "this mode needs exactly two species and one bimolecular channel");
  if (species[0].diffusion != species[1].diffusion)
    throw std::invalid_argument(
        "this mode needs equal diffusion coefficients");
  for (int i = 0; i <= 32; ++i) {
    const double x = ex.world.length * static_cast<double>(i) / 32.0;
    if (species[0].potential(x) != species[1].potential(x))
      throw std::invalid_argument("this mode needs one shared potential");
  }
}

fpkmc::analytic::TwoMoleculeSpec analytic_spec(const Experiment& ex) {
  fpkmc::analytic::TwoMoleculeSpec spec;
  spec.length = ex.world.length;
  spec.diffusion = ex.net.species()[0].diffusion;
  spec.reaction_radius = ex.net.bimolecular()[0].reaction_radius;
  return spec;
}

// Empirical survival of the samples on an even grid from 0 to the largest
// sample; returns (grid, estimate).
std::pair<std::vector<double>, std::vector<double>> survival_on_grid(
    const std::vector<double>& samples, std::uint64_t points) {
  const double t_max = *std::max_element(samples.begin(), samples.end());
  std::vector<double> grid(points);
  for (std::uint64_t i = 0; i < points; ++i)
    grid[i] = t_max * static_cast<double>(i) / static_cast<double>(points - 1);
  auto cdf = fpkmc::stats::empirical_survival(samples, grid);
  return {std::move(grid), std::move(cdf.estimate)};
}

int config_error(const std::exception& e) {
  std::cerr << "config error: " << e.what() << "\n";
  return 2;
}

int run_error(const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  return 1;
}

int run_simulate(const CommonOpts& opts, bool timing) {
  Experiment ex;
  std::string out_dir;
  try {
    ex = load_experiment(opts);
    if (timing) ex.timing = true;
    out_dir = resolve_out_dir(opts, ex);
  } catch (const std::exception& e) {
    return config_error(e);
  }
  try {
    const auto batch = fpkmc::experiments::run_batch(ex, opts.threads);
    write_csv(out_dir, "realizations.csv",
              fpkmc::experiments::realizations_csv(ex, batch));
    write_csv(out_dir, "reactions.csv",
              fpkmc::experiments::reactions_csv(ex, batch));
    write_csv(out_dir, "meshes.csv",
              fpkmc::experiments::meshes_csv(ex, batch));

    const auto times = fpkmc::experiments::extinction_times(batch);
    if (ex.survival_points > 1 && !times.empty()) {
      const auto [grid, s] = survival_on_grid(times, ex.survival_points);
      write_csv(out_dir, "survival.csv",
                fpkmc::experiments::survival_csv(ex, grid, s));
    }
    std::cout << "realizations=" << batch.records.size() << "\n";
    if (!times.empty()) {
      const auto ci = fpkmc::stats::mean_ci(times);
      std::uint64_t immediate = 0;
      for (const auto& rec : batch.records)
        if (rec.t0_reaction_count > 0) ++immediate;
      std::cout << "mean_extinction_time=" << format_double(ci.mean) << "\n"
                << "ci99_half_width=" << format_double(ci.half_width) << "\n"
                << "immediate_reaction_fraction="
                << format_double(static_cast<double>(immediate) /
                                 static_cast<double>(batch.records.size()))
                << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    return run_error(e);
  }
}

int run_oracle(const CommonOpts& opts, const std::string& mode, double dx,
               int levels, const std::string& stepper, double t_end,
               double spacing, std::uint64_t points) {
  Experiment ex;
  std::string out_dir;
  try {
    ex = load_experiment(opts);
    out_dir = resolve_out_dir(opts, ex);
    if (mode == "analytic" || mode == "pde") require_two_molecule(ex);
    if (mode == "analytic" && !ex.net.species()[0].potential.is_zero())
      throw std::invalid_argument(
          "analytic mode covers the zero potential only; use --mode pde");
    if (points < 2)
      throw std::invalid_argument("--points needs at least two grid points");
    if (levels < 1) throw std::invalid_argument("--levels must be positive");
  } catch (const std::exception& e) {
    return config_error(e);
  }

  try {
    std::vector<std::pair<std::string, double>> summary;

    if (mode == "analytic") {
      const auto spec = analytic_spec(ex);
      const double mean = fpkmc::analytic::mean_reaction_time(spec);
      const double t_max = fpkmc::analytic::survival_inverse(spec, 0.001);
      std::vector<double> grid(points), s(points);
      for (std::uint64_t i = 0; i < points; ++i) {
        grid[i] =
            t_max * static_cast<double>(i) / static_cast<double>(points - 1);
        s[i] = fpkmc::analytic::survival(spec, grid[i]);
      }
      write_csv(out_dir, "survival.csv",
                fpkmc::experiments::survival_csv(ex, grid, s));
      summary.emplace_back("mean_time", mean);
      summary.emplace_back(
          "mean_time_alt_series",
          fpkmc::analytic::mean_reaction_time_double_sum(spec));
      summary.emplace_back("survival_zero_plus",
                           fpkmc::analytic::survival(spec, 0.0));
      summary.emplace_back("t_end", t_max);
      std::cout << "mean_time=" << format_double(mean) << "\n";
    } else if (mode == "pde") {
      const auto& sp = ex.net.species()[0];
      const bool zero_v = sp.potential.is_zero();
      const double r = ex.net.bimolecular()[0].reaction_radius;
      const double dx0 = dx > 0.0 ? dx : r / 4.0;

      double reference = 0.0;
      if (zero_v) {
        reference = fpkmc::analytic::mean_reaction_time(analytic_spec(ex));
        summary.emplace_back("reference_mean", reference);
      }
      std::vector<double> widths, errors;
      fpkmc::fp::SurvivalCurve finest;
      for (int level = 0; level < levels; ++level) {
        fpkmc::fp::PairPdeSpec spec;
        spec.length = ex.world.length;
        spec.diffusion = sp.diffusion;
        spec.reaction_radius = r;
        spec.dx = dx0 / static_cast<double>(1 << level);
        spec.potential = sp.potential;
        const fpkmc::fp::PairPde pde(spec);
        fpkmc::fp::SurvivalCurve curve;
        if (stepper == "cn") {
          curve = pde.run(fpkmc::fp::Stepper::CrankNicolson, spec.dx / 16.0,
                          t_end);
        } else if (stepper == "tga") {
          curve = pde.run(fpkmc::fp::Stepper::Tga, spec.dx * spec.dx, t_end);
        } else {
          curve = pde.run_hybrid(0.07, spec.dx / 16.0, 0.005, t_end);
        }
        const double mean = fpkmc::fp::mean_time_from_curve(curve);
        const std::string tag = "_dx_" + format_double(spec.dx);
        summary.emplace_back("mean_time" + tag, mean);
        summary.emplace_back("stationary_mean" + tag,
                             pde.stationary_mean_time());
        if (zero_v) {
          summary.emplace_back("relative_error" + tag,
                               std::abs(mean - reference) / reference);
          widths.push_back(spec.dx);
          errors.push_back(std::abs(mean - reference));
        }
        finest = std::move(curve);
        std::cout << "dx=" << format_double(spec.dx)
                  << " mean_time=" << format_double(mean) << "\n";
      }
      write_csv(out_dir, "survival.csv",
                fpkmc::experiments::survival_csv(ex, finest.t, finest.s));
      if (zero_v && levels >= 2) {
        const double order =
            levels >= 3
                ? fpkmc::stats::convergence_order(widths, errors).slope
                : std::log(errors[1] / errors[0]) /
                      std::log(widths[1] / widths[0]);
        summary.emplace_back("order", order);
        std::cout << "order=" << format_double(order) << "\n";
      }
    } else {  // fixed-lattice
      if (!(spacing > 0.0))
        spacing = ex.lattice_spacing > 0.0 ? ex.lattice_spacing
                                           : ex.net.max_reaction_radius();
      ex.lattice_spacing = spacing;
      const auto batch =
          fpkmc::experiments::run_lattice_batch(ex, opts.threads);
      const auto times = fpkmc::experiments::extinction_times(batch);
      if (times.empty())
        throw std::runtime_error("no realization reached extinction");
      const auto ci = fpkmc::stats::mean_ci(times);
      const auto [grid, s] = survival_on_grid(times, points);
      write_csv(out_dir, "survival.csv",
                fpkmc::experiments::survival_csv(ex, grid, s));
      summary.emplace_back("lattice_spacing", spacing);
      summary.emplace_back("mean_time", ci.mean);
      summary.emplace_back("ci99_half_width", ci.half_width);
      summary.emplace_back("n_samples", static_cast<double>(ci.n));
      double hops = 0.0;
      for (const auto& rec : batch.records)
        hops += static_cast<double>(rec.hop_count);
      summary.emplace_back(
          "mean_hops", hops / static_cast<double>(batch.records.size()));
      const auto& species = ex.net.species();
      if (species.size() == 2 && ex.net.bimolecular().size() == 1 &&
          species[0].potential.is_zero() && species[1].potential.is_zero() &&
          species[0].diffusion == species[1].diffusion) {
        const double reference =
            fpkmc::analytic::mean_reaction_time(analytic_spec(ex));
        summary.emplace_back("reference_mean", reference);
        summary.emplace_back("z_score", (ci.mean - reference) /
                                            (ci.half_width / 2.576));
      }
      std::cout << "mean_time=" << format_double(ci.mean) << " +- "
                << format_double(ci.half_width) << " (99% CI)\n";
    }

    write_csv(out_dir, "summary.csv",
              fpkmc::experiments::summary_csv(ex, summary));
    return 0;
  } catch (const std::exception& e) {
    return run_error(e);
  }
}

int run_convergence(const CommonOpts& opts, int levels) {
  Experiment ex;
  std::string out_dir;
  std::vector<double> h_levels;
  try {
    ex = load_experiment(opts);
    out_dir = resolve_out_dir(opts, ex);
    require_two_molecule(ex);
    if (levels < 2)
      throw std::invalid_argument("--levels must be at least 2");
    const double r = ex.net.bimolecular()[0].reaction_radius;
    for (int i = 0; i < levels; ++i)
      h_levels.push_back(r / static_cast<double>(2 << i));
  } catch (const std::exception& e) {
    return config_error(e);
  }
  try {
    const auto result =
        fpkmc::experiments::run_convergence(ex, h_levels, opts.threads);
    write_csv(out_dir, "convergence.csv",
              fpkmc::experiments::levels_csv(ex, result));
    std::cout << "reference_mean=" << format_double(result.reference_mean)
              << "\n";
    for (const auto& level : result.levels)
      std::cout << "h_p=" << format_double(level.h_p)
                << " mean=" << format_double(level.ci.mean)
                << " rel_err=" << format_double(level.rel.value)
                << " kl=" << format_double(level.kl)
                << (level.rel.resolved_to_noise ? " (resolved to noise)" : "")
                << "\n";
    std::cout << "order=" << format_double(result.order.slope) << "\n";
    return 0;
  } catch (const std::exception& e) {
    return run_error(e);
  }
}

int run_scaling(const CommonOpts& opts, const std::vector<int>& n_list,
                std::uint64_t lattice_runs) {
  Experiment ex;
  std::string out_dir;
  try {
    ex = load_experiment(opts);
    out_dir = resolve_out_dir(opts, ex);
    if (n_list.empty()) throw std::invalid_argument("--n-list is empty");
    for (int n : n_list)
      if (n < 2 || n % 2 != 0)
        throw std::invalid_argument(
            "--n-list entries must be even and at least 2");
    if (ex.initial.size() != 2)
      throw std::invalid_argument(
          "scaling needs one placement per species (two species)");
    if (lattice_runs > 0 && !(ex.lattice_spacing > 0.0))
      throw std::invalid_argument(
          "lattice comparison needs lattice_spacing in the config");
  } catch (const std::exception& e) {
    return config_error(e);
  }
  try {
    const auto result = fpkmc::experiments::run_scaling(
        ex, n_list, ex.realizations, lattice_runs);
    write_csv(out_dir, "timing.csv",
              fpkmc::experiments::timing_csv(ex, result));
    for (const auto& pt : result.engine)
      std::cout << "N=" << pt.n_molecules << " wall="
                << format_double(pt.mean_wall_seconds)
                << "s hops=" << format_double(pt.mean_hops) << "\n";
    if (result.engine.size() >= 3)
      std::cout << "wall_time_slope=" << format_double(result.wall_slope.slope)
                << "\n";
    return 0;
  } catch (const std::exception& e) {
    return run_error(e);
  }
}

int run_presets(const std::string& name) {
  try {
    if (name.empty()) {
      for (const auto& preset : fpkmc::config::preset_names())
        std::cout << preset << "\n";
    } else {
      std::cout << fpkmc::config::preset_text(name);
    }
    return 0;
  } catch (const std::exception& e) {
    return config_error(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "1D particle-based reaction-drift-diffusion sampler "
      "(adaptive-mesh first-passage kinetic Monte Carlo) with exact "
      "references and a fixed-lattice baseline"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand(
      "simulate", "Run realizations and write realizations/reactions/meshes "
                  "CSVs (plus survival.csv when the config asks for it)");
  CommonOpts sim_opts;
  bool sim_timing = false;
  add_common(simulate, sim_opts, nullptr);
  simulate->add_flag("--timing", sim_timing,
                     "Record wall-clock seconds per realization");

  auto* oracle = app.add_subcommand(
      "oracle", "Evaluate a reference solution and write survival/summary "
                "CSVs");
  CommonOpts oracle_opts;
  std::string oracle_mode;
  double oracle_dx = 0.0;
  int oracle_levels = 1;
  std::string oracle_stepper = "cn";
  double oracle_t_end = 0.6;
  double oracle_spacing = 0.0;
  std::uint64_t oracle_points = 513;
  add_common(oracle, oracle_opts, "vzero");
  oracle->add_option("--mode", oracle_mode, "Reference method")
      ->required()
      ->check(CLI::IsMember({"analytic", "pde", "fixed-lattice"}));
  oracle->add_option("--dx", oracle_dx,
                     "Finite-difference spacing (default: radius/4)");
  oracle->add_option("--levels", oracle_levels,
                     "Spacing halvings for a convergence summary (pde mode)");
  oracle->add_option("--stepper", oracle_stepper, "Time stepper (pde mode)")
      ->check(CLI::IsMember({"cn", "tga", "hybrid"}));
  oracle->add_option("--t-end", oracle_t_end, "Integration horizon (pde mode)");
  oracle->add_option("--spacing", oracle_spacing,
                     "Lattice spacing (fixed-lattice mode; default: reaction "
                     "radius)");
  oracle->add_option("--points", oracle_points, "Survival grid points");

  auto* convergence = app.add_subcommand(
      "convergence", "Mean-time error vs pair-mesh width against the "
                     "matching reference");
  CommonOpts conv_opts;
  int conv_levels = 3;
  std::string conv_preset;
  convergence
      ->add_option("preset", conv_preset,
                   "Two-molecule preset (vzero, vcos, vstep, one-well, "
                   "two-well); or use --config")
      ->check(CLI::IsMember({"vzero", "vcos", "vstep", "one-well", "two-well"}));
  add_common(convergence, conv_opts, nullptr, /*preset_flag=*/false);
  convergence->add_option("--levels", conv_levels,
                          "Mesh levels, halving from radius/2");

  auto* scaling = app.add_subcommand(
      "scaling", "Wall time and hop counts vs molecule count");
  CommonOpts scaling_opts;
  std::vector<int> scaling_ns{32, 64, 128, 256, 512, 1024};
  std::uint64_t scaling_lattice_runs = 0;
  add_common(scaling, scaling_opts, "scaling");
  scaling->add_option("--n-list", scaling_ns, "Molecule counts")
      ->delimiter(',');
  scaling->add_option("--lattice-realizations", scaling_lattice_runs,
                      "Also time the fixed-lattice method with this many "
                      "runs per point");

  auto* presets = app.add_subcommand(
      "presets", "List built-in presets, or print one as config text");
  std::string presets_name;
  presets->add_option("name", presets_name, "Preset to print");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) return run_simulate(sim_opts, sim_timing);
  if (oracle->parsed())
    return run_oracle(oracle_opts, oracle_mode, oracle_dx, oracle_levels,
                      oracle_stepper, oracle_t_end, oracle_spacing,
                      oracle_points);
  if (convergence->parsed()) {
    if (!conv_preset.empty()) {
      if (!conv_opts.config_path.empty()) {
        std::cerr << "config error: give a preset name or --config, not "
                     "both\n";
        return 2;
      }
      conv_opts.preset = conv_preset;
    }
    return run_convergence(conv_opts, conv_levels);
  }
  if (scaling->parsed())
    return run_scaling(scaling_opts, scaling_ns, scaling_lattice_runs);
  if (presets->parsed()) return run_presets(presets_name);
  return 0;
}
