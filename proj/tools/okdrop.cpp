#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "okdrop/drop_model.hpp"
#include "okdrop/errors.hpp"
#include "okdrop/gamma_analysis.hpp"
#include "okdrop/harness.hpp"

namespace fs = std::filesystem;
using namespace okdrop;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

int cmd_selfenergy(double m_lo, double m_hi, int points, int n_max, const std::string& out) {
  const auto grid = drop::linear_grid(m_lo, m_hi, points);
  const auto table = drop::self_energy_table(grid, n_max);
  std::ostringstream csv;
  csv << "# " << table.ansatz << "\n";
  csv << "mass,e,f,multiplier,n_optimal\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    csv << format_number(grid[i]) << ',' << format_number(table.e_values[i]) << ','
        << format_number(table.f_values[i]) << ',' << format_number(table.lambda_values[i]) << ','
        << table.n_optimal[i] << "\n";
  if (out.empty()) std::cout << csv.str();
  else write_text(out, csv.str());
  std::printf("m_star %.12f (closed form %.12f)\n", table.m_star, drop::m_star_closed_form());
  std::printf("f_star %.12f (closed form %.12f)\n", table.f_star, drop::f_star_closed_form());
  std::printf("m_c1   %.12f (closed form %.12f)\n", table.m_c1, drop::m_c1());
  return 0;
}

int cmd_kernel_check(double side, int points, std::uint64_t seed, int k_cutoff, const std::string& config_path,
                     int grid_n) {
  const EwaldKernel a(side, k_cutoff);
  const EwaldKernel b(side, k_cutoff, 4.0 / side);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, side);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const Vec3 x{u(rng), u(rng), u(rng)};
    if (torus_distance(x, Vec3{}, side) < 1e-3 * side) continue;
    worst = std::max(worst, std::abs(a.green(x) - b.green(x)));
  }
  std::printf("side %.6g  R(0) %.12f\n", side, a.r_at_zero());
  std::printf("splitting independence over %d points: max |G_a - G_b| = %.3e\n", points, worst);
  if (!config_path.empty()) {
    const DropletConfig config = read_config(config_path);
    const EwaldKernel k(config.spec.side_length(), k_cutoff);
    const double fast = coulomb_energy(config, k);
    const double spectral = coulomb_energy_spectral(config, k);
    const PotentialField field = potential_field(config, k, grid_n);
    std::printf("coulomb closed form %.12e\n", fast);
    std::printf("coulomb spectral    %.12e  rel %.3e\n", spectral, std::abs(spectral - fast) / std::abs(fast));
    std::printf("dirichlet (%d^3)    %.12e  rel %.3e\n", grid_n, field.dirichlet_energy,
                std::abs(field.dirichlet_energy - fast) / std::abs(fast));
  }
  return 0;
}

int cmd_minimize(const std::string& in, std::uint64_t seed, const std::string& schedule_path, const std::string& out,
                 bool do_polish, double tol, int max_passes, int k_cutoff) {
  const DropletConfig start = read_config(in);
  AnnealSchedule schedule = schedule_path.empty() ? AnnealSchedule{} : load_schedule(schedule_path);
  schedule.seed = seed;
  const EwaldKernel kernel(start.spec.side_length(), k_cutoff);
  MinimizeResult result = anneal(start, kernel, schedule);
  const double annealed = result.breakdown.scaled_total;
  if (do_polish) {
    MinimizeResult p = polish(result.config, kernel, tol, max_passes);
    p.history = std::move(result.history);
    p.accepted_moves = result.accepted_moves;
    p.rejected_moves = result.rejected_moves;
    p.accepted_by_kind = result.accepted_by_kind;
    result = std::move(p);
  }
  write_config(out, result.config);
  std::ostringstream hist;
  hist << "step,temperature,energy,best,droplets\n";
  for (const auto& h : result.history)
    hist << h.step << ',' << format_number(h.temperature) << ',' << format_number(h.energy) << ','
         << format_number(h.best) << ',' << h.droplets << "\n";
  const fs::path hp = fs::path(out).replace_extension(".history.csv");
  write_text(hp.string(), hist.str());
  std::printf("droplets %zu  scaled_total %.12f (annealed %.12f)  accepted %ld rejected %ld\n",
              result.config.droplets.size(), result.breakdown.scaled_total, annealed, result.accepted_moves,
              result.rejected_moves);
  if (do_polish) std::printf("multiplier spread %.3e after %d passes\n", result.multiplier_spread, result.passes);
  std::printf("wrote %s and %s\n", out.c_str(), hp.string().c_str());
  if (!result.converged)
    throw ConvergenceError("polish stopped after " + std::to_string(result.passes) + " passes above tol");
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& out_dir, int threads) {
  ExperimentConfig cfg = validate_config_file(path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const SweepRecord record = run_sweep(cfg, threads, [](const std::string& line) { std::cerr << line << "\n"; });
  int failed = 0;
  for (const auto& r : record.rows) failed += r.status != "ok";
  std::printf("manifest %s  rows %zu  failed %d  output %s\n", record.manifest.c_str(), record.rows.size(), failed,
              cfg.output_dir.c_str());
  return 0;
}

int cmd_analyze(const std::vector<std::string>& sweeps, double m_star, double f_star, const std::string& out,
                const std::string& tables, bool force) {
  SweepRecord merged;
  for (const auto& s : sweeps) {
    SweepRecord r = read_sweep(s);
    if (merged.rows.empty() && merged.manifest.empty()) {
      merged.manifest = r.manifest;
    } else if (r.manifest != merged.manifest) {
      if (!force)
        throw ValidationError("mixed manifests (" + merged.manifest + " vs " + r.manifest +
                              "); pass --force to analyze anyway");
      merged.manifest = "mixed";
    }
    for (auto& row : r.rows) merged.rows.push_back(std::move(row));
  }
  const StatisticsReport report = droplet_statistics(merged, m_star, f_star);
  write_text(out, to_json(report));
  const std::string dir = tables.empty() ? fs::path(out).parent_path().string() : tables;
  write_statistics_tables(report, dir.empty() ? "." : dir);
  std::printf("count slope %.4f  gap>0 %s  gap nonincreasing %s\n", report.count_slope,
              report.gap_positive ? "yes" : "no", report.gap_nonincreasing ? "yes" : "no");
  return 0;
}

int cmd_recover(double lambda, double epsilon, std::optional<double> delta, double amplitude, int grid, int k_cutoff,
                const std::string& out) {
  const LimitMeasure mu =
      amplitude == 0.0 ? LimitMeasure::uniform(lambda, grid)
                       : LimitMeasure::sampled(grid, [&](const Vec3& x) {
                           return lambda * (1.0 + amplitude * std::cos(2.0 * std::numbers::pi * x.x));
                         });
  if (!(std::abs(amplitude) < 1.0)) throw ValidationError("--amplitude must satisfy |a| < 1");
  RecoveryOptions opts;
  opts.delta = delta;
  const RecoveryResult r = recovery_sequence(mu, epsilon, drop::m_star_closed_form(), opts);
  const EwaldKernel kernel(r.config.spec.side_length(), k_cutoff);
  const EnergyBreakdown e = total_energy(r.config, kernel);
  const double e0 = e0_energy(mu, EwaldKernel(1.0, k_cutoff), drop::f_star_closed_form());
  if (!out.empty()) write_config(out, r.config);
  std::printf("cubes %d^3  droplets %zu  spacing %.6f in [%.6f, %.6f]\n", r.cubes_per_side, r.config.droplets.size(),
              r.min_spacing, r.spacing_lower, r.spacing_upper);
  std::printf("scaled_total %.12f  E0 %.12f  excess %.6e\n", e.scaled_total, e0, e.scaled_total - e0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"okdrop: droplet energy lab on the flat 3-torus"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  double m_lo = 1.0, m_hi = 150.0;
  int points = 150, n_max = 16;
  std::string out;
  auto* selfenergy = app.add_subcommand("selfenergy", "whole-space ball energies, m*, f*, m_c1");
  selfenergy->add_option("--m-min", m_lo, "smallest mass")->capture_default_str();
  selfenergy->add_option("--m-max", m_hi, "largest mass")->capture_default_str();
  selfenergy->add_option("--points", points, "grid points")->check(CLI::Range(2, 100000))->capture_default_str();
  selfenergy->add_option("--n-max", n_max, "max parts in the partition search")->check(CLI::Range(1, 64));
  selfenergy->add_option("--out", out, "CSV output (stdout if omitted)");

  double side = 1.0;
  int k_cutoff = EwaldKernel::kDefaultCutoff, grid_n = 64;
  std::uint64_t seed = 0;
  std::string config_path;
  auto* kcheck = app.add_subcommand("kernel-check", "Ewald kernel diagnostics and energy route comparison");
  kcheck->add_option("--side", side, "torus side")->check(CLI::PositiveNumber);
  int check_points = 50;
  kcheck->add_option("--points", check_points, "random sample points")->check(CLI::Range(1, 1000000));
  kcheck->add_option("--seed", seed);
  kcheck->add_option("--k-cutoff", k_cutoff)->check(CLI::Range(1, 64));
  kcheck->add_option("--config", config_path, "droplet config JSON for the energy routes");
  kcheck->add_option("--grid", grid_n, "grid for the Dirichlet energy")->check(CLI::Range(16, 256));

  std::string schedule_path;
  bool no_polish = false;
  double tol = 1e-10;
  auto* minimize = app.add_subcommand("minimize", "anneal and polish a droplet configuration");
  minimize->add_option("--config", config_path, "starting configuration JSON")->required();
  minimize->add_option("--seed", seed);
  minimize->add_option("--schedule", schedule_path, "schedule file");
  minimize->add_option("--out", out, "result JSON")->required();
  minimize->add_flag("--no-polish", no_polish);
  minimize->add_option("--tol", tol, "polish tolerance")->check(CLI::PositiveNumber);
  int max_passes = 2000;
  minimize->add_option("--max-passes", max_passes, "polish pass limit")->check(CLI::Range(1, 1000000));
  minimize->add_option("--k-cutoff", k_cutoff)->check(CLI::Range(1, 64));

  int threads = 0;
  auto* sweep = app.add_subcommand("sweep", "run an epsilon sweep from an experiment file");
  sweep->add_option("--config", config_path, "experiment file")->required();
  sweep->add_option("--out", out, "override output_dir");
  sweep->add_option("--threads", threads, "worker count (capped by OKDROP_THREADS)")->check(CLI::Range(0, 1024));

  std::vector<std::string> sweeps;
  double m_star = drop::m_star_closed_form(), f_star = drop::f_star_closed_form();
  std::string tables;
  bool force = false;
  auto* analyze = app.add_subcommand("analyze", "droplet statistics over one or more sweeps");
  analyze->add_option("--sweep", sweeps, "sweep directory or CSV (repeatable)")->required();
  analyze->add_option("--m-star", m_star)->check(CLI::PositiveNumber);
  analyze->add_option("--f-star", f_star)->check(CLI::PositiveNumber);
  analyze->add_option("--out", out, "report JSON")->required();
  analyze->add_option("--tables", tables, "directory for per-statistic CSV tables");
  analyze->add_flag("--force", force, "accept mixed manifests");

  double lambda = 1.0, epsilon = 1e-4, amplitude = 0.0;
  std::optional<double> delta;
  int grid = 32;
  auto* recover = app.add_subcommand("recover", "build the recovery lattice for a limit density");
  recover->add_option("--lambda", lambda)->check(CLI::PositiveNumber);
  recover->add_option("--epsilon", epsilon)->required()->check(CLI::PositiveNumber);
  recover->add_option("--delta", delta, "cube side (default eps^{1/27})");
  recover->add_option("--amplitude", amplitude, "density lambda (1 + a cos 2 pi x)");
  recover->add_option("--grid", grid, "density grid")->check(CLI::Range(1, 256));
  recover->add_option("--k-cutoff", k_cutoff)->check(CLI::Range(1, 64));
  recover->add_option("--out", out, "config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*selfenergy) return cmd_selfenergy(m_lo, m_hi, points, n_max, out);
    if (*kcheck) return cmd_kernel_check(side, check_points, seed, k_cutoff, config_path, grid_n);
    if (*minimize) return cmd_minimize(config_path, seed, schedule_path, out, !no_polish, tol, max_passes, k_cutoff);
    if (*sweep) return cmd_sweep(config_path, out, threads);
    if (*analyze) return cmd_analyze(sweeps, m_star, f_star, out, tables, force);
    if (*recover) return cmd_recover(lambda, epsilon, delta, amplitude, grid, k_cutoff, out);
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
