#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "okdrop/gamma_analysis.hpp"
#include "okdrop/keyvalue.hpp"
#include "okdrop/minimizer.hpp"

namespace okdrop {

std::string version();

struct KernelParams {
  int k_cutoff = EwaldKernel::kDefaultCutoff;
  /// alpha * side; the kernel default when unset.
  std::optional<double> alpha_times_side;

  EwaldKernel make(double side_length) const;
};

struct AnalysisParams {
  int subdivisions = 2;
  int grid_n = 32;
  double polish_tol = 1e-10;
  int polish_max_passes = 2000;
};

struct ExperimentConfig {
  double lambda = 0.0;
  std::vector<double> epsilons;
  std::uint64_t seed = 0;
  Lattice lattice = Lattice::kBCC;
  /// Per-droplet mass of the starting lattice.
  double droplet_mass = 0.0;
  /// Independent annealing chains per epsilon; the lowest energy wins.
  int chains = 1;
  std::string output_dir = "okdrop-out";
  /// Optional schedule file; keys in the [schedule] section override it.
  std::string schedule_path;
  KernelParams kernel;
  AnnealSchedule schedule;
  AnalysisParams analysis;

  /// Throws ValidationError naming the violated invariant.
  void validate() const;
};

/// Every key accepted by the experiment file, qualified by section.
const std::vector<std::string>& experiment_keys();

/// Parses and resolves an experiment file; relative paths are taken from its directory.
ExperimentConfig validate_config_file(const std::string& path);
ExperimentConfig experiment_from_document(const kv::Document& doc, const std::string& base_dir = "");

/// Reads a schedule file: the [schedule] keys, with or without the section header.
AnnealSchedule load_schedule(const std::string& path);
/// Applies schedule keys from `doc` (section `prefix`, e.g. "schedule.") onto `schedule`.
void apply_schedule_keys(const kv::Document& doc, const std::string& prefix, AnnealSchedule& schedule);

std::uint64_t splitmix64(std::uint64_t x);
/// Seed for stream `index`, independent of any other index.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

/// Canonical manifest (JSON text) and its 64-bit FNV-1a hash in hex.
std::string manifest_json(const ExperimentConfig& cfg);
std::string manifest_hash(const ExperimentConfig& cfg);
std::string fnv1a_hex(const std::string& bytes);

/// Worker count: `requested` (or hardware concurrency if 0), capped by OKDROP_THREADS.
int worker_count(int requested = 0);

/// Minimizes and measures one epsilon; throws on any stage failure.
SweepRow sweep_row(const ExperimentConfig& cfg, std::size_t index, DropletConfig* final_config = nullptr);

/// Runs every epsilon in a worker pool. Writes config_<i>.json per epsilon, sweep.csv
/// and manifest.json into cfg.output_dir. Failed rows carry status "error: ...".
SweepRecord run_sweep(const ExperimentConfig& cfg, int threads = 0,
                      const std::function<void(const std::string&)>& log = {});

/// Reads sweep.csv from a directory (or a CSV file directly).
SweepRecord read_sweep(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace okdrop
