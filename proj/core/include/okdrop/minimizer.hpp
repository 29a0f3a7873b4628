#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "okdrop/kernel.hpp"
#include "okdrop/torus_energy.hpp"

namespace okdrop {

enum class Lattice { kSC, kBCC, kFCC };

Lattice parse_lattice(const std::string& name);
std::string lattice_name(Lattice lattice);
/// Sites per conventional cubic cell: 1, 2 or 4.
int lattice_basis_size(Lattice lattice);
/// Sites a * (i + basis) for i in [0, n)^3, in a fixed order.
std::vector<Vec3> lattice_sites(Lattice lattice, int n, double a);

/// Equal droplets on an n^3 lattice filling the torus. The count nearest to
/// budget / droplet_mass that the lattice admits is used, and masses are rescaled
/// so that they sum to the budget exactly. Throws InfeasibleError if the droplets
/// cannot fit.
DropletConfig init_lattice(const TorusSpec& spec, Lattice lattice, double droplet_mass);

enum MoveKind : int { kTranslate = 0, kExchange, kSplit, kMerge, kShake, kMoveKinds };

struct AnnealSchedule {
  std::uint64_t seed = 0;
  /// Default 0.1 |E0| / N. Zero gives greedy (zero-temperature) acceptance.
  std::optional<double> initial_temp;
  double cooling_rate = 0.95;
  /// Default 200 N with N the current droplet count.
  std::optional<int> steps_per_temp;
  /// Annealing stops once T / T0 drops below this ratio.
  double min_temp_ratio = 1e-6;
  /// Relative weights of translate, exchange, split, merge, shake.
  std::array<double, kMoveKinds> weights{0.6, 0.15, 0.1, 0.1, 0.05};
  /// Optional cap on the number of temperature levels (0: none).
  int max_levels = 0;
  double min_mass = 1.0;
  double max_mass = 100.0;

  /// Throws ParameterError on an invalid schedule.
  void validate() const;
};

struct HistorySample {
  long step = 0;
  double temperature = 0.0;
  double energy = 0.0;
  double best = 0.0;
  int droplets = 0;
};

struct MinimizeResult {
  DropletConfig config;
  EnergyBreakdown breakdown;
  long accepted_moves = 0;
  long rejected_moves = 0;
  std::array<long, kMoveKinds> accepted_by_kind{};
  std::vector<HistorySample> history;
  /// (max - min) / |mean| of per-droplet multipliers dE/dm_i.
  double multiplier_spread = 0.0;
  int passes = 0;
  /// False when polish hit max_passes before the decrease fell below tol.
  bool converged = true;
};

/// Metropolis annealing over centres, masses and droplet count. Returns the best
/// configuration seen, re-evaluated with total_energy.
MinimizeResult anneal(const DropletConfig& start, const EwaldKernel& kernel,
                      const AnnealSchedule& schedule);

/// Local descent: centre relaxation along the analytic energy gradient and mass
/// rebalancing toward equal multipliers, until the estimated remaining relative
/// decrease (geometric tail of the per-pass decreases) falls below `tol`.
MinimizeResult polish(const DropletConfig& config, const EwaldKernel& kernel, double tol = 1e-12,
                      int max_passes = 2000);

/// dE/dm_i at fixed centres (rescaled frame).
std::vector<double> mass_multipliers(const DropletConfig& config, const EwaldKernel& kernel);
/// dE/dc_i at fixed masses.
std::vector<Vec3> center_gradient(const DropletConfig& config, const EwaldKernel& kernel);

/// Snaps masses to multiples of mass_quantum(budget); the last droplet absorbs the
/// remainder so the total equals the budget exactly.
void normalize_masses(DropletConfig& config);

}  // namespace okdrop
