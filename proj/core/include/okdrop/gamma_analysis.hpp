#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "okdrop/kernel.hpp"
#include "okdrop/minimizer.hpp"
#include "okdrop/torus_energy.hpp"

namespace okdrop {

/// Nonnegative measure on the unit torus: either a piecewise-constant density on an
/// n^3 grid of cells, or a finite list of atoms.
class LimitMeasure {
 public:
  enum class Kind { kDensity, kAtomic };

  /// Constant density lambda.
  static LimitMeasure uniform(double lambda, int n);
  /// Cell values, row-major (i, j, k) with x = (i + 1/2)/n, ...
  static LimitMeasure density(int n, std::vector<double> values);
  /// Samples g at cell midpoints.
  static LimitMeasure sampled(int n, const std::function<double(const Vec3&)>& g);
  static LimitMeasure atomic(std::vector<Vec3> points, std::vector<double> weights);

  Kind kind() const noexcept { return kind_; }
  int grid_n() const noexcept { return n_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<Vec3>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  /// mu(T): the cell mean for densities, the sum of weights for atoms.
  double total_mass() const noexcept { return total_; }
  /// mu(box) for an axis-aligned box inside [0, 1]^3, exact for the piecewise-constant density.
  double mass_in_box(const Vec3& lo, const Vec3& hi) const;

 private:
  Kind kind_ = Kind::kDensity;
  int n_ = 0;
  std::vector<double> values_;
  std::vector<Vec3> points_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

/// (1/2) sum_{k != 0} |g_k|^2 / (4 pi^2 |k|^2) for the DFT coefficients g_k of a
/// density on an n^3 grid: the Coulomb energy of its trigonometric interpolant.
double coulomb_form(int n, const std::vector<double>& values);

/// lambda f* + (1/2) double integral of G against mu. Requires a unit-torus kernel.
/// Atomic measures are rejected with DomainError.
double e0_energy(const LimitMeasure& mu, const EwaldKernel& kernel, double f_star);

/// (E0(mu1) + E0(mu2))/2 - E0((mu1 + mu2)/2) = coulomb_form(mu1 - mu2) / 4.
double convexity_margin(const LimitMeasure& mu1, const LimitMeasure& mu2);

struct RecoveryOptions {
  /// Cube side delta; default eps^{1/27}.
  std::optional<double> delta;
  /// Lower spacing constant K (eps frame, times eps^{1/9}); default 0.8 (m*/lambda)^{1/3}.
  std::optional<double> spacing_lower;
  /// Upper constant K' = factor * K.
  double spacing_upper_factor = 1.5;
};

struct RecoveryResult {
  DropletConfig config;
  int cubes_per_side = 0;
  std::vector<int> counts;
  std::vector<double> cube_masses;
  std::vector<Lattice> cube_lattices;
  /// Smallest centre distance in the eps frame and the bounds it was checked against.
  double min_spacing = 0.0;
  double spacing_lower = 0.0;
  double spacing_upper = 0.0;
};

/// Droplet lattice approximating mu: delta-cubes, ceil(mu(Q)/(eps^{1/3} m*)) droplets per
/// cube on the smallest SC/BCC/FCC arrangement with enough sites, equal masses per cube,
/// total mass exactly lambda * l. Throws InfeasibleError if the spacing bounds fail.
RecoveryResult recovery_sequence(const LimitMeasure& mu, double epsilon, double m_star,
                                 const RecoveryOptions& options = {});

struct ScalingBalance {
  double surface = 0.0;
  double self = 0.0;
  double interaction = 0.0;
};

/// Heuristic per-droplet magnitudes eps R^2, R^5 and R^6/d^3 with R = eps^{1/3} (3m/4pi)^{1/3}.
ScalingBalance scaling_balance(double epsilon, double m, double lattice_spacing);

struct SweepRow {
  double epsilon = 0.0;
  double lambda = 0.0;
  int n_droplets = 0;
  double scaled_total = 0.0;
  double sup_v = 0.0;
  double min_v = 0.0;
  /// 2 max r_i in the rescaled frame, i.e. the eps-frame diameter over eps^{1/3}.
  double max_diameter = 0.0;
  /// max over octants of |mu - lambda/8| / (lambda/8).
  double mu_octant_deviation = 0.0;
  /// max over octants of |nu - lambda f*/8| / (lambda f*/8).
  double nu_octant_deviation = 0.0;
  std::vector<double> masses;
  std::string status = "ok";
};

struct SweepRecord {
  std::string manifest;
  std::vector<SweepRow> rows;
};

std::string sweep_csv(const SweepRecord& record);
SweepRecord parse_sweep_csv(const std::string& text);

struct StatisticsRow {
  double epsilon = 0.0;
  int n_droplets = 0;
  double fraction_near_m_star = 0.0;
  double energy_gap = 0.0;
  double sup_v = 0.0;
  double min_v = 0.0;
  double mu_octant_deviation = 0.0;
  double nu_octant_deviation = 0.0;
  double diameter_over_eps13 = 0.0;
};

struct StatisticsReport {
  std::string manifest;
  double m_star = 0.0;
  double f_star = 0.0;
  double lambda = 0.0;
  /// Least-squares slope of log N against log eps.
  double count_slope = 0.0;
  double count_intercept = 0.0;
  std::vector<StatisticsRow> rows;
  bool gap_positive = false;
  bool gap_nonincreasing = false;
  bool mu_deviation_decreasing = false;
  bool nu_deviation_decreasing = false;
  bool sup_v_nonincreasing = false;
  std::string ansatz;
};

/// Pure function of the sweep rows with status "ok". Needs at least three epsilons
/// spanning two decades.
StatisticsReport droplet_statistics(const SweepRecord& sweep, double m_star, double f_star);
std::string to_json(const StatisticsReport& report);
/// One CSV per statistic in `dir`.
void write_statistics_tables(const StatisticsReport& report, const std::string& dir);

/// Fixed-format number for CSV output: %.10e in the C locale.
std::string format_number(double v);

}  // namespace okdrop
