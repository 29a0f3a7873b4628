#pragma once

#include <string>
#include <vector>

#include "okdrop/geometry.hpp"
#include "okdrop/kernel.hpp"

namespace okdrop {

/// Scaled problem instance. Everything downstream works in the rescaled frame:
/// a torus of side l = eps^{-1/3} holding total droplet volume lambda * l.
class TorusSpec {
 public:
  /// Throws ParameterError unless 0 < eps < lambda^{-3/2}.
  TorusSpec(double epsilon, double lambda);

  double epsilon() const noexcept { return epsilon_; }
  double lambda() const noexcept { return lambda_; }
  double side_length() const noexcept { return side_; }
  double volume() const noexcept { return side_ * side_ * side_; }
  double mass_budget() const noexcept { return budget_; }
  /// Background density lambda / l^2 = lambda eps^{2/3}.
  double background_density() const noexcept { return budget_ / volume(); }

 private:
  double epsilon_;
  double lambda_;
  double side_;
  double budget_;
};

/// Largest-denomination grid all masses are snapped to: ulp of the budget.
/// Sums and differences of snapped masses below the budget are exact.
double mass_quantum(double budget);
double quantize_mass(double m, double quantum);
/// `count` equal masses summing to `total` exactly; the last entry absorbs the remainder.
std::vector<double> equal_masses(double total, int count);

struct Droplet {
  Vec3 center;
  double mass = 0.0;

  double radius() const;
};

struct DropletConfig {
  TorusSpec spec;
  std::vector<Droplet> droplets;

  double total_mass() const noexcept;
};

/// Checks positivity, radius < l/4, minimum-image non-overlap and the mass budget
/// (relative 1e-12). Throws ConfigurationError naming the violated invariant.
void validate(const DropletConfig& config);

struct DropletEnergy {
  double surface = 0.0;
  double self = 0.0;
  double interaction = 0.0;
};

struct EnergyBreakdown {
  double surface = 0.0;
  double coulomb = 0.0;
  /// Rescaled-frame energy: surface + coulomb.
  double total = 0.0;
  /// eps^{-4/3} E_eps = eps^{1/3} * total.
  double scaled_total = 0.0;
  std::vector<DropletEnergy> per_droplet;
};

/// (1/2) double integral of G over the droplet density, background included through
/// the zero-mean kernel. Closed form: for uniform balls the ball average of G reduces
/// to point values of G and R plus r^2/(10 V) corrections.
double coulomb_energy(const DropletConfig& config, const EwaldKernel& kernel);

/// Same quantity by an independent route: Gaussian-damped reciprocal sum with ball
/// form factors plus the real-space remainder of smeared ball pairs.
double coulomb_energy_spectral(const DropletConfig& config, const EwaldKernel& kernel);

EnergyBreakdown total_energy(const DropletConfig& config, const EwaldKernel& kernel);

/// Exact potential v = G * u at a point of the rescaled torus.
double potential_at(const DropletConfig& config, const EwaldKernel& kernel, const Vec3& x);

struct PotentialField {
  int grid_n = 0;
  double side_length = 0.0;
  /// Row-major values at points (i, j, k) * side / grid_n.
  std::vector<double> values;
  double sup_norm = 0.0;
  double minimum = 0.0;
  double maximum = 0.0;
  double mean = 0.0;
  /// Grid mean of the sampled field before its zero mode was removed (sampling error).
  double sampled_mean_offset = 0.0;
  /// (1/2) integral of |grad v|^2 by Parseval on the sampled field.
  double dirichlet_energy = 0.0;
  /// Smallest C with |grad v| <= (3/2)(v + C) on the grid (central differences).
  double gradient_constant = 0.0;
  /// max |grad v| - (3/2)(v + gradient_constant); zero up to rounding by construction.
  double gradient_bound_residual = 0.0;
  std::string warning;

  double at(int i, int j, int k) const {
    return values[(static_cast<std::size_t>(i) * grid_n + j) * grid_n + k];
  }
};

/// Samples v on a grid_n^3 grid (grid_n >= 16) using an Ewald split tuned to the grid.
PotentialField potential_field(const DropletConfig& config, const EwaldKernel& kernel, int grid_n);

struct CoarseGrainReport {
  int subdivisions = 0;
  double lambda = 0.0;
  double scaled_total = 0.0;
  /// Per-subcube mass and energy, index (i * n + j) * n + k.
  std::vector<double> mu;
  std::vector<double> nu;
  double mu_total = 0.0;
  double nu_total = 0.0;
  /// max_i |mu_i - lambda/n^3| / (lambda/n^3).
  double max_mu_deviation = 0.0;
  /// max_i |nu_i - reference/n^3| / (reference/n^3).
  double max_nu_deviation(double reference_total) const;
};

/// Splits the torus into subdivisions^3 cubes (2..16) and reports the eps-frame mass
/// and energy measures of each. Totals equal lambda and scaled_total.
CoarseGrainReport energy_measure(const DropletConfig& config, const EwaldKernel& kernel,
                                 int subdivisions);

/// Volume of a ball intersected with an axis-aligned box: exact disk-rectangle slice
/// areas integrated over one axis.
double ball_box_volume(const Vec3& center, double radius, const Vec3& lo, const Vec3& hi);

// JSON persistence. Centres are stored in the rescaled frame.
std::string to_json(const DropletConfig& config, const std::string& manifest_hash = "");
DropletConfig config_from_json(const std::string& text);
void write_config(const std::string& path, const DropletConfig& config,
                  const std::string& manifest_hash = "");
DropletConfig read_config(const std::string& path);

}  // namespace okdrop
