#pragma once

#include <span>
#include <string>
#include <vector>

#include "okdrop/geometry.hpp"
#include "okdrop/kernel.hpp"

namespace okdrop::drop {

/// Modelling hypothesis carried into every report that depends on it.
inline constexpr const char* kBallAnsatz =
    "ball ansatz: whole-space minimizers are modelled as balls and generalized minimizers as "
    "finite collections of balls (an open conjecture, not a theorem)";

/// Radius of a ball of volume m.
double ball_radius(double m);

/// Perimeter 4 pi r^2 of a ball of volume m.
double ball_surface_energy(double m);
/// Newtonian self-energy 3 m^2 / (20 pi r) of a uniform ball of volume m.
double ball_coulomb_self_energy(double m);
/// Whole-space energy of a single ball: surface + self-energy.
double e_ball(double m);
/// Energy per unit mass of a single ball.
double f_ball(double m);
/// d e_ball / dm = 2/r + r^2/3.
double e_ball_derivative(double m);

/// f_ball(m) - f_ball(m_ref) evaluated without cancellation. Used for
/// resolving the flat minimum of f below double-precision noise in f itself.
double f_ball_excess(double m, double m_ref);

/// 3^{5/3} 2^{-2/3} 5^{-1/3}: minimum of f_ball, attained at 10 pi.
double f_star_closed_form();
double m_star_closed_form();

/// Golden-section minimiser of f_ball on [lo, hi].
double argmin_f_ball(double lo, double hi, double tol = 1e-12);

/// (40 pi / 3)(2^{1/3} + 2^{-1/3} - 1): mass at which one ball and two half-mass balls tie.
double m_c1();
/// Root of e_ball(m) - 2 e_ball(m/2) on [lo, hi] by bisection.
double m_c1_bisection(double lo = 30.0, double hi = 60.0, double tol = 1e-13);

struct Ball {
  Vec3 center;
  double mass = 0.0;

  double radius() const { return ball_radius(mass); }
};

/// Balls in R^3. Construction validates positivity and non-overlap.
class BallCluster {
 public:
  explicit BallCluster(std::vector<Ball> balls);

  const std::vector<Ball>& balls() const noexcept { return balls_; }
  double total_mass() const noexcept;

 private:
  std::vector<Ball> balls_;
};

/// Density of the distance |x - y| for x, y uniform in two disjoint balls of
/// radii r1, r2 with centres a distance d apart.
double ball_pair_distance_density(double s, double d, double r1, double r2);
/// Density of |x - y| for x, y uniform in the same ball of radius r.
double ball_self_distance_density(double s, double r);

/// Interaction of two disjoint unit-mass balls under eta(s/R)/(4 pi s).
double truncated_pair_kernel(double d, double r1, double r2, const TruncationProfile& trunc);
/// Self-interaction of a unit-mass ball under eta(s/R)/(4 pi s).
double truncated_self_kernel(double r, const TruncationProfile& trunc);

/// Sum of perimeters plus (1/2) double integral with the truncated kernel
/// eta(|x-y|/R)/(4 pi |x-y|). Requires the kTruncation convention; R = trunc.rho().
double truncated_energy(const BallCluster& cluster, const TruncationProfile& trunc);
double truncated_energy(const BallCluster& cluster, double cutoff_radius);
/// Energy with the untruncated Newtonian kernel.
double untruncated_energy(const BallCluster& cluster);

struct GeneralizedMinimum {
  double energy = 0.0;
  int count = 0;
  std::vector<double> masses;
  /// e_ball'(m_i) per component.
  std::vector<double> multipliers;
  /// Best energy among equal-mass partitions only.
  double equal_energy = 0.0;
  int equal_count = 0;
  /// True when an unequal two-block partition beat every equal partition.
  bool unequal_improved = false;
};

/// Minimum of sum e_ball(m_i) over equal partitions with at most n_max parts,
/// followed by a scan over unequal two-block splits (fraction in [0.05, 0.5], 91 points).
GeneralizedMinimum generalized_minimum(double m, int n_max = 16);

struct SelfEnergyTable {
  std::vector<double> mass_grid;
  std::vector<double> e_values;
  std::vector<double> f_values;
  std::vector<double> lambda_values;
  std::vector<int> n_optimal;
  double m_star = 0.0;
  double f_star = 0.0;
  double m_c1 = 0.0;
  std::string ansatz = kBallAnsatz;
};

/// Richardson-extrapolated central difference of e(m) = generalized_minimum(m).energy
/// with base step h = 1e-4 m.
double multiplier(double m, int n_max = 16);

SelfEnergyTable self_energy_table(std::span<const double> mass_grid, int n_max = 16);
std::vector<double> linear_grid(double lo, double hi, int points);

}  // namespace okdrop::drop
