#include "okdrop/drop_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "okdrop/errors.hpp"
#include "okdrop/quadrature.hpp"

namespace okdrop::drop {
namespace {

constexpr double kPi = std::numbers::pi;

// e_ball(m) = kSurface m^{2/3} + kSelf m^{5/3}
const double kSurface = std::pow(6.0, 2.0 / 3.0) * std::cbrt(kPi);
const double kSelf = std::pow(3.0, 2.0 / 3.0) * std::pow(2.0, -1.0 / 3.0) * 0.1 * std::pow(kPi, -2.0 / 3.0);

void require_positive_mass(double m, const char* what) {
  if (!(m > 0.0) || !std::isfinite(m))
    throw ParameterError(std::string(what) + ": mass must be positive, got " + std::to_string(m));
}

// x^p - y^p without cancellation for x close to y.
double power_difference(double x, double y, double p) {
  return std::pow(y, p) * std::expm1(p * std::log1p((x - y) / y));
}

// Antiderivative of t * V(t) on the lens branch, V the volume of the intersection
// of two balls with radii summing to s and differing by dr at centre distance t.
double lens_moment_antiderivative(double t, double s, double dr) {
  const double s2 = s * s;
  const double d2 = dr * dr;
  const double t2 = t * t;
  return kPi / 12.0 *
         (t2 * t2 * t / 5.0 - (s2 + d2) * t2 * t + (s2 * s + 3.0 * s * d2) * t2 - 3.0 * s2 * d2 * t);
}

// Integral of t * V(t) over [a, b] for the intersection volume V of balls r1, r2.
double lens_moment(double a, double b, double r1, double r2) {
  const double s = r1 + r2;
  const double dr = std::abs(r1 - r2);
  const double rmin = std::min(r1, r2);
  const double vmin = 4.0 * kPi * rmin * rmin * rmin / 3.0;
  double total = 0.0;
  // Branch 1: smaller ball fully inside the larger one.
  {
    const double lo = std::max(a, 0.0);
    const double hi = std::min(b, dr);
    if (hi > lo) total += vmin * (hi * hi - lo * lo) / 2.0;
  }
  // Branch 2: lens.
  {
    const double lo = std::max(a, dr);
    const double hi = std::min(b, s);
    if (hi > lo) total += lens_moment_antiderivative(hi, s, dr) - lens_moment_antiderivative(lo, s, dr);
  }
  return total;
}

// Integrates g(s) * density(s) over [lo, hi], splitting at the density's kinks.
template <class G, class Density>
double integrate_pieces(G&& g, Density&& density, std::vector<double> breaks) {
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (b <= a) continue;
    total += quadrature::composite_gauss([&](double s) { return g(s) * density(s); }, a, b, 3, 20);
  }
  return total;
}

}  // namespace

double ball_radius(double m) { return std::cbrt(3.0 * m / (4.0 * kPi)); }

double ball_surface_energy(double m) {
  require_positive_mass(m, "ball_surface_energy");
  return kSurface * std::pow(m, 2.0 / 3.0);
}

double ball_coulomb_self_energy(double m) {
  require_positive_mass(m, "ball_coulomb_self_energy");
  return kSelf * std::pow(m, 5.0 / 3.0);
}

double e_ball(double m) { return ball_surface_energy(m) + ball_coulomb_self_energy(m); }

double f_ball(double m) {
  require_positive_mass(m, "f_ball");
  return kSurface * std::pow(m, -1.0 / 3.0) + kSelf * std::pow(m, 2.0 / 3.0);
}

double e_ball_derivative(double m) {
  require_positive_mass(m, "e_ball_derivative");
  const double r = ball_radius(m);
  return 2.0 / r + r * r / 3.0;
}

double f_ball_excess(double m, double m_ref) {
  require_positive_mass(m, "f_ball_excess");
  require_positive_mass(m_ref, "f_ball_excess");
  return kSurface * power_difference(m, m_ref, -1.0 / 3.0) +
         kSelf * power_difference(m, m_ref, 2.0 / 3.0);
}

double f_star_closed_form() {
  return std::pow(3.0, 5.0 / 3.0) * std::pow(2.0, -2.0 / 3.0) * std::pow(5.0, -1.0 / 3.0);
}

double m_star_closed_form() { return 10.0 * kPi; }

double argmin_f_ball(double lo, double hi, double tol) {
  if (!(lo > 0.0 && hi > lo)) throw ParameterError("argmin_f_ball: need 0 < lo < hi");
  const auto search = [tol](double a, double b, double ref) {
    return quadrature::golden_section_minimum([ref](double m) { return f_ball_excess(m, ref); }, a, b, tol * ref);
  };
  // Second pass referenced to the first estimate, so comparisons near the flat
  // minimum see small excesses rather than differences of O(1) values.
  const double rough = search(lo, hi, 0.5 * (lo + hi));
  const double width = 1e-3 * rough;
  return search(std::max(lo, rough - width), std::min(hi, rough + width), rough);
}

double m_c1() { return 40.0 * kPi / 3.0 * (std::cbrt(2.0) + 1.0 / std::cbrt(2.0) - 1.0); }

double m_c1_bisection(double lo, double hi, double tol) {
  const auto gap = [](double m) { return e_ball(m) - 2.0 * e_ball(0.5 * m); };
  double glo = gap(lo);
  if (glo * gap(hi) > 0.0) throw ParameterError("m_c1_bisection: interval does not bracket the root");
  while (hi - lo > tol * hi) {
    const double mid = 0.5 * (lo + hi);
    const double gm = gap(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

BallCluster::BallCluster(std::vector<Ball> balls) : balls_(std::move(balls)) {
  if (balls_.empty()) throw ConfigurationError("BallCluster: at least one ball required");
  for (const auto& b : balls_) {
    if (!(b.mass > 0.0)) throw ConfigurationError("BallCluster: masses must be positive");
  }
  for (std::size_t i = 0; i < balls_.size(); ++i) {
    for (std::size_t j = i + 1; j < balls_.size(); ++j) {
      const double d = norm(balls_[i].center - balls_[j].center);
      const double contact = balls_[i].radius() + balls_[j].radius();
      if (d < contact * (1.0 - 1e-12))
        throw ConfigurationError("BallCluster: balls " + std::to_string(i) + " and " +
                                 std::to_string(j) + " overlap");
    }
  }
}

double BallCluster::total_mass() const noexcept {
  double m = 0.0;
  for (const auto& b : balls_) m += b.mass;
  return m;
}

double ball_pair_distance_density(double s, double d, double r1, double r2) {
  if (s <= 0.0) return 0.0;
  const double v1 = 4.0 * kPi * r1 * r1 * r1 / 3.0;
  const double v2 = 4.0 * kPi * r2 * r2 * r2 / 3.0;
  return 2.0 * kPi * s / (d * v1 * v2) * lens_moment(std::abs(s - d), s + d, r1, r2);
}

double ball_self_distance_density(double s, double r) {
  if (s <= 0.0 || s >= 2.0 * r) return 0.0;
  const double x = s / r;
  return (3.0 * x * x - 2.25 * x * x * x + 0.1875 * x * x * x * x * x) / r;
}

double truncated_pair_kernel(double d, double r1, double r2, const TruncationProfile& trunc) {
  if (trunc.convention() != CutoffConvention::kTruncation)
    throw ParameterError("truncated kernel requires the eta = 1 on [0,1], 0 on [2,inf) convention");
  const double big_r = trunc.rho();
  const double lo = d - r1 - r2;
  const double hi = d + r1 + r2;
  if (lo >= 2.0 * big_r) return 0.0;
  if (hi <= big_r) return 1.0 / (4.0 * kPi * d);
  const double dr = std::abs(r1 - r2);
  std::vector<double> breaks{lo, hi};
  for (double b : {d - dr, d + dr, big_r, 2.0 * big_r})
    if (b > lo && b < hi) breaks.push_back(b);
  return integrate_pieces([&](double s) { return trunc.eta(s / big_r) / (4.0 * kPi * s); },
                          [&](double s) { return ball_pair_distance_density(s, d, r1, r2); },
                          std::move(breaks));
}

double truncated_self_kernel(double r, const TruncationProfile& trunc) {
  if (trunc.convention() != CutoffConvention::kTruncation)
    throw ParameterError("truncated kernel requires the eta = 1 on [0,1], 0 on [2,inf) convention");
  const double big_r = trunc.rho();
  if (2.0 * r <= big_r) return 3.0 / (10.0 * kPi * r);
  std::vector<double> breaks{0.0, 2.0 * r};
  for (double b : {big_r, 2.0 * big_r})
    if (b > 0.0 && b < 2.0 * r) breaks.push_back(b);
  // p(s)/s is regular at the origin, so integrate eta/(4 pi) against p(s)/s.
  return integrate_pieces([&](double s) { return trunc.eta(s / big_r) / (4.0 * kPi); },
                          [&](double s) { return ball_self_distance_density(s, r) / s; },
                          std::move(breaks));
}

double truncated_energy(const BallCluster& cluster, const TruncationProfile& trunc) {
  const auto& balls = cluster.balls();
  double energy = 0.0;
  for (const auto& b : balls) {
    const double r = b.radius();
    energy += ball_surface_energy(b.mass);
    if (2.0 * r <= trunc.rho() && trunc.convention() == CutoffConvention::kTruncation)
      energy += ball_coulomb_self_energy(b.mass);
    else
      energy += 0.5 * b.mass * b.mass * truncated_self_kernel(r, trunc);
  }
  for (std::size_t i = 0; i < balls.size(); ++i) {
    for (std::size_t j = i + 1; j < balls.size(); ++j) {
      const double d = norm(balls[i].center - balls[j].center);
      energy += balls[i].mass * balls[j].mass *
                truncated_pair_kernel(d, balls[i].radius(), balls[j].radius(), trunc);
    }
  }
  return energy;
}

double truncated_energy(const BallCluster& cluster, double cutoff_radius) {
  return truncated_energy(cluster, TruncationProfile::truncation(cutoff_radius));
}

double untruncated_energy(const BallCluster& cluster) {
  const auto& balls = cluster.balls();
  double energy = 0.0;
  for (const auto& b : balls) energy += e_ball(b.mass);
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (std::size_t j = i + 1; j < balls.size(); ++j)
      energy += balls[i].mass * balls[j].mass / (4.0 * kPi * norm(balls[i].center - balls[j].center));
  return energy;
}

namespace {

struct EqualSplit {
  double energy = std::numeric_limits<double>::infinity();
  int count = 0;
};

// Best equal partition of m into at most n_max balls; ties keep the smaller count.
EqualSplit best_equal_split(double m, int n_max) {
  EqualSplit best;
  for (int n = 1; n <= n_max; ++n) {
    const double e = n * e_ball(m / n);
    if (e < best.energy * (1.0 - 1e-13)) {
      best.energy = e;
      best.count = n;
    }
  }
  return best;
}

}  // namespace

GeneralizedMinimum generalized_minimum(double m, int n_max) {
  require_positive_mass(m, "generalized_minimum");
  if (n_max < 1) throw ParameterError("generalized_minimum: n_max must be >= 1");

  const EqualSplit equal = best_equal_split(m, n_max);
  GeneralizedMinimum result;
  result.equal_energy = equal.energy;
  result.equal_count = equal.count;
  result.energy = equal.energy;
  result.count = equal.count;
  result.masses.assign(static_cast<std::size_t>(equal.count), m / equal.count);

  if (n_max >= 2) {
    constexpr int kFractions = 91;
    for (int i = 0; i < kFractions; ++i) {
      const double frac = 0.05 + 0.45 * i / (kFractions - 1);
      const double m1 = frac * m;
      const double m2 = m - m1;
      const EqualSplit a = best_equal_split(m1, n_max - 1);
      const EqualSplit b = best_equal_split(m2, n_max - a.count);
      if (b.count == 0) continue;
      const double e = a.energy + b.energy;
      if (e < result.energy * (1.0 - 1e-12)) {
        result.energy = e;
        result.count = a.count + b.count;
        result.masses.assign(static_cast<std::size_t>(a.count), m1 / a.count);
        result.masses.insert(result.masses.end(), static_cast<std::size_t>(b.count), m2 / b.count);
        result.unequal_improved = true;
      }
    }
  }
  // Partition masses must add back to m exactly: absorb rounding in the last entry.
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < result.masses.size(); ++i) partial += result.masses[i];
  result.masses.back() = m - partial;

  result.multipliers.reserve(result.masses.size());
  for (double mi : result.masses) result.multipliers.push_back(e_ball_derivative(mi));
  return result;
}

double multiplier(double m, int n_max) {
  require_positive_mass(m, "multiplier");
  const auto e = [n_max](double x) { return generalized_minimum(x, n_max).energy; };
  const auto central = [&](double h) { return (e(m + h) - e(m - h)) / (2.0 * h); };
  const double h = 1e-4 * m;
  return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) throw ParameterError("linear_grid: need points >= 2 and hi > lo");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * i / (points - 1);
  return grid;
}

SelfEnergyTable self_energy_table(std::span<const double> mass_grid, int n_max) {
  if (mass_grid.size() < 3) throw ParameterError("self_energy_table: at least 3 grid points required");
  for (std::size_t i = 0; i < mass_grid.size(); ++i) {
    if (!(mass_grid[i] > 0.0)) throw ParameterError("self_energy_table: grid masses must be positive");
    if (i > 0 && !(mass_grid[i] > mass_grid[i - 1]))
      throw ParameterError("self_energy_table: mass grid must be strictly increasing");
  }

  SelfEnergyTable table;
  table.mass_grid.assign(mass_grid.begin(), mass_grid.end());
  table.m_c1 = m_c1();
  std::size_t best = 0;
  for (std::size_t i = 0; i < mass_grid.size(); ++i) {
    const double m = mass_grid[i];
    const GeneralizedMinimum gm = generalized_minimum(m, n_max);
    table.e_values.push_back(gm.energy);
    table.f_values.push_back(gm.energy / m);
    table.n_optimal.push_back(gm.count);
    table.lambda_values.push_back(multiplier(m, n_max));
    if (table.f_values[i] < table.f_values[best]) best = i;
  }
  // f returns to f* at every multiple of m*; report the smallest mass whose
  // grid value is a local minimum within rounding of the global one.
  const double f_grid_min = table.f_values[best];
  for (std::size_t i = 0; i < mass_grid.size(); ++i) {
    const bool left = i == 0 || table.f_values[i] <= table.f_values[i - 1];
    const bool right = i + 1 == mass_grid.size() || table.f_values[i] <= table.f_values[i + 1];
    if (left && right && table.f_values[i] <= f_grid_min * (1.0 + 1e-3)) {
      best = i;
      break;
    }
  }

  // Refine inside the bracketing interval. On the branch with n equal balls,
  // f(m) = f_ball(m/n), so the excess form keeps the minimum resolvable.
  const double lo = mass_grid[best == 0 ? 0 : best - 1];
  const double hi = mass_grid[std::min(best + 1, mass_grid.size() - 1)];
  const int n = table.n_optimal[best];
  if (hi > lo) {
    const double ref = mass_grid[best] / n;
    table.m_star = n * quadrature::golden_section_minimum(
                           [&](double x) { return f_ball_excess(x, ref); }, lo / n, hi / n, 1e-13 * ref);
  } else {
    table.m_star = mass_grid[best];
  }
  table.f_star = std::min(generalized_minimum(table.m_star, n_max).energy / table.m_star,
                          table.f_values[best]);
  return table;
}

}  // namespace okdrop::drop
