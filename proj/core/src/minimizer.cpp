#include "okdrop/minimizer.hpp"

#include <algorithm>
#include <numeric>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "okdrop/drop_model.hpp"
#include "okdrop/errors.hpp"

namespace okdrop {
namespace {

constexpr double kPi = std::numbers::pi;

// Droplet state with a cached matrix of pairwise Green's function values, so that a
// translation costs N - 1 kernel evaluations and mass moves cost none.
class State {
 public:
  State(const DropletConfig& config, const EwaldKernel& kernel)
      : kernel_(&kernel), spec_(config.spec), side_(config.spec.side_length()),
        volume_(kernel.volume()) {
    for (const auto& d : config.droplets) {
      c_.push_back(d.center);
      m_.push_back(d.mass);
    }
    g_.assign(c_.size(), std::vector<double>(c_.size(), 0.0));
    for (std::size_t i = 0; i < c_.size(); ++i) refresh_row(i);
  }

  std::size_t size() const { return c_.size(); }
  const Vec3& center(std::size_t i) const { return c_[i]; }
  double mass(std::size_t i) const { return m_[i]; }
  double radius(std::size_t i) const { return drop::ball_radius(m_[i]); }
  double side() const { return side_; }

  double energy() const {
    const std::size_t n = c_.size();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = radius(i);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      e += drop::ball_surface_energy(m_[i]);
      e += 0.5 * m_[i] * m_[i] *
           (3.0 / (10.0 * kPi * r[i]) + kernel_->r_at_zero() + r[i] * r[i] / (5.0 * volume_));
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        e += m_[i] * m_[j] * (g_[i][j] + (r[i] * r[i] + r[j] * r[j]) / (10.0 * volume_));
    return e;
  }

  std::vector<double> multipliers() const {
    const std::size_t n = c_.size();
    std::vector<double> lam(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double ri = radius(i);
      double v = 2.0 / ri + ri * ri / 3.0 + m_[i] * kernel_->r_at_zero() +
                 (2.0 * m_[i] * ri * ri + m_[i] * m_[i] / (2.0 * kPi * ri)) / (10.0 * volume_);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double rj = radius(j);
        v += m_[j] * (g_[i][j] + (ri * ri + rj * rj) / (10.0 * volume_)) +
             m_[i] * m_[j] / (2.0 * kPi * ri * 10.0 * volume_);
      }
      lam[i] = v;
    }
    return lam;
  }

  std::vector<Vec3> gradient() const {
    const std::size_t n = c_.size();
    std::vector<Vec3> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const Vec3 g = kernel_->green_gradient(c_[i] - c_[j]) * (m_[i] * m_[j]);
        grad[i] += g;
        grad[j] -= g;
      }
    }
    return grad;
  }

  void move(std::size_t i, const Vec3& c) {
    c_[i] = wrap_into_cell(c, side_);
    refresh_row(i);
  }
  void set_mass(std::size_t i, double m) { m_[i] = m; }
  void set_all_centers(const std::vector<Vec3>& cs) {
    for (std::size_t i = 0; i < cs.size(); ++i) c_[i] = wrap_into_cell(cs[i], side_);
    for (std::size_t i = 0; i < c_.size(); ++i) refresh_row(i);
  }
  void append(const Vec3& c, double m) {
    c_.push_back(wrap_into_cell(c, side_));
    m_.push_back(m);
    for (auto& row : g_) row.push_back(0.0);
    g_.emplace_back(c_.size(), 0.0);
    refresh_row(c_.size() - 1);
  }
  void remove(std::size_t j) {
    const std::size_t last = c_.size() - 1;
    if (j != last) {
      c_[j] = c_[last];
      m_[j] = m_[last];
      std::swap(g_[j], g_[last]);
      for (auto& row : g_) std::swap(row[j], row[last]);
    }
    c_.pop_back();
    m_.pop_back();
    g_.pop_back();
    for (auto& row : g_) row.pop_back();
  }

  /// Non-overlap of droplet i against all others, and radius below l/4.
  bool fits(std::size_t i) const {
    const double ri = radius(i);
    if (!(ri < 0.25 * side_)) return false;
    for (std::size_t j = 0; j < c_.size(); ++j) {
      if (j == i) continue;
      if (torus_distance(c_[i], c_[j], side_) < ri + radius(j)) return false;
    }
    return true;
  }
  bool all_fit() const {
    for (std::size_t i = 0; i < c_.size(); ++i)
      if (!fits(i)) return false;
    return true;
  }

  double nearest_neighbour(std::size_t i) const {
    double best = 0.5 * side_;
    for (std::size_t j = 0; j < c_.size(); ++j)
      if (j != i) best = std::min(best, torus_distance(c_[i], c_[j], side_));
    return best;
  }
  double nearest_neighbour_all() const {
    double best = 0.5 * side_;
    for (std::size_t i = 0; i < c_.size(); ++i) best = std::min(best, nearest_neighbour(i));
    return best;
  }
  std::size_t nearest_index(std::size_t i) const {
    std::size_t idx = i;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c_.size(); ++j) {
      if (j == i) continue;
      const double d = torus_distance(c_[i], c_[j], side_);
      if (d < best) {
        best = d;
        idx = j;
      }
    }
    return idx;
  }

  DropletConfig config() const {
    DropletConfig out{spec_, {}};
    for (std::size_t i = 0; i < c_.size(); ++i) out.droplets.push_back({c_[i], m_[i]});
    return out;
  }

 private:
  void refresh_row(std::size_t i) {
    for (std::size_t j = 0; j < c_.size(); ++j) {
      if (j == i) continue;
      const double g = kernel_->green(c_[i] - c_[j]);
      g_[i][j] = g;
      g_[j][i] = g;
    }
  }

  const EwaldKernel* kernel_;
  TorusSpec spec_;
  double side_;
  double volume_;
  std::vector<Vec3> c_;
  std::vector<double> m_;
  std::vector<std::vector<double>> g_;
};

double spread(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  return (*hi - *lo) / std::abs(mean);
}

Vec3 gaussian_vec(std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return {x, y, z};
}

Vec3 unit_vec(std::mt19937_64& rng) {
  for (;;) {
    const Vec3 v = gaussian_vec(rng, 1.0);
    const double len = norm(v);
    if (len > 1e-12) return v * (1.0 / len);
  }
}

}  // namespace

Lattice parse_lattice(const std::string& name) {
  if (name == "sc" || name == "SC") return Lattice::kSC;
  if (name == "bcc" || name == "BCC") return Lattice::kBCC;
  if (name == "fcc" || name == "FCC") return Lattice::kFCC;
  throw ParameterError("unknown lattice '" + name + "' (expected sc, bcc or fcc)");
}

std::string lattice_name(Lattice lattice) {
  switch (lattice) {
    case Lattice::kSC: return "sc";
    case Lattice::kBCC: return "bcc";
    case Lattice::kFCC: return "fcc";
  }
  return "?";
}

int lattice_basis_size(Lattice lattice) {
  switch (lattice) {
    case Lattice::kSC: return 1;
    case Lattice::kBCC: return 2;
    case Lattice::kFCC: return 4;
  }
  return 1;
}

std::vector<Vec3> lattice_sites(Lattice lattice, int n, double a) {
  std::vector<Vec3> basis{{0.0, 0.0, 0.0}};
  if (lattice == Lattice::kBCC) basis.push_back({0.5, 0.5, 0.5});
  if (lattice == Lattice::kFCC) {
    basis.push_back({0.5, 0.5, 0.0});
    basis.push_back({0.5, 0.0, 0.5});
    basis.push_back({0.0, 0.5, 0.5});
  }
  std::vector<Vec3> sites;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (const auto& b : basis) sites.push_back(Vec3{i + b.x, j + b.y, k + b.z} * a);
  return sites;
}

DropletConfig init_lattice(const TorusSpec& spec, Lattice lattice, double droplet_mass) {
  if (!(droplet_mass > 0.0)) throw ParameterError("init_lattice: droplet mass must be positive");
  const double budget = spec.mass_budget();
  const long requested = std::max(1L, std::lround(budget / droplet_mass));
  const int basis = lattice_basis_size(lattice);
  int n = 1;
  while (basis * static_cast<long>(n + 1) * (n + 1) * (n + 1) <= requested) ++n;
  const long below = basis * static_cast<long>(n) * n * n;
  const long above = basis * static_cast<long>(n + 1) * (n + 1) * (n + 1);
  if (requested - below > above - requested) ++n;

  const double l = spec.side_length();
  const auto sites = lattice_sites(lattice, n, l / n);
  const auto masses = equal_masses(budget, static_cast<int>(sites.size()));
  DropletConfig config{spec, {}};
  for (std::size_t i = 0; i < sites.size(); ++i) config.droplets.push_back({sites[i], masses[i]});

  const double r = drop::ball_radius(masses.front());
  double spacing = l;
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j)
      spacing = std::min(spacing, torus_distance(sites[i], sites[j], l));
  if (!(r < 0.25 * l) || spacing < 2.0 * r * (1.0 + 1e-12))
    throw InfeasibleError("init_lattice: " + std::to_string(sites.size()) + " " + lattice_name(lattice) +
                          " droplets of radius " + std::to_string(r) + " need spacing >= " +
                          std::to_string(2.0 * r) + " and radius < l/4 = " + std::to_string(0.25 * l) +
                          "; lattice nearest-neighbour distance is " + std::to_string(spacing));
  validate(config);
  return config;
}

void normalize_masses(DropletConfig& config) {
  const double budget = config.spec.mass_budget();
  const double q = mass_quantum(budget);
  double rest = 0.0;
  for (std::size_t i = 0; i + 1 < config.droplets.size(); ++i) {
    config.droplets[i].mass = quantize_mass(config.droplets[i].mass, q);
    rest += config.droplets[i].mass;
  }
  config.droplets.back().mass = budget - rest;
}

void AnnealSchedule::validate() const {
  if (!(cooling_rate > 0.0 && cooling_rate < 1.0))
    throw ParameterError("schedule: cooling_rate must lie in (0, 1)");
  if (initial_temp && !(*initial_temp >= 0.0)) throw ParameterError("schedule: initial_temp must be >= 0");
  if (steps_per_temp && *steps_per_temp < 1) throw ParameterError("schedule: steps_per_temp must be >= 1");
  if (!(min_temp_ratio > 0.0 && min_temp_ratio < 1.0))
    throw ParameterError("schedule: min_temp ratio must lie in (0, 1)");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ParameterError("schedule: move weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw ParameterError("schedule: move weights must not all be zero");
  if (max_levels < 0) throw ParameterError("schedule: max_levels must be >= 0");
  if (!(min_mass > 0.0 && max_mass > min_mass)) throw ParameterError("schedule: need 0 < min_mass < max_mass");
}

std::vector<double> mass_multipliers(const DropletConfig& config, const EwaldKernel& kernel) {
  validate(config);
  return State(config, kernel).multipliers();
}

std::vector<Vec3> center_gradient(const DropletConfig& config, const EwaldKernel& kernel) {
  validate(config);
  return State(config, kernel).gradient();
}

MinimizeResult anneal(const DropletConfig& start, const EwaldKernel& kernel,
                      const AnnealSchedule& schedule) {
  schedule.validate();
  DropletConfig init = start;
  normalize_masses(init);
  validate(init);

  State state(init, kernel);
  std::mt19937_64 rng(schedule.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<int> pick_move(schedule.weights.begin(), schedule.weights.end());
  const double quantum = mass_quantum(init.spec.mass_budget());
  const double side = state.side();

  double energy = state.energy();
  const double t0 = schedule.initial_temp.value_or(0.1 * std::abs(energy) / state.size());
  MinimizeResult result{init, {}, 0, 0, {}, {}, 0.0, 0};
  DropletConfig best = state.config();
  double best_energy = energy;
  long step = 0;

  const auto mass_ok = [&](double m) { return m >= schedule.min_mass && m <= schedule.max_mass; };

  for (int level = 0;; ++level) {
    const double ratio = std::pow(schedule.cooling_rate, level);
    if (ratio < schedule.min_temp_ratio) break;
    if (schedule.max_levels > 0 && level >= schedule.max_levels) break;
    const double temp = t0 * ratio;
    const double step_scale = std::sqrt(ratio);
    const long steps = schedule.steps_per_temp.value_or(200 * static_cast<int>(state.size()));

    for (long s = 0; s < steps; ++s, ++step) {
      const int kind = pick_move(rng);
      State trial = state;
      const std::size_t n = trial.size();
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      bool valid = false;

      switch (kind) {
        case kTranslate: {
          const std::size_t i = pick(rng);
          const double sigma = 0.5 * trial.nearest_neighbour(i) * step_scale;
          trial.move(i, trial.center(i) + gaussian_vec(rng, sigma));
          valid = trial.fits(i);
          break;
        }
        case kExchange: {
          if (n < 2) break;
          const std::size_t i = pick(rng);
          std::size_t j = pick(rng);
          if (j == i) j = (i + 1) % n;
          const double amount = (2.0 * unit(rng) - 1.0) * 0.1 *
                                std::min(trial.mass(i), trial.mass(j)) * step_scale;
          const double delta = quantize_mass(amount, quantum);
          if (delta == 0.0) break;
          const double mi = trial.mass(i) - delta;
          const double mj = trial.mass(j) + delta;
          if (!mass_ok(mi) || !mass_ok(mj)) break;
          trial.set_mass(i, mi);
          trial.set_mass(j, mj);
          valid = trial.fits(i) && trial.fits(j);
          break;
        }
        case kSplit: {
          const std::size_t i = pick(rng);
          const double m = trial.mass(i);
          const double m1 = quantize_mass(0.5 * m, quantum);
          const double m2 = m - m1;
          if (!mass_ok(m1) || !mass_ok(m2)) break;
          const double r1 = drop::ball_radius(m1);
          const double r2 = drop::ball_radius(m2);
          const double dist = 1.1 * (r1 + r2);
          const Vec3 u = unit_vec(rng);
          const Vec3 c = trial.center(i);
          trial.set_mass(i, m1);
          trial.move(i, c + u * (dist * m2 / m));
          trial.append(c - u * (dist * m1 / m), m2);
          valid = trial.fits(i) && trial.fits(n);
          break;
        }
        case kMerge: {
          if (n < 2) break;
          const std::size_t i = pick(rng);
          const std::size_t j = trial.nearest_index(i);
          const double m = trial.mass(i) + trial.mass(j);
          if (!mass_ok(m)) break;
          const Vec3 shift = min_image(trial.center(j) - trial.center(i), side);
          const Vec3 c = trial.center(i) + shift * (trial.mass(j) / m);
          trial.set_mass(i, m);
          trial.move(i, c);
          trial.remove(j);
          const std::size_t merged = (i == trial.size()) ? j : i;
          valid = trial.fits(merged);
          break;
        }
        case kShake: {
          const double sigma = 0.1 * trial.nearest_neighbour_all() * step_scale;
          std::vector<Vec3> cs;
          for (std::size_t i = 0; i < n; ++i) cs.push_back(trial.center(i) + gaussian_vec(rng, sigma));
          trial.set_all_centers(cs);
          valid = trial.all_fit();
          break;
        }
        default: break;
      }

      if (!valid) {
        ++result.rejected_moves;
        continue;
      }
      const double candidate = trial.energy();
      const double delta = candidate - energy;
      const bool accept = delta <= 0.0 || (temp > 0.0 && unit(rng) < std::exp(-delta / temp));
      if (!accept) {
        ++result.rejected_moves;
        continue;
      }
      state = std::move(trial);
      energy = candidate;
      ++result.accepted_moves;
      ++result.accepted_by_kind[kind];
      if (energy < best_energy) {
        best_energy = energy;
        best = state.config();
      }
    }
    result.history.push_back({step, temp, energy, best_energy, static_cast<int>(state.size())});
  }

  result.config = best;
  validate(result.config);
  result.breakdown = total_energy(result.config, kernel);
  result.multiplier_spread = spread(State(result.config, kernel).multipliers());
  return result;
}

MinimizeResult polish(const DropletConfig& config, const EwaldKernel& kernel, double tol,
                      int max_passes) {
  if (!(tol > 0.0)) throw ParameterError("polish: tol must be positive");
  DropletConfig init = config;
  normalize_masses(init);
  validate(init);

  State state(init, kernel);
  const double quantum = mass_quantum(init.spec.mass_budget());
  const std::size_t n = state.size();
  double energy = state.energy();
  MinimizeResult result{init, {}, 0, 0, {}, {}, 0.0, 0};
  result.history.push_back({0, 0.0, energy, energy, static_cast<int>(n)});
  result.converged = false;

  double center_step = -1.0;
  double mass_step = -1.0;
  constexpr std::size_t kWindow = 8;
  std::vector<double> decreases;
  for (int pass = 1; pass <= max_passes; ++pass) {
    const double before = energy;
    const bool fresh_steps = center_step < 0.0 && mass_step < 0.0;

    // Centres: backtracking descent along -grad, step length carried between passes.
    if (n > 1) {
      const auto grad = state.gradient();
      double gmax = 0.0;
      for (const auto& g : grad) gmax = std::max(gmax, norm(g));
      if (gmax > 0.0) {
        if (center_step < 0.0) center_step = 0.05 * state.nearest_neighbour_all() / gmax;
        double step = 2.0 * center_step;
        for (int attempt = 0; attempt < 40; ++attempt, step *= 0.5) {
          State trial = state;
          std::vector<Vec3> cs;
          for (std::size_t i = 0; i < n; ++i) cs.push_back(state.center(i) - grad[i] * step);
          trial.set_all_centers(cs);
          if (!trial.all_fit()) {
            ++result.rejected_moves;
            continue;
          }
          const double e = trial.energy();
          if (e < energy) {
            state = std::move(trial);
            energy = e;
            center_step = step;
            ++result.accepted_moves;
            break;
          }
          ++result.rejected_moves;
        }
      }
    }

    // Masses: move along the multiplier deviations projected onto the budget constraint.
    if (n > 1) {
      const auto lam = state.multipliers();
      double mean = 0.0;
      for (double v : lam) mean += v;
      mean /= static_cast<double>(n);
      double dmax = 0.0;
      for (double v : lam) dmax = std::max(dmax, std::abs(v - mean));
      if (dmax > 0.0) {
        double m_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) m_min = std::min(m_min, state.mass(i));
        if (mass_step < 0.0) mass_step = 0.01 * m_min / dmax;
        double step = 2.0 * mass_step;
        for (int attempt = 0; attempt < 40; ++attempt, step *= 0.5) {
          State trial = state;
          double rest = 0.0;
          bool ok = true;
          for (std::size_t i = 0; i + 1 < n; ++i) {
            const double m = quantize_mass(state.mass(i) - step * (lam[i] - mean), quantum);
            if (!(m > 0.0)) ok = false;
            trial.set_mass(i, m);
            rest += m;
          }
          const double last = init.spec.mass_budget() - rest;
          if (!(last > 0.0)) ok = false;
          trial.set_mass(n - 1, last);
          if (!ok || !trial.all_fit()) {
            ++result.rejected_moves;
            continue;
          }
          const double e = trial.energy();
          if (e < energy) {
            state = std::move(trial);
            energy = e;
            mass_step = step;
            ++result.accepted_moves;
            break;
          }
          ++result.rejected_moves;
        }
      }
    }

    result.passes = pass;
    result.history.push_back({pass, 0.0, energy, energy, static_cast<int>(n)});
    const double decrease = before - energy;
    if (decrease == 0.0) {
      if (fresh_steps) {
        result.converged = true;
        break;
      }
      // Carried step lengths may have collapsed; retry from fresh ones.
      center_step = mass_step = -1.0;
      continue;
    }
    // Descent is linear: estimate the remaining decrease as a geometric tail, with the
    // rate taken from the two halves of the last kWindow passes.
    decreases.push_back(decrease);
    if (decreases.size() >= kWindow) {
      const auto end = decreases.end();
      const double older = std::accumulate(end - kWindow, end - kWindow / 2, 0.0);
      const double recent = std::accumulate(end - kWindow / 2, end, 0.0);
      const double rho = std::clamp(std::pow(recent / older, 2.0 / kWindow), 0.0, 0.995);
      const double tail = recent / (kWindow / 2) * rho / (1.0 - rho);
      if (recent + tail < tol * std::abs(energy)) {
        result.converged = true;
        break;
      }
    }
  }

  result.config = state.config();
  validate(result.config);
  result.breakdown = total_energy(result.config, kernel);
  result.multiplier_spread = spread(state.multipliers());
  return result;
}

}  // namespace okdrop
