#include "okdrop/torus_energy.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "okdrop/drop_model.hpp"
#include "okdrop/errors.hpp"

namespace okdrop {
namespace {

constexpr double kPi = std::numbers::pi;
// erfc(6.5) ~ 4e-20: smeared and Newtonian pair terms coincide beyond this reach.
constexpr double kSmearedReach = 6.5;

void require_matching_side(const DropletConfig& config, const EwaldKernel& kernel) {
  const double l = config.spec.side_length();
  if (std::abs(kernel.side_length() - l) > 1e-12 * l)
    throw ParameterError("kernel side " + std::to_string(kernel.side_length()) +
                         " does not match torus side " + std::to_string(l));
}

}  // namespace

TorusSpec::TorusSpec(double epsilon, double lambda) : epsilon_(epsilon), lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ParameterError("lambda must be positive, got " + std::to_string(lambda));
  const double bound = std::pow(lambda, -1.5);
  if (!(epsilon > 0.0) || !(epsilon < bound))
    throw ParameterError("epsilon must satisfy 0 < eps < lambda^{-3/2} = " + std::to_string(bound) +
                         ", got " + std::to_string(epsilon));
  side_ = 1.0 / std::cbrt(epsilon);
  budget_ = lambda * side_;
}

double mass_quantum(double budget) {
  return std::nextafter(budget, std::numeric_limits<double>::infinity()) - budget;
}

double quantize_mass(double m, double quantum) { return std::round(m / quantum) * quantum; }

std::vector<double> equal_masses(double total, int count) {
  if (count < 1) throw ParameterError("equal_masses: count must be >= 1");
  const double q = mass_quantum(total);
  const double m = quantize_mass(total / count, q);
  std::vector<double> out(static_cast<std::size_t>(count), m);
  out.back() = total - m * (count - 1);
  return out;
}

double Droplet::radius() const { return drop::ball_radius(mass); }

double DropletConfig::total_mass() const noexcept {
  double sum = 0.0;
  for (const auto& d : droplets) sum += d.mass;
  return sum;
}

void validate(const DropletConfig& config) {
  const double l = config.spec.side_length();
  const auto& ds = config.droplets;
  if (ds.empty()) throw ConfigurationError("configuration has no droplets");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!(ds[i].mass > 0.0) || !std::isfinite(ds[i].mass))
      throw ConfigurationError("droplet " + std::to_string(i) + " has non-positive mass");
    if (!(ds[i].radius() < 0.25 * l))
      throw ConfigurationError("droplet " + std::to_string(i) + " radius " +
                               std::to_string(ds[i].radius()) + " is not below l/4 = " +
                               std::to_string(0.25 * l));
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = i + 1; j < ds.size(); ++j) {
      const double d = torus_distance(ds[i].center, ds[j].center, l);
      if (d < ds[i].radius() + ds[j].radius())
        throw ConfigurationError("droplets " + std::to_string(i) + " and " + std::to_string(j) +
                                 " overlap (distance " + std::to_string(d) + ")");
    }
  }
  const double budget = config.spec.mass_budget();
  const double total = config.total_mass();
  if (std::abs(total - budget) > 1e-12 * budget)
    throw ConfigurationError("total mass " + std::to_string(total) + " differs from budget " +
                             std::to_string(budget));
}

namespace {

// Pair term m_i m_j [G(c_i - c_j) + (r_i^2 + r_j^2)/(10 V)] without the masses.
double pair_kernel(const EwaldKernel& kernel, const Droplet& a, const Droplet& b) {
  const double ra = a.radius();
  const double rb = b.radius();
  return kernel.green(a.center - b.center) + (ra * ra + rb * rb) / (10.0 * kernel.volume());
}

// Self term (1/2) m^2 [3/(10 pi r) + R(0) + r^2/(5 V)].
double self_term(const EwaldKernel& kernel, const Droplet& d) {
  const double r = d.radius();
  return 0.5 * d.mass * d.mass *
         (3.0 / (10.0 * kPi * r) + kernel.r_at_zero() + r * r / (5.0 * kernel.volume()));
}

}  // namespace

EnergyBreakdown total_energy(const DropletConfig& config, const EwaldKernel& kernel) {
  validate(config);
  require_matching_side(config, kernel);
  const auto& ds = config.droplets;
  EnergyBreakdown out;
  out.per_droplet.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.per_droplet[i].surface = drop::ball_surface_energy(ds[i].mass);
    out.per_droplet[i].self = self_term(kernel, ds[i]);
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = i + 1; j < ds.size(); ++j) {
      const double half = 0.5 * ds[i].mass * ds[j].mass * pair_kernel(kernel, ds[i], ds[j]);
      out.per_droplet[i].interaction += half;
      out.per_droplet[j].interaction += half;
    }
  }
  for (const auto& p : out.per_droplet) {
    out.surface += p.surface;
    out.coulomb += p.self + p.interaction;
  }
  out.total = out.surface + out.coulomb;
  out.scaled_total = out.total / config.spec.side_length();
  return out;
}

double coulomb_energy(const DropletConfig& config, const EwaldKernel& kernel) {
  return total_energy(config, kernel).coulomb;
}

double coulomb_energy_spectral(const DropletConfig& config, const EwaldKernel& kernel) {
  validate(config);
  require_matching_side(config, kernel);
  const auto& ds = config.droplets;
  const double l = kernel.side_length();
  const double v = kernel.volume();
  const double alpha = kernel.splitting_alpha();
  const int kc = kernel.k_cutoff();
  const double dk = 2.0 * kPi / l;

  // Reciprocal part: (1/2V) sum_{k != 0} exp(-k^2/4a^2) |rho(k)|^2 / k^2.
  const int width = 2 * kc + 1;
  std::vector<std::complex<double>> px(ds.size() * width), py(ds.size() * width),
      pz(ds.size() * width);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int a = -kc; a <= kc; ++a) {
      px[i * width + a + kc] = std::polar(1.0, -dk * a * ds[i].center.x);
      py[i * width + a + kc] = std::polar(1.0, -dk * a * ds[i].center.y);
      pz[i * width + a + kc] = std::polar(1.0, -dk * a * ds[i].center.z);
    }
  }
  double reciprocal = 0.0;
  for (int a = -kc; a <= kc; ++a) {
    for (int b = -kc; b <= kc; ++b) {
      for (int c = -kc; c <= kc; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const double k2 = dk * dk * (a * a + b * b + c * c);
        const double k = std::sqrt(k2);
        std::complex<double> rho{};
        for (std::size_t i = 0; i < ds.size(); ++i) {
          rho += ds[i].mass * ball_form_factor(k, ds[i].radius()) * px[i * width + a + kc] *
                 py[i * width + b + kc] * pz[i * width + c + kc];
        }
        reciprocal += std::exp(-k2 / (4.0 * alpha * alpha)) * std::norm(rho) / k2;
      }
    }
  }
  reciprocal /= 2.0 * v;

  // Real-space remainder: Newtonian minus Gaussian-smeared ball interactions.
  double real = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double ri = ds[i].radius();
    for (std::size_t j = i; j < ds.size(); ++j) {
      const double rj = ds[j].radius();
      const Vec3 base = min_image(ds[i].center - ds[j].center, l);
      const double reach = kSmearedReach / alpha + ri + rj;
      const int p = static_cast<int>(std::ceil(reach / l)) + 1;
      double sum = 0.0;
      for (int x = -p; x <= p; ++x) {
        for (int y = -p; y <= p; ++y) {
          for (int z = -p; z <= p; ++z) {
            const Vec3 dv{base.x + x * l, base.y + y * l, base.z + z * l};
            const double d = norm(dv);
            if (i == j && x == 0 && y == 0 && z == 0) {
              sum += 3.0 / (10.0 * kPi * ri) - smeared_ball_pair(0.0, ri, ri, alpha);
              continue;
            }
            if (d - ri - rj > kSmearedReach / alpha) continue;
            sum += 1.0 / (4.0 * kPi * d) - smeared_ball_pair(d, ri, rj, alpha);
          }
        }
      }
      real += (i == j ? 0.5 : 1.0) * ds[i].mass * ds[j].mass * sum;
    }
  }

  const double m = config.total_mass();
  return reciprocal + real - m * m / (8.0 * alpha * alpha * v);
}

double potential_at(const DropletConfig& config, const EwaldKernel& kernel, const Vec3& x) {
  require_matching_side(config, kernel);
  const double l = kernel.side_length();
  const double v = kernel.volume();
  double out = 0.0;
  for (const auto& d : config.droplets) {
    const double r = d.radius();
    const Vec3 dv = min_image(x - d.center, l);
    const double s = norm(dv);
    const double shared = r * r / (10.0 * v);
    if (s >= r) {
      out += d.mass * (kernel.green(dv) + shared);
    } else {
      out += d.mass * (ball_newton_potential(s, r) + kernel.regular_part(dv) + shared);
    }
  }
  return out;
}

}  // namespace okdrop
