#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "okdrop/errors.hpp"
#include "okdrop/quadrature.hpp"
#include "okdrop/torus_energy.hpp"

namespace okdrop {
namespace {

constexpr double kPi = std::numbers::pi;

// The octree only apportions the self-energy; volumes come from the slice integral.
struct Moments {
  double volume = 0.0;
  // Integral of the ball's own Newtonian potential profile over the region.
  double self_weight = 0.0;
};

class BallClip {
 public:
  BallClip(const Vec3& c, double r, int max_depth) : c_(c), r_(r), max_depth_(max_depth) {}

  Moments run(Vec3 lo, Vec3 hi) const {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(lo[a], c_[a] - r_);
      hi[a] = std::min(hi[a], c_[a] + r_);
      if (hi[a] <= lo[a]) return {};
    }
    Moments m;
    recurse(lo, hi, 0, m);
    return m;
  }

 private:
  double profile(const Vec3& x) const { return ball_newton_potential(norm(x - c_), r_); }

  void recurse(const Vec3& lo, const Vec3& hi, int depth, Moments& m) const {
    double near2 = 0.0;
    double far2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double nearest = std::clamp(c_[a], lo[a], hi[a]) - c_[a];
      const double farthest = std::max(std::abs(lo[a] - c_[a]), std::abs(hi[a] - c_[a]));
      near2 += nearest * nearest;
      far2 += farthest * farthest;
    }
    const double r2 = r_ * r_;
    if (near2 >= r2) return;
    const Vec3 size = hi - lo;
    const double cell = size.x * size.y * size.z;
    if (far2 <= r2) {
      // The profile is quadratic inside the ball: the 2-point product rule is exact.
      constexpr double g = 0.21132486540518713;  // (1 - 1/sqrt(3)) / 2
      double sum = 0.0;
      for (int i = 0; i < 8; ++i) {
        const Vec3 p{lo.x + size.x * ((i & 1) ? 1.0 - g : g), lo.y + size.y * ((i & 2) ? 1.0 - g : g),
                     lo.z + size.z * ((i & 4) ? 1.0 - g : g)};
        sum += profile(p);
      }
      m.volume += cell;
      m.self_weight += cell * sum / 8.0;
      return;
    }
    if (depth == max_depth_) {
      const Vec3 mid = 0.5 * (lo + hi);
      if (dot(mid - c_, mid - c_) < r2) {
        m.volume += cell;
        m.self_weight += cell * profile(mid);
      }
      return;
    }
    const Vec3 mid = 0.5 * (lo + hi);
    for (int i = 0; i < 8; ++i) {
      const Vec3 a{(i & 1) ? mid.x : lo.x, (i & 2) ? mid.y : lo.y, (i & 4) ? mid.z : lo.z};
      const Vec3 b{(i & 1) ? hi.x : mid.x, (i & 2) ? hi.y : mid.y, (i & 4) ? hi.z : mid.z};
      recurse(a, b, depth + 1, m);
    }
  }

  Vec3 c_;
  double r_;
  int max_depth_;
};

// Fraction of the sphere surface inside the box: Gauss-Legendre in cos(theta),
// uniform in the azimuth.
double sphere_area_fraction(const Vec3& c, double r, const Vec3& lo, const Vec3& hi) {
  const auto nodes = quadrature::gl_nodes(30);
  const auto weights = quadrature::gl_weights(30);
  constexpr int kAzimuth = 64;
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double ct = nodes[i];
    const double st = std::sqrt(1.0 - ct * ct);
    for (int j = 0; j < kAzimuth; ++j) {
      const double phi = 2.0 * kPi * (j + 0.5) / kAzimuth;
      const Vec3 p{c.x + r * st * std::cos(phi), c.y + r * st * std::sin(phi), c.z + r * ct};
      if (p.x >= lo.x && p.x < hi.x && p.y >= lo.y && p.y < hi.y && p.z >= lo.z && p.z < hi.z)
        sum += weights[i];
    }
  }
  return sum / (2.0 * kAzimuth);
}


// Area of the disk of radius rho centred at the origin intersected with {y <= Y, z <= Z}.
double disk_quadrant_area(double y_max, double z_max, double rho) {
  if (rho <= 0.0) return 0.0;
  const double top = std::min(y_max, rho);
  if (top <= -rho) return 0.0;
  // Antiderivative of the half chord sqrt(rho^2 - y^2).
  const auto chord = [rho](double y) {
    const double w = std::sqrt(std::max(0.0, rho * rho - y * y));
    return 0.5 * (y * w + rho * rho * std::asin(std::clamp(y / rho, -1.0, 1.0)));
  };
  if (std::abs(z_max) >= rho) return z_max > 0.0 ? 2.0 * (chord(top) - chord(-rho)) : 0.0;
  // For |y| < yz the chord is clipped by z = z_max, outside it is entirely above or below.
  const double yz = std::sqrt(rho * rho - z_max * z_max);
  double area = 0.0;
  const auto outer = [&](double a, double b) {
    if (b > a && z_max > 0.0) area += 2.0 * (chord(b) - chord(a));
  };
  const auto inner = [&](double a, double b) {
    if (b > a) area += z_max * (b - a) + chord(b) - chord(a);
  };
  outer(-rho, std::min(top, -yz));
  inner(-yz, std::min(top, yz));
  outer(yz, top);
  return area;
}

double disk_rectangle_area(double y0, double y1, double z0, double z1, double rho) {
  return disk_quadrant_area(y1, z1, rho) - disk_quadrant_area(y0, z1, rho) -
         disk_quadrant_area(y1, z0, rho) + disk_quadrant_area(y0, z0, rho);
}

// Ball-box volume as an integral of exact slice areas over x. The slice area is
// smooth between the abscissae where the slice circle meets a box edge or corner;
// a cubic change of variable on each piece absorbs the (x - x0)^{3/2} endpoint behaviour.
double ball_box_volume_slices(const Vec3& c, double r, const Vec3& lo, const Vec3& hi) {
  const double a = std::max(lo.x - c.x, -r);
  const double b = std::min(hi.x - c.x, r);
  if (b <= a) return 0.0;
  const double y0 = lo.y - c.y, y1 = hi.y - c.y, z0 = lo.z - c.z, z1 = hi.z - c.z;
  std::vector<double> breaks{a, b};
  const auto add = [&](double rho2) {
    if (rho2 <= 0.0 || rho2 >= r * r) return;
    const double x = std::sqrt(r * r - rho2);
    for (double s : {-x, x})
      if (s > a && s < b) breaks.push_back(s);
  };
  for (double y : {y0, y1}) add(y * y);
  for (double z : {z0, z1}) add(z * z);
  for (double y : {y0, y1})
    for (double z : {z0, z1}) add(y * y + z * z);
  std::sort(breaks.begin(), breaks.end());
  double volume = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double start = breaks[i];
    const double len = breaks[i + 1] - start;
    volume += quadrature::composite_gauss(
        [&](double t) {
          const double x = start + len * t * t * (3.0 - 2.0 * t);
          const double rho = std::sqrt(std::max(0.0, r * r - x * x));
          return 6.0 * len * t * (1.0 - t) * disk_rectangle_area(y0, y1, z0, z1, rho);
        },
        0.0, 1.0, 2, 20);
  }
  return volume;
}

}  // namespace

double ball_box_volume(const Vec3& center, double radius, const Vec3& lo, const Vec3& hi) {
  return ball_box_volume_slices(center, radius, lo, hi);
}

double CoarseGrainReport::max_nu_deviation(double reference_total) const {
  const double share = reference_total / static_cast<double>(nu.size());
  double worst = 0.0;
  for (double v : nu) worst = std::max(worst, std::abs(v - share) / std::abs(share));
  return worst;
}

CoarseGrainReport energy_measure(const DropletConfig& config, const EwaldKernel& kernel,
                                 int subdivisions) {
  if (subdivisions < 2 || subdivisions > 16)
    throw ParameterError("energy_measure: subdivisions must lie in 2..16");
  const EnergyBreakdown breakdown = total_energy(config, kernel);
  const int n = subdivisions;
  const double l = config.spec.side_length();
  const double h = l / n;
  const double scale = 1.0 / l;  // eps^{1/3}

  CoarseGrainReport report;
  report.subdivisions = n;
  report.lambda = config.spec.lambda();
  report.scaled_total = breakdown.scaled_total;
  const std::size_t cubes = static_cast<std::size_t>(n) * n * n;
  report.mu.assign(cubes, 0.0);
  report.nu.assign(cubes, 0.0);

  const auto wrap = [n](int i) { return ((i % n) + n) % n; };
  for (std::size_t d = 0; d < config.droplets.size(); ++d) {
    const Droplet& drop = config.droplets[d];
    const DropletEnergy& e = breakdown.per_droplet[d];
    const double r = drop.radius();
    const Vec3 c = wrap_into_cell(drop.center, l);
    int lo[3];
    int hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<int>(std::floor((c[a] - r) / h));
      hi[a] = static_cast<int>(std::floor((c[a] + r) / h));
    }

    struct Piece {
      std::size_t cube;
      double volume;
      double self_weight;
      double area;
    };
    std::vector<Piece> pieces;
    if (lo[0] == hi[0] && lo[1] == hi[1] && lo[2] == hi[2]) {
      pieces.push_back({(static_cast<std::size_t>(wrap(lo[0])) * n + wrap(lo[1])) * n + wrap(lo[2]),
                        1.0, 1.0, 1.0});
    } else {
      const BallClip clip(c, r, 7);
      for (int i = lo[0]; i <= hi[0]; ++i) {
        for (int j = lo[1]; j <= hi[1]; ++j) {
          for (int k = lo[2]; k <= hi[2]; ++k) {
            const Vec3 blo{i * h, j * h, k * h};
            const Vec3 bhi{(i + 1) * h, (j + 1) * h, (k + 1) * h};
            const double volume = ball_box_volume_slices(c, r, blo, bhi);
            const double area = sphere_area_fraction(c, r, blo, bhi);
            if (volume <= 0.0 && area <= 0.0) continue;
            const Moments m = clip.run(blo, bhi);
            pieces.push_back({(static_cast<std::size_t>(wrap(i)) * n + wrap(j)) * n + wrap(k),
                              volume, m.self_weight, area});
          }
        }
      }
    }
    double sv = 0.0, sw = 0.0, sa = 0.0;
    for (const auto& p : pieces) {
      sv += p.volume;
      sw += p.self_weight;
      sa += p.area;
    }
    for (const auto& p : pieces) {
      const double fv = p.volume / sv;
      report.mu[p.cube] += scale * drop.mass * fv;
      report.nu[p.cube] +=
          scale * (e.surface * p.area / sa + e.self * p.self_weight / sw + e.interaction * fv);
    }
  }

  const double share = report.lambda / static_cast<double>(cubes);
  for (std::size_t i = 0; i < cubes; ++i) {
    report.mu_total += report.mu[i];
    report.nu_total += report.nu[i];
    report.max_mu_deviation = std::max(report.max_mu_deviation, std::abs(report.mu[i] - share) / share);
  }
  return report;
}

}  // namespace okdrop
