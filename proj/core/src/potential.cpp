#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "okdrop/errors.hpp"
#include "okdrop/torus_energy.hpp"

namespace okdrop {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRealReach = 6.5;

// FFTW planning is not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Cubic Lagrange interpolation of s -> ball_averaged_erfc(s, r, alpha) on [0, reach],
// with separate uniform segments on [0, r] and [r, reach] so that no stencil crosses
// the kink of the integrand at the ball surface.
class RadialTable {
 public:
  RadialTable(double r, double alpha, double reach) : r_(r), reach_(reach) {
    const double scale = std::min(r, 1.0 / alpha);
    const double step = scale / 40.0;
    const int n_in = std::max(8, static_cast<int>(std::ceil(r / step)));
    const int n_out = std::max(8, static_cast<int>(std::ceil((reach - r) / step)));
    h_in_ = r / n_in;
    h_out_ = (reach - r) / n_out;
    inner_.resize(n_in + 1);
    outer_.resize(n_out + 1);
    for (int i = 0; i <= n_in; ++i) inner_[i] = ball_averaged_erfc(i * h_in_, r, alpha);
    for (int i = 0; i <= n_out; ++i) outer_[i] = ball_averaged_erfc(r + i * h_out_, r, alpha);
  }

  double reach() const { return reach_; }

  double operator()(double s) const {
    if (s >= reach_) return 0.0;
    if (s < r_) return interpolate(inner_, s / h_in_);
    return interpolate(outer_, (s - r_) / h_out_);
  }

 private:
  static double interpolate(const std::vector<double>& y, double t) {
    const int last = static_cast<int>(y.size()) - 1;
    int i0 = static_cast<int>(std::floor(t)) - 1;
    i0 = std::clamp(i0, 0, last - 3);
    const double u = t - i0;
    const double y0 = y[i0], y1 = y[i0 + 1], y2 = y[i0 + 2], y3 = y[i0 + 3];
    return -y0 * (u - 1) * (u - 2) * (u - 3) / 6.0 + y1 * u * (u - 2) * (u - 3) / 2.0 -
           y2 * u * (u - 1) * (u - 3) / 2.0 + y3 * u * (u - 1) * (u - 2) / 6.0;
  }

  double r_;
  double reach_;
  double h_in_ = 0.0;
  double h_out_ = 0.0;
  std::vector<double> inner_;
  std::vector<double> outer_;
};

int signed_frequency(int a, int n) { return a <= n / 2 ? a : a - n; }

}  // namespace

PotentialField potential_field(const DropletConfig& config, const EwaldKernel& kernel, int grid_n) {
  if (grid_n < 16) throw ParameterError("potential_field: grid_n must be >= 16");
  validate(config);
  if (std::abs(kernel.side_length() - config.spec.side_length()) > 1e-12 * config.spec.side_length())
    throw ParameterError("potential_field: kernel side does not match torus side");

  const int n = grid_n;
  const double l = config.spec.side_length();
  const double vol = l * l * l;
  const double h = l / n;
  const int kmax = n / 2 - 1;
  const double dk = 2.0 * kPi / l;
  // Gaussian damping reaches exp(-36) at the largest resolved mode.
  const double alpha = dk * kmax / 12.0;
  const auto& ds = config.droplets;
  const std::size_t total = static_cast<std::size_t>(n) * n * n;

  PotentialField field;
  field.grid_n = n;
  field.side_length = l;
  field.values.assign(total, 0.0);

  // Real-space part.
  std::map<double, std::unique_ptr<RadialTable>> tables;
  for (const auto& d : ds) {
    const double r = d.radius();
    auto& t = tables[r];
    if (!t) t = std::make_unique<RadialTable>(r, alpha, r + kRealReach / alpha);
    const RadialTable& table = *t;
    const double reach = table.reach();
    const Vec3 c = wrap_into_cell(d.center, l);
    const int lo[3] = {static_cast<int>(std::floor((c.x - reach) / h)),
                       static_cast<int>(std::floor((c.y - reach) / h)),
                       static_cast<int>(std::floor((c.z - reach) / h))};
    const int hi[3] = {static_cast<int>(std::ceil((c.x + reach) / h)),
                       static_cast<int>(std::ceil((c.y + reach) / h)),
                       static_cast<int>(std::ceil((c.z + reach) / h))};
    const auto wrap = [n](int i) { return ((i % n) + n) % n; };
    for (int i = lo[0]; i <= hi[0]; ++i) {
      const double dx = i * h - c.x;
      for (int j = lo[1]; j <= hi[1]; ++j) {
        const double dy = j * h - c.y;
        const double dxy2 = dx * dx + dy * dy;
        if (dxy2 >= reach * reach) continue;
        double* row = &field.values[(static_cast<std::size_t>(wrap(i)) * n + wrap(j)) * n];
        for (int k = lo[2]; k <= hi[2]; ++k) {
          const double dz = k * h - c.z;
          const double s = std::sqrt(dxy2 + dz * dz);
          if (s < reach) row[wrap(k)] += d.mass * table(s);
        }
      }
    }
  }

  // Reciprocal part on the half spectrum, transformed with c2r.
  const int nz = n / 2 + 1;
  std::unique_ptr<fftw_complex, FftwFree> spec(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * n * nz)));
  std::unique_ptr<double, FftwFree> grid(static_cast<double*>(fftw_malloc(sizeof(double) * total)));
  std::fill_n(reinterpret_cast<double*>(spec.get()), 2 * static_cast<std::size_t>(n) * n * nz, 0.0);

  std::vector<std::complex<double>> ex(static_cast<std::size_t>(n)), ey(ex.size()), ez(ex.size());
  std::vector<std::complex<double>> rho(static_cast<std::size_t>(n) * n * nz);
  for (const auto& d : ds) {
    const double r = d.radius();
    for (int a = 0; a < n; ++a) {
      const int f = signed_frequency(a, n);
      ex[a] = std::polar(1.0, -dk * f * d.center.x);
      ey[a] = std::polar(1.0, -dk * f * d.center.y);
      ez[a] = std::polar(1.0, -dk * f * d.center.z);
    }
    for (int a = 0; a < n; ++a) {
      const int fa = signed_frequency(a, n);
      if (std::abs(fa) > kmax) continue;
      for (int b = 0; b < n; ++b) {
        const int fb = signed_frequency(b, n);
        if (std::abs(fb) > kmax) continue;
        const std::complex<double> exy = ex[a] * ey[b];
        for (int c = 0; c <= kmax; ++c) {
          if (fa == 0 && fb == 0 && c == 0) continue;
          const double k = dk * std::sqrt(static_cast<double>(fa * fa + fb * fb + c * c));
          rho[(static_cast<std::size_t>(a) * n + b) * nz + c] +=
              d.mass * ball_form_factor(k, r) * exy * ez[c];
        }
      }
    }
  }
  for (int a = 0; a < n; ++a) {
    const int fa = signed_frequency(a, n);
    for (int b = 0; b < n; ++b) {
      const int fb = signed_frequency(b, n);
      for (int c = 0; c < nz; ++c) {
        const std::size_t idx = (static_cast<std::size_t>(a) * n + b) * nz + c;
        if (rho[idx] == std::complex<double>{}) continue;
        const double k2 = dk * dk * (fa * fa + fb * fb + c * c);
        const std::complex<double> coef = rho[idx] * (std::exp(-k2 / (4.0 * alpha * alpha)) / (k2 * vol));
        spec.get()[idx][0] = coef.real();
        spec.get()[idx][1] = coef.imag();
      }
    }
  }
  {
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      plan = fftw_plan_dft_c2r_3d(n, n, n, spec.get(), grid.get(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }

  const double background = -config.total_mass() / (4.0 * alpha * alpha * vol);
  for (std::size_t i = 0; i < total; ++i) field.values[i] += grid.get()[i] + background;

  // The continuum field has zero mean; drop the grid zero mode left by sampling.
  double raw = 0.0;
  for (double v : field.values) raw += v;
  field.sampled_mean_offset = raw / static_cast<double>(total);
  for (double& v : field.values) v -= field.sampled_mean_offset;

  double sum = 0.0;
  field.minimum = field.values[0];
  field.maximum = field.values[0];
  for (double v : field.values) {
    sum += v;
    field.minimum = std::min(field.minimum, v);
    field.maximum = std::max(field.maximum, v);
  }
  field.mean = sum / static_cast<double>(total);
  field.sup_norm = std::max(std::abs(field.minimum), std::abs(field.maximum));

  // Dirichlet energy by Parseval.
  std::copy(field.values.begin(), field.values.end(), grid.get());
  {
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      plan = fftw_plan_dft_r2c_3d(n, n, n, grid.get(), spec.get(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  double grad2 = 0.0;
  const double norm_factor = 1.0 / static_cast<double>(total);
  for (int a = 0; a < n; ++a) {
    const int fa = signed_frequency(a, n);
    for (int b = 0; b < n; ++b) {
      const int fb = signed_frequency(b, n);
      for (int c = 0; c < nz; ++c) {
        const std::size_t idx = (static_cast<std::size_t>(a) * n + b) * nz + c;
        const double re = spec.get()[idx][0] * norm_factor;
        const double im = spec.get()[idx][1] * norm_factor;
        const double k2 = dk * dk * (fa * fa + fb * fb + c * c);
        const double weight = (c == 0 || 2 * c == n) ? 1.0 : 2.0;
        grad2 += weight * k2 * (re * re + im * im);
      }
    }
  }
  field.dirichlet_energy = 0.5 * vol * grad2;

  // Gradient diagnostic.
  const auto at = [&](int i, int j, int k) {
    return field.values[(static_cast<std::size_t>((i + n) % n) * n + (j + n) % n) * n + (k + n) % n];
  };
  std::vector<double> gnorm(total);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const double gx = (at(i + 1, j, k) - at(i - 1, j, k)) / (2.0 * h);
        const double gy = (at(i, j + 1, k) - at(i, j - 1, k)) / (2.0 * h);
        const double gz = (at(i, j, k + 1) - at(i, j, k - 1)) / (2.0 * h);
        gnorm[(static_cast<std::size_t>(i) * n + j) * n + k] = std::sqrt(gx * gx + gy * gy + gz * gz);
      }
    }
  }
  double c_fit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < total; ++i) c_fit = std::max(c_fit, gnorm[i] / 1.5 - field.values[i]);
  double residual = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < total; ++i)
    residual = std::max(residual, gnorm[i] - 1.5 * (field.values[i] + c_fit));
  field.gradient_constant = c_fit;
  field.gradient_bound_residual = residual;

  double r_min = std::numeric_limits<double>::infinity();
  for (const auto& d : ds) r_min = std::min(r_min, d.radius());
  if (r_min < 2.0 * h)
    field.warning = "grid spacing " + std::to_string(h) + " does not resolve the smallest radius " +
                    std::to_string(r_min) + " by two cells";
  return field;
}

}  // namespace okdrop
