#include "okdrop/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "okdrop/errors.hpp"
#include "okdrop/quadrature.hpp"

namespace okdrop {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInvSqrtPi = std::numbers::inv_sqrtpi;
// erfc(9) ~ 4e-37: images farther than 9/alpha contribute nothing in double precision.
constexpr double kRealSpaceReach = 9.0;

// erf(z)/z, with the Taylor branch near the origin.
double erf_over(double z) {
  if (z < 1e-3) {
    const double z2 = z * z;
    return 2.0 * kInvSqrtPi * (1.0 - z2 / 3.0 + z2 * z2 / 10.0);
  }
  return std::erf(z) / z;
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace

EwaldKernel::EwaldKernel(double side_length, int k_cutoff, std::optional<double> splitting_alpha)
    : side_(side_length), k_cutoff_(k_cutoff) {
  if (!(side_length > 0.0) || !std::isfinite(side_length))
    throw ParameterError("EwaldKernel: side length must be positive, got " + std::to_string(side_length));
  if (k_cutoff < 1) throw ParameterError("EwaldKernel: k_cutoff must be >= 1");
  alpha_ = splitting_alpha.value_or(kDefaultAlphaTimesSide / side_length);
  if (!(alpha_ > 0.0)) throw ParameterError("EwaldKernel: splitting_alpha must be positive");

  image_shells_ = static_cast<int>(std::ceil(kRealSpaceReach / (alpha_ * side_) + 0.5));
  background_ = 1.0 / (4.0 * alpha_ * alpha_ * volume());

  const int n = k_cutoff_ + 1;
  coeff_.assign(static_cast<std::size_t>(n) * n * n, 0.0);
  const double dk = 2.0 * kPi / side_;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const double k2 = dk * dk * static_cast<double>(a * a + b * b + c * c);
        const int nonzero = (a != 0) + (b != 0) + (c != 0);
        const double multiplicity = static_cast<double>(1 << nonzero);
        coeff_[(static_cast<std::size_t>(a) * n + b) * n + c] =
            multiplicity * std::exp(-k2 / (4.0 * alpha_ * alpha_)) / (k2 * volume());
      }
    }
  }
  r_at_zero_ = regular_part(Vec3{});
}

double EwaldKernel::reciprocal_part(const Vec3& x) const {
  const int n = k_cutoff_ + 1;
  const double dk = 2.0 * kPi / side_;
  std::vector<double> cx(n), cy(n), cz(n);
  for (int a = 0; a < n; ++a) {
    cx[a] = std::cos(dk * a * x.x);
    cy[a] = std::cos(dk * a * x.y);
    cz[a] = std::cos(dk * a * x.z);
  }
  double sum = 0.0;
  for (int a = 0; a < n; ++a) {
    double sa = 0.0;
    for (int b = 0; b < n; ++b) {
      const double* row = &coeff_[(static_cast<std::size_t>(a) * n + b) * n];
      double sb = 0.0;
      for (int c = 0; c < n; ++c) sb += row[c] * cz[c];
      sa += sb * cy[b];
    }
    sum += sa * cx[a];
  }
  return sum;
}

double EwaldKernel::real_space_regular(const Vec3& xm) const {
  const double reach = kRealSpaceReach / alpha_;
  double sum = 0.0;
  const int p = image_shells_;
  for (int i = -p; i <= p; ++i) {
    for (int j = -p; j <= p; ++j) {
      for (int k = -p; k <= p; ++k) {
        const Vec3 v{xm.x + i * side_, xm.y + j * side_, xm.z + k * side_};
        const double r = norm(v);
        if (i == 0 && j == 0 && k == 0) {
          sum -= alpha_ * erf_over(alpha_ * r) / (4.0 * kPi);
        } else if (r < reach) {
          sum += std::erfc(alpha_ * r) / (4.0 * kPi * r);
        }
      }
    }
  }
  return sum;
}

double EwaldKernel::regular_part(const Vec3& x) const {
  const Vec3 xm = min_image(x, side_);
  return real_space_regular(xm) + reciprocal_part(xm) - background_;
}

double EwaldKernel::green(const Vec3& x) const {
  const Vec3 xm = min_image(x, side_);
  const double r = norm(xm);
  if (r < 1e-8 * side_)
    throw DomainError("periodic Green's function is singular at lattice points (|x| = " +
                      std::to_string(r) + ")");
  return 1.0 / (4.0 * kPi * r) + (real_space_regular(xm) + reciprocal_part(xm) - background_);
}

Vec3 EwaldKernel::green_gradient(const Vec3& x) const {
  const Vec3 xm = min_image(x, side_);
  if (norm(xm) < 1e-8 * side_)
    throw DomainError("gradient of the periodic Green's function is singular at lattice points");

  Vec3 grad{};
  const double reach = kRealSpaceReach / alpha_;
  const int p = image_shells_;
  for (int i = -p; i <= p; ++i) {
    for (int j = -p; j <= p; ++j) {
      for (int k = -p; k <= p; ++k) {
        const Vec3 v{xm.x + i * side_, xm.y + j * side_, xm.z + k * side_};
        const double r = norm(v);
        if (r >= reach) continue;
        const double ar = alpha_ * r;
        const double dphi =
            -(std::erfc(ar) / (r * r) + 2.0 * alpha_ * kInvSqrtPi * std::exp(-ar * ar) / r) /
            (4.0 * kPi);
        grad += v * (dphi / r);
      }
    }
  }

  const int n = k_cutoff_ + 1;
  const double dk = 2.0 * kPi / side_;
  std::vector<double> cx(n), cy(n), cz(n), sx(n), sy(n), sz(n);
  for (int a = 0; a < n; ++a) {
    cx[a] = std::cos(dk * a * xm.x);
    cy[a] = std::cos(dk * a * xm.y);
    cz[a] = std::cos(dk * a * xm.z);
    sx[a] = -dk * a * std::sin(dk * a * xm.x);
    sy[a] = -dk * a * std::sin(dk * a * xm.y);
    sz[a] = -dk * a * std::sin(dk * a * xm.z);
  }
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double* row = &coeff_[(static_cast<std::size_t>(a) * n + b) * n];
      double cc = 0.0;
      double cs = 0.0;
      for (int c = 0; c < n; ++c) {
        cc += row[c] * cz[c];
        cs += row[c] * sz[c];
      }
      grad.x += sx[a] * cy[b] * cc;
      grad.y += cx[a] * sy[b] * cc;
      grad.z += cx[a] * cy[b] * cs;
    }
  }
  return grad;
}

double smooth_step(double t) noexcept {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

TruncationProfile::TruncationProfile(double rho, CutoffConvention convention)
    : rho_(rho), convention_(convention) {
  if (!(rho > 0.0)) throw ParameterError("TruncationProfile: rho must be positive");
}

double TruncationProfile::eta(double t) const noexcept {
  switch (convention_) {
    case CutoffConvention::kTruncation: return 1.0 - smooth_step(t - 1.0);
    case CutoffConvention::kFarField: return smooth_step(2.0 * t - 1.0);
  }
  return 0.0;
}

double TruncationProfile::far_weight(double r) const noexcept {
  const double t = r / rho_;
  return convention_ == CutoffConvention::kFarField ? eta(t) : 1.0 - eta(t);
}

double TruncationProfile::near_support() const noexcept {
  return convention_ == CutoffConvention::kFarField ? rho_ : 2.0 * rho_;
}

KernelSplit split_kernel(const EwaldKernel& kernel, const TruncationProfile& trunc, const Vec3& x) {
  const double ratio = trunc.rho() / kernel.side_length();
  if (!(ratio > 0.0 && ratio < 0.5))
    throw ParameterError("split_kernel: rho must lie in (0, L/2), got rho/L = " + std::to_string(ratio));
  const double g = kernel.green(x);
  const double r = norm(min_image(x, kernel.side_length()));
  KernelSplit s;
  s.far = trunc.far_weight(r) * g;
  s.near = g - s.far;
  return s;
}

double ball_form_factor(double k_magnitude, double radius) {
  const double u = k_magnitude * radius;
  if (u < 0.1) {
    const double u2 = u * u;
    return 1.0 - u2 / 10.0 + u2 * u2 / 280.0 - u2 * u2 * u2 / 15120.0 + u2 * u2 * u2 * u2 / 1330560.0;
  }
  return 3.0 * (std::sin(u) - u * std::cos(u)) / (u * u * u);
}

double smeared_ball_pair(double d, double r1, double r2, double alpha) {
  // Gaussian weight exp(-k^2/(4 alpha^2)) drops below 1e-18 at k = 13 alpha.
  const double k_max = 13.0 * alpha;
  const int panels = 2 + static_cast<int>(std::ceil(k_max * (d + r1 + r2) / (2.0 * kPi)));
  const double s = quadrature::composite_gauss(
      [&](double k) {
        return std::exp(-k * k / (4.0 * alpha * alpha)) * ball_form_factor(k, r1) *
               ball_form_factor(k, r2) * sinc(k * d);
      },
      0.0, k_max, panels);
  return s / (2.0 * kPi * kPi);
}

double ball_averaged_erfc(double s, double r, double alpha) {
  if (r <= 0.0) {
    if (s <= 0.0) throw DomainError("ball_averaged_erfc: point charge evaluated at its centre");
    return std::erfc(alpha * s) / (4.0 * kPi * s);
  }
  const int panels = 2 + static_cast<int>(std::ceil(alpha * r));
  if (s < 1e-7 * r) {
    const double integral = quadrature::composite_gauss(
        [&](double t) { return t * std::erfc(alpha * t); }, 0.0, r, panels);
    return 3.0 * integral / (4.0 * kPi * r * r * r);
  }
  // Q' = erfc(alpha u); Q is smooth in u, and |s - t| is handled by splitting at t = s.
  const auto q = [alpha](double u) {
    return u * std::erfc(alpha * u) - std::exp(-alpha * alpha * u * u) * kInvSqrtPi / alpha;
  };
  const auto integrand = [&](double t) { return t * (q(s + t) - q(std::abs(s - t))); };
  double integral = 0.0;
  if (s < r) {
    integral = quadrature::composite_gauss(integrand, 0.0, s, panels) +
               quadrature::composite_gauss(integrand, s, r, panels);
  } else {
    integral = quadrature::composite_gauss(integrand, 0.0, r, panels);
  }
  return 3.0 * integral / (8.0 * kPi * r * r * r * s);
}

double ball_newton_potential(double s, double r) noexcept {
  if (s >= r) return 1.0 / (4.0 * kPi * s);
  return (3.0 * r * r - s * s) / (8.0 * kPi * r * r * r);
}

}  // namespace okdrop
