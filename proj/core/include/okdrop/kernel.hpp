#pragma once

#include <optional>
#include <vector>

#include "okdrop/geometry.hpp"

namespace okdrop {

/// Periodic Green's function of the Laplacian on the cubic torus of side L:
///   -Laplace G = delta - 1/L^3,  integral of G over the torus = 0.
///
/// Evaluated by Ewald summation: an erfc-screened real-space image sum plus a
/// Gaussian-damped reciprocal sum over k != 0, minus the k = 0 background term
/// 1/(4 alpha^2 L^3). The object is immutable after construction, so every
/// evaluation is safe to call concurrently.
class EwaldKernel {
 public:
  static constexpr int kDefaultCutoff = 12;
  static constexpr double kDefaultAlphaTimesSide = 5.0;

  /// `splitting_alpha` defaults to 5/L.
  explicit EwaldKernel(double side_length, int k_cutoff = kDefaultCutoff,
                       std::optional<double> splitting_alpha = std::nullopt);

  double side_length() const noexcept { return side_; }
  double volume() const noexcept { return side_ * side_ * side_; }
  int k_cutoff() const noexcept { return k_cutoff_; }
  double splitting_alpha() const noexcept { return alpha_; }
  /// R(0) = lim_{x->0} (G(x) - 1/(4 pi |x|)).
  double r_at_zero() const noexcept { return r_at_zero_; }

  /// G(x). Throws DomainError within 1e-8 L of a lattice point.
  double green(const Vec3& x) const;
  /// Gradient of G. Throws DomainError like `green`.
  Vec3 green_gradient(const Vec3& x) const;
  /// R(x) = G(x) - 1/(4 pi |x|_min), smooth everywhere including the origin.
  double regular_part(const Vec3& x) const;

  /// Gaussian-damped reciprocal-space part of G (no background term).
  double reciprocal_part(const Vec3& x) const;

 private:
  // Sum over images of erfc(alpha r)/(4 pi r); the n = 0 image contributes
  // -erf(alpha r)/(4 pi r) so that the result is regular at the origin.
  double real_space_regular(const Vec3& x_min) const;

  double side_;
  int k_cutoff_;
  double alpha_;
  int image_shells_;
  double background_;
  std::vector<double> coeff_;  // (K+1)^3 cosine-product coefficients
  double r_at_zero_ = 0.0;
};

/// Which side of the cutoff the profile keeps.
enum class CutoffConvention {
  /// eta(t) = 1 for t <= 1, eta(t) = 0 for t >= 2 (truncated whole-space kernel).
  kTruncation,
  /// eta(t) = 0 for t <= 1/2, eta(t) = 1 for t >= 1 (far-field extractor).
  kFarField,
};

/// A smooth monotone cutoff eta applied as eta(|x| / rho).
class TruncationProfile {
 public:
  TruncationProfile(double rho, CutoffConvention convention);

  static TruncationProfile truncation(double rho) { return {rho, CutoffConvention::kTruncation}; }
  static TruncationProfile far_field(double rho) { return {rho, CutoffConvention::kFarField}; }

  double rho() const noexcept { return rho_; }
  CutoffConvention convention() const noexcept { return convention_; }

  /// eta(t) for the stored convention.
  double eta(double t) const noexcept;
  /// Weight of the far-field part at distance r: eta(r/rho) for kFarField and
  /// 1 - eta(r/rho) for kTruncation.
  double far_weight(double r) const noexcept;
  /// Range beyond which the far-field weight is identically 1.
  double near_support() const noexcept;

 private:
  double rho_;
  CutoffConvention convention_;
};

/// C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
double smooth_step(double t) noexcept;

struct KernelSplit {
  double far = 0.0;
  double near = 0.0;
};

/// G = far + near with far = w(|x|) G(x). Requires 0 < rho / L < 1/2.
KernelSplit split_kernel(const EwaldKernel& kernel, const TruncationProfile& trunc, const Vec3& x);

/// Fourier transform of the normalised indicator of a ball:
/// 3 (sin u - u cos u) / u^3 with u = k r. Series branch for u < 1e-4.
double ball_form_factor(double k_magnitude, double radius);

/// Average of erf(alpha s)/(4 pi s) over s = |x - y| with x, y uniform in two
/// balls of radii r1, r2 whose centres are a distance d apart. Radii may be 0
/// (point). Computed by radial quadrature in Fourier space.
double smeared_ball_pair(double d, double r1, double r2, double alpha);

/// Average of erfc(alpha |x - y|)/(4 pi |x - y|) over y uniform in a ball of
/// radius r, for a point x at distance s from the ball centre.
double ball_averaged_erfc(double s, double r, double alpha);

/// Newtonian potential 1/(4 pi |x-y|) averaged over a unit-mass uniform ball.
double ball_newton_potential(double s, double r) noexcept;

}  // namespace okdrop
