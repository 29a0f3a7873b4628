#pragma once

// Independent reference for the periodic Green's function on the unit torus:
// direct image sum over a (2L+1)^3 block of unit charges minus the potential of the
// uniform cube that neutralises it. No Fourier series and no splitting parameter.

#include <cmath>
#include <numbers>

namespace okdrop::testing {

// Antiderivative with d^3 F / dx dy dz = 1 / r.
inline double cube_antiderivative(double x, double y, double z) {
  const double r = std::sqrt(x * x + y * y + z * z);
  const auto xlog = [](double a, double b) { return a == 0.0 ? 0.0 : a * std::log(b); };
  const auto xatan = [](double a2, double num, double den) { return den == 0.0 ? 0.0 : 0.5 * a2 * std::atan(num / den); };
  return xlog(x * y, z + r) + xlog(y * z, x + r) + xlog(z * x, y + r) - xatan(x * x, y * z, x * r) -
         xatan(y * y, z * x, y * r) - xatan(z * z, x * y, z * r);
}

// Potential at p of unit density on the box [lo, hi]^3 under 1/(4 pi r).
inline double box_potential(double px, double py, double pz, double lo, double hi) {
  double sum = 0.0;
  for (int c = 0; c < 8; ++c) {
    const double x = ((c & 1) ? hi : lo) - px;
    const double y = ((c & 2) ? hi : lo) - py;
    const double z = ((c & 4) ? hi : lo) - pz;
    const int lower = !(c & 1) + !(c & 2) + !(c & 4);
    sum += (lower % 2 ? -1.0 : 1.0) * cube_antiderivative(x, y, z);
  }
  return sum / (4.0 * std::numbers::pi);
}

// Truncated neutral image sum S_L(x).
inline double image_sum(double x, double y, double z, int L) {
  long double s = 0.0L;
  for (int i = -L; i <= L; ++i)
    for (int j = -L; j <= L; ++j) {
      long double row = 0.0L;
      for (int k = -L; k <= L; ++k) {
        const double dx = x + i, dy = y + j, dz = z + k;
        row += 1.0L / std::sqrt(static_cast<long double>(dx * dx + dy * dy + dz * dz));
      }
      s += row;
    }
  return static_cast<double>(s / (4.0L * std::numbers::pi_v<long double>)) - box_potential(x, y, z, -L - 0.5, L + 0.5);
}

// S_L differs from G by the constant 1/24 (second moment of a unit cell) plus a tail
// even in 1/L, removed by Neville extrapolation in h = 1/L^2 over L = 16, 24, 32.
inline double green_real_space(double x, double y, double z) {
  const int Ls[3] = {16, 24, 32};
  double h[3], t[3];
  for (int i = 0; i < 3; ++i) {
    h[i] = 1.0 / (static_cast<double>(Ls[i]) * Ls[i]);
    t[i] = image_sum(x, y, z, Ls[i]);
  }
  for (int m = 1; m < 3; ++m)
    for (int i = 0; i + m < 3; ++i) t[i] = (h[i] * t[i + 1] - h[i + m] * t[i]) / (h[i] - h[i + m]);
  return t[0] - 1.0 / 24.0;
}

}  // namespace okdrop::testing
