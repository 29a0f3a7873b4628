#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace okdrop::quadrature {

/// Nodes of an n-point Gauss-Legendre rule on [-1, 1]; n in {10, 20, 30}.
std::span<const double> gl_nodes(int n);
std::span<const double> gl_weights(int n);

/// Composite Gauss-Legendre rule with `panels` equal panels of `order` nodes each on [a, b].
template <class F>
double composite_gauss(F&& f, double a, double b, int panels, int order = 20) {
  const auto x = gl_nodes(order);
  const auto w = gl_weights(order);
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double panel = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) panel += w[i] * f(mid + 0.5 * h * x[i]);
    total += 0.5 * h * panel;
  }
  return total;
}

/// Golden-section minimisation of a unimodal function on [a, b] down to bracket width `tol`.
double golden_section_minimum(const std::function<double(double)>& f, double a, double b,
                              double tol);

}  // namespace okdrop::quadrature
