#include "okdrop/quadrature.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace okdrop::quadrature {
namespace {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Boost stores the non-negative half of the symmetric rule.
template <unsigned N>
Rule expand() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  Rule r;
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a[i] == 0.0) continue;
    r.nodes.push_back(-a[i]);
    r.weights.push_back(w[i]);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.nodes.push_back(a[i]);
    r.weights.push_back(w[i]);
  }
  return r;
}

const Rule& rule(int n) {
  static const Rule r10 = expand<10>();
  static const Rule r20 = expand<20>();
  static const Rule r30 = expand<30>();
  switch (n) {
    case 10: return r10;
    case 20: return r20;
    case 30: return r30;
    default: throw std::invalid_argument("unsupported Gauss-Legendre order " + std::to_string(n));
  }
}

}  // namespace

std::span<const double> gl_nodes(int n) { return rule(n).nodes; }
std::span<const double> gl_weights(int n) { return rule(n).weights; }

double golden_section_minimum(const std::function<double(double)>& f, double a, double b,
                              double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace okdrop::quadrature
