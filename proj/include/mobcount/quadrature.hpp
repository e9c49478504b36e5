#ifndef MOBCOUNT_QUADRATURE_HPP
#define MOBCOUNT_QUADRATURE_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "mobcount/common.hpp"

namespace mobcount {

struct QuadratureSpec {
  enum class Scheme { GaussLegendreComposite, Trapezoid };

  Scheme scheme = Scheme::GaussLegendreComposite;
  int panels = 32;  // Gauss-Legendre composite
  int order = 8;
  int n = 128;  // trapezoid points
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;

  static QuadratureSpec gauss(int panels, int order) {
    QuadratureSpec q;
    q.scheme = Scheme::GaussLegendreComposite;
    q.panels = panels;
    q.order = order;
    q.validate();
    return q;
  }

  static QuadratureSpec trapezoid(int n) {
    QuadratureSpec q;
    q.scheme = Scheme::Trapezoid;
    q.n = n;
    q.validate();
    return q;
  }

  void validate() const {
    if (scheme == Scheme::GaussLegendreComposite) {
      if (panels < 1 || order < 2)
        throw DomainError("quadrature: panels >= 1 and order >= 2 required");
    } else if (n < 2) {
      throw DomainError("quadrature: trapezoid needs n >= 2");
    }
    if (abs_tol <= 0.0 || rel_tol <= 0.0)
      throw DomainError("quadrature: tolerances must be positive");
  }
};

// Gauss-Legendre nodes/weights on [-1, 1]; cached per order.
const std::pair<std::vector<double>, std::vector<double>>& gauss_rule(int order);

// Integrates f over [lo, hi].  Throws NonFiniteIntegrand if f returns a
// non-finite value at any node.
template <class F>
double integrate(F&& f, double lo, double hi, const QuadratureSpec& spec) {
  if (hi <= lo) return 0.0;
  double sum = 0.0;
  if (spec.scheme == QuadratureSpec::Scheme::GaussLegendreComposite) {
    const auto& [nodes, weights] = gauss_rule(spec.order);
    const double width = (hi - lo) / spec.panels;
    for (int p = 0; p < spec.panels; ++p) {
      const double a = lo + p * width;
      const double half = 0.5 * width;
      const double mid = a + half;
      double panel = 0.0;
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        const double v = f(mid + half * nodes[q]);
        if (!std::isfinite(v))
          throw NonFiniteIntegrand("integrate: non-finite integrand value");
        panel += weights[q] * v;
      }
      sum += half * panel;
    }
  } else {
    const double h = (hi - lo) / (spec.n - 1);
    for (int q = 0; q < spec.n; ++q) {
      const double x = (q == spec.n - 1) ? hi : lo + q * h;
      const double v = f(x);
      if (!std::isfinite(v))
        throw NonFiniteIntegrand("integrate: non-finite integrand value");
      sum += (q == 0 || q == spec.n - 1) ? 0.5 * v : v;
    }
    sum *= h;
  }
  return sum;
}

}  // namespace mobcount

#endif
