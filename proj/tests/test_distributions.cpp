#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mobcount/distributions.hpp"

using namespace mobcount;

namespace {

// Two-sided Kolmogorov-Smirnov distance of samples against an analytic CDF.
double ks_distance(std::vector<double> xs, const Density1D& d) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = d.cdf(xs[i]);
    ks = std::max(ks, std::fabs((static_cast<double>(i) + 1.0) / n - f));
    ks = std::max(ks, std::fabs(static_cast<double>(i) / n - f));
  }
  return ks;
}

double mass_by_quadrature(const Density1D& d) {
  const QuadratureSpec q = QuadratureSpec::gauss(64, 8);
  auto f = [&](double x) { return d.density(x); };
  if (d.kind() == DensityKind::PiecewiseLinear) {
    // Integrate between knots so no panel straddles a kink.
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < d.knots().size(); ++i)
      s += integrate(f, d.knots()[i], d.knots()[i + 1], q);
    return s;
  }
  return integrate(f, d.lo(), d.hi(), q);
}

}  // namespace

TEST_CASE("uniform density and cdf") {
  const Density1D u = Density1D::uniform(0.0, 1.0);
  CHECK(u.density(0.5) == 1.0);
  CHECK(u.density(2.0) == 0.0);
  CHECK(u.cdf(0.5) == 0.5);
  CHECK(u.cdf(-1.0) == 0.0);
  CHECK(u.cdf(2.0) == 1.0);
}

TEST_CASE("piecewise linear density interpolates the normalized table") {
  // knots (0,1), values (2,0): already a normalized triangle density.
  const Density1D t = Density1D::piecewise_linear({0.0, 1.0}, {2.0, 0.0});
  CHECK(t.density(0.25) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(t.density(-0.1) == 0.0);
  CHECK(t.cdf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  // Renormalization: scaling the table values must not change the law.
  const Density1D t2 = Density1D::piecewise_linear({0.0, 1.0}, {10.0, 0.0});
  CHECK(t2.density(0.25) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("dirac kind is a point mass") {
  const Density1D d = Density1D::dirac(0.3);
  CHECK(d.cdf(0.2) == 0.0);
  CHECK(d.cdf(0.3) == 1.0);  // right-continuous step
  CHECK_THROWS_AS(d.density(0.3), DiracDensityError);
  Rng rng(1);
  for (int q = 0; q < 10; ++q) CHECK(d.sample(rng) == 0.3);
}

TEST_CASE("wide truncated gaussian is symmetric about its mean") {
  const Density1D g =
      Density1D::truncated_gaussian_mixture({1.0}, {0.5}, {10.0}, 0.0, 1.0);
  CHECK(g.cdf(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.cdf(0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.cdf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("densities integrate to one and cdf is monotone") {
  const std::vector<Density1D> laws = {
      Density1D::uniform(0.25, 1.75),
      Density1D::truncated_gaussian_mixture({0.3, 0.7}, {0.2, 0.8}, {0.1, 0.15},
                                            0.0, 1.0),
      Density1D::piecewise_linear({0.0, 0.3, 1.0}, {0.5, 3.0, 0.2}),
  };
  for (const Density1D& d : laws) {
    CHECK(std::fabs(mass_by_quadrature(d) - 1.0) < 1e-8);
    double prev = -1.0;
    for (int q = 0; q <= 40; ++q) {
      const double x = d.lo() + (d.hi() - d.lo()) * q / 40.0;
      const double f = d.cdf(x);
      CHECK(f >= prev);
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
      CHECK(d.survival(x) == 1.0 - f);  // exact complementarity
      prev = f;
    }
  }
}

TEST_CASE("sampling matches the cdf (Kolmogorov-Smirnov)") {
  const std::vector<Density1D> laws = {
      Density1D::uniform(0.0, 1.0),
      Density1D::truncated_gaussian_mixture({0.3, 0.7}, {0.2, 0.8}, {0.1, 0.15},
                                            0.0, 1.0),
      Density1D::piecewise_linear({0.0, 0.3, 1.0}, {0.5, 3.0, 0.2}),
  };
  std::uint64_t seed = 7;
  for (const Density1D& d : laws) {
    Rng rng(derive_seed(42, {seed++}));
    std::vector<double> xs(100000);
    for (double& x : xs) {
      x = d.sample(rng);
      CHECK(x >= d.lo());
      CHECK(x <= d.hi());
    }
    CHECK(ks_distance(std::move(xs), d) < 0.01);
  }
}

TEST_CASE("mixture component frequencies match the weights") {
  // Components separated far beyond their widths, so samples classify by
  // proximity.
  const Density1D m = Density1D::truncated_gaussian_mixture(
      {0.3, 0.7}, {0.2, 0.8}, {0.01, 0.01}, 0.0, 1.0);
  Rng rng(99);
  const int n = 100000;
  int low = 0;
  for (int q = 0; q < n; ++q)
    if (m.sample(rng) < 0.5) ++low;
  const double sigma = std::sqrt(0.3 * 0.7 / n);
  CHECK(std::fabs(static_cast<double>(low) / n - 0.3) < 3.0 * sigma);
}

TEST_CASE("quadrature integrates polynomials and the strategy normalizer") {
  const QuadratureSpec q = QuadratureSpec::gauss(1, 2);
  CHECK(integrate([](double) { return 1.0; }, 0.0, 1.0, q) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(integrate([](double x) { return x * x * x; }, 0.0, 1.0, q) ==
        doctest::Approx(0.25).epsilon(1e-12));
  const double v = integrate(
      [](double x) {
        const double s = std::sin(std::numbers::pi * x);
        return 8.0 * s * s * s * s / 3.0;
      },
      0.0, 1.0, QuadratureSpec());
  CHECK(std::fabs(v - 1.0) < 1e-8);
  // Trapezoid sanity on a linear function (exact).
  CHECK(integrate([](double x) { return 2.0 * x; }, 0.0, 1.0,
                  QuadratureSpec::trapezoid(17)) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("non-finite integrand is rejected") {
  CHECK_THROWS_AS(integrate([](double x) { return 1.0 / (x - 0.5231); }, 0.5231,
                            1.0, QuadratureSpec::trapezoid(8)),
                  NonFiniteIntegrand);
}

TEST_CASE("quadrature spec validation") {
  QuadratureSpec q;
  q.panels = 0;
  CHECK_THROWS_AS(q.validate(), DomainError);
  q = QuadratureSpec();
  q.order = 1;
  CHECK_THROWS_AS(q.validate(), DomainError);
}

TEST_CASE("conditional schedule shifts linearly in the conditioning location") {
  const ConditionalSchedule sched(
      Density1D::truncated_gaussian_mixture({1.0}, {8.0}, {1.0}, 4.0, 12.0), 2.0);
  const Density1D& base = sched.base();
  CHECK(sched.density(9.0, 0.5) == base.density(8.0));
  CHECK(sched.cdf(9.0, 0.5) == base.cdf(8.0));
  Rng a(5), b(5);
  CHECK(sched.sample(0.5, a) == base.sample(b) + 1.0);
  // Location-independent case.
  const ConditionalSchedule flat(Density1D::uniform(6.0, 10.0));
  CHECK(flat.density(7.0, 0.1) == flat.density(7.0, 0.9));
}
