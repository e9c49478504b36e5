#ifndef MOBCOUNT_DISTRIBUTIONS_HPP
#define MOBCOUNT_DISTRIBUTIONS_HPP

#include <string>
#include <vector>

#include "mobcount/common.hpp"
#include "mobcount/quadrature.hpp"
#include "mobcount/rng.hpp"

namespace mobcount {

enum class DensityKind {
  Uniform,
  TruncatedGaussianMixture,
  PiecewiseLinear,
  Dirac,
};

// One-dimensional probability law on a compact interval.  Closed parametric
// families only: density, CDF and survival are analytic, sampling goes
// through the inverse CDF.  Dirac is a point mass, not a density.
class Density1D {
 public:
  static Density1D uniform(double lo, double hi);
  static Density1D truncated_gaussian_mixture(std::vector<double> weights,
                                              std::vector<double> means,
                                              std::vector<double> sds,
                                              double lo, double hi);
  // Values are renormalized so the trapezoid integral over the knots is 1.
  static Density1D piecewise_linear(std::vector<double> knots,
                                    std::vector<double> values);
  static Density1D dirac(double atom);

  DensityKind kind() const { return kind_; }
  bool is_dirac() const { return kind_ == DensityKind::Dirac; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double atom() const { return atom_; }

  // Lebesgue density; 0 outside the support, one-sided limit at endpoints.
  // Throws DiracDensityError for the Dirac kind.
  double density(double x) const;

  // Right-continuous CDF.
  double cdf(double x) const;
  double survival(double x) const { return 1.0 - cdf(x); }

  double sample(Rng& rng) const;

  // Accessors used by the config serializer.
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& sds() const { return sds_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

 private:
  Density1D() = default;

  DensityKind kind_ = DensityKind::Uniform;
  double lo_ = 0.0, hi_ = 1.0;
  double atom_ = 0.0;
  // mixture parameters
  std::vector<double> weights_, means_, sds_, comp_mass_;
  // piecewise-linear parameters
  std::vector<double> knots_, values_, cum_;
};

// Time law conditioned on a spatial location: a base density whose mean is
// shifted linearly in the conditioning location u.  shift_slope = 0 gives the
// location-independent case.
class ConditionalSchedule {
 public:
  explicit ConditionalSchedule(Density1D base, double shift_slope = 0.0)
      : base_(std::move(base)), shift_slope_(shift_slope) {}

  double density(double t, double u) const {
    return base_.density(t - shift_slope_ * u);
  }
  double cdf(double t, double u) const { return base_.cdf(t - shift_slope_ * u); }
  double sample(double u, Rng& rng) const {
    return base_.sample(rng) + shift_slope_ * u;
  }

  double support_lo(double u) const { return base_.lo() + shift_slope_ * u; }
  double support_hi(double u) const { return base_.hi() + shift_slope_ * u; }

  const Density1D& base() const { return base_; }
  double shift_slope() const { return shift_slope_; }

 private:
  Density1D base_;
  double shift_slope_;
};

}  // namespace mobcount

#endif
