#include "mobcount/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mobcount {

namespace {

const double kInvSqrt2 = 0.7071067811865475244;
const double kInvSqrt2Pi = 0.3989422804014326779;

double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

}  // namespace

Density1D Density1D::uniform(double lo, double hi) {
  if (!(hi > lo)) throw DomainError("uniform: requires hi > lo");
  Density1D d;
  d.kind_ = DensityKind::Uniform;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

Density1D Density1D::truncated_gaussian_mixture(std::vector<double> weights,
                                                std::vector<double> means,
                                                std::vector<double> sds,
                                                double lo, double hi) {
  if (!(hi > lo)) throw DomainError("mixture: requires hi > lo");
  if (weights.empty() || weights.size() != means.size() ||
      weights.size() != sds.size())
    throw DomainError("mixture: weights/means/sds size mismatch");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw DomainError("mixture: weights must be positive");
    wsum += w;
  }
  Density1D d;
  d.kind_ = DensityKind::TruncatedGaussianMixture;
  d.lo_ = lo;
  d.hi_ = hi;
  d.means_ = std::move(means);
  d.sds_ = std::move(sds);
  d.weights_.resize(weights.size());
  d.comp_mass_.resize(weights.size());
  for (std::size_t c = 0; c < weights.size(); ++c) {
    if (!(d.sds_[c] > 0.0)) throw DomainError("mixture: sds must be positive");
    d.weights_[c] = weights[c] / wsum;
    const double zl = (lo - d.means_[c]) / d.sds_[c];
    const double zh = (hi - d.means_[c]) / d.sds_[c];
    d.comp_mass_[c] = norm_cdf(zh) - norm_cdf(zl);
    if (!(d.comp_mass_[c] > 1e-300))
      throw DomainError("mixture: component has no mass on the support");
  }
  return d;
}

Density1D Density1D::piecewise_linear(std::vector<double> knots,
                                      std::vector<double> values) {
  if (knots.size() < 2 || knots.size() != values.size())
    throw DomainError("piecewise_linear: need >= 2 knots matching values");
  for (std::size_t s = 1; s < knots.size(); ++s)
    if (!(knots[s] > knots[s - 1]))
      throw DomainError("piecewise_linear: knots must be strictly increasing");
  double total = 0.0;
  for (std::size_t s = 1; s < knots.size(); ++s) {
    if (values[s] < 0.0 || values[s - 1] < 0.0)
      throw DomainError("piecewise_linear: values must be nonnegative");
    total += 0.5 * (values[s] + values[s - 1]) * (knots[s] - knots[s - 1]);
  }
  if (!(total > 0.0)) throw DomainError("piecewise_linear: zero total mass");
  Density1D d;
  d.kind_ = DensityKind::PiecewiseLinear;
  d.lo_ = knots.front();
  d.hi_ = knots.back();
  d.knots_ = std::move(knots);
  d.values_ = std::move(values);
  for (double& v : d.values_) v /= total;
  d.cum_.assign(d.knots_.size(), 0.0);
  for (std::size_t s = 1; s < d.knots_.size(); ++s)
    d.cum_[s] = d.cum_[s - 1] + 0.5 * (d.values_[s] + d.values_[s - 1]) *
                                    (d.knots_[s] - d.knots_[s - 1]);
  d.cum_.back() = 1.0;
  return d;
}

Density1D Density1D::dirac(double atom) {
  Density1D d;
  d.kind_ = DensityKind::Dirac;
  d.lo_ = atom;
  d.hi_ = atom;
  d.atom_ = atom;
  return d;
}

double Density1D::density(double x) const {
  switch (kind_) {
    case DensityKind::Uniform:
      return (x >= lo_ && x <= hi_) ? 1.0 / (hi_ - lo_) : 0.0;
    case DensityKind::TruncatedGaussianMixture: {
      if (x < lo_ || x > hi_) return 0.0;
      double f = 0.0;
      for (std::size_t c = 0; c < weights_.size(); ++c)
        f += weights_[c] * norm_pdf((x - means_[c]) / sds_[c]) /
             (sds_[c] * comp_mass_[c]);
      return f;
    }
    case DensityKind::PiecewiseLinear: {
      if (x < lo_ || x > hi_) return 0.0;
      auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
      std::size_t s = (it == knots_.end()) ? knots_.size() - 1
                                           : static_cast<std::size_t>(it - knots_.begin());
      if (s == 0) s = 1;
      const double t = (x - knots_[s - 1]) / (knots_[s] - knots_[s - 1]);
      return values_[s - 1] + t * (values_[s] - values_[s - 1]);
    }
    case DensityKind::Dirac:
      throw DiracDensityError("density(): Dirac is a point mass, not a density");
  }
  return 0.0;
}

double Density1D::cdf(double x) const {
  switch (kind_) {
    case DensityKind::Uniform:
      if (x <= lo_) return 0.0;
      if (x >= hi_) return 1.0;
      return (x - lo_) / (hi_ - lo_);
    case DensityKind::TruncatedGaussianMixture: {
      if (x <= lo_) return 0.0;
      if (x >= hi_) return 1.0;
      double f = 0.0;
      for (std::size_t c = 0; c < weights_.size(); ++c) {
        const double zl = (lo_ - means_[c]) / sds_[c];
        const double z = (x - means_[c]) / sds_[c];
        f += weights_[c] * (norm_cdf(z) - norm_cdf(zl)) / comp_mass_[c];
      }
      return std::clamp(f, 0.0, 1.0);
    }
    case DensityKind::PiecewiseLinear: {
      if (x <= lo_) return 0.0;
      if (x >= hi_) return 1.0;
      auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
      std::size_t s = static_cast<std::size_t>(it - knots_.begin());
      if (s == 0) s = 1;
      const double dx = x - knots_[s - 1];
      const double w = knots_[s] - knots_[s - 1];
      const double slope = (values_[s] - values_[s - 1]) / w;
      return std::clamp(
          cum_[s - 1] + values_[s - 1] * dx + 0.5 * slope * dx * dx, 0.0, 1.0);
    }
    case DensityKind::Dirac:
      return x >= atom_ ? 1.0 : 0.0;
  }
  return 0.0;
}

double Density1D::sample(Rng& rng) const {
  switch (kind_) {
    case DensityKind::Uniform:
      return rng.uniform(lo_, hi_);
    case DensityKind::TruncatedGaussianMixture: {
      // Component choice, then inverse-CDF within the truncated component.
      double u = rng.uniform();
      std::size_t c = 0;
      double acc = 0.0;
      for (; c + 1 < weights_.size(); ++c) {
        acc += weights_[c];
        if (u <= acc) break;
      }
      const double zl = norm_cdf((lo_ - means_[c]) / sds_[c]);
      const double p = zl + comp_mass_[c] * rng.uniform();
      double x = means_[c] + sds_[c] * inv_norm_cdf(std::clamp(p, 1e-16, 1.0 - 1e-16));
      return std::clamp(x, lo_, hi_);
    }
    case DensityKind::PiecewiseLinear: {
      const double u = rng.uniform();
      auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
      std::size_t s = static_cast<std::size_t>(it - cum_.begin());
      if (s == 0) s = 1;
      if (s >= knots_.size()) s = knots_.size() - 1;
      const double w = knots_[s] - knots_[s - 1];
      const double v0 = values_[s - 1];
      const double slope = (values_[s] - v0) / w;
      const double target = u - cum_[s - 1];
      double dx;
      if (std::fabs(slope) * w < 1e-14 * std::max(v0, 1e-300)) {
        dx = target / v0;
      } else {
        const double disc = v0 * v0 + 2.0 * slope * target;
        dx = (-v0 + std::sqrt(std::max(disc, 0.0))) / slope;
      }
      return std::clamp(knots_[s - 1] + dx, lo_, hi_);
    }
    case DensityKind::Dirac:
      return atom_;
  }
  return lo_;
}

}  // namespace mobcount
