#include "mobcount/statmodel.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace mobcount {

namespace {

const double kRateFloor = 1e-300;

void check_nu(const std::vector<double>& nu, std::size_t K) {
  if (nu.size() != K) throw DomainError("nu dimension mismatch");
  double s = 0.0;
  for (double v : nu) {
    if (v < 0.0) throw DomainError("nu must be nonnegative");
    s += v;
  }
  if (s == 0.0) throw DomainError("nu must not be the zero vector");
}

char* fmt17(char* buf, std::size_t n, double v) {
  std::snprintf(buf, n, "%.17g", v);
  return buf;
}

}  // namespace

double log_likelihood(const AttendanceTable& table, const std::vector<double>& nu,
                      const CountDataset& data) {
  const std::size_t K = table.K(), I = table.I(), J = table.J();
  check_nu(nu, K);
  if (data.I() != I || data.J() != J)
    throw DomainError("log_likelihood: dataset does not match the table grid");
  double ll = 0.0;
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j) {
      double rate = 0.0;
      for (std::size_t k = 0; k < K; ++k) rate += nu[k] * table.at(k, i, j);
      const long long n = data.count(i, j);
      ll -= rate;
      if (n > 0) {
        if (rate < kRateFloor) return -std::numeric_limits<double>::infinity();
        ll += static_cast<double>(n) * std::log(rate);
      }
    }
  return ll;
}

std::vector<double> score(const AttendanceTable& table, const std::vector<double>& nu,
                          const CountDataset& data) {
  const std::size_t K = table.K(), I = table.I(), J = table.J();
  check_nu(nu, K);
  if (data.I() != I || data.J() != J)
    throw DomainError("score: dataset does not match the table grid");
  std::vector<double> g(K, 0.0);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j) {
      double rate = 0.0;
      for (std::size_t k = 0; k < K; ++k) rate += nu[k] * table.at(k, i, j);
      const long long n = data.count(i, j);
      if (n > 0 && rate < kRateFloor)
        throw ZeroRateWithPositiveCount("score: zero rate with positive count");
      const double ratio = n > 0 ? static_cast<double>(n) / rate : 0.0;
      for (std::size_t k = 0; k < K; ++k)
        g[k] += table.at(k, i, j) * (ratio - 1.0);
    }
  return g;
}

std::vector<double> score_single_counter(const std::vector<double>& a,
                                         const std::vector<long long>& n,
                                         const std::vector<double>& nu) {
  const std::size_t K = nu.size();
  const std::size_t I = n.size();
  if (a.size() != K * I) throw DomainError("score_single_counter: size mismatch");
  std::vector<double> g(K, 0.0);
  for (std::size_t i = 0; i < I; ++i) {
    double rate = 0.0;
    for (std::size_t k = 0; k < K; ++k) rate += nu[k] * a[k * I + i];
    if (n[i] > 0 && rate < kRateFloor)
      throw ZeroRateWithPositiveCount("score_single_counter: zero rate");
    const double ratio = n[i] > 0 ? static_cast<double>(n[i]) / rate : 0.0;
    for (std::size_t k = 0; k < K; ++k) g[k] += a[k * I + i] * (ratio - 1.0);
  }
  return g;
}

FisherMatrix fisher_information(const PoissonModel& model, const std::vector<double>& N,
                                const QuadratureSpec& spatial_quad) {
  const std::size_t K = model.specs.size();
  check_nu(N, K);
  const Density1D& fc = model.counter_density;
  const std::size_t I = model.table.I();

  // Quadrature nodes over the counter-density support; per-node
  // contributions are filled independently, then summed in fixed order.
  struct Node {
    double x, w;
  };
  std::vector<Node> nodes;
  if (spatial_quad.scheme == QuadratureSpec::Scheme::GaussLegendreComposite) {
    const auto& [xs, ws] = gauss_rule(spatial_quad.order);
    const double width = (fc.hi() - fc.lo()) / spatial_quad.panels;
    for (int p = 0; p < spatial_quad.panels; ++p) {
      const double mid = fc.lo() + (p + 0.5) * width;
      for (std::size_t q = 0; q < xs.size(); ++q)
        nodes.push_back({mid + 0.5 * width * xs[q], 0.5 * width * ws[q]});
    }
  } else {
    const double h = (fc.hi() - fc.lo()) / (spatial_quad.n - 1);
    for (int q = 0; q < spatial_quad.n; ++q)
      nodes.push_back({fc.lo() + q * h,
                       (q == 0 || q == spatial_quad.n - 1) ? 0.5 * h : h});
  }

  std::vector<Eigen::MatrixXd> contrib(nodes.size());
  const long long n_nodes = static_cast<long long>(nodes.size());
#pragma omp parallel for schedule(dynamic)
  for (long long q = 0; q < n_nodes; ++q) {
    const double x = nodes[static_cast<std::size_t>(q)].x;
    const double w = nodes[static_cast<std::size_t>(q)].w * fc.density(x);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(K, K);
    if (w > 0.0) {
      std::vector<std::vector<double>> a(K);
      for (std::size_t k = 0; k < K; ++k)
        a[k] = attendance(model.specs[k], model.table.grid, x, model.quad);
      for (std::size_t i = 0; i < I; ++i) {
        double rate = 0.0, amax = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          rate += N[k] * a[k][i];
          amax = std::max(amax, a[k][i]);
        }
        if (rate < kRateFloor) {
          if (amax > 0.0)
            throw SingularAttendance("fisher_information: zero rate at a node");
          continue;
        }
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t k2 = 0; k2 <= k; ++k2)
            m(k, k2) += a[k][i] * a[k2][i] / rate;
      }
      m *= w;
    }
    contrib[static_cast<std::size_t>(q)] = m;
  }

  FisherMatrix f;
  f.matrix = Eigen::MatrixXd::Zero(K, K);
  for (const auto& m : contrib) f.matrix += m;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t k2 = 0; k2 < k; ++k2) f.matrix(k2, k) = f.matrix(k, k2);
  f.evaluated_at = Eigen::Map<const Eigen::VectorXd>(N.data(), static_cast<long>(K));
  return f;
}

ConfidenceEllipsoid confidence_ellipsoid(const FisherMatrix& fisher,
                                         const Eigen::VectorXd& center, int n_counters,
                                         double level) {
  if (n_counters < 1) throw DomainError("confidence_ellipsoid: J >= 1 required");
  if (!(level > 0.0 && level < 1.0))
    throw DomainError("confidence_ellipsoid: level in (0,1) required");
  const int K = static_cast<int>(fisher.matrix.rows());
  ConfidenceEllipsoid e;
  e.center = center;
  e.shape = static_cast<double>(n_counters) / chi2_quantile(K, level) * fisher.matrix;
  e.level = level;
  e.n_counters = n_counters;
  return e;
}

std::vector<double> ConfidenceEllipsoid::semi_axes() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shape);
  std::vector<double> out;
  for (long i = es.eigenvalues().size() - 1; i >= 0; --i)
    out.push_back(1.0 / std::sqrt(es.eigenvalues()[i]));
  return out;
}

EllipsoidSlice ellipsoid_slice(const ConfidenceEllipsoid& e, int k, int k2) {
  const int K = static_cast<int>(e.shape.rows());
  if (k == k2 || k < 0 || k2 < 0 || k >= K || k2 >= K)
    throw DomainError("ellipsoid_slice: invalid dimension pair");
  EllipsoidSlice s;
  s.center << e.center[k], e.center[k2];
  s.shape << e.shape(k, k), e.shape(k, k2), e.shape(k2, k), e.shape(k2, k2);
  return s;
}

void EllipsoidSlice::write_boundary_csv(std::ostream& os, int n_samples) const {
  // Boundary {z : (z-c)^T A (z-c) = 1} parametrized through the Cholesky
  // factor: z = c + L^{-T} (cos, sin).
  Eigen::LLT<Eigen::Matrix2d> llt(shape);
  Eigen::Matrix2d lt_inv = llt.matrixL().transpose().solve(Eigen::Matrix2d::Identity());
  os << "angle,z1,z2\n";
  char buf[64];
  for (int s = 0; s < n_samples; ++s) {
    const double theta = 2.0 * M_PI * s / n_samples;
    Eigen::Vector2d u(std::cos(theta), std::sin(theta));
    Eigen::Vector2d z = center + lt_inv * u;
    os << fmt17(buf, sizeof(buf), theta) << ',';
    os << fmt17(buf, sizeof(buf), z[0]) << ',';
    os << fmt17(buf, sizeof(buf), z[1]) << '\n';
  }
}

void FisherMatrix::write_json(std::ostream& os) const {
  char buf[64];
  os << "{\n  \"evaluated_at\": [";
  for (long i = 0; i < evaluated_at.size(); ++i)
    os << (i ? ", " : "") << fmt17(buf, sizeof(buf), evaluated_at[i]);
  os << "],\n  \"matrix\": [\n";
  for (long r = 0; r < matrix.rows(); ++r) {
    os << "    [";
    for (long c = 0; c < matrix.cols(); ++c)
      os << (c ? ", " : "") << fmt17(buf, sizeof(buf), matrix(r, c));
    os << (r + 1 < matrix.rows() ? "],\n" : "]\n");
  }
  os << "  ]\n}\n";
}

void ConfidenceEllipsoid::write_json(std::ostream& os) const {
  char buf[64];
  os << "{\n  \"level\": " << fmt17(buf, sizeof(buf), level)
     << ",\n  \"n_counters\": " << n_counters << ",\n  \"center\": [";
  for (long i = 0; i < center.size(); ++i)
    os << (i ? ", " : "") << fmt17(buf, sizeof(buf), center[i]);
  os << "],\n  \"shape\": [\n";
  for (long r = 0; r < shape.rows(); ++r) {
    os << "    [";
    for (long c = 0; c < shape.cols(); ++c)
      os << (c ? ", " : "") << fmt17(buf, sizeof(buf), shape(r, c));
    os << (r + 1 < shape.rows() ? "],\n" : "]\n");
  }
  os << "  ]\n}\n";
}

// ---- chi-square quantile -------------------------------------------------

namespace {

// Series expansion of P(a, x), for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int it = 0; it < 500; ++it) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x), for x >= a + 1 (modified Lentz).
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw DomainError("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double chi2_quantile(int dof, double level) {
  if (dof < 1) throw DomainError("chi2_quantile: dof >= 1 required");
  if (!(level > 0.0 && level < 1.0))
    throw DomainError("chi2_quantile: level in (0,1) required");
  const double a = 0.5 * dof;
  // Wilson-Hilferty start, then Newton on P(a, q/2) = level with bisection
  // fallback brackets.
  const double z = inv_norm_cdf(level);
  double q = dof * std::pow(1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof)), 3);
  if (!(q > 0.0)) q = 0.5;
  double lo = 0.0, hi = std::max(4.0 * q, 1.0);
  while (gamma_p(a, 0.5 * hi) < level) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double f = gamma_p(a, 0.5 * q) - level;
    if (f > 0.0)
      hi = q;
    else
      lo = q;
    // pdf of chi2 at q
    const double pdf = 0.5 * std::exp((a - 1.0) * std::log(0.5 * q) - 0.5 * q - std::lgamma(a));
    double next = pdf > 0.0 ? q - f / pdf : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - q) < 1e-13 * q) {
      q = next;
      break;
    }
    q = next;
  }
  return q;
}

}  // namespace mobcount
