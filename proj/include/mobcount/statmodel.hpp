#ifndef MOBCOUNT_STATMODEL_HPP
#define MOBCOUNT_STATMODEL_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "mobcount/microsim.hpp"

namespace mobcount {

// Poisson observation model: the attendance table at the counter locations
// plus the journey specs (attendance closures for the Fisher quadrature over
// the counter density f_c).
struct PoissonModel {
  std::vector<JourneyTypeSpec> specs;
  AttendanceTable table;
  Density1D counter_density;
  QuadratureSpec quad;  // used by the attendance closures
};

struct FisherMatrix {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd evaluated_at;

  void write_json(std::ostream& os) const;
};

// Region {z : (z - center)^T shape (z - center) < 1}.
struct ConfidenceEllipsoid {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
  double level = 0.95;
  int n_counters = 1;

  bool contains(const Eigen::VectorXd& z) const {
    Eigen::VectorXd d = z - center;
    return d.dot(shape * d) < 1.0;
  }
  // Lengths 1/sqrt(lambda) of the principal semi-axes, ascending eigenvalue
  // order of the shape matrix.
  std::vector<double> semi_axes() const;

  void write_json(std::ostream& os) const;
};

struct EllipsoidSlice {
  Eigen::Vector2d center;
  Eigen::Matrix2d shape;

  // CSV boundary polyline `angle,z1,z2`, n_samples rows.
  void write_boundary_csv(std::ostream& os, int n_samples = 360) const;
};

// Log-likelihood of the dataset up to the nu-independent constant (counter
// density and factorial terms dropped).  -inf when some cell has a positive
// count and zero rate.
double log_likelihood(const AttendanceTable& table, const std::vector<double>& nu,
                      const CountDataset& data);

std::vector<double> score(const AttendanceTable& table, const std::vector<double>& nu,
                          const CountDataset& data);

// Score gradient for a single counter with attendance column a[k*I+i] and
// counts n[i]; shared by the Fisher Monte Carlo cross-check.
std::vector<double> score_single_counter(const std::vector<double>& a,
                                         const std::vector<long long>& n,
                                         const std::vector<double>& nu);

// Fisher information by quadrature of sum_i a_k a_k' / <N, a> against f_c
// over the spatial domain, using the attendance closures.
FisherMatrix fisher_information(const PoissonModel& model, const std::vector<double>& N,
                                const QuadratureSpec& spatial_quad);

ConfidenceEllipsoid confidence_ellipsoid(const FisherMatrix& fisher,
                                         const Eigen::VectorXd& center, int n_counters,
                                         double level);

// Central cross-section through the center: the other coordinates are fixed
// at the center, so the 2D form is the (k, k') sub-block of the shape.
EllipsoidSlice ellipsoid_slice(const ConfidenceEllipsoid& e, int k, int k2);

// Chi-square quantile via the inverse regularized incomplete gamma.
double chi2_quantile(int dof, double level);

// Regularized lower incomplete gamma P(a, x); exposed for the quantile tests.
double gamma_p(double a, double x);

}  // namespace mobcount

#endif
