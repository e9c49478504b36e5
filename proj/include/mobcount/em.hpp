#ifndef MOBCOUNT_EM_HPP
#define MOBCOUNT_EM_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mobcount/statmodel.hpp"

namespace mobcount {

struct EmConfig {
  enum class Init { UniformSplit, RandomSplit, Custom };

  double rel_tol = 1e-10;
  int max_iters = 10000;
  Init init = Init::UniformSplit;
  std::uint64_t seed = 0;             // RandomSplit
  std::vector<double> custom_nu;      // Custom

  void validate() const {
    if (!(rel_tol > 0.0)) throw DomainError("EmConfig: rel_tol must be positive");
    if (max_iters < 1) throw DomainError("EmConfig: max_iters >= 1 required");
  }
};

struct EmState {
  std::vector<double> nu;                 // current estimate
  std::vector<double> responsibilities;   // z[k][i][j], fractional
  std::vector<double> ll_trace;           // one entry per iteration
  std::vector<std::vector<double>> nu_trace;
  int iterations = 0;
  bool converged = false;

  // CSV `iter,ll,nu_1..nu_K`.
  void write_trace_csv(std::ostream& os) const;
};

// Closed-form conditional expectation of the hidden counts:
// z[k][i][j] = n(i,j) * nu_k a_k(i,j) / <nu, a(i,j)>.
std::vector<double> e_step(const std::vector<double>& nu, const AttendanceTable& table,
                           const CountDataset& data);

// Closed-form hidden-likelihood maximizer: nu_k = sum z_k / sum a_k.
std::vector<double> m_step(const std::vector<double>& z, const AttendanceTable& table);

EmState run_em(const AttendanceTable& table, const CountDataset& data,
               const EmConfig& config);

struct ConvergenceFit {
  double rate = 0.0;       // geometric rate exp(slope)
  double r_squared = 0.0;  // of the log-error linear fit
};

// Least-squares fit of log ||nu_t - reference|| against t over the
// pre-tolerance iterations.
ConvergenceFit em_convergence_fit(const EmState& state,
                                  const std::vector<double>& reference);
double em_convergence_rate(const EmState& state, const std::vector<double>& reference);

}  // namespace mobcount

#endif
