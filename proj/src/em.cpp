#include "mobcount/em.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mobcount {

void EmState::write_trace_csv(std::ostream& os) const {
  os << "iter,ll";
  for (std::size_t k = 0; k < nu.size(); ++k) os << ",nu_" << (k + 1);
  os << '\n';
  char buf[64];
  for (std::size_t t = 0; t < nu_trace.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%.17g", ll_trace[t]);
    os << t << ',' << buf;
    for (double v : nu_trace[t]) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

std::vector<double> e_step(const std::vector<double>& nu, const AttendanceTable& table,
                           const CountDataset& data) {
  const std::size_t K = table.K(), I = table.I(), J = table.J();
  if (nu.size() != K) throw DomainError("e_step: nu size mismatch");
  if (data.I() != I || data.J() != J)
    throw DomainError("e_step: dataset does not match the table grid");
  std::vector<double> z(K * I * J, 0.0);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j) {
      const long long n = data.count(i, j);
      if (n == 0) continue;
      double rate = 0.0;
      for (std::size_t k = 0; k < K; ++k) rate += nu[k] * table.at(k, i, j);
      if (!(rate > 0.0))
        throw ZeroRateWithPositiveCount("e_step: zero rate with positive count");
      for (std::size_t k = 0; k < K; ++k)
        z[(k * I + i) * J + j] =
            static_cast<double>(n) * nu[k] * table.at(k, i, j) / rate;
    }
  return z;
}

std::vector<double> m_step(const std::vector<double>& z, const AttendanceTable& table) {
  const std::size_t K = table.K(), I = table.I(), J = table.J();
  if (z.size() != K * I * J) throw DomainError("m_step: z size mismatch");
  std::vector<double> nu(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const double mass = table.journey_mass(k);
    if (!(mass > 0.0))
      throw DegenerateAttendance("m_step: journey with zero total attendance");
    double zsum = 0.0;
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < J; ++j) zsum += z[(k * I + i) * J + j];
    nu[k] = zsum / mass;
  }
  return nu;
}

EmState run_em(const AttendanceTable& table, const CountDataset& data,
               const EmConfig& config) {
  config.validate();
  const std::size_t K = table.K(), I = table.I(), J = table.J();
  for (std::size_t k = 0; k < K; ++k)
    if (!(table.journey_mass(k) > 0.0))
      throw DegenerateAttendance("run_em: journey with zero total attendance");
  if (data.I() != I || data.J() != J)
    throw DomainError("run_em: dataset does not match the table grid");

  EmState state;
  if (data.total_counts() == 0) {
    // Degenerate MLE: the likelihood concentrates at the origin.
    state.nu.assign(K, 0.0);
    state.responsibilities.assign(K * I * J, 0.0);
    state.nu_trace.push_back(state.nu);
    state.ll_trace.push_back(0.0);
    state.iterations = 1;
    state.converged = true;
    return state;
  }

  // Initialization: split the counts, then one M step.
  std::vector<double> z(K * I * J, 0.0);
  if (config.init == EmConfig::Init::Custom) {
    if (config.custom_nu.size() != K)
      throw DomainError("run_em: custom_nu size mismatch");
    state.nu = config.custom_nu;
  } else {
    Rng rng(derive_seed(config.seed, {0x454dULL}));
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < J; ++j) {
        const double n = static_cast<double>(data.count(i, j));
        if (n == 0.0) continue;
        if (config.init == EmConfig::Init::UniformSplit) {
          for (std::size_t k = 0; k < K; ++k)
            z[(k * I + i) * J + j] = n / static_cast<double>(K);
        } else {
          double wsum = 0.0;
          std::vector<double> w(K);
          for (std::size_t k = 0; k < K; ++k) wsum += (w[k] = rng.uniform());
          for (std::size_t k = 0; k < K; ++k)
            z[(k * I + i) * J + j] = n * w[k] / wsum;
        }
      }
    state.nu = m_step(z, table);
  }
  state.nu_trace.push_back(state.nu);
  state.ll_trace.push_back(log_likelihood(table, state.nu, data));

  for (int it = 1; it <= config.max_iters; ++it) {
    z = e_step(state.nu, table, data);
    std::vector<double> next = m_step(z, table);
    double delta = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      delta = std::max(delta,
                       std::fabs(next[k] - state.nu[k]) / std::max(next[k], 1.0));
    state.nu = std::move(next);
    state.nu_trace.push_back(state.nu);
    state.ll_trace.push_back(log_likelihood(table, state.nu, data));
    state.iterations = it;
    if (delta < config.rel_tol) {
      state.converged = true;
      break;
    }
  }
  state.responsibilities = std::move(z);
  return state;
}

ConvergenceFit em_convergence_fit(const EmState& state,
                                  const std::vector<double>& reference) {
  if (state.iterations < 10)
    throw InsufficientIterations("em_convergence_fit: need >= 10 iterations");
  std::vector<double> ts, logs;
  double ref_scale = 0.0;
  for (double v : reference) ref_scale = std::max(ref_scale, std::fabs(v));
  const double floor = 1e-12 * std::max(ref_scale, 1.0);
  for (std::size_t t = 0; t < state.nu_trace.size(); ++t) {
    double e2 = 0.0;
    for (std::size_t k = 0; k < reference.size(); ++k) {
      const double d = state.nu_trace[t][k] - reference[k];
      e2 += d * d;
    }
    const double e = std::sqrt(e2);
    if (e > floor) {
      ts.push_back(static_cast<double>(t));
      logs.push_back(std::log(e));
    }
  }
  if (ts.size() < 5)
    throw InsufficientIterations("em_convergence_fit: too few nonzero errors");
  const double n = static_cast<double>(ts.size());
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0, sll = 0.0;
  for (std::size_t q = 0; q < ts.size(); ++q) {
    st += ts[q];
    sl += logs[q];
    stt += ts[q] * ts[q];
    stl += ts[q] * logs[q];
    sll += logs[q] * logs[q];
  }
  const double cov = stl - st * sl / n;
  const double var_t = stt - st * st / n;
  const double var_l = sll - sl * sl / n;
  ConvergenceFit fit;
  const double slope = cov / var_t;
  fit.rate = std::exp(slope);
  fit.r_squared = var_l > 0.0 ? (cov * cov) / (var_t * var_l) : 1.0;
  return fit;
}

double em_convergence_rate(const EmState& state, const std::vector<double>& reference) {
  return em_convergence_fit(state, reference).rate;
}

}  // namespace mobcount
