#include "mobcount/microsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mobcount {

long long CountDataset::total_counts() const {
  long long s = 0;
  for (long long c : counts) s += c;
  return s;
}

void CountDataset::write_csv(std::ostream& os, bool with_hidden) const {
  char buf[64];
  if (with_hidden && !has_hidden())
    throw DomainError("CountDataset: no hidden counts to write");
  os << (with_hidden ? "day,counter_id,location,time_step,journey,count\n"
                     : "day,counter_id,location,time_step,count\n");
  for (std::size_t j = 0; j < J(); ++j) {
    std::snprintf(buf, sizeof(buf), "%.17g", locations[j]);
    for (std::size_t i = 0; i < I(); ++i) {
      if (with_hidden) {
        for (std::size_t k = 0; k < K(); ++k)
          os << day_id << ',' << j << ',' << buf << ',' << i << ',' << k << ','
             << hid(k, i, j) << '\n';
      } else {
        os << day_id << ',' << j << ',' << buf << ',' << i << ',' << count(i, j)
           << '\n';
      }
    }
  }
}

CountDataset CountDataset::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw ParseError("count csv: empty file at line 1");
  bool with_hidden;
  if (line == "day,counter_id,location,time_step,count")
    with_hidden = false;
  else if (line == "day,counter_id,location,time_step,journey,count")
    with_hidden = true;
  else
    throw ParseError("count csv: bad header at line 1");

  struct Row {
    int day;
    long long j;
    double x;
    long long i, k, n;
  };
  std::vector<Row> rows;
  long long max_j = -1, max_i = -1, max_k = -1;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Row r{};
    char c;
    bool ok = static_cast<bool>(ss >> r.day >> c >> r.j >> c >> r.x >> c >> r.i);
    if (ok && with_hidden) ok = static_cast<bool>(ss >> c >> r.k);
    if (ok) ok = static_cast<bool>(ss >> c >> r.n);
    if (!ok || r.j < 0 || r.i < 0 || r.n < 0)
      throw ParseError("count csv: malformed row at line " + std::to_string(lineno));
    max_j = std::max(max_j, r.j);
    max_i = std::max(max_i, r.i);
    max_k = std::max(max_k, r.k);
    rows.push_back(r);
  }
  CountDataset d;
  d.grid.n_steps = static_cast<int>(max_i + 1);
  d.locations.assign(static_cast<std::size_t>(max_j + 1), 0.0);
  d.counts.assign(d.I() * d.J(), 0);
  if (with_hidden) d.hidden.assign((max_k + 1) * d.I() * d.J(), 0);
  for (const auto& r : rows) {
    d.day_id = r.day;
    d.locations[static_cast<std::size_t>(r.j)] = r.x;
    if (with_hidden) {
      d.hid(static_cast<std::size_t>(r.k), static_cast<std::size_t>(r.i),
            static_cast<std::size_t>(r.j)) = r.n;
      d.count(static_cast<std::size_t>(r.i), static_cast<std::size_t>(r.j)) += r.n;
    } else {
      d.count(static_cast<std::size_t>(r.i), static_cast<std::size_t>(r.j)) = r.n;
    }
  }
  return d;
}

Trip draw_trip(const JourneyTypeSpec& spec, int journey_index, Rng& rng) {
  Trip t;
  t.journey = journey_index;
  t.variant = spec.variant;
  t.v = spec.velocity.sample(rng);
  t.x0 = spec.origin.sample(rng);
  t.xe = spec.destination.sample(rng);
  t.eps = t.xe >= t.x0 ? 1 : -1;
  const double cond = spec.variant == ScheduleVariant::StartingTime ? t.x0 : t.xe;
  t.t_anchor = spec.schedule.sample(cond, rng);
  return t;
}

std::optional<double> crossing_time(const Trip& trip, double x) {
  const double lo = std::min(trip.x0, trip.xe);
  const double hi = std::max(trip.x0, trip.xe);
  if (x < lo || x > hi) return std::nullopt;
  if (trip.variant == ScheduleVariant::StartingTime)
    return trip.t_anchor + std::fabs(x - trip.x0) / trip.v;
  return trip.t_anchor - std::fabs(trip.xe - x) / trip.v;
}

namespace {

CountDataset make_empty_dataset(std::size_t K, const std::vector<double>& locations,
                                const TimeGrid& grid, std::uint64_t seed) {
  grid.validate();
  CountDataset d;
  d.locations = locations;
  d.grid = grid;
  d.seed = seed;
  d.counts.assign(d.I() * d.J(), 0);
  d.hidden.assign(K * d.I() * d.J(), 0);
  return d;
}

// Bins one trip's crossings into a [K][I][J] accumulator.
void bin_trip(const Trip& trip, std::size_t k, const std::vector<double>& locations,
              const TimeGrid& grid, std::vector<long long>& acc, std::size_t I,
              std::size_t J) {
  for (std::size_t j = 0; j < J; ++j) {
    auto ct = crossing_time(trip, locations[j]);
    if (!ct) continue;
    const int i = grid.bin_of(*ct);
    if (i < 0) continue;  // outside the observation window
    ++acc[(k * I + static_cast<std::size_t>(i)) * J + j];
  }
}

}  // namespace

CountDataset simulate_day(const std::vector<JourneyTypeSpec>& specs,
                          const std::vector<long long>& n_trips,
                          const std::vector<double>& locations,
                          const TimeGrid& grid, std::uint64_t seed) {
  if (n_trips.size() != specs.size())
    throw DomainError("simulate_day: n_trips size mismatch");
  CountDataset d = make_empty_dataset(specs.size(), locations, grid, seed);
  d.n_trips = n_trips;
  const std::size_t I = d.I(), J = d.J();
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (n_trips[k] < 0) throw DomainError("simulate_day: negative trip count");
    const long long n = n_trips[k];
#ifdef _OPENMP
    const int nthreads = omp_get_max_threads();
#else
    const int nthreads = 1;
#endif
    std::vector<std::vector<long long>> partial(
        static_cast<std::size_t>(nthreads),
        std::vector<long long>(specs.size() * I * J, 0));
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < n; ++p) {
#ifdef _OPENMP
      const int tid = omp_get_thread_num();
#else
      const int tid = 0;
#endif
      Rng rng(derive_seed(seed, {k, static_cast<std::uint64_t>(p)}));
      const Trip trip = draw_trip(specs[k], static_cast<int>(k), rng);
      bin_trip(trip, k, locations, grid, partial[static_cast<std::size_t>(tid)], I, J);
    }
    for (const auto& acc : partial)
      for (std::size_t c = 0; c < acc.size(); ++c) d.hidden[c] += acc[c];
  }
  for (std::size_t k = 0; k < specs.size(); ++k)
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < J; ++j) d.count(i, j) += d.hid(k, i, j);
  return d;
}

CountDataset simulate_day_serial(const std::vector<JourneyTypeSpec>& specs,
                                 const std::vector<long long>& n_trips,
                                 const std::vector<double>& locations,
                                 const TimeGrid& grid, std::uint64_t seed) {
  if (n_trips.size() != specs.size())
    throw DomainError("simulate_day: n_trips size mismatch");
  CountDataset d = make_empty_dataset(specs.size(), locations, grid, seed);
  d.n_trips = n_trips;
  const std::size_t I = d.I(), J = d.J();
  for (std::size_t k = 0; k < specs.size(); ++k) {
    for (long long p = 0; p < n_trips[k]; ++p) {
      Rng rng(derive_seed(seed, {k, static_cast<std::uint64_t>(p)}));
      const Trip trip = draw_trip(specs[k], static_cast<int>(k), rng);
      bin_trip(trip, k, locations, grid, d.hidden, I, J);
    }
  }
  for (std::size_t k = 0; k < specs.size(); ++k)
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < J; ++j) d.count(i, j) += d.hid(k, i, j);
  return d;
}

CountDataset simulate_poisson_day(const AttendanceTable& table,
                                  const std::vector<double>& nu, Rng& rng) {
  if (nu.size() != table.K())
    throw DomainError("simulate_poisson_day: nu size mismatch");
  CountDataset d = make_empty_dataset(table.K(), table.locations, table.grid, 0);
  for (std::size_t k = 0; k < table.K(); ++k) {
    if (nu[k] < 0.0) throw NegativeRate("simulate_poisson_day: negative nu");
    for (std::size_t i = 0; i < table.I(); ++i)
      for (std::size_t j = 0; j < table.J(); ++j) {
        const double rate = nu[k] * table.at(k, i, j);
        if (rate < 0.0) throw NegativeRate("simulate_poisson_day: negative rate");
        const long long c = rng.poisson(rate);
        d.hid(k, i, j) = c;
        d.count(i, j) += c;
      }
  }
  return d;
}

AttendanceTable empirical_attendance(const std::vector<CountDataset>& days,
                                     const std::vector<std::string>& labels) {
  if (days.empty()) throw DomainError("empirical_attendance: no days");
  const CountDataset& first = days.front();
  if (!first.has_hidden())
    throw DomainError("empirical_attendance: hidden counts required");
  AttendanceTable t;
  t.journey_labels = labels;
  t.grid = first.grid;
  t.locations = first.locations;
  t.values.assign(t.K() * t.I() * t.J(), 0.0);
  if (labels.size() != first.K())
    throw DomainError("empirical_attendance: label count mismatch");
  for (const CountDataset& d : days) {
    if (d.n_trips.size() != t.K())
      throw ZeroPopulation("empirical_attendance: day without trip totals");
    for (std::size_t k = 0; k < t.K(); ++k) {
      if (d.n_trips[k] <= 0)
        throw ZeroPopulation("empirical_attendance: zero subpopulation on a day");
      const double inv = 1.0 / static_cast<double>(d.n_trips[k]);
      for (std::size_t i = 0; i < t.I(); ++i)
        for (std::size_t j = 0; j < t.J(); ++j)
          t.at(k, i, j) += static_cast<double>(d.hid(k, i, j)) * inv;
    }
  }
  const double inv_days = 1.0 / static_cast<double>(days.size());
  for (double& v : t.values) v *= inv_days;
  return t;
}

}  // namespace mobcount
