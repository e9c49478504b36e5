#ifndef MOBCOUNT_MICROSIM_HPP
#define MOBCOUNT_MICROSIM_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mobcount/attendance.hpp"

namespace mobcount {

struct Trip {
  int journey = 0;
  ScheduleVariant variant = ScheduleVariant::StartingTime;
  double v = 0.0;
  double x0 = 0.0;
  double xe = 0.0;
  double t_anchor = 0.0;  // departure time (StartingTime) or arrival time (ArrivalTime)
  int eps = 1;            // +1 iff xe >= x0

  double travel_time() const { return (xe >= x0 ? xe - x0 : x0 - xe) / v; }
};

// Counter locations plus per-cell aggregated counts; the hidden per-journey
// counts are kept when the dataset comes from a generator.
struct CountDataset {
  std::vector<double> locations;
  TimeGrid grid;
  std::vector<long long> counts;   // [I][J]
  std::vector<long long> hidden;   // [K][I][J], empty when absent
  std::vector<long long> n_trips;  // N_k for the day, empty when unknown
  int day_id = 0;
  std::uint64_t seed = 0;

  std::size_t I() const { return static_cast<std::size_t>(grid.n_steps); }
  std::size_t J() const { return locations.size(); }
  std::size_t K() const { return J() == 0 || I() == 0 ? 0 : hidden.size() / (I() * J()); }
  bool has_hidden() const { return !hidden.empty(); }

  long long& count(std::size_t i, std::size_t j) { return counts[i * J() + j]; }
  long long count(std::size_t i, std::size_t j) const { return counts[i * J() + j]; }
  long long& hid(std::size_t k, std::size_t i, std::size_t j) {
    return hidden[(k * I() + i) * J() + j];
  }
  long long hid(std::size_t k, std::size_t i, std::size_t j) const {
    return hidden[(k * I() + i) * J() + j];
  }

  long long total_counts() const;

  // CSV: day,counter_id,location,time_step[,journey],count with deterministic
  // row ordering (counter, time, journey).
  void write_csv(std::ostream& os, bool with_hidden) const;
  static CountDataset read_csv(std::istream& is);
};

Trip draw_trip(const JourneyTypeSpec& spec, int journey_index, Rng& rng);

// Time at which the trip crosses x, if x lies on the traveled segment
// (closed-interval membership).
std::optional<double> crossing_time(const Trip& trip, double x);

// Trajectory-level generator: n_trips[k] individual trips per journey type,
// binned at each counter location.  Per-trip rng streams are derived from
// (seed, k, trip index), so the result is independent of the thread count.
CountDataset simulate_day(const std::vector<JourneyTypeSpec>& specs,
                          const std::vector<long long>& n_trips,
                          const std::vector<double>& locations,
                          const TimeGrid& grid, std::uint64_t seed);
CountDataset simulate_day_serial(const std::vector<JourneyTypeSpec>& specs,
                                 const std::vector<long long>& n_trips,
                                 const std::vector<double>& locations,
                                 const TimeGrid& grid, std::uint64_t seed);

// Rate-level generator: hidden[k][i][j] ~ Poisson(nu[k] * a_k(i, x_j)).
CountDataset simulate_poisson_day(const AttendanceTable& table,
                                  const std::vector<double>& nu, Rng& rng);

// Mean over days of hidden[k][i][j] / N_k^{(d)}; all days must carry hidden
// counts and positive per-journey trip totals.
AttendanceTable empirical_attendance(const std::vector<CountDataset>& days,
                                     const std::vector<std::string>& labels);

}  // namespace mobcount

#endif
