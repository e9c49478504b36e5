#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mobcount/experiments.hpp"

using namespace mobcount;

namespace {

JourneyTypeSpec point_trip_spec(double x0, double xe, double anchor,
                                ScheduleVariant variant = ScheduleVariant::StartingTime) {
  return JourneyTypeSpec{"pt", variant, Density1D::dirac(2.0),
                         Density1D::dirac(x0), Density1D::dirac(xe),
                         ConditionalSchedule(Density1D::dirac(anchor))};
}

JourneyTypeSpec smooth_spec() {
  return JourneyTypeSpec{
      "S", ScheduleVariant::StartingTime, Density1D::dirac(2.0),
      Density1D::truncated_gaussian_mixture({1.0}, {0.2}, {0.1}, 0.0, 1.0),
      Density1D::truncated_gaussian_mixture({1.0}, {0.8}, {0.1}, 0.0, 1.0),
      ConditionalSchedule(
          Density1D::truncated_gaussian_mixture({1.0}, {8.0}, {1.0}, 4.0, 12.0))};
}

}  // namespace

TEST_CASE("draw_trip respects the marginals and the direction sign") {
  Rng rng(1);
  Trip t = draw_trip(point_trip_spec(0.1, 0.9, 8.0), 0, rng);
  CHECK(t.v == 2.0);
  CHECK(t.x0 == 0.1);
  CHECK(t.xe == 0.9);
  CHECK(t.eps == 1);
  t = draw_trip(point_trip_spec(0.9, 0.1, 8.0), 0, rng);
  CHECK(t.eps == -1);
  CHECK(t.travel_time() == doctest::Approx(0.4).epsilon(1e-15));

  // Marginal check: empirical mean/sd of x0 over many draws.
  const JourneyTypeSpec s = smooth_spec();
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  Rng r2(7);
  for (int q = 0; q < n; ++q) {
    const Trip tr = draw_trip(s, 0, r2);
    sum += tr.x0;
    sum2 += tr.x0 * tr.x0;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::fabs(mean - 0.2037) < 0.005);  // truncation shifts the mean up
  CHECK(std::fabs(sd - 0.097) < 0.005);
}

TEST_CASE("crossing_time for both schedule variants") {
  Trip t;
  t.variant = ScheduleVariant::StartingTime;
  t.x0 = 0.0;
  t.xe = 1.0;
  t.v = 2.0;
  t.t_anchor = 8.0;
  t.eps = 1;
  REQUIRE(crossing_time(t, 0.5).has_value());
  CHECK(*crossing_time(t, 0.5) == doctest::Approx(8.25).epsilon(1e-15));
  CHECK(!crossing_time(t, 1.5).has_value());
  CHECK(*crossing_time(t, 0.0) == 8.0);   // closed-interval membership
  CHECK(*crossing_time(t, 1.0) == 8.5);

  Trip a = t;
  a.variant = ScheduleVariant::ArrivalTime;
  a.t_anchor = 9.0;  // arrival time
  CHECK(*crossing_time(a, 0.5) == doctest::Approx(8.75).epsilon(1e-15));

  Trip back = t;  // leftward trip never visits x > x0
  back.x0 = 0.9;
  back.xe = 0.1;
  back.eps = -1;
  CHECK(!crossing_time(back, 0.95).has_value());
  CHECK(*crossing_time(back, 0.5) == doctest::Approx(8.2).epsilon(1e-12));
}

TEST_CASE("simulate_day bins deterministic crossings") {
  const TimeGrid grid{0.0, 24, 1.0};
  const std::vector<double> locs = {0.5};
  CountDataset d = simulate_day({point_trip_spec(0.0, 1.0, 8.0)}, {1}, locs, grid, 5);
  CHECK(d.hid(0, 8, 0) == 1);  // crossing at t = 8.25 lands in bin [8, 9)
  CHECK(d.total_counts() == 1);

  d = simulate_day({point_trip_spec(0.0, 1.0, 8.0)}, {0}, locs, grid, 5);
  CHECK(d.total_counts() == 0);

  // A crossing outside the horizon is dropped.
  d = simulate_day({point_trip_spec(0.0, 1.0, 25.0)}, {3}, locs, grid, 5);
  CHECK(d.total_counts() == 0);
}

TEST_CASE("aggregation identity, reproducibility, and serial equivalence") {
  const TimeGrid grid{0.0, 24, 1.0};
  const std::vector<JourneyTypeSpec> specs = {smooth_spec(), point_trip_spec(0.9, 0.1, 17.0)};
  const std::vector<double> locs = {0.2, 0.5, 0.8};
  const CountDataset a = simulate_day(specs, {5000, 3000}, locs, grid, 77);
  const CountDataset b = simulate_day(specs, {5000, 3000}, locs, grid, 77);
  const CountDataset c = simulate_day_serial(specs, {5000, 3000}, locs, grid, 77);
  CHECK(a.counts == b.counts);
  CHECK(a.hidden == b.hidden);
  CHECK(a.counts == c.counts);
  CHECK(a.hidden == c.hidden);
  for (std::size_t i = 0; i < a.I(); ++i)
    for (std::size_t j = 0; j < a.J(); ++j) {
      long long s = 0;
      for (std::size_t k = 0; k < a.K(); ++k) s += a.hid(k, i, j);
      CHECK(s == a.count(i, j));
    }
}

TEST_CASE("poisson generator moments and aggregation") {
  AttendanceTable t;
  t.journey_labels = {"only"};
  t.grid = TimeGrid{0.0, 1, 1.0};
  t.locations = {0.5};
  t.values = {1.0};

  Rng rng(11);
  CountDataset zero = simulate_poisson_day(t, {0.0}, rng);
  CHECK(zero.total_counts() == 0);
  CHECK_THROWS_AS(simulate_poisson_day(t, {-1.0}, rng), NegativeRate);

  const double rate = 1e4;
  const int reps = 1000;
  double sum = 0.0;
  for (int q = 0; q < reps; ++q)
    sum += static_cast<double>(simulate_poisson_day(t, {rate}, rng).count(0, 0));
  const double mean = sum / reps;
  CHECK(std::fabs(mean - rate) < 4.0 * std::sqrt(rate / reps));
}

TEST_CASE("binomial law of a single cell across replicate days") {
  const JourneyTypeSpec s = smooth_spec();
  const TimeGrid grid{0.0, 24, 1.0};
  const double x = 0.53;
  const std::vector<double> a = attendance(s, grid, x, QuadratureSpec::gauss(8, 8));
  const std::size_t bin = 8;
  const double p = a[bin];
  const long long n = 2000;
  const int reps = 400;
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const CountDataset d = simulate_day({s}, {n}, {x}, grid,
                                        derive_seed(9000, {static_cast<std::uint64_t>(r)}));
    const double c = static_cast<double>(d.hid(0, bin, 0));
    sum += c;
    sum2 += c * c;
  }
  const double mean = sum / reps;
  const double var = sum2 / reps - mean * mean;
  const double bin_mean = static_cast<double>(n) * p;
  const double bin_var = static_cast<double>(n) * p * (1.0 - p);
  CHECK(std::fabs(mean - bin_mean) < 4.0 * std::sqrt(bin_var / reps));
  CHECK(std::fabs(var - bin_var) < 4.0 * bin_var * std::sqrt(2.0 / reps));
}

TEST_CASE("empirical attendance averages hidden counts per capita") {
  const TimeGrid grid{0.0, 24, 1.0};
  CountDataset d = simulate_day({point_trip_spec(0.0, 1.0, 8.0)}, {10}, {0.5}, grid, 5);
  // All 10 deterministic trips cross in bin 8.
  const AttendanceTable t = empirical_attendance({d}, {"pt"});
  CHECK(t.at(0, 8, 0) == 1.0);
  CHECK(t.journey_mass(0) == 1.0);

  CountDataset bad = d;
  bad.n_trips = {0};
  CHECK_THROWS_AS(empirical_attendance({bad}, {"pt"}), ZeroPopulation);

  // More days shrink the deviation from the theoretical table.
  const JourneyTypeSpec s = smooth_spec();
  const std::vector<double> truth = attendance(s, grid, 0.5, QuadratureSpec::gauss(8, 8));
  auto mse_over = [&](int n_days, std::uint64_t seed0) {
    std::vector<CountDataset> days;
    for (int q = 0; q < n_days; ++q)
      days.push_back(simulate_day({s}, {500}, {0.5}, grid,
                                  derive_seed(seed0, {static_cast<std::uint64_t>(q)})));
    const AttendanceTable e = empirical_attendance(days, {"S"});
    double mse = 0.0;
    for (std::size_t i = 0; i < e.I(); ++i) {
      const double dlt = e.at(0, i, 0) - truth[i];
      mse += dlt * dlt;
    }
    return mse;
  };
  CHECK(mse_over(64, 42) < mse_over(2, 42));
}

TEST_CASE("count csv round-trip and parse errors name the line") {
  const TimeGrid grid{0.0, 24, 1.0};
  const CountDataset d =
      simulate_day({smooth_spec()}, {2000}, {0.2, 0.8}, grid, 123);
  for (bool with_hidden : {false, true}) {
    std::stringstream ss;
    d.write_csv(ss, with_hidden);
    const CountDataset back = CountDataset::read_csv(ss);
    CHECK(back.counts == d.counts);
    CHECK(back.locations == d.locations);
    if (with_hidden) CHECK(back.hidden == d.hidden);
  }
  std::stringstream bad("day,counter_id,location,time_step,count\n0,0,0.5,oops,3\n");
  try {
    CountDataset::read_csv(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}
