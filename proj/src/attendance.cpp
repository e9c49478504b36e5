#include "mobcount/attendance.hpp"

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

void JourneyTypeSpec::validate(double x_l, double x_r) const {
  if (!(velocity.lo() > 0.0))
    throw DomainError("JourneyTypeSpec '" + label + "': velocity support must be positive");
  if (origin.lo() < x_l - 1e-12 || origin.hi() > x_r + 1e-12)
    throw DomainError("JourneyTypeSpec '" + label + "': origin support outside the domain");
  if (destination.lo() < x_l - 1e-12 || destination.hi() > x_r + 1e-12)
    throw DomainError("JourneyTypeSpec '" + label + "': destination support outside the domain");
}

double AttendanceTable::journey_mass(std::size_t k) const {
  double s = 0.0;
  for (std::size_t i = 0; i < I(); ++i)
    for (std::size_t j = 0; j < J(); ++j) s += at(k, i, j);
  return s;
}

void AttendanceTable::write_csv(std::ostream& os) const {
  os << "journey,time_step,location,value\n";
  char buf[64];
  for (std::size_t k = 0; k < K(); ++k)
    for (std::size_t i = 0; i < I(); ++i)
      for (std::size_t j = 0; j < J(); ++j) {
        os << journey_labels[k] << ',' << i << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", locations[j]);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", at(k, i, j));
        os << buf << '\n';
      }
}

AttendanceTable AttendanceTable::read_csv(std::istream& is) {
  AttendanceTable t;
  std::string line;
  if (!std::getline(is, line) || line.rfind("journey,", 0) != 0)
    throw ParseError("attendance csv: bad header at line 1");
  struct Row {
    std::string k;
    int i;
    double x, v;
  };
  std::vector<Row> rows;
  int lineno = 1;
  int max_step = -1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Row r;
    char c1, c2, c3;
    if (!std::getline(ss, r.k, ',') || !(ss >> r.i >> c1 >> r.x >> c2 >> r.v) ||
        c1 != ',' || c2 != ',') {
      (void)c3;
      throw ParseError("attendance csv: malformed row at line " + std::to_string(lineno));
    }
    max_step = std::max(max_step, r.i);
    rows.push_back(r);
  }
  for (const auto& r : rows) {
    if (std::find(t.journey_labels.begin(), t.journey_labels.end(), r.k) ==
        t.journey_labels.end())
      t.journey_labels.push_back(r.k);
    if (std::find(t.locations.begin(), t.locations.end(), r.x) == t.locations.end())
      t.locations.push_back(r.x);
  }
  t.grid.n_steps = max_step + 1;
  t.values.assign(t.K() * t.I() * t.J(), 0.0);
  for (const auto& r : rows) {
    std::size_t k = std::find(t.journey_labels.begin(), t.journey_labels.end(), r.k) -
                    t.journey_labels.begin();
    std::size_t j =
        std::find(t.locations.begin(), t.locations.end(), r.x) - t.locations.begin();
    t.at(k, static_cast<std::size_t>(r.i), j) = r.v;
  }
  return t;
}

double g_x(const JourneyTypeSpec& spec, double x, double u) {
  if (spec.variant != ScheduleVariant::StartingTime)
    throw DomainError("g_x: StartingTime variant only");
  return u < x ? spec.destination.survival(x) : spec.destination.cdf(x);
}

namespace {

// Inner spatial integral of an oriented flux at fixed velocity.  The
// conditioning measure is the origin law in the StartingTime variant and the
// destination law in the ArrivalTime variant; the complementary law supplies
// the S/F directionality factor.
double oriented_inner(const JourneyTypeSpec& spec, double t, double x, double v,
                      FluxDirection dir, const QuadratureSpec& quad) {
  const bool start = spec.variant == ScheduleVariant::StartingTime;
  const Density1D& measure = start ? spec.origin : spec.destination;
  double weight;
  if (start)
    weight = (dir == FluxDirection::Right) ? spec.destination.survival(x)
                                           : spec.destination.cdf(x);
  else
    weight = (dir == FluxDirection::Right) ? spec.origin.cdf(x)
                                           : spec.origin.survival(x);
  if (weight == 0.0) return 0.0;

  // Which half-line of conditioning points u feeds this direction; u = x
  // belongs to the upper half.
  const bool lower_half = start == (dir == FluxDirection::Right);
  auto sched_time = [&](double u) {
    const double travel = std::fabs(u - x) / v;
    return start ? t - travel : t + travel;
  };
  if (measure.is_dirac()) {
    const double u = measure.atom();
    if ((u < x) != lower_half) return 0.0;
    return weight * spec.schedule.density(sched_time(u), u);
  }
  double a = measure.lo();
  double b = measure.hi();
  if (lower_half)
    b = std::min(b, x);
  else
    a = std::max(a, x);
  if (b <= a) return 0.0;
  return weight * integrate(
                      [&](double u) {
                        return spec.schedule.density(sched_time(u), u) *
                               measure.density(u);
                      },
                      a, b, quad);
}

template <class Inner>
double velocity_integral(const Density1D& velocity, Inner&& inner,
                         const QuadratureSpec& quad) {
  if (velocity.is_dirac()) return inner(velocity.atom());
  return integrate([&](double v) { return velocity.density(v) * inner(v); },
                   velocity.lo(), velocity.hi(), quad);
}

}  // namespace

double flux_right(const JourneyTypeSpec& spec, double t, double x,
                  const QuadratureSpec& quad) {
  return velocity_integral(
      spec.velocity,
      [&](double v) { return oriented_inner(spec, t, x, v, FluxDirection::Right, quad); },
      quad);
}

double flux_left(const JourneyTypeSpec& spec, double t, double x,
                 const QuadratureSpec& quad) {
  return velocity_integral(
      spec.velocity,
      [&](double v) { return oriented_inner(spec, t, x, v, FluxDirection::Left, quad); },
      quad);
}

double flux_unoriented(const JourneyTypeSpec& spec, double t, double x,
                       const QuadratureSpec& quad) {
  const bool start = spec.variant == ScheduleVariant::StartingTime;
  const Density1D& measure = start ? spec.origin : spec.destination;
  const Density1D& other = start ? spec.destination : spec.origin;
  // Directionality kernel; u = x takes the F branch.
  auto g = [&](double u) { return u < x ? other.survival(x) : other.cdf(x); };
  auto inner = [&](double v) {
    auto integrand = [&](double u) {
      const double travel = std::fabs(u - x) / v;
      const double time = start ? t - travel : t + travel;
      return g(u) * spec.schedule.density(time, u) * measure.density(u);
    };
    if (measure.is_dirac()) {
      const double u = measure.atom();
      const double time = start ? t - std::fabs(u - x) / v : t + std::fabs(u - x) / v;
      return g(u) * spec.schedule.density(time, u);
    }
    // Split at x: the kernel switches branch there.
    double s = 0.0;
    if (measure.lo() < std::min(x, measure.hi()))
      s += integrate(integrand, measure.lo(), std::min(x, measure.hi()), quad);
    if (std::max(x, measure.lo()) < measure.hi())
      s += integrate(integrand, std::max(x, measure.lo()), measure.hi(), quad);
    return s;
  };
  return velocity_integral(spec.velocity, inner, quad);
}

std::vector<double> attendance(const JourneyTypeSpec& spec, const TimeGrid& grid,
                               double x, const QuadratureSpec& quad) {
  grid.validate();
  std::vector<double> out(static_cast<std::size_t>(grid.n_steps), 0.0);
  for (int i = 0; i < grid.n_steps; ++i) {
    double v = integrate([&](double t) { return flux_unoriented(spec, t, x, quad); },
                         grid.bin_lo(i), grid.bin_hi(i), quad);
    if (v < -1e-12)
      throw DomainError("attendance: quadrature returned a negative value");
    out[static_cast<std::size_t>(i)] = std::max(v, 0.0);
  }
  return out;
}

namespace {

AttendanceTable make_empty_table(const std::vector<JourneyTypeSpec>& specs,
                                 const TimeGrid& grid,
                                 const std::vector<double>& locations) {
  AttendanceTable t;
  for (const auto& s : specs) t.journey_labels.push_back(s.label);
  t.grid = grid;
  t.locations = locations;
  t.values.assign(t.K() * t.I() * t.J(), 0.0);
  return t;
}

}  // namespace

AttendanceTable attendance_table(const std::vector<JourneyTypeSpec>& specs,
                                 const TimeGrid& grid,
                                 const std::vector<double>& locations,
                                 const QuadratureSpec& quad) {
  AttendanceTable t = make_empty_table(specs, grid, locations);
  const long long cells = static_cast<long long>(t.K()) * static_cast<long long>(t.J());
#pragma omp parallel for schedule(dynamic)
  for (long long c = 0; c < cells; ++c) {
    const std::size_t k = static_cast<std::size_t>(c) / t.J();
    const std::size_t j = static_cast<std::size_t>(c) % t.J();
    const std::vector<double> col = attendance(specs[k], grid, locations[j], quad);
    for (std::size_t i = 0; i < t.I(); ++i) t.at(k, i, j) = col[i];
  }
  return t;
}

AttendanceTable attendance_table_serial(const std::vector<JourneyTypeSpec>& specs,
                                        const TimeGrid& grid,
                                        const std::vector<double>& locations,
                                        const QuadratureSpec& quad) {
  AttendanceTable t = make_empty_table(specs, grid, locations);
  for (std::size_t k = 0; k < t.K(); ++k)
    for (std::size_t j = 0; j < t.J(); ++j) {
      const std::vector<double> col = attendance(specs[k], grid, locations[j], quad);
      for (std::size_t i = 0; i < t.I(); ++i) t.at(k, i, j) = col[i];
    }
  return t;
}

double pde_residual(const JourneyTypeSpec& spec, FluxDirection direction,
                    const std::vector<double>& times,
                    const std::vector<double>& points, double h,
                    const QuadratureSpec& quad) {
  if (!spec.velocity.is_dirac())
    throw DomainError("pde_residual: Dirac velocity required");
  if (!(h > 0.0)) throw DomainError("pde_residual: h must be positive");
  const double v = spec.velocity.atom();
  const bool start = spec.variant == ScheduleVariant::StartingTime;
  const bool right = direction == FluxDirection::Right;
  const double sign = right ? 1.0 : -1.0;

  auto flux = [&](double t, double x) {
    return right ? flux_right(spec, t, x, quad) : flux_left(spec, t, x, quad);
  };

  double worst = 0.0;
  for (double x : points) {
    // Directionality factor and hazard at x, per variant and direction.
    double factor, hazard_num;
    if (start) {
      factor = right ? spec.destination.survival(x) : spec.destination.cdf(x);
      hazard_num = spec.destination.density(x);
    } else {
      factor = right ? spec.origin.cdf(x) : spec.origin.survival(x);
      hazard_num = spec.origin.density(x);
    }
    if (factor < 1e-12)
      throw SingularRisk("pde_residual: vanishing survival/CDF factor at x");
    const double hazard = hazard_num / factor;
    for (double t : times) {
      const double nu = flux(t, x);
      const double dt = (flux(t + h, x) - flux(t - h, x)) / (2.0 * h);
      const double dx = (flux(t, x + h) - flux(t, x - h)) / (2.0 * h);
      double rhs;
      if (start) {
        const double joint = spec.schedule.density(t, x) * spec.origin.density(x);
        rhs = v * factor * joint - v * nu * hazard;
      } else {
        const double joint = spec.schedule.density(t, x) * spec.destination.density(x);
        rhs = v * nu * hazard - v * factor * joint;
      }
      worst = std::max(worst, std::fabs(dt + sign * v * dx - rhs));
    }
  }
  return worst;
}

}  // namespace mobcount
