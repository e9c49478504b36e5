#ifndef MOBCOUNT_ATTENDANCE_HPP
#define MOBCOUNT_ATTENDANCE_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "mobcount/distributions.hpp"

namespace mobcount {

enum class ScheduleVariant { StartingTime, ArrivalTime };
enum class FluxDirection { Right, Left };

// Distribution bundle defining one journey type.  In the StartingTime
// variant the schedule is the law of the departure time conditioned on the
// origin; in the ArrivalTime variant it is the law of the arrival time
// conditioned on the destination.
struct JourneyTypeSpec {
  std::string label;
  ScheduleVariant variant = ScheduleVariant::StartingTime;
  Density1D velocity;        // support in (0, inf), units space/hour
  Density1D origin;          // law of x0
  Density1D destination;     // law of xe
  ConditionalSchedule schedule;

  void validate(double x_l, double x_r) const;
};

struct TimeGrid {
  double t_start = 0.0;
  int n_steps = 24;
  double step = 1.0;  // hours

  double bin_lo(int i) const { return t_start + i * step; }
  double bin_hi(int i) const { return t_start + (i + 1) * step; }
  double horizon_end() const { return t_start + n_steps * step; }
  // Bin index of time t, or -1 outside [t_start, horizon_end).
  int bin_of(double t) const {
    if (t < t_start || t >= horizon_end()) return -1;
    int i = static_cast<int>((t - t_start) / step);
    return i >= n_steps ? n_steps - 1 : i;
  }
  void validate() const {
    if (step <= 0.0 || n_steps < 1)
      throw DomainError("TimeGrid: step > 0 and n_steps >= 1 required");
  }
};

// a_k(i, x_j) on a (journey, time step, location) grid.
struct AttendanceTable {
  std::vector<std::string> journey_labels;
  TimeGrid grid;
  std::vector<double> locations;
  std::vector<double> values;  // flattened [K][I][J]

  std::size_t K() const { return journey_labels.size(); }
  std::size_t I() const { return static_cast<std::size_t>(grid.n_steps); }
  std::size_t J() const { return locations.size(); }
  double& at(std::size_t k, std::size_t i, std::size_t j) {
    return values[(k * I() + i) * J() + j];
  }
  double at(std::size_t k, std::size_t i, std::size_t j) const {
    return values[(k * I() + i) * J() + j];
  }
  // Per-journey sum over all (i, j) cells, the M-step denominator.
  double journey_mass(std::size_t k) const;

  void write_csv(std::ostream& os) const;
  static AttendanceTable read_csv(std::istream& is);
};

// Directionality kernel: S_dest(x) left of x, F_dest(x) at and right of x.
// StartingTime variant only.
double g_x(const JourneyTypeSpec& spec, double x, double u);

double flux_right(const JourneyTypeSpec& spec, double t, double x,
                  const QuadratureSpec& quad);
double flux_left(const JourneyTypeSpec& spec, double t, double x,
                 const QuadratureSpec& quad);

// Single integral against the directionality kernel over the full spatial
// support, split at x so the quadrature never straddles the kink.
double flux_unoriented(const JourneyTypeSpec& spec, double t, double x,
                       const QuadratureSpec& quad);

// Time integral of the unoriented flux over each grid bin.
std::vector<double> attendance(const JourneyTypeSpec& spec, const TimeGrid& grid,
                               double x, const QuadratureSpec& quad);

AttendanceTable attendance_table(const std::vector<JourneyTypeSpec>& specs,
                                 const TimeGrid& grid,
                                 const std::vector<double>& locations,
                                 const QuadratureSpec& quad);
// Plain-loop reference implementation, kept for testing the parallel kernel.
AttendanceTable attendance_table_serial(const std::vector<JourneyTypeSpec>& specs,
                                        const TimeGrid& grid,
                                        const std::vector<double>& locations,
                                        const QuadratureSpec& quad);

// Max strong-form transport-equation residual over the given interior
// points, with central finite differences of step h.  Requires a Dirac
// velocity and smooth densities.  Throws SingularRisk when the survival/CDF
// factor in the hazard drops below 1e-12 at an evaluated point.
double pde_residual(const JourneyTypeSpec& spec, FluxDirection direction,
                    const std::vector<double>& times,
                    const std::vector<double>& points, double h,
                    const QuadratureSpec& quad);

}  // namespace mobcount

#endif
