#ifndef MOBCOUNT_COMMON_HPP
#define MOBCOUNT_COMMON_HPP

#include <stdexcept>
#include <string>

namespace mobcount {

struct DiracDensityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteIntegrand : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularRisk : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroRateWithPositiveCount : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NegativeRate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroPopulation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularAttendance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateAttendance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientIterations : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mobcount

#endif
