#pragma once

#include <array>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcies {

/// Day-ahead horizon. Every hourly quantity in the engine is a fixed 24-slot array;
/// slot 0 is the 1:00 period and slot 23 the 24:00 period.
inline constexpr std::size_t kHours = 24;
using HourlySeries = std::array<double, kHours>;

/// A precondition on numeric input was broken (probability outside (0,1),
/// coincident centroids, non-positive coefficient, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constraint breach reported as data. `constraint` is a short id such as
/// "shift_balance" or "chp_ramp"; `hour` is 1-based, 0 when the
/// breach is not tied to a single period.
struct Violation {
  std::string constraint;
  int hour = 0;
  double amount = 0.0;
  std::string detail;
};
using Violations = std::vector<Violation>;

inline HourlySeries filled(double value) {
  HourlySeries s;
  s.fill(value);
  return s;
}

inline double total(const HourlySeries& s) {
  // fixed left-to-right order keeps results bitwise reproducible
  double acc = 0.0;
  for (double v : s) acc += v;
  return acc;
}

inline void append(Violations& into, Violations&& more) {
  into.insert(into.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

}  // namespace mcies
