#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mixflow {

/// The two user classes of the assignment.
enum class VehicleClass : int { Regular = 0, Autonomous = 1 };

inline constexpr std::array<VehicleClass, 2> kVehicleClasses{VehicleClass::Regular,
                                                             VehicleClass::Autonomous};

constexpr std::size_t class_index(VehicleClass c) noexcept { return static_cast<std::size_t>(c); }

constexpr std::string_view to_string(VehicleClass c) noexcept {
  return c == VehicleClass::Regular ? "rv" : "av";
}

VehicleClass parse_vehicle_class(std::string_view text);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number of the offending record.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace mixflow
