#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace handspan {

// Shared numeric tolerances. Lengths are millimeters throughout the library;
// angles are radians everywhere except at I/O boundaries.
inline constexpr double kGeomTol = 1e-7;  // geometric coincidence, mm
inline constexpr double kUnitTol = 1e-9;  // unit-norm checks

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedSpec : Error { using Error::Error; };
struct UnknownLink : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };
struct NonpositiveDimension : Error { using Error::Error; };
struct OutOfBounds : Error { using Error::Error; };
struct UnsupportedShape : Error { using Error::Error; };
struct NoPermissiveOS : Error { using Error::Error; };
struct NotPermissive : Error { using Error::Error; };
struct NoFreeJoints : Error { using Error::Error; };
struct NoFeasibleGrasp : Error { using Error::Error; };
struct TooManyPermutations : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

constexpr double deg2rad(double d) { return d * 3.14159265358979323846 / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / 3.14159265358979323846; }
inline constexpr double kPi = 3.14159265358979323846;

}  // namespace handspan
