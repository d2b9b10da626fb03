#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace setree {

inline constexpr const char* kVersion = "0.1.0";

// Similarity edges with |cos| at or below this floor are dropped so that every
// stored weight is strictly positive and degrees never hit log(0).
inline constexpr double kEdgeWeightFloor = 1e-9;

// Thrown when the greedy optimizer exceeds its iteration bound. This signals
// a bug (entropy must strictly decrease), not bad input.
class iteration_limit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by combine when the new node would push the root above the height cap.
class height_cap_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Round to six decimals with the current FP rounding mode (ties-to-even).
inline double round6(double x) { return std::nearbyint(x * 1e6) / 1e6; }

inline std::string format6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return std::string(buf);
}

}  // namespace setree
