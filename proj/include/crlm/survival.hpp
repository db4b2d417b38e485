#pragma once

#include <cmath>

#include "crlm/error.hpp"

namespace crlm {

// Right-censored outcome; time in months.
struct SurvivalLabel {
  double time = 1.0;
  bool event = false;

  friend bool operator==(const SurvivalLabel&, const SurvivalLabel&) = default;
};

inline void validate(const SurvivalLabel& l) {
  if (!std::isfinite(l.time) || l.time <= 0) throw InvalidArgument("survival time must be finite and > 0");
}

}  // namespace crlm
