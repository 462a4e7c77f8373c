#pragma once

#include <cstddef>

namespace sdd {

/// Counters for soft events that keep a computation total but should be
/// surfaced to the user (clamped delay maps, saturated exponentials).
struct Diagnostics {
  std::size_t delay_clamps = 0;
  std::size_t saturations = 0;
  std::size_t negativity_warnings = 0;

  Diagnostics& operator+=(const Diagnostics& o) noexcept {
    delay_clamps += o.delay_clamps;
    saturations += o.saturations;
    negativity_warnings += o.negativity_warnings;
    return *this;
  }
};

}  // namespace sdd
