#pragma once

#include <cstdint>

namespace dsfec {

// Simulation clock, integer milliseconds from round start.
using SimTime = std::int64_t;

}  // namespace dsfec
