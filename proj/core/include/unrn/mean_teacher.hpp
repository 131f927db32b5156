#pragma once

#include "unrn/encoder.hpp"

namespace unrn {

// In-place exponential moving average: teacher = alpha * teacher +
// (1 - alpha) * student. alpha must lie in [0, 1]; sizes must match.
void ema_update(std::vector<double>& teacher, const std::vector<double>& student,
                double alpha);

// Same update over a full parameter set. Throws on a dims mismatch.
void ema_update(EncoderParams& teacher, const EncoderParams& student, double alpha);

}  // namespace unrn
