#include "unrn/mean_teacher.hpp"

#include <stdexcept>

namespace unrn {

void ema_update(std::vector<double>& teacher, const std::vector<double>& student,
                double alpha) {
  if (teacher.size() != student.size()) {
    throw std::invalid_argument("dimension mismatch");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("ema alpha must lie in [0, 1]");
  }
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    teacher[i] = alpha * teacher[i] + (1.0 - alpha) * student[i];
  }
}

void ema_update(EncoderParams& teacher, const EncoderParams& student, double alpha) {
  if (!(teacher.dims() == student.dims())) {
    throw std::invalid_argument("dimension mismatch");
  }
  ema_update(teacher.flat(), student.flat(), alpha);
}

}  // namespace unrn
