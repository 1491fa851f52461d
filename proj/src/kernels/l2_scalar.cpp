#include "bailaudit/kernels/l2.hpp"

namespace bailaudit::kernels::detail {

double squared_l2_scalar(const float* a, const float* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

}  // namespace bailaudit::kernels::detail
