#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

#include "bailaudit/errors.hpp"
#include "bailaudit/kernels/l2.hpp"

namespace bailaudit::kernels {

namespace {

using KernelFn = double (*)(const float*, const float*, std::size_t) noexcept;

bool supported(L2Kernel k) noexcept {
  switch (k) {
    case L2Kernel::kScalar:
      return true;
    case L2Kernel::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case L2Kernel::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

KernelFn function_for(L2Kernel k) noexcept {
  switch (k) {
#if defined(__x86_64__) || defined(_M_X64)
    case L2Kernel::kAvx2: return &detail::squared_l2_avx2;
#endif
#if defined(__aarch64__)
    case L2Kernel::kNeon: return &detail::squared_l2_neon;
#endif
    default: return &detail::squared_l2_scalar;
  }
}

L2Kernel initial_kernel() noexcept {
  if (const char* env = std::getenv("BAILAUDIT_L2_KERNEL")) {
    const std::string want(env);
    for (L2Kernel k : {L2Kernel::kScalar, L2Kernel::kAvx2, L2Kernel::kNeon})
      if (want == to_string(k) && supported(k)) return k;
  }
  if (supported(L2Kernel::kAvx2)) return L2Kernel::kAvx2;
  if (supported(L2Kernel::kNeon)) return L2Kernel::kNeon;
  return L2Kernel::kScalar;
}

std::atomic<L2Kernel>& active() noexcept {
  static std::atomic<L2Kernel> kernel{initial_kernel()};
  return kernel;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw ConfigError("vector dimensions differ: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

std::string_view to_string(L2Kernel k) noexcept {
  switch (k) {
    case L2Kernel::kScalar: return "scalar";
    case L2Kernel::kAvx2: return "avx2";
    case L2Kernel::kNeon: return "neon";
  }
  return "?";
}

std::vector<L2Kernel> available_l2_kernels() {
  std::vector<L2Kernel> out;
  for (L2Kernel k : {L2Kernel::kScalar, L2Kernel::kAvx2, L2Kernel::kNeon})
    if (supported(k)) out.push_back(k);
  return out;
}

L2Kernel active_l2_kernel() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_l2_kernel(L2Kernel k) {
  if (!supported(k))
    throw ConfigError("L2 kernel '" + std::string(to_string(k)) + "' is not available on this CPU");
  active().store(k, std::memory_order_relaxed);
}

double squared_l2(L2Kernel k, std::span<const float> a, std::span<const float> b) {
  check_sizes(a.size(), b.size());
  if (!supported(k)) k = L2Kernel::kScalar;
  return function_for(k)(a.data(), b.data(), a.size());
}

double squared_l2(std::span<const float> a, std::span<const float> b) {
  return squared_l2(active_l2_kernel(), a, b);
}

void squared_l2_rows(L2Kernel k, std::span<const float> query, std::span<const float> rows,
                     std::span<double> out) {
  const std::size_t dim = query.size();
  if (dim == 0) {
    if (!rows.empty()) throw ConfigError("zero-dimension query against non-empty rows");
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (rows.size() != dim * out.size())
    throw ConfigError("row block size does not match dimension x output count");
  if (!supported(k)) k = L2Kernel::kScalar;
  const KernelFn fn = function_for(k);
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = fn(query.data(), rows.data() + r * dim, dim);
}

void squared_l2_rows(std::span<const float> query, std::span<const float> rows,
                     std::span<double> out) {
  squared_l2_rows(active_l2_kernel(), query, rows, out);
}

}  // namespace bailaudit::kernels
