#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Squared Euclidean distance kernels over float32 data with float64
// accumulation. The scalar variant is the reference; vector variants must
// agree with it to within 1e-12 relative and are selected at runtime.
namespace bailaudit::kernels {

enum class L2Kernel { kScalar, kAvx2, kNeon };

std::string_view to_string(L2Kernel k) noexcept;

// Kernels this binary was built with AND the running CPU supports.
std::vector<L2Kernel> available_l2_kernels();

// The kernel used by squared_l2(). Defaults to the widest available one; the
// environment variable BAILAUDIT_L2_KERNEL=scalar|avx2|neon overrides it.
L2Kernel active_l2_kernel() noexcept;
// Throws ConfigError if the kernel is not available.
void set_active_l2_kernel(L2Kernel k);

double squared_l2(std::span<const float> a, std::span<const float> b);
double squared_l2(L2Kernel k, std::span<const float> a, std::span<const float> b);

// out[r] = squared_l2(query, rows[r*dim .. (r+1)*dim)).
void squared_l2_rows(std::span<const float> query, std::span<const float> rows,
                     std::span<double> out);
void squared_l2_rows(L2Kernel k, std::span<const float> query, std::span<const float> rows,
                     std::span<double> out);

namespace detail {
double squared_l2_scalar(const float* a, const float* b, std::size_t n) noexcept;
#if defined(__x86_64__) || defined(_M_X64)
double squared_l2_avx2(const float* a, const float* b, std::size_t n) noexcept;
#endif
#if defined(__aarch64__)
double squared_l2_neon(const float* a, const float* b, std::size_t n) noexcept;
#endif
}  // namespace detail

}  // namespace bailaudit::kernels
