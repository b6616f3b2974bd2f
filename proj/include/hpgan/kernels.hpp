#pragma once

// Vector kernels used by the dense-tensor ops. Each kernel has a scalar
// reference implementation plus SIMD variants; the active variant is chosen
// once at startup from the host CPU features and can be overridden with
// HPGAN_SIMD=scalar|avx2|neon or set_backend().

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace hpgan::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view backend_name(Backend b);

// Backends compiled in and supported by this CPU, scalar first.
std::vector<Backend> available_backends();

Backend active_backend();

// Throws ConfigError if `b` is not available on this host.
void set_backend(Backend b);

// Scoped backend override, for tests.
class BackendGuard {
 public:
  explicit BackendGuard(Backend b) : previous_(active_backend()) { set_backend(b); }
  ~BackendGuard() { set_backend(previous_); }
  BackendGuard(const BackendGuard&) = delete;
  BackendGuard& operator=(const BackendGuard&) = delete;

 private:
  Backend previous_;
};

// sum_i x[i] * y[i]
double dot(const double* x, const double* y, std::size_t n);

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// sum_i (x[i] - y[i])^2
double sq_diff_sum(const double* x, const double* y, std::size_t n);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return dot(x.data(), y.data(), x.size());
}

// Per-backend entry points, exposed so equivalence tests can call every
// variant directly regardless of which one is active.
namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
double sq_diff_sum(const double* x, const double* y, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define HPGAN_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
double sq_diff_sum(const double* x, const double* y, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__) && defined(__ARM_NEON)
#define HPGAN_HAVE_NEON_KERNELS 1
namespace neon {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
double sq_diff_sum(const double* x, const double* y, std::size_t n);
}  // namespace neon
#endif

}  // namespace hpgan::kernels
