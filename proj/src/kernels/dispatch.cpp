#include <atomic>
#include <cstdlib>
#include <string>

#include "hpgan/error.hpp"
#include "hpgan/kernels.hpp"

namespace hpgan::kernels {

namespace {

struct KernelTable {
  Backend backend;
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*sq_diff_sum)(const double*, const double*, std::size_t);
};

constexpr KernelTable kScalarTable{Backend::kScalar, &scalar::dot, &scalar::axpy,
                                   &scalar::sq_diff_sum};
#if defined(HPGAN_HAVE_AVX2_KERNELS)
constexpr KernelTable kAvx2Table{Backend::kAvx2, &avx2::dot, &avx2::axpy, &avx2::sq_diff_sum};
#endif
#if defined(HPGAN_HAVE_NEON_KERNELS)
constexpr KernelTable kNeonTable{Backend::kNeon, &neon::dot, &neon::axpy, &neon::sq_diff_sum};
#endif

bool host_supports(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(HPGAN_HAVE_AVX2_KERNELS) && defined(__GNUC__)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::kNeon:
#if defined(HPGAN_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* table_for(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return &kScalarTable;
#if defined(HPGAN_HAVE_AVX2_KERNELS)
    case Backend::kAvx2:
      return &kAvx2Table;
#endif
#if defined(HPGAN_HAVE_NEON_KERNELS)
    case Backend::kNeon:
      return &kNeonTable;
#endif
    default:
      return nullptr;
  }
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("HPGAN_SIMD")) {
    const std::string want(env);
    for (Backend b : available_backends()) {
      if (backend_name(b) == want) return table_for(b);
    }
  }
  const auto backends = available_backends();
  return table_for(backends.back());
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
    if (table_for(b) != nullptr && host_supports(b)) out.push_back(b);
  }
  return out;
}

Backend active_backend() { return current().load(std::memory_order_acquire)->backend; }

void set_backend(Backend b) {
  const KernelTable* t = table_for(b);
  if (t == nullptr || !host_supports(b)) {
    throw ConfigError("SIMD backend '" + std::string(backend_name(b)) +
                      "' is not available on this host");
  }
  current().store(t, std::memory_order_release);
}

double dot(const double* x, const double* y, std::size_t n) {
  return current().load(std::memory_order_relaxed)->dot(x, y, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  current().load(std::memory_order_relaxed)->axpy(a, x, y, n);
}

double sq_diff_sum(const double* x, const double* y, std::size_t n) {
  return current().load(std::memory_order_relaxed)->sq_diff_sum(x, y, n);
}

}  // namespace hpgan::kernels
