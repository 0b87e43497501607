#include <cstdlib>
#include <string>

#include "cwm/simd/kernels.hpp"

namespace cwm::simd {

#if defined(CWM_HAVE_AVX2_KERNELS)
const KernelTable& avx2_kernel_table();
#endif

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

const KernelTable* avx2_kernels() {
#if defined(CWM_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() {
  static const KernelTable& chosen = []() -> const KernelTable& {
    const char* env = std::getenv("CWM_SIMD");
    if (env != nullptr && std::string(env) == "scalar") return scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return *t;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace cwm::simd
