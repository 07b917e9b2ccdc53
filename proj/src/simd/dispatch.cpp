#include <cstdlib>
#include <string>

#include "eitmc/errors.hpp"
#include "eitmc/simd.hpp"

namespace eitmc::simd {

#if defined(EITMC_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(EITMC_HAVE_AVX2)
  return &avx2_kernel_table();
#else
  return nullptr;
#endif
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(EITMC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) throw UnsupportedOperation("instruction set not available: " + std::string(isa_name(isa)));
  if (isa == Isa::avx2) return *avx2_kernels();
  return scalar_kernels();
}

const KernelTable& active() {
  static const KernelTable& table = [] () -> const KernelTable& {
    const char* forced = std::getenv("EITMC_ISA");
    if (forced != nullptr && std::string(forced) == "scalar") return scalar_kernels();
    if (isa_supported(Isa::avx2)) return *avx2_kernels();
    return scalar_kernels();
  }();
  return table;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace eitmc::simd
