#include <cstdlib>
#include <string>

#include "textbook/kernels.hpp"

namespace textbook::kernels {

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> isas{Isa::scalar};
#if defined(TEXTBOOK_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) isas.push_back(Isa::avx2);
#endif
#if defined(TEXTBOOK_HAVE_NEON)
  isas.push_back(Isa::neon);
#endif
  return isas;
}

Isa active_isa() {
  static const Isa isa = [] {
    if (const char* force = std::getenv("TEXTBOOK_FORCE_SCALAR")) {
      const std::string value = force;
      if (!value.empty() && value != "0") return Isa::scalar;
    }
    return available_isas().back();
  }();
  return isa;
}

Bm25AccumulateFn bm25_accumulate_for(Isa isa) {
  switch (isa) {
#if defined(TEXTBOOK_HAVE_AVX2)
    case Isa::avx2: return &bm25_accumulate_avx2;
#endif
#if defined(TEXTBOOK_HAVE_NEON)
    case Isa::neon: return &bm25_accumulate_neon;
#endif
    default: return &bm25_accumulate_scalar;
  }
}

}  // namespace textbook::kernels
