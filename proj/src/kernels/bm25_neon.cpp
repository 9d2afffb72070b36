#include <arm_neon.h>

#include "textbook/kernels.hpp"

namespace textbook::kernels {

void bm25_accumulate_neon(const double* tf, const double* length_norm, double idf, double k1_plus_1,
                          double* scores, std::size_t n) noexcept {
  const float64x2_t v_idf = vdupq_n_f64(idf);
  const float64x2_t v_k1p1 = vdupq_n_f64(k1_plus_1);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v_tf = vld1q_f64(tf + i);
    const float64x2_t numerator = vmulq_f64(v_tf, v_k1p1);
    const float64x2_t denominator = vaddq_f64(v_tf, vld1q_f64(length_norm + i));
    const float64x2_t term = vmulq_f64(v_idf, vdivq_f64(numerator, denominator));
    vst1q_f64(scores + i, vaddq_f64(vld1q_f64(scores + i), term));
  }
  bm25_accumulate_scalar(tf + i, length_norm + i, idf, k1_plus_1, scores + i, n - i);
}

}  // namespace textbook::kernels
