#include <immintrin.h>

#include "textbook/kernels.hpp"

namespace textbook::kernels {

void bm25_accumulate_avx2(const double* tf, const double* length_norm, double idf, double k1_plus_1,
                          double* scores, std::size_t n) noexcept {
  const __m256d v_idf = _mm256_set1_pd(idf);
  const __m256d v_k1p1 = _mm256_set1_pd(k1_plus_1);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v_tf = _mm256_loadu_pd(tf + i);
    const __m256d numerator = _mm256_mul_pd(v_tf, v_k1p1);
    const __m256d denominator = _mm256_add_pd(v_tf, _mm256_loadu_pd(length_norm + i));
    const __m256d term = _mm256_mul_pd(v_idf, _mm256_div_pd(numerator, denominator));
    _mm256_storeu_pd(scores + i, _mm256_add_pd(_mm256_loadu_pd(scores + i), term));
  }
  bm25_accumulate_scalar(tf + i, length_norm + i, idf, k1_plus_1, scores + i, n - i);
}

}  // namespace textbook::kernels
