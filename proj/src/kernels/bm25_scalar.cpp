#include "textbook/kernels.hpp"

namespace textbook::kernels {

void bm25_accumulate_scalar(const double* tf, const double* length_norm, double idf, double k1_plus_1,
                            double* scores, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    const double numerator = tf[i] * k1_plus_1;
    const double denominator = tf[i] + length_norm[i];
    scores[i] += idf * (numerator / denominator);
  }
}

}  // namespace textbook::kernels
