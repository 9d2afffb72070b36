#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Dense BM25 accumulation kernels. Every variant performs the same IEEE
// operations per element in the same order, so results are bit-identical:
//
//   scores[i] += idf * ((tf[i] * k1_plus_1) / (tf[i] + length_norm[i]))
//
// where length_norm[i] = k1 * (1 - b + b * len_i / avg_len).
namespace textbook::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa) noexcept;

using Bm25AccumulateFn = void (*)(const double* tf, const double* length_norm, double idf, double k1_plus_1,
                                  double* scores, std::size_t n) noexcept;

void bm25_accumulate_scalar(const double* tf, const double* length_norm, double idf, double k1_plus_1,
                            double* scores, std::size_t n) noexcept;
#if defined(__x86_64__) || defined(_M_X64)
void bm25_accumulate_avx2(const double* tf, const double* length_norm, double idf, double k1_plus_1,
                          double* scores, std::size_t n) noexcept;
#endif
#if defined(__aarch64__)
void bm25_accumulate_neon(const double* tf, const double* length_norm, double idf, double k1_plus_1,
                          double* scores, std::size_t n) noexcept;
#endif

// Variants compiled in and supported by the running CPU; scalar is first.
std::vector<Isa> available_isas();

// Best available variant, unless TEXTBOOK_FORCE_SCALAR is set to a non-empty
// value other than "0". Resolved once.
Isa active_isa();

Bm25AccumulateFn bm25_accumulate_for(Isa isa);

inline void bm25_accumulate(std::span<const double> tf, std::span<const double> length_norm, double idf,
                            double k1_plus_1, std::span<double> scores) {
  bm25_accumulate_for(active_isa())(tf.data(), length_norm.data(), idf, k1_plus_1, scores.data(), scores.size());
}

}  // namespace textbook::kernels
