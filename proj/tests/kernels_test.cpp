#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "textbook/kernels.hpp"

namespace textbook::kernels {
namespace {

TEST(Kernels, ScalarIsAlwaysAvailableAndFirst) {
  const auto isas = available_isas();
  ASSERT_FALSE(isas.empty());
  EXPECT_EQ(isas.front(), Isa::scalar);
}

TEST(Kernels, ScalarMatchesTheFormula) {
  const double tf[] = {0, 1, 3};
  const double norm[] = {1.5, 0.9, 2.0};
  double scores[] = {0.25, 0.0, 1.0};
  bm25_accumulate_scalar(tf, norm, 2.0, 2.2, scores, 3);
  EXPECT_DOUBLE_EQ(scores[0], 0.25);
  EXPECT_DOUBLE_EQ(scores[1], 2.0 * (1 * 2.2) / (1 + 0.9));
  EXPECT_DOUBLE_EQ(scores[2], 1.0 + 2.0 * (3 * 2.2) / (3 + 2.0));
}

// Every variant must produce the same bits as the scalar reference, for all
// lengths including the vector tails.
TEST(Kernels, VariantsAreBitIdenticalToScalar) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> tf_pick(0, 9);
  std::uniform_real_distribution<double> norm_pick(0.3, 4.0);
  std::uniform_real_distribution<double> idf_pick(0.01, 6.0);
  for (const Isa isa : available_isas()) {
    const auto fn = bm25_accumulate_for(isa);
    for (std::size_t n = 0; n < 67; ++n) {
      std::vector<double> tf(n), norm(n), base(n);
      for (std::size_t i = 0; i < n; ++i) {
        tf[i] = tf_pick(rng);
        norm[i] = norm_pick(rng);
        base[i] = norm_pick(rng);
      }
      const double idf = idf_pick(rng);
      std::vector<double> expected = base, got = base;
      bm25_accumulate_scalar(tf.data(), norm.data(), idf, 2.2, expected.data(), n);
      fn(tf.data(), norm.data(), idf, 2.2, got.data(), n);
      ASSERT_EQ(0, std::memcmp(expected.data(), got.data(), n * sizeof(double))) << to_string(isa) << " n=" << n;
    }
  }
}

TEST(Kernels, ActiveIsaIsOneOfTheAvailable) {
  const auto isas = available_isas();
  EXPECT_NE(std::find(isas.begin(), isas.end(), active_isa()), isas.end());
}

}  // namespace
}  // namespace textbook::kernels
