#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "phoco/distance.hpp"
#include "phoco/random.hpp"
#include "reference_oracles.hpp"

namespace phoco {
namespace {

using Tokens = std::vector<std::string>;

TEST(Levenshtein, Examples) {
  EXPECT_EQ(levenshtein(std::string_view(""), std::string_view("abc")), 3u);
  EXPECT_EQ(levenshtein(std::string_view("gato"), std::string_view("kato")), 1u);
  EXPECT_EQ(levenshtein(std::string_view("coca cola"), std::string_view("coca gola")), 1u);
}

TEST(Levenshtein, CountsCodePointsNotBytes) {
  EXPECT_EQ(levenshtein(std::string_view("año"), std::string_view("ano")), 1u);
  EXPECT_EQ(levenshtein(std::string_view("tʃ"), std::string_view("")), 2u);
}

TEST(NormalizedDistance, Examples) {
  EXPECT_DOUBLE_EQ(normalized_distance(std::string_view("abc"), std::string_view("abc")), 0.0);
  EXPECT_DOUBLE_EQ(normalized_distance(std::string_view("ab"), std::string_view("")), 1.0);
  EXPECT_DOUBLE_EQ(normalized_distance(std::string_view("coca cola"), std::string_view("coca gola")),
                   1.0 / 9.0);
  EXPECT_DOUBLE_EQ(normalized_distance(std::string_view(""), std::string_view("")), 0.0);
}

TEST(Levenshtein, MatchesRecursionOracleExhaustivelyOnShortStrings) {
  const auto words = testing_oracle::all_strings("abc", 4);
  for (const auto& a : words) {
    for (const auto& b : words) {
      ASSERT_EQ(levenshtein(std::string_view(a), std::string_view(b)),
                testing_oracle::naive_levenshtein(a, b))
          << a << " / " << b;
    }
  }
}

TEST(LevenshteinProperty, MetricAxioms) {
  Rng rng(3);
  auto draw = [&rng] {
    std::string s;
    for (std::uint64_t i = 0, n = rng.below(9); i < n; ++i) s.push_back("abcd"[rng.below(4)]);
    return s;
  };
  for (int trial = 0; trial < 3000; ++trial) {
    const auto a = draw(), b = draw(), c = draw();
    const auto ab = levenshtein(std::string_view(a), std::string_view(b));
    ASSERT_EQ(ab, levenshtein(std::string_view(b), std::string_view(a)));
    ASSERT_EQ(ab == 0, a == b);
    ASSERT_LE(levenshtein(std::string_view(a), std::string_view(c)),
              ab + levenshtein(std::string_view(b), std::string_view(c)));
    const double nd = normalized_distance(std::string_view(a), std::string_view(b));
    ASSERT_GE(nd, 0.0);
    ASSERT_LE(nd, 1.0);
    ASSERT_EQ(nd == 0.0, a == b);
  }
}

TEST(IncrementalLevenshtein, AgreesWithFullRecomputation) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::u32string pattern, text;
    for (std::uint64_t i = 0, n = rng.below(8); i < n; ++i) pattern.push_back(U"abc"[rng.below(3)]);
    for (std::uint64_t i = 0, n = rng.below(12); i < n; ++i) text.push_back(U"abc"[rng.below(3)]);
    IncrementalLevenshtein grow(pattern);
    for (std::size_t k = 0; k < text.size(); ++k) {
      grow.push(text[k]);
      const auto prefix = std::u32string_view(text).substr(0, k + 1);
      ASSERT_EQ(grow.distance(), levenshtein(pattern, prefix));
      ASSERT_DOUBLE_EQ(grow.normalized(), normalized_distance(pattern, prefix));
    }
  }
}

TEST(Wer, Identity) {
  const Tokens ref = {"quiero", "dos", "coca", "colas"};
  const auto w = wer(ref, ref);
  EXPECT_EQ(w.errors(), 0u);
  EXPECT_DOUBLE_EQ(w.wer, 0.0);
}

TEST(Wer, SingleSubstitution) {
  const Tokens ref = {"quiero", "dos", "coca", "colas"};
  const Tokens hyp = {"quiero", "los", "coca", "colas"};
  const auto w = wer(ref, hyp);
  EXPECT_EQ(w.substitutions, 1u);
  EXPECT_EQ(w.deletions, 0u);
  EXPECT_EQ(w.insertions, 0u);
  EXPECT_DOUBLE_EQ(w.wer, 0.25);
}

TEST(Wer, FullDeletion) {
  const auto w = wer(Tokens{"hola"}, Tokens{});
  EXPECT_EQ(w.deletions, 1u);
  EXPECT_DOUBLE_EQ(w.wer, 1.0);
}

TEST(Wer, CanExceedOne) {
  const auto w = wer(Tokens{"a"}, Tokens{"b", "c", "d"});
  EXPECT_EQ(w.substitutions, 1u);
  EXPECT_EQ(w.insertions, 2u);
  EXPECT_DOUBLE_EQ(w.wer, 3.0);
}

TEST(Wer, PrefersSubstitutionOverInsertDeletePairs) {
  const auto w = wer(Tokens{"a", "b"}, Tokens{"b", "a"});
  EXPECT_EQ(w.errors(), 2u);
  EXPECT_EQ(w.substitutions, 2u);
}

TEST(Wer, EmptyReferenceThrows) {
  EXPECT_THROW(wer(Tokens{}, Tokens{"a"}), std::invalid_argument);
  EXPECT_THROW(wer(std::string_view(""), std::string_view("a")), std::invalid_argument);
}

TEST(WerProperty, BreakdownIsConsistentWithEditDistance) {
  Rng rng(9);
  auto draw = [&rng](std::size_t min_len) {
    Tokens t;
    for (std::uint64_t i = 0, n = min_len + rng.below(7); i < n; ++i) {
      t.push_back(std::string(1, "wxyz"[rng.below(4)]));
    }
    return t;
  };
  for (int trial = 0; trial < 2000; ++trial) {
    const auto ref = draw(1), hyp = draw(0);
    const auto w = wer(ref, hyp);
    ASSERT_EQ(w.errors(), edit_distance(ref, hyp));
    ASSERT_EQ(ref.size() - w.deletions + w.insertions, hyp.size());
    ASSERT_DOUBLE_EQ(w.wer, double(w.errors()) / double(ref.size()));
    ASSERT_EQ(wer(ref, ref).errors(), 0u);
    auto ref2 = ref, hyp2 = hyp;
    ref2.push_back("tail");
    hyp2.push_back("tail");
    ASSERT_EQ(wer(ref2, hyp2).errors(), w.errors());
  }
}

}  // namespace
}  // namespace phoco
