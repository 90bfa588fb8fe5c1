#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phoco/utf8.hpp"

namespace phoco {

// Unit-cost edit distance between two random-access sequences.
template <typename SeqA, typename SeqB>
std::size_t edit_distance(const SeqA& a, const SeqB& b) {
  const std::size_t m = std::size(a);
  const std::size_t n = std::size(b);
  if (m == 0) return n;
  if (n == 0) return m;
  std::vector<std::size_t> row(n + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= m; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[n];
}

inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  return edit_distance(a, b);
}

// Over Unicode scalar values, not bytes.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return edit_distance(utf8_decode(a), utf8_decode(b));
}

// levenshtein / max length, in [0, 1]; two empty strings are at distance 0.
inline double normalized_distance(std::u32string_view a, std::u32string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

inline double normalized_distance(std::string_view a, std::string_view b) {
  return normalized_distance(utf8_decode(a), utf8_decode(b));
}

// Distance from a fixed pattern to a text that grows one character at a time.
// Each push costs O(|pattern|).
class IncrementalLevenshtein {
 public:
  explicit IncrementalLevenshtein(std::u32string_view pattern)
      : pattern_(pattern), column_(pattern.size() + 1) {
    std::iota(column_.begin(), column_.end(), std::size_t{0});
  }

  void push(char32_t c) {
    ++length_;
    std::size_t diag = column_[0];
    column_[0] = length_;
    for (std::size_t i = 1; i <= pattern_.size(); ++i) {
      const std::size_t left = column_[i];
      const std::size_t sub = diag + (pattern_[i - 1] == c ? 0 : 1);
      column_[i] = std::min({sub, left + 1, column_[i - 1] + 1});
      diag = left;
    }
  }

  std::size_t distance() const { return column_.back(); }
  std::size_t text_length() const { return length_; }

  double normalized() const {
    const std::size_t longest = std::max(pattern_.size(), length_);
    return longest == 0 ? 0.0 : static_cast<double>(distance()) / static_cast<double>(longest);
  }

 private:
  std::u32string_view pattern_;
  std::vector<std::size_t> column_;
  std::size_t length_ = 0;
};

struct WerBreakdown {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_len = 0;
  double wer = 0.0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
};

// Token-level alignment; backtrace prefers match/substitution, then deletion,
// then insertion. Throws std::invalid_argument on an empty reference.
inline WerBreakdown wer(std::span<const std::string> reference,
                        std::span<const std::string> hypothesis) {
  if (reference.empty()) throw std::invalid_argument("wer: empty reference");
  const std::size_t m = reference.size();
  const std::size_t n = hypothesis.size();
  std::vector<std::size_t> cost((m + 1) * (n + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (n + 1) + j]; };
  for (std::size_t i = 0; i <= m; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= n; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t sub = at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      at(i, j) = std::min({sub, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  WerBreakdown out;
  out.ref_len = m;
  std::size_t i = m;
  std::size_t j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++out.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++out.deletions;
      --i;
    } else {
      ++out.insertions;
      --j;
    }
  }
  out.wer = static_cast<double>(out.errors()) / static_cast<double>(m);
  return out;
}

inline WerBreakdown wer(std::string_view reference, std::string_view hypothesis) {
  const auto ref = split_tokens(reference);
  const auto hyp = split_tokens(hypothesis);
  return wer(std::span<const std::string>(ref), std::span<const std::string>(hyp));
}

}  // namespace phoco
