#pragma once

// Phonetic correction against a domain context: spans of the hypothesis whose
// phonetic form lies within a normalized edit-distance threshold of a context
// phrase are replaced by that phrase.

#include <algorithm>
#include <array>
#include <istream>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "phoco/distance.hpp"
#include "phoco/normalizer.hpp"
#include "phoco/phonetics.hpp"
#include "phoco/utf8.hpp"

namespace phoco {

enum class Selector { Win, Let };

inline constexpr std::array<Selector, 2> kAllSelectors = {Selector::Win, Selector::Let};

inline std::string_view to_string(Selector sel) { return sel == Selector::Win ? "win" : "let"; }

inline Selector parse_selector(std::string_view name) {
  if (name == "win" || name == "Win" || name == "WIN") return Selector::Win;
  if (name == "let" || name == "Let" || name == "LET") return Selector::Let;
  throw std::invalid_argument("unknown selector '" + std::string(name) + "' (expected win or let)");
}

struct PhocoConfig {
  double threshold = 0.3;
  Representation rep = Representation::Plain;
  Selector selector = Selector::Win;

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw std::invalid_argument("threshold must lie in [0, 1], got " + std::to_string(threshold));
    }
  }

  friend bool operator==(const PhocoConfig&, const PhocoConfig&) = default;
};

// Distances are ratios of small integers; grid thresholds such as 3 * 0.05
// are not exactly representable, so comparisons carry a small slack.
inline constexpr double kThresholdSlack = 1e-9;

inline bool within_threshold(double distance, double threshold) {
  return distance <= threshold + kThresholdSlack;
}

// A span [start_token, end_token) of the hypothesis matched to a context
// phrase. Used both for scored candidates and for accepted replacements.
struct Replacement {
  std::size_t start_token = 0;
  std::size_t end_token = 0;
  std::string phrase;
  double distance = 0.0;

  std::size_t width() const { return end_token - start_token; }
  friend bool operator==(const Replacement&, const Replacement&) = default;
};

class Context {
 public:
  Context() : Context(std::vector<std::string>{}) {}

  // Phrases must already be normalized. Duplicates are dropped.
  explicit Context(std::vector<std::string> phrases,
                   const Phonetics& phonetics = Phonetics::defaults())
      : phonetics_(phonetics) {
    const NormRules bare;
    std::unordered_set<std::string> seen;
    for (auto& p : phrases) {
      if (p.empty()) throw std::invalid_argument("context phrase is empty");
      if (bare.apply(p) != p) {
        throw std::invalid_argument("context phrase '" + p + "' is not normalized");
      }
      if (!seen.insert(p).second) continue;
      Entry e;
      e.token_count = split_tokens(p).size();
      for (auto rep : kAllRepresentations) {
        e.phonetic[static_cast<std::size_t>(rep)] = phonetics_.phonemize32(p, rep);
      }
      e.text = std::move(p);
      entries_.push_back(std::move(e));
    }
  }

  // One phrase per line; blank lines and `#` comments are skipped.
  static Context parse(std::istream& in, const Phonetics& phonetics = Phonetics::defaults()) {
    std::vector<std::string> phrases;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      phrases.push_back(line);
    }
    return Context(std::move(phrases), phonetics);
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::string& phrase(std::size_t i) const { return entries_[i].text; }
  std::size_t token_count(std::size_t i) const { return entries_[i].token_count; }
  const std::u32string& phonetic(std::size_t i, Representation rep) const {
    return entries_[i].phonetic[static_cast<std::size_t>(rep)];
  }
  const Phonetics& phonetics() const { return phonetics_; }

  std::vector<std::string> phrases() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.text);
    return out;
  }

 private:
  struct Entry {
    std::string text;
    std::size_t token_count = 0;
    std::array<std::u32string, 3> phonetic;
  };

  Phonetics phonetics_;
  std::vector<Entry> entries_;
};

// Hypothesis tokens and their phonetic forms joined by single spaces.
// begin[i]/end[i] index token i inside `joined`.
struct PhoneticTokens {
  std::vector<std::string> tokens;
  std::u32string joined;
  std::vector<std::size_t> begin;
  std::vector<std::size_t> end;

  PhoneticTokens(std::string_view hypothesis, const Phonetics& phonetics, Representation rep)
      : tokens(split_tokens(hypothesis)) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i > 0) joined.push_back(U' ');
      begin.push_back(joined.size());
      joined += phonetics.phonemize32(tokens[i], rep);
      end.push_back(joined.size());
    }
  }

  std::size_t size() const { return tokens.size(); }

  std::u32string_view span(std::size_t first, std::size_t last) const {
    return std::u32string_view(joined).substr(begin[first], end[last - 1] - begin[first]);
  }
};

namespace detail {

inline std::vector<std::size_t> window_widths(std::size_t phrase_tokens) {
  std::vector<std::size_t> widths = {std::max<std::size_t>(1, phrase_tokens - 1), phrase_tokens,
                                     phrase_tokens + 1};
  widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
  return widths;
}

inline std::vector<Replacement> score_win(const PhoneticTokens& hyp, const Context& ctx,
                                          Representation rep, double threshold) {
  std::vector<Replacement> out;
  const std::size_t m = hyp.size();
  for (std::size_t p = 0; p < ctx.size(); ++p) {
    const auto& target = ctx.phonetic(p, rep);
    for (std::size_t w : window_widths(ctx.token_count(p))) {
      if (w > m) continue;
      for (std::size_t s = 0; s + w <= m; ++s) {
        const double d = normalized_distance(hyp.span(s, s + w), target);
        if (within_threshold(d, threshold)) out.push_back({s, s + w, ctx.phrase(p), d});
      }
    }
  }
  return out;
}

inline constexpr std::size_t kLetSlack = 3;

inline std::vector<Replacement> score_let(const PhoneticTokens& hyp, const Context& ctx,
                                          Representation rep, double threshold) {
  std::vector<Replacement> out;
  const auto& text = hyp.joined;
  for (std::size_t s = 0; s < hyp.size(); ++s) {
    const std::size_t origin = hyp.begin[s];
    for (std::size_t p = 0; p < ctx.size(); ++p) {
      const auto& target = ctx.phonetic(p, rep);
      const std::size_t limit = std::min(target.size() + kLetSlack, text.size() - origin);
      if (limit == 0) continue;
      IncrementalLevenshtein grow(target);
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_len = 0;
      for (std::size_t k = 1; k <= limit; ++k) {
        grow.push(text[origin + k - 1]);
        const double d = grow.normalized();
        if (d < best) {
          best = d;
          best_len = k;
        }
      }
      // snap the segment end forward to the end of the token it stops in
      const std::size_t last = origin + best_len - 1;
      const auto stop = std::upper_bound(hyp.begin.begin(), hyp.begin.end(), last);
      const auto end_token = static_cast<std::size_t>(stop - hyp.begin.begin());
      const double d = normalized_distance(hyp.span(s, end_token), target);
      if (within_threshold(d, threshold)) out.push_back({s, end_token, ctx.phrase(p), d});
    }
  }
  return out;
}

}  // namespace detail

// All candidates within `threshold`, before overlap resolution. The score of
// a (span, phrase) pair does not depend on the threshold.
inline std::vector<Replacement> score_candidates(std::string_view hypothesis, const Context& ctx,
                                                 Representation rep, Selector selector,
                                                 double threshold) {
  if (ctx.empty()) return {};
  const PhoneticTokens hyp(hypothesis, ctx.phonetics(), rep);
  return selector == Selector::Win ? detail::score_win(hyp, ctx, rep, threshold)
                                   : detail::score_let(hyp, ctx, rep, threshold);
}

inline std::vector<Replacement> win_candidates(std::string_view hypothesis, const Context& ctx,
                                               const PhocoConfig& cfg) {
  cfg.validate();
  return score_candidates(hypothesis, ctx, cfg.rep, Selector::Win, cfg.threshold);
}

inline std::vector<Replacement> let_candidates(std::string_view hypothesis, const Context& ctx,
                                               const PhocoConfig& cfg) {
  cfg.validate();
  return score_candidates(hypothesis, ctx, cfg.rep, Selector::Let, cfg.threshold);
}

inline std::vector<Replacement> filter_candidates(const std::vector<Replacement>& candidates,
                                                  double threshold) {
  std::vector<Replacement> out;
  for (const auto& c : candidates) {
    if (within_threshold(c.distance, threshold)) out.push_back(c);
  }
  return out;
}

// Greedy: ascending distance, then wider span, then earlier start, then
// phrase order. Kept spans are pairwise disjoint and returned by start.
inline std::vector<Replacement> resolve_overlaps(std::vector<Replacement> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Replacement& a, const Replacement& b) {
    return std::make_tuple(a.distance, b.width(), a.start_token, std::string_view(a.phrase)) <
           std::make_tuple(b.distance, a.width(), b.start_token, std::string_view(b.phrase));
  });
  std::vector<Replacement> kept;
  std::vector<bool> taken;
  for (auto& c : candidates) {
    if (taken.size() < c.end_token) taken.resize(c.end_token, false);
    const bool free = std::none_of(taken.begin() + static_cast<std::ptrdiff_t>(c.start_token),
                                   taken.begin() + static_cast<std::ptrdiff_t>(c.end_token),
                                   [](bool b) { return b; });
    if (!free) continue;
    std::fill(taken.begin() + static_cast<std::ptrdiff_t>(c.start_token),
              taken.begin() + static_cast<std::ptrdiff_t>(c.end_token), true);
    kept.push_back(std::move(c));
  }
  std::sort(kept.begin(), kept.end(),
            [](const Replacement& a, const Replacement& b) { return a.start_token < b.start_token; });
  return kept;
}

// `replacements` must be disjoint and sorted by start.
inline std::string apply_replacements(const std::vector<std::string>& tokens,
                                      const std::vector<Replacement>& replacements) {
  std::vector<std::string_view> out;
  std::size_t next = 0;
  for (const auto& r : replacements) {
    for (; next < r.start_token; ++next) out.push_back(tokens[next]);
    out.push_back(r.phrase);
    next = r.end_token;
  }
  for (; next < tokens.size(); ++next) out.push_back(tokens[next]);
  return join_tokens(out);
}

struct CorrectionResult {
  std::string text;
  std::vector<Replacement> replacements;
};

inline CorrectionResult correct(std::string_view hypothesis, const Context& ctx,
                                const PhocoConfig& cfg) {
  cfg.validate();
  auto kept = resolve_overlaps(
      score_candidates(hypothesis, ctx, cfg.rep, cfg.selector, cfg.threshold));
  if (kept.empty()) return {std::string(hypothesis), {}};
  return {apply_replacements(split_tokens(hypothesis), kept), std::move(kept)};
}

}  // namespace phoco
