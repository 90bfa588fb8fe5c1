#pragma once

// Rule-based grapheme-to-phoneme conversion for Mexican Spanish (seseo,
// yeismo). Three string spaces are supported: the normalized text itself,
// IPA, and an ASCII Worldbet-style alphabet.

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phoco/utf8.hpp"

namespace phoco {

enum class Representation { Plain, IPA, Wbet };

inline constexpr std::array<Representation, 3> kAllRepresentations = {
    Representation::Plain, Representation::IPA, Representation::Wbet};

inline std::string_view to_string(Representation rep) {
  switch (rep) {
    case Representation::Plain: return "plain";
    case Representation::IPA: return "ipa";
    case Representation::Wbet: return "wbet";
  }
  return "?";
}

inline Representation parse_representation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "plain") return Representation::Plain;
  if (lower == "ipa") return Representation::IPA;
  if (lower == "wbet") return Representation::Wbet;
  throw std::invalid_argument("unknown representation '" + std::string(name) +
                              "' (expected plain, ipa or wbet)");
}

// One rewrite rule. Pattern syntax in rule files:
//   [^]graphemes[lookahead-class]
// `^` anchors the rule to the start of a word; the optional bracketed class
// must match the character that follows the graphemes and is not consumed.
// A replacement of `∅` deletes the graphemes.
struct G2PRule {
  bool word_initial = false;
  std::u32string graphemes;
  std::u32string lookahead;
  std::u32string phones;

  bool matches(std::u32string_view word, std::size_t pos) const {
    if (word_initial && pos != 0) return false;
    if (word.size() - pos < graphemes.size()) return false;
    if (word.compare(pos, graphemes.size(), graphemes) != 0) return false;
    if (lookahead.empty()) return true;
    const std::size_t next = pos + graphemes.size();
    return next < word.size() && lookahead.find(word[next]) != std::u32string::npos;
  }

  static G2PRule parse(std::string_view pattern, std::string_view replacement) {
    G2PRule rule;
    std::u32string p = utf8_decode(pattern);
    if (!p.empty() && p.front() == U'^') {
      rule.word_initial = true;
      p.erase(0, 1);
    }
    const auto open = p.find(U'[');
    if (open != std::u32string::npos) {
      if (p.back() != U']' || open + 2 > p.size() - 1) {
        throw std::invalid_argument("malformed lookahead class in pattern '" +
                                    std::string(pattern) + "'");
      }
      rule.lookahead = p.substr(open + 1, p.size() - open - 2);
      p.erase(open);
    }
    if (p.empty()) {
      throw std::invalid_argument("pattern '" + std::string(pattern) + "' has no graphemes");
    }
    rule.graphemes = std::move(p);
    if (replacement != "∅") rule.phones = utf8_decode(replacement);
    return rule;
  }
};

class G2PRuleTable {
 public:
  // Validates that the table covers every letter the normalizer can emit and
  // that no rule is shadowed by an earlier, unconditional prefix rule.
  explicit G2PRuleTable(std::vector<G2PRule> rules) : rules_(std::move(rules)) {
    for (std::size_t j = 0; j < rules_.size(); ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        const auto& early = rules_[i];
        const auto& late = rules_[j];
        const bool prefix = late.graphemes.compare(0, early.graphemes.size(), early.graphemes) == 0;
        if (prefix && early.lookahead.empty() && (!early.word_initial || late.word_initial)) {
          throw std::invalid_argument("rule " + std::to_string(j + 1) + " ('" +
                                      utf8_encode(late.graphemes) + "') is shadowed by rule " +
                                      std::to_string(i + 1) + " ('" +
                                      utf8_encode(early.graphemes) + "')");
        }
      }
    }
    for (char32_t c : alphabet()) {
      const bool covered = std::any_of(rules_.begin(), rules_.end(), [c](const G2PRule& r) {
        return !r.word_initial && r.lookahead.empty() && r.graphemes.size() == 1 &&
               r.graphemes[0] == c;
      });
      if (!covered) {
        throw std::invalid_argument("rule table has no fallback rule for '" +
                                    utf8_encode(std::u32string(1, c)) + "'");
      }
    }
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      by_first_[rules_[i].graphemes.front()].push_back(i);
    }
  }

  static G2PRuleTable parse(std::istream& in) {
    std::vector<G2PRule> rules;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw std::invalid_argument("rule file line " + std::to_string(lineno) +
                                    ": expected pattern<TAB>replacement");
      }
      rules.push_back(G2PRule::parse(std::string_view(line).substr(0, tab),
                                     std::string_view(line).substr(tab + 1)));
    }
    return G2PRuleTable(std::move(rules));
  }

  static G2PRuleTable parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse(in);
  }

  // Letters the normalizer may emit.
  static const std::u32string& alphabet() {
    static const std::u32string kAlphabet = U"abcdefghijklmnopqrstuvwxyzáéíóúüñ";
    return kAlphabet;
  }

  const std::vector<G2PRule>& rules() const { return rules_; }

  // Single word, no spaces. Throws std::logic_error on a character the table
  // does not cover.
  std::u32string transcribe_word(std::u32string_view word) const {
    std::u32string out;
    std::size_t pos = 0;
    while (pos < word.size()) {
      const G2PRule* hit = nullptr;
      if (const auto it = by_first_.find(word[pos]); it != by_first_.end()) {
        for (std::size_t idx : it->second) {
          if (rules_[idx].matches(word, pos)) {
            hit = &rules_[idx];
            break;
          }
        }
      }
      if (hit == nullptr) {
        throw std::logic_error("no phonetic rule covers '" +
                               utf8_encode(std::u32string(1, word[pos])) + "' in '" +
                               utf8_encode(word) + "'");
      }
      out += hit->phones;
      pos += hit->graphemes.size();
    }
    return out;
  }

 private:
  std::vector<G2PRule> rules_;
  std::unordered_map<char32_t, std::vector<std::size_t>> by_first_;
};

// Default tables. Longer patterns come before their prefixes.
inline constexpr std::string_view kDefaultIpaRules =
    "ch\ttʃ\n"
    "ll\tʝ\n"
    "rr\tr\n"
    "^r\tr\n"
    "r\tɾ\n"
    "qu\tk\n"
    "q\tk\n"
    "gü\tgw\n"
    "gu[eiéí]\tg\n"
    "g[eiéí]\tx\n"
    "g\tg\n"
    "c[eiéí]\ts\n"
    "c\tk\n"
    "y[aeiouáéíóú]\tʝ\n"
    "y\ti\n"
    "h\t∅\n"
    "z\ts\n"
    "ñ\tɲ\n"
    "j\tx\n"
    "v\tb\n"
    "x\tks\n"
    "á\ta\n"
    "é\te\n"
    "í\ti\n"
    "ó\to\n"
    "ú\tu\n"
    "ü\tu\n"
    "a\ta\n"
    "b\tb\n"
    "d\td\n"
    "e\te\n"
    "f\tf\n"
    "i\ti\n"
    "k\tk\n"
    "l\tl\n"
    "m\tm\n"
    "n\tn\n"
    "o\to\n"
    "p\tp\n"
    "s\ts\n"
    "t\tt\n"
    "u\tu\n"
    "w\tw\n";

inline constexpr std::string_view kDefaultWbetRules =
    "ch\ttS\n"
    "ll\tjj\n"
    "rr\trr\n"
    "^r\trr\n"
    "r\tr(\n"
    "qu\tk\n"
    "q\tk\n"
    "gü\tgw\n"
    "gu[eiéí]\tg\n"
    "g[eiéí]\tx\n"
    "g\tg\n"
    "c[eiéí]\ts\n"
    "c\tk\n"
    "y[aeiouáéíóú]\tjj\n"
    "y\ti\n"
    "h\t∅\n"
    "z\ts\n"
    "ñ\tn~\n"
    "j\tx\n"
    "v\tb\n"
    "x\tks\n"
    "á\ta\n"
    "é\te\n"
    "í\ti\n"
    "ó\to\n"
    "ú\tu\n"
    "ü\tu\n"
    "a\ta\n"
    "b\tb\n"
    "d\td\n"
    "e\te\n"
    "f\tf\n"
    "i\ti\n"
    "k\tk\n"
    "l\tl\n"
    "m\tm\n"
    "n\tn\n"
    "o\to\n"
    "p\tp\n"
    "s\ts\n"
    "t\tt\n"
    "u\tu\n"
    "w\tw\n";

class Phonetics {
 public:
  Phonetics(G2PRuleTable ipa, G2PRuleTable wbet) : ipa_(std::move(ipa)), wbet_(std::move(wbet)) {}

  static const Phonetics& defaults() {
    static const Phonetics kDefault(G2PRuleTable::parse(kDefaultIpaRules),
                                    G2PRuleTable::parse(kDefaultWbetRules));
    return kDefault;
  }

  const G2PRuleTable& table(Representation rep) const {
    if (rep == Representation::Wbet) return wbet_;
    return ipa_;
  }

  // Word by word; single spaces between words are kept, so the output has
  // exactly as many separators as the input.
  std::u32string phonemize32(std::string_view text, Representation rep) const {
    std::u32string chars = utf8_decode(text);
    if (rep == Representation::Plain) return chars;
    const auto& tbl = table(rep);
    std::u32string out;
    out.reserve(chars.size() + 4);
    std::size_t i = 0;
    while (i <= chars.size()) {
      std::size_t j = i;
      while (j < chars.size() && chars[j] != U' ') ++j;
      out += tbl.transcribe_word(std::u32string_view(chars).substr(i, j - i));
      if (j < chars.size()) out.push_back(U' ');
      i = j + 1;
    }
    return out;
  }

  std::string phonemize(std::string_view text, Representation rep) const {
    if (rep == Representation::Plain) return std::string(text);
    return utf8_encode(phonemize32(text, rep));
  }

 private:
  G2PRuleTable ipa_;
  G2PRuleTable wbet_;
};

inline std::string phonemize(std::string_view text, Representation rep,
                             const Phonetics& phonetics = Phonetics::defaults()) {
  return phonetics.phonemize(text, rep);
}

}  // namespace phoco
