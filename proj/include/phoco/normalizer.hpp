#pragma once

// Spanish transcript normalization: lowercase, strip symbols, spell out
// numbers, expand abbreviations, collapse whitespace.

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phoco/utf8.hpp"

namespace phoco {

namespace detail {

inline bool is_spanish_letter(char32_t c) {
  if (c >= U'a' && c <= U'z') return true;
  switch (c) {
    case U'á': case U'é': case U'í': case U'ó': case U'ú': case U'ü': case U'ñ':
      return true;
    default:
      return false;
  }
}

inline char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + (U'a' - U'A');
  switch (c) {
    case U'Á': return U'á';
    case U'É': return U'é';
    case U'Í': return U'í';
    case U'Ó': return U'ó';
    case U'Ú': return U'ú';
    case U'Ü': return U'ü';
    case U'Ñ': return U'ñ';
    default: return c;
  }
}

inline std::string below_thousand(unsigned n, bool apocope) {
  static constexpr std::array<const char*, 30> kSmall = {
      "cero",       "uno",        "dos",        "tres",        "cuatro",
      "cinco",      "seis",       "siete",      "ocho",        "nueve",
      "diez",       "once",       "doce",       "trece",       "catorce",
      "quince",     "dieciséis",  "diecisiete", "dieciocho",   "diecinueve",
      "veinte",     "veintiuno",  "veintidós",  "veintitrés",  "veinticuatro",
      "veinticinco", "veintiséis", "veintisiete", "veintiocho", "veintinueve"};
  static constexpr std::array<const char*, 10> kTens = {
      "", "", "", "treinta", "cuarenta", "cincuenta", "sesenta", "setenta", "ochenta", "noventa"};
  static constexpr std::array<const char*, 10> kHundreds = {
      "",           "ciento",       "doscientos", "trescientos",  "cuatrocientos",
      "quinientos", "seiscientos",  "setecientos", "ochocientos", "novecientos"};

  if (n == 100) return "cien";
  std::string out;
  const unsigned hundreds = n / 100;
  const unsigned rest = n % 100;
  if (hundreds > 0) {
    out = kHundreds[hundreds];
    if (rest == 0) return out;
    out += ' ';
  }
  if (rest < 30) {
    if (apocope && rest == 1) return out + "un";
    if (apocope && rest == 21) return out + "veintiún";
    return out + kSmall[rest];
  }
  out += kTens[rest / 10];
  if (rest % 10 != 0) {
    out += " y ";
    out += (apocope && rest % 10 == 1) ? "un" : kSmall[rest % 10];
  }
  return out;
}

}  // namespace detail

inline constexpr std::uint32_t kMaxSpelledNumber = 999'999;

// Spanish cardinal for 0 <= n <= 999,999 (masculine, accents kept).
inline std::string number_to_words(std::uint64_t n) {
  if (n > kMaxSpelledNumber) {
    throw std::out_of_range("number_to_words: " + std::to_string(n) + " is outside [0, 999999]");
  }
  const auto value = static_cast<unsigned>(n);
  const unsigned thousands = value / 1000;
  const unsigned rest = value % 1000;
  std::string out;
  if (thousands == 1) {
    out = "mil";
  } else if (thousands > 1) {
    out = detail::below_thousand(thousands, /*apocope=*/true) + " mil";
  }
  if (rest == 0) return thousands == 0 ? std::string("cero") : out;
  if (!out.empty()) out += ' ';
  return out + detail::below_thousand(rest, false);
}

class NormRules {
 public:
  using AbbreviationMap = std::map<std::string, std::string>;

  NormRules() = default;

  // Throws std::invalid_argument when a key is not a single lowercase word or
  // an expansion is not already normalized.
  explicit NormRules(AbbreviationMap abbreviations) : abbreviations_(std::move(abbreviations)) {
    for (const auto& [key, expansion] : abbreviations_) {
      if (key.empty()) throw std::invalid_argument("abbreviation key is empty");
      for (char32_t c : utf8_decode(key)) {
        if (!detail::is_spanish_letter(c)) {
          throw std::invalid_argument("abbreviation key '" + key +
                                      "' must contain only lowercase letters");
        }
      }
    }
    for (const auto& [key, expansion] : abbreviations_) {
      if (apply(expansion) != expansion) {
        throw std::invalid_argument("expansion of '" + key + "' is not normalized: '" +
                                    expansion + "'");
      }
    }
  }

  static NormRules defaults() {
    return NormRules({{"sr", "señor"},
                      {"sra", "señora"},
                      {"lt", "litros"},
                      {"lts", "litros"},
                      {"ml", "mililitros"},
                      {"kg", "kilogramos"}});
  }

  // Reads `key<TAB>expansion` lines; `#` starts a comment line.
  static NormRules parse(std::istream& in) {
    AbbreviationMap map;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw std::invalid_argument("abbreviation file line " + std::to_string(lineno) +
                                    ": expected key<TAB>expansion");
      }
      std::string key = line.substr(0, tab);
      std::string expansion = line.substr(tab + 1);
      if (!map.emplace(key, expansion).second) {
        throw std::invalid_argument("abbreviation file line " + std::to_string(lineno) +
                                    ": duplicate key '" + key + "'");
      }
    }
    return NormRules(std::move(map));
  }

  const AbbreviationMap& abbreviations() const { return abbreviations_; }

  static bool keeps(char32_t c) {
    return detail::is_spanish_letter(c) || (c >= U'0' && c <= U'9') || c == U' ';
  }

  std::string apply(std::string_view text) const {
    // lowercase, then every symbol becomes a separator
    std::u32string chars = utf8_decode(text);
    for (auto& c : chars) {
      c = detail::to_lower(c);
      if (!keeps(c)) c = U' ';
    }

    // digit runs are spelled out as separate tokens
    std::u32string spelled;
    spelled.reserve(chars.size());
    for (std::size_t i = 0; i < chars.size();) {
      if (chars[i] < U'0' || chars[i] > U'9') {
        spelled.push_back(chars[i++]);
        continue;
      }
      std::size_t j = i;
      while (j < chars.size() && chars[j] >= U'0' && chars[j] <= U'9') ++j;
      spelled.push_back(U' ');
      spelled += utf8_decode(spell_digits(chars, i, j));
      spelled.push_back(U' ');
      i = j;
    }

    std::vector<std::string> out;
    for (auto& token : split_tokens(utf8_encode(spelled))) {
      const auto it = abbreviations_.find(token);
      if (it == abbreviations_.end()) {
        out.push_back(std::move(token));
      } else {
        for (auto& t : split_tokens(it->second)) out.push_back(std::move(t));
      }
    }
    return join_tokens(out);
  }

 private:
  static std::string spell_digits(const std::u32string& chars, std::size_t begin, std::size_t end) {
    const std::size_t len = end - begin;
    const bool leading_zero = len > 1 && chars[begin] == U'0';
    if (len <= 6 && !leading_zero) {
      std::uint64_t value = 0;
      for (std::size_t k = begin; k < end; ++k) value = value * 10 + (chars[k] - U'0');
      return number_to_words(value);
    }
    // long numbers and zero-padded codes are read digit by digit
    std::string out;
    for (std::size_t k = begin; k < end; ++k) {
      if (!out.empty()) out += ' ';
      out += number_to_words(chars[k] - U'0');
    }
    return out;
  }

  AbbreviationMap abbreviations_;
};

inline std::string normalize(std::string_view text, const NormRules& rules) {
  return rules.apply(text);
}

}  // namespace phoco
