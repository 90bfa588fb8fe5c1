#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "phoco/distance.hpp"
#include "phoco/phoco.hpp"
#include "phoco/phonetics.hpp"
#include "phoco/random.hpp"
#include "phoco/utf8.hpp"

namespace phoco {

struct Utterance {
  std::string id;
  std::string reference;
  std::string hyp_with_context;
  std::string hyp_without_context;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

enum class HypSource { WithContext, WithoutContext };

inline constexpr std::array<HypSource, 2> kAllHypSources = {HypSource::WithContext,
                                                            HypSource::WithoutContext};

inline std::string_view to_string(HypSource s) {
  return s == HypSource::WithContext ? "with_context" : "without_context";
}

inline HypSource parse_hyp_source(std::string_view name) {
  if (name == "with_context") return HypSource::WithContext;
  if (name == "without_context") return HypSource::WithoutContext;
  throw std::invalid_argument("unknown source_hyp '" + std::string(name) + "'");
}

inline const std::string& hypothesis_of(const Utterance& u, HypSource s) {
  return s == HypSource::WithContext ? u.hyp_with_context : u.hyp_without_context;
}

// Thresholds 0.05, 0.10, ..., 0.60.
inline constexpr std::size_t kThresholdSteps = 12;

inline double grid_threshold(std::size_t step) { return static_cast<double>(step) / 20.0; }

// 1-based grid step nearest to `threshold`, clamped to [1, 12].
inline std::size_t threshold_step(double threshold) {
  const long k = std::lround(threshold * 20.0);
  return static_cast<std::size_t>(std::clamp<long>(k, 1, static_cast<long>(kThresholdSteps)));
}

inline constexpr std::size_t kCandidatesPerUtterance =
    kThresholdSteps * kAllRepresentations.size() * kAllSelectors.size() * kAllHypSources.size();

struct CorrectionCandidate {
  Utterance utterance;
  HypSource source = HypSource::WithContext;
  PhocoConfig cfg;
  std::string candidate;
  double wer_hyp = 0.0;
  double wer_cand = 0.0;
  int label = 0;

  const std::string& hypothesis() const { return hypothesis_of(utterance, source); }
  bool changes_hypothesis() const { return candidate != hypothesis(); }

  friend bool operator==(const CorrectionCandidate&, const CorrectionCandidate&) = default;
};

// Every (hypothesis, representation, selector, threshold) cell, labeled 1 iff
// the corrected text has strictly fewer word errors than the hypothesis.
inline std::vector<CorrectionCandidate> augment(const std::vector<Utterance>& utterances,
                                                const Context& ctx) {
  std::vector<CorrectionCandidate> out;
  out.reserve(utterances.size() * kCandidatesPerUtterance);
  const double widest = grid_threshold(kThresholdSteps);
  for (const auto& utt : utterances) {
    const auto ref = split_tokens(utt.reference);
    if (ref.empty()) throw std::invalid_argument("utterance '" + utt.id + "' has an empty reference");
    for (auto source : kAllHypSources) {
      const auto& hyp = hypothesis_of(utt, source);
      const auto hyp_tokens = split_tokens(hyp);
      const auto base = wer(ref, hyp_tokens);
      for (auto rep : kAllRepresentations) {
        for (auto sel : kAllSelectors) {
          const auto scored = score_candidates(hyp, ctx, rep, sel, widest);
          for (std::size_t step = 1; step <= kThresholdSteps; ++step) {
            const double t = grid_threshold(step);
            const auto kept = resolve_overlaps(filter_candidates(scored, t));
            CorrectionCandidate c;
            c.utterance = utt;
            c.source = source;
            c.cfg = {t, rep, sel};
            c.candidate = kept.empty() ? hyp : apply_replacements(hyp_tokens, kept);
            const auto fixed = wer(ref, split_tokens(c.candidate));
            c.wer_hyp = base.wer;
            c.wer_cand = fixed.wer;
            c.label = fixed.errors() < base.errors() ? 1 : 0;
            out.push_back(std::move(c));
          }
        }
      }
    }
  }
  return out;
}

struct Split {
  std::vector<CorrectionCandidate> train;
  std::vector<CorrectionCandidate> validation;
  std::vector<CorrectionCandidate> test;
};

// Shuffled by candidate; sizes floor(0.8n), floor(0.1n) and the remainder.
inline Split split(const std::vector<CorrectionCandidate>& candidates, std::uint64_t seed) {
  if (candidates.empty()) throw std::invalid_argument("split: no candidates");
  const std::size_t n = candidates.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  Split out;
  out.train.reserve(n_train);
  out.validation.reserve(n_val);
  out.test.reserve(n - n_train - n_val);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = candidates[order[i]];
    if (i < n_train) {
      out.train.push_back(c);
    } else if (i < n_train + n_val) {
      out.validation.push_back(c);
    } else {
      out.test.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic telesales corpus

inline const std::vector<std::string>& default_context_phrases() {
  static const std::vector<std::string> kPhrases = {
      "coca cola",        "coca cola light",   "coca cola sin azúcar", "sprite",
      "fanta de naranja", "fanta de fresa",    "agua ciel",            "ciel mineralizada",
      "del valle",        "powerade",          "sidral mundet",        "fresca",
      "manzana lift",     "topo chico",        "delaware punch",       "jugo del valle",
      "medio litro",      "dos litros",        "tres litros",          "seiscientos mililitros",
      "lata",             "botella de vidrio", "envase retornable",    "paquete de doce",
      "caja",             "garrafón",          "confirmar pedido",     "cancelar pedido",
      "cuánto cuesta",    "forma de pago"};
  return kPhrases;
}

// Order-taking sentences built from slot templates.
inline std::vector<std::string> generate_sentences(std::size_t count, std::uint64_t seed) {
  static const std::vector<std::string> kTemplates = {
      "quiero {Q} {P}",
      "quiero {Q} {P} de {S}",
      "me da {Q} {C} de {P}",
      "me puede mandar {Q} {P} de {S} por favor",
      "también {Q} {C} de {P}",
      "cuánto cuesta la {P}",
      "cuánto cuesta la {C} de {P}",
      "sí quiero {A}",
      "mejor quiero {A}",
      "cuál es la forma de pago",
      "agrégame {Q} {P} de {S}",
      "nada más {Q} {P}",
      "{Q} {C} de {P} y {Q} {P}",
      "ahora quiero {A} por favor",
      "tiene {P} en {C}",
  };
  static const std::map<char, std::vector<std::string>> kSlots = {
      {'Q', {"una", "dos", "tres", "cuatro", "cinco", "seis", "diez", "doce", "veinte"}},
      {'P',
       {"coca cola", "coca cola light", "coca cola sin azúcar", "sprite", "fanta de naranja",
        "fanta de fresa", "agua ciel", "ciel mineralizada", "powerade", "sidral mundet", "fresca",
        "manzana lift", "topo chico", "delaware punch", "jugo del valle", "del valle"}},
      {'S', {"medio litro", "dos litros", "tres litros", "seiscientos mililitros"}},
      {'C',
       {"lata", "botella de vidrio", "envase retornable", "paquete de doce", "caja", "garrafón"}},
      {'A', {"confirmar pedido", "cancelar pedido"}},
  };

  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& tpl = kTemplates[rng.below(kTemplates.size())];
    std::string sentence;
    for (std::size_t k = 0; k < tpl.size(); ++k) {
      if (tpl[k] == '{') {
        const auto& fill = kSlots.at(tpl[k + 1]);
        sentence += fill[rng.below(fill.size())];
        k += 2;
      } else {
        sentence += tpl[k];
      }
    }
    out.push_back(std::move(sentence));
  }
  return out;
}

// Replaces whole tokens by phonetically close confusions. A token's pool holds
// vocabulary words and spelling/phone perturbations whose normalized IPA
// distance to it is at most kMaxConfusionDistance.
class NoiseChannel {
 public:
  static constexpr double kMaxConfusionDistance = 0.34;

  NoiseChannel(std::vector<std::string> vocabulary, const Phonetics& phonetics)
      : phonetics_(phonetics) {
    std::sort(vocabulary.begin(), vocabulary.end());
    vocabulary.erase(std::unique(vocabulary.begin(), vocabulary.end()), vocabulary.end());
    for (auto& w : vocabulary) {
      vocab_ipa_.push_back(phonetics_.phonemize32(w, Representation::IPA));
      vocabulary_.push_back(std::move(w));
    }
  }

  // Never empty and never contains `token` itself.
  const std::vector<std::string>& confusions(const std::string& token) {
    auto it = cache_.find(token);
    if (it != cache_.end()) return it->second;
    const auto ipa = phonetics_.phonemize32(token, Representation::IPA);
    std::set<std::string> pool;
    auto consider = [&](const std::string& w, const std::u32string& w_ipa) {
      if (w != token && normalized_distance(ipa, w_ipa) <= kMaxConfusionDistance) pool.insert(w);
    };
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) consider(vocabulary_[i], vocab_ipa_[i]);
    for (const auto& v : perturbations(token)) {
      consider(v, phonetics_.phonemize32(v, Representation::IPA));
    }
    if (pool.empty()) pool.insert("h" + token);  // silent h: same phones, different spelling
    return cache_.emplace(token, std::vector<std::string>(pool.begin(), pool.end())).first->second;
  }

 private:
  static std::vector<std::string> perturbations(const std::string& token) {
    static const std::vector<std::pair<std::u32string, std::u32string>> kSwaps = {
        {U"b", U"v"},   {U"v", U"b"},   {U"s", U"z"},  {U"z", U"s"},  {U"ce", U"se"},
        {U"ci", U"si"}, {U"se", U"ce"}, {U"si", U"ci"}, {U"ll", U"y"}, {U"y", U"ll"},
        {U"ge", U"je"}, {U"gi", U"ji"}, {U"je", U"ge"}, {U"ji", U"gi"}, {U"h", U""},
        {U"p", U"b"},   {U"t", U"d"},   {U"d", U"t"},  {U"ca", U"ga"}, {U"co", U"go"},
        {U"ga", U"ca"}, {U"go", U"co"}, {U"m", U"n"},  {U"n", U"m"},  {U"l", U"r"},
        {U"r", U"l"},   {U"rr", U"r"},  {U"e", U"i"},  {U"i", U"e"},  {U"o", U"u"},
        {U"u", U"o"},   {U"ñ", U"n"},   {U"á", U"a"},  {U"é", U"e"},  {U"í", U"i"},
        {U"ó", U"o"},   {U"ú", U"u"},   {U"a", U"á"},  {U"e", U"é"},  {U"o", U"ó"},
        {U"f", U"s"},   {U"x", U"s"},   {U"c", U"k"},  {U"qu", U"k"}};
    const std::u32string w = utf8_decode(token);
    std::vector<std::string> out;
    for (const auto& [from, to] : kSwaps) {
      for (std::size_t pos = w.find(from); pos != std::u32string::npos; pos = w.find(from, pos + 1)) {
        std::u32string v = w;
        v.replace(pos, from.size(), to);
        if (!v.empty()) out.push_back(utf8_encode(v));
      }
    }
    if (!w.empty() && std::u32string(U"aeiouáéíóú").find(w.front()) != std::u32string::npos) {
      out.push_back("h" + token);
    }
    if (w.size() > 2 && w.back() == U's') out.push_back(utf8_encode(w.substr(0, w.size() - 1)));
    if (w.size() > 2 && w.back() != U's') out.push_back(token + "s");
    if (w == U"y") out.push_back("i");
    if (w == U"i") out.push_back("y");
    return out;
  }

  Phonetics phonetics_;
  std::vector<std::string> vocabulary_;
  std::vector<std::u32string> vocab_ipa_;
  std::map<std::string, std::vector<std::string>> cache_;
};

// Each token of each hypothesis is corrupted independently with probability
// `noise_rate`. The draw for a token depends only on (seed, utterance, source,
// position), so raising the rate only adds corruptions.
inline std::vector<Utterance> synthesize_corpus(const std::vector<std::string>& clean_sentences,
                                                const Context& ctx, double noise_rate,
                                                std::uint64_t seed) {
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw std::invalid_argument("noise_rate must lie in [0, 1]");
  }
  std::vector<std::string> vocabulary;
  for (const auto& s : clean_sentences) {
    for (auto& t : split_tokens(s)) vocabulary.push_back(std::move(t));
  }
  for (const auto& p : ctx.phrases()) {
    for (auto& t : split_tokens(p)) vocabulary.push_back(std::move(t));
  }
  NoiseChannel channel(std::move(vocabulary), ctx.phonetics());

  std::vector<Utterance> out;
  out.reserve(clean_sentences.size());
  for (std::size_t u = 0; u < clean_sentences.size(); ++u) {
    const auto tokens = split_tokens(clean_sentences[u]);
    if (tokens.empty()) throw std::invalid_argument("synthesize_corpus: empty sentence");
    Utterance utt;
    char id[32];
    std::snprintf(id, sizeof(id), "utt%05zu", u + 1);
    utt.id = id;
    utt.reference = join_tokens(tokens);
    for (auto source : kAllHypSources) {
      std::vector<std::string> noisy;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        Rng rng(mix_seed(mix_seed(seed, u), (static_cast<std::uint64_t>(source) << 32) | t));
        if (rng.uniform() < noise_rate) {
          const auto& pool = channel.confusions(tokens[t]);
          noisy.push_back(pool[rng.below(pool.size())]);
        } else {
          noisy.push_back(tokens[t]);
        }
      }
      (source == HypSource::WithContext ? utt.hyp_with_context : utt.hyp_without_context) =
          join_tokens(noisy);
    }
    out.push_back(std::move(utt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Line-delimited JSON records

inline nlohmann::json to_json(const Utterance& u) {
  return {{"id", u.id},
          {"reference", u.reference},
          {"hyp_with_context", u.hyp_with_context},
          {"hyp_without_context", u.hyp_without_context}};
}

inline Utterance utterance_from_json(const nlohmann::json& j) {
  Utterance u;
  u.id = j.at("id").get<std::string>();
  u.reference = j.at("reference").get<std::string>();
  u.hyp_with_context = j.at("hyp_with_context").get<std::string>();
  u.hyp_without_context = j.at("hyp_without_context").get<std::string>();
  if (split_tokens(u.reference).empty()) {
    throw std::invalid_argument("utterance '" + u.id + "' has an empty reference");
  }
  return u;
}

inline nlohmann::json to_json(const CorrectionCandidate& c) {
  auto j = to_json(c.utterance);
  j["cfg"] = {{"threshold", c.cfg.threshold},
              {"rep", std::string(to_string(c.cfg.rep))},
              {"selector", std::string(to_string(c.cfg.selector))}};
  j["source_hyp"] = std::string(to_string(c.source));
  j["candidate"] = c.candidate;
  j["wer_hyp"] = c.wer_hyp;
  j["wer_cand"] = c.wer_cand;
  j["label"] = c.label;
  return j;
}

inline CorrectionCandidate candidate_from_json(const nlohmann::json& j) {
  CorrectionCandidate c;
  c.utterance = utterance_from_json(j);
  const auto& cfg = j.at("cfg");
  c.cfg.threshold = cfg.at("threshold").get<double>();
  c.cfg.rep = parse_representation(cfg.at("rep").get<std::string>());
  c.cfg.selector = parse_selector(cfg.at("selector").get<std::string>());
  c.cfg.validate();
  c.source = parse_hyp_source(j.at("source_hyp").get<std::string>());
  c.candidate = j.at("candidate").get<std::string>();
  c.wer_hyp = j.at("wer_hyp").get<double>();
  c.wer_cand = j.at("wer_cand").get<double>();
  c.label = j.at("label").get<int>();
  if (c.label != 0 && c.label != 1) throw std::invalid_argument("label must be 0 or 1");
  return c;
}

template <typename T>
void write_jsonl(std::ostream& out, const std::vector<T>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

template <typename T, typename Parse>
std::vector<T> read_jsonl(std::istream& in, Parse parse) {
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<Utterance> read_corpus(std::istream& in) {
  return read_jsonl<Utterance>(in, utterance_from_json);
}

inline std::vector<CorrectionCandidate> read_candidates(std::istream& in) {
  return read_jsonl<CorrectionCandidate>(in, candidate_from_json);
}

}  // namespace phoco
