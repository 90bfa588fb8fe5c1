// phoco: command-line front end for normalization, phonetic correction,
// synthetic data, gate training and evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "phoco/dataset.hpp"
#include "phoco/hybrid_eval.hpp"
#include "phoco/neural_gate.hpp"
#include "phoco/normalizer.hpp"
#include "phoco/phoco.hpp"
#include "phoco/phonetics.hpp"

namespace {

using namespace phoco;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

// "-" means stdin / stdout.
class Input {
 public:
  explicit Input(const std::string& path) {
    if (path != "-") file_ = std::make_unique<std::ifstream>(open_in(path));
  }
  std::istream& get() { return file_ ? *file_ : std::cin; }

 private:
  std::unique_ptr<std::ifstream> file_;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }
  void finish() {
    get().flush();
    if (!get()) throw std::runtime_error("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct LanguageFiles {
  std::string abbreviations;
  std::string ipa_rules;
  std::string wbet_rules;

  void add_to(CLI::App* cmd, bool with_abbreviations = true) {
    if (with_abbreviations) {
      cmd->add_option("--abbrev", abbreviations, "abbreviation table (key<TAB>expansion)")
          ->check(CLI::ExistingFile);
    }
    cmd->add_option("--ipa-rules", ipa_rules, "IPA grapheme-to-phoneme table")->check(CLI::ExistingFile);
    cmd->add_option("--wbet-rules", wbet_rules, "Wbet grapheme-to-phoneme table")->check(CLI::ExistingFile);
  }

  NormRules rules() const {
    if (abbreviations.empty()) return NormRules::defaults();
    auto in = open_in(abbreviations);
    return NormRules::parse(in);
  }

  Phonetics phonetics() const {
    auto table = [](const std::string& path, std::string_view builtin) {
      if (path.empty()) return G2PRuleTable::parse(builtin);
      auto in = open_in(path);
      return G2PRuleTable::parse(in);
    };
    return Phonetics(table(ipa_rules, kDefaultIpaRules), table(wbet_rules, kDefaultWbetRules));
  }
};

Context load_context(const std::string& path, const Phonetics& phonetics) {
  if (path.empty()) return Context(default_context_phrases(), phonetics);
  auto in = open_in(path);
  return Context::parse(in, phonetics);
}

std::vector<CorrectionCandidate> load_candidates(const std::string& path) {
  Input in(path);
  auto cands = read_candidates(in.get());
  if (cands.empty()) throw std::runtime_error("no candidates in '" + path + "'");
  return cands;
}

const std::vector<CorrectionCandidate>& pick(const Split& s, const std::string& part,
                                             const std::vector<CorrectionCandidate>& all) {
  if (part == "train") return s.train;
  if (part == "validation") return s.validation;
  if (part == "test") return s.test;
  return all;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(line);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phonetic post-correction of ASR transcripts with a neural acceptance gate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "phoco 1.0");

  // normalize
  auto* normalize_cmd = app.add_subcommand("normalize", "normalize text, one utterance per line");
  LanguageFiles norm_files;
  std::string norm_in = "-", norm_out = "-";
  normalize_cmd->add_option("--abbrev", norm_files.abbreviations, "abbreviation table")
      ->check(CLI::ExistingFile);
  normalize_cmd->add_option("-i,--input", norm_in, "input text file ('-' for stdin)");
  normalize_cmd->add_option("-o,--output", norm_out, "output file ('-' for stdout)");

  // phonemize
  auto* phonemize_cmd = app.add_subcommand("phonemize", "normalize, then transcribe each line");
  LanguageFiles ph_files;
  ph_files.add_to(phonemize_cmd);
  std::string ph_rep = "ipa", ph_in = "-", ph_out = "-";
  phonemize_cmd->add_option("--rep", ph_rep, "plain | ipa | wbet")->capture_default_str();
  phonemize_cmd->add_option("-i,--input", ph_in, "input text file ('-' for stdin)");
  phonemize_cmd->add_option("-o,--output", ph_out, "output file ('-' for stdout)");

  // correct
  auto* correct_cmd = app.add_subcommand("correct", "apply context-phrase corrections to each line");
  LanguageFiles cor_files;
  cor_files.add_to(correct_cmd, false);
  std::string cor_ctx, cor_rep = "ipa", cor_sel = "win", cor_in = "-", cor_out = "-", cor_model;
  double cor_threshold = 0.3;
  bool cor_details = false;
  correct_cmd->add_option("--context", cor_ctx, "context phrases, one per line")
      ->required()
      ->check(CLI::ExistingFile);
  correct_cmd->add_option("--rep", cor_rep, "plain | ipa | wbet")->capture_default_str();
  correct_cmd->add_option("--selector", cor_sel, "win | let")->capture_default_str();
  correct_cmd->add_option("--threshold", cor_threshold, "maximum normalized distance in [0, 1]")
      ->capture_default_str();
  correct_cmd->add_option("--model", cor_model, "gate model; corrections it rejects are dropped")
      ->check(CLI::ExistingFile);
  correct_cmd->add_flag("--details", cor_details, "emit one JSON object per line with replacements");
  correct_cmd->add_option("-i,--input", cor_in, "normalized hypotheses ('-' for stdin)");
  correct_cmd->add_option("-o,--output", cor_out, "output file ('-' for stdout)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic telesales corpus (JSONL)");
  LanguageFiles syn_files;
  syn_files.add_to(synth_cmd, false);
  std::string syn_ctx, syn_sentences, syn_out = "-";
  double syn_noise = 0.3;
  std::uint64_t syn_seed = 7;
  std::size_t syn_count = 320;
  synth_cmd->add_option("--noise-rate", syn_noise, "per-token corruption probability")
      ->capture_default_str();
  synth_cmd->add_option("--seed", syn_seed, "random seed")->capture_default_str();
  synth_cmd->add_option("--count", syn_count, "number of generated sentences")->capture_default_str();
  synth_cmd->add_option("--sentences", syn_sentences,
                        "clean reference sentences, one per line (replaces generation)")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--context", syn_ctx, "context phrases (default: built-in list)")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("-o,--output", syn_out, "output JSONL ('-' for stdout)");

  // augment
  auto* augment_cmd = app.add_subcommand("augment", "expand a corpus into labeled correction candidates");
  LanguageFiles aug_files;
  aug_files.add_to(augment_cmd, false);
  std::string aug_ctx, aug_in = "-", aug_out = "-";
  augment_cmd->add_option("--context", aug_ctx, "context phrases, one per line")
      ->required()
      ->check(CLI::ExistingFile);
  augment_cmd->add_option("-i,--input", aug_in, "corpus JSONL ('-' for stdin)");
  augment_cmd->add_option("-o,--output", aug_out, "candidate JSONL ('-' for stdout)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the gate on the training split");
  TrainConfig tcfg;
  std::string tr_in, tr_model, tr_curves;
  std::uint64_t split_seed_train = 13;
  train_cmd->add_option("-i,--input", tr_in, "candidate JSONL")->required();
  train_cmd->add_option("-m,--model", tr_model, "where to write the model")->required();
  train_cmd->add_option("--seed", tcfg.seed, "initialization and shuffling seed")->capture_default_str();
  train_cmd->add_option("--epochs", tcfg.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tcfg.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", tcfg.learning_rate, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--max-len", tcfg.max_seq_len, "encoded sequence length")->capture_default_str();
  train_cmd->add_option("--dropout", tcfg.dropout, "dropout on the dense layer")->capture_default_str();
  train_cmd->add_option("--split-seed", split_seed_train, "seed of the train/validation/test split")
      ->capture_default_str();
  train_cmd->add_option("--curves", tr_curves, "write per-batch and per-epoch curves as JSON");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "classification metrics of a trained gate");
  std::string ev_model, ev_in, ev_part = "test";
  std::uint64_t split_seed_eval = 13;
  evaluate_cmd->add_option("-m,--model", ev_model)->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("-i,--input", ev_in, "candidate JSONL")->required();
  evaluate_cmd->add_option("--split-seed", split_seed_eval)->capture_default_str();
  evaluate_cmd->add_option("--part", ev_part, "train | validation | test | all")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}))
      ->capture_default_str();

  // report
  auto* report_cmd = app.add_subcommand("report", "per-threshold WER of PhoCo and the hybrid system");
  std::string rp_model, rp_in, rp_part = "test", rp_out = "-", rp_jsonl;
  std::uint64_t split_seed_report = 13;
  bool rp_oracle = false;
  report_cmd->add_option("-m,--model", rp_model, "gate model")->check(CLI::ExistingFile);
  report_cmd->add_flag("--oracle", rp_oracle, "accept exactly the candidates that lower WER");
  report_cmd->add_option("-i,--input", rp_in, "candidate JSONL")->required();
  report_cmd->add_option("--split-seed", split_seed_report)->capture_default_str();
  report_cmd->add_option("--part", rp_part, "train | validation | test | all")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}))
      ->capture_default_str();
  report_cmd->add_option("-o,--output", rp_out, "text table ('-' for stdout)");
  report_cmd->add_option("--jsonl", rp_jsonl, "also write one JSON object per row");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*normalize_cmd) {
      const auto rules = norm_files.rules();
      Input in(norm_in);
      Output out(norm_out);
      for_each_line(in.get(), [&](const std::string& line) { out.get() << normalize(line, rules) << '\n'; });
      out.finish();
    } else if (*phonemize_cmd) {
      const auto rules = ph_files.rules();
      const auto phonetics = ph_files.phonetics();
      const auto rep = parse_representation(ph_rep);
      Input in(ph_in);
      Output out(ph_out);
      for_each_line(in.get(), [&](const std::string& line) {
        out.get() << phonetics.phonemize(normalize(line, rules), rep) << '\n';
      });
      out.finish();
    } else if (*correct_cmd) {
      const PhocoConfig cfg{cor_threshold, parse_representation(cor_rep), parse_selector(cor_sel)};
      cfg.validate();
      const auto ctx = load_context(cor_ctx, cor_files.phonetics());
      std::optional<Gate> gate;
      if (!cor_model.empty()) gate = load_gate(cor_model);
      Input in(cor_in);
      Output out(cor_out);
      for_each_line(in.get(), [&](const std::string& line) {
        auto result = correct(line, ctx, cfg);
        bool accepted = true;
        if (gate && result.text != line) {
          accepted = gate->probability(line, result.text, cfg) > kAcceptProbability;
        }
        const std::string text = accepted ? result.text : line;
        if (!cor_details) {
          out.get() << text << '\n';
          return;
        }
        nlohmann::json reps = nlohmann::json::array();
        for (const auto& r : result.replacements) {
          reps.push_back({{"start_token", r.start_token},
                          {"end_token", r.end_token},
                          {"phrase", r.phrase},
                          {"distance", r.distance}});
        }
        out.get() << nlohmann::json{{"hypothesis", line},
                                    {"output", text},
                                    {"phoco", result.text},
                                    {"accepted", accepted},
                                    {"replacements", reps}}
                         .dump()
                  << '\n';
      });
      out.finish();
    } else if (*synth_cmd) {
      const auto ctx = load_context(syn_ctx, syn_files.phonetics());
      std::vector<std::string> clean;
      if (syn_sentences.empty()) {
        clean = generate_sentences(syn_count, syn_seed);
      } else {
        auto in = open_in(syn_sentences);
        for_each_line(in, [&](const std::string& line) {
          if (!split_tokens(line).empty()) clean.push_back(normalize(line, NormRules::defaults()));
        });
      }
      const auto corpus = synthesize_corpus(clean, ctx, syn_noise, syn_seed);
      Output out(syn_out);
      write_jsonl(out.get(), corpus);
      out.finish();
    } else if (*augment_cmd) {
      const auto ctx = load_context(aug_ctx, aug_files.phonetics());
      Input in(aug_in);
      const auto corpus = read_corpus(in.get());
      if (corpus.empty()) throw std::runtime_error("corpus is empty");
      const auto cands = augment(corpus, ctx);
      Output out(aug_out);
      write_jsonl(out.get(), cands);
      out.finish();
    } else if (*train_cmd) {
      const auto cands = load_candidates(tr_in);
      const auto parts = split(cands, split_seed_train);
      const auto result = train(parts.train, parts.validation, tcfg);
      save_gate(tr_model, result.gate);
      const auto& c = result.curves;
      for (std::size_t e = 0; e < c.validation_loss.size(); ++e) {
        std::fprintf(stderr, "epoch %zu: validation loss %.4f accuracy %.4f\n", e + 1,
                     c.validation_loss[e], c.validation_accuracy[e]);
      }
      if (!tr_curves.empty()) {
        Output out(tr_curves);
        out.get() << nlohmann::json{{"batch_loss", c.batch_loss},
                                    {"batch_accuracy", c.batch_accuracy},
                                    {"validation_loss", c.validation_loss},
                                    {"validation_accuracy", c.validation_accuracy}}
                         .dump()
                  << '\n';
        out.finish();
      }
    } else if (*evaluate_cmd) {
      const auto gate = load_gate(ev_model);
      const auto cands = load_candidates(ev_in);
      const auto parts = split(cands, split_seed_eval);
      const auto& subset = pick(parts, ev_part, cands);
      if (subset.empty()) throw std::runtime_error("the " + ev_part + " split is empty");
      std::cout << format_metrics(evaluate(gate, subset));
    } else if (*report_cmd) {
      if (rp_oracle == !rp_model.empty()) throw std::runtime_error("give exactly one of --model or --oracle");
      const auto cands = load_candidates(rp_in);
      const auto parts = split(cands, split_seed_report);
      const auto& subset = pick(parts, rp_part, cands);
      if (subset.empty()) throw std::runtime_error("the " + rp_part + " split is empty");
      const auto report = rp_oracle ? build_report(subset, oracle_gate)
                                    : build_report(subset, load_gate(rp_model));
      Output out(rp_out);
      out.get() << format_report(report);
      out.finish();
      if (!rp_jsonl.empty()) {
        Output rows(rp_jsonl);
        rows.get() << report_jsonl(report);
        rows.finish();
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "phoco: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
