#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gradient_check.hpp"
#include "phoco/neural_gate.hpp"

namespace phoco {
namespace {

TEST(Vocabulary, ReservedLayout) {
  const Vocabulary v;
  EXPECT_EQ(v.size(), 20u);
  EXPECT_EQ(v.tokens()[0], "<pad>");
  EXPECT_EQ(v.tokens()[3], "THR_01");
  EXPECT_EQ(v.tokens()[14], "THR_12");
  EXPECT_EQ(v.index("nunca vista"), Vocabulary::kUnk);
  EXPECT_EQ(Vocabulary::threshold_token(0.05), 3);
  EXPECT_EQ(Vocabulary::threshold_token(0.6), 14);
  EXPECT_EQ(Vocabulary::rep_token(Representation::Wbet), 17);
  EXPECT_EQ(Vocabulary::selector_token(Selector::Let), 19);
}

TEST(Vocabulary, BuildOrdersByFrequencyThenSpelling) {
  CorrectionCandidate c;
  c.utterance = {"u", "b a", "b a", "b a"};
  c.candidate = "b c";
  const auto v = Vocabulary::build({c});
  ASSERT_EQ(v.size(), 23u);
  EXPECT_EQ(v.tokens()[20], "b");
  EXPECT_EQ(v.tokens()[21], "a");
  EXPECT_EQ(v.tokens()[22], "c");
  EXPECT_THROW(Vocabulary::from_tokens({"x"}), std::invalid_argument);
}

TEST(Encode, LayoutAndPadding) {
  const auto v = Vocabulary::from_tokens([] {
    auto t = Vocabulary().tokens();
    t.insert(t.end(), {"coca", "gola", "cola"});
    return t;
  }());
  const auto seq = encode("coca gola", "coca cola", {0.2, Representation::IPA, Selector::Let}, v, 10);
  const std::vector<int> expected = {20, 21, 2, 20, 22, 2, 6, 16, 19, 0};
  EXPECT_EQ(seq, expected);
}

TEST(Encode, TruncatesHypothesisFromTheLeftFirst) {
  const Vocabulary v;
  const PhocoConfig cfg{0.3, Representation::Plain, Selector::Win};
  const auto seq = encode("a b c d", "e f", cfg, v, 8);
  ASSERT_EQ(seq.size(), 8u);
  EXPECT_EQ(seq[0], Vocabulary::kUnk);
  EXPECT_EQ(seq[1], Vocabulary::kSep);
  const auto tight = encode("a b", "c d e f", cfg, v, 7);
  EXPECT_EQ(tight[0], Vocabulary::kSep);
  EXPECT_EQ(tight[3], Vocabulary::kSep);
  EXPECT_THROW(encode("a", "b", cfg, v, 4), std::invalid_argument);
}

TEST(Forward, ZeroModelIsUndecided) {
  const auto m = GateModel::zeros({9, 4, 3, 2});
  const std::vector<std::vector<int>> seqs = {{3, 4, 5, 0}, {1, 0, 0, 0}};
  const std::vector<int> labels = {1, 0};
  EXPECT_DOUBLE_EQ(forward(m, seqs[0]), 0.5);
  EXPECT_NEAR(batch_loss(m, seqs, labels), std::log(2.0), 1e-9);
}

TEST(Forward, AllPadInputIsDefined) {
  const auto m = GateModel::initialize({9, 4, 3, 2}, 1);
  const double p = forward(m, std::vector<int>{0, 0, 0});
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
}

TEST(ForwardProperty, ProbabilityInRangeAndPadTailInvariant) {
  const auto m = GateModel::initialize({30, 8, 6, 5}, 7);
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> seq;
    for (std::uint64_t i = 0, n = 1 + rng.below(12); i < n; ++i) seq.push_back(1 + int(rng.below(29)));
    const double p = forward(m, seq);
    ASSERT_GT(p, 0.0);
    ASSERT_LT(p, 1.0);
    auto padded = seq;
    padded.resize(seq.size() + 1 + rng.below(10), Vocabulary::kPad);
    ASSERT_EQ(forward(m, padded), p);
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto errors = testing_oracle::gradient_relative_errors(testing_oracle::small_gradient_case(seed));
    ASSERT_EQ(errors.size(), 8u);
    for (const auto& [block, err] : errors) EXPECT_LT(err, 1e-4) << block << " seed " << seed;
  }
}

TEST(Training, MemorizesOneExample) {
  const std::vector<std::vector<int>> x = {{20, 21, 2, 20, 22, 2, 6, 16, 19, 0, 0, 0}};
  const std::vector<int> y = {1};
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 1;
  auto m = GateModel::initialize({23, cfg.embed, cfg.hidden, cfg.dense}, 5);
  const auto curves = fit(m, x, y, cfg);
  EXPECT_EQ(curves.batch_loss.size(), 200u);
  EXPECT_LT(batch_loss(m, x, y), 0.01);
}

TEST(Training, SeededRunsAreIdentical) {
  const std::vector<std::vector<int>> x = {{3, 4, 5, 0}, {5, 6, 0, 0}, {7, 3, 3, 4}, {8, 0, 0, 0}};
  const std::vector<int> y = {1, 0, 1, 0};
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 2;
  cfg.dropout = 0.2;
  cfg.embed = 6;
  cfg.hidden = 5;
  cfg.dense = 4;
  auto a = GateModel::initialize({9, 6, 5, 4}, 3);
  auto b = a;
  const auto ca = fit(a, x, y, cfg, x, y);
  const auto cb = fit(b, x, y, cfg, x, y);
  EXPECT_EQ(ca.batch_loss, cb.batch_loss);
  EXPECT_EQ(ca.validation_loss, cb.validation_loss);
  EXPECT_EQ(ca.validation_loss.size(), 5u);
  EXPECT_EQ(a.w_out, b.w_out);
  EXPECT_EQ(a.embedding, b.embedding);
}

TEST(Training, RejectsBadInput) {
  auto m = GateModel::initialize({9, 4, 3, 2}, 1);
  TrainConfig cfg;
  EXPECT_THROW(fit(m, {}, {}, cfg), std::invalid_argument);
  EXPECT_THROW(fit(m, {{3}}, {2}, cfg), std::invalid_argument);
  cfg.batch_size = 0;
  EXPECT_THROW(fit(m, {{3}}, {1}, cfg), std::invalid_argument);
}

TEST(Metrics, PerfectSeparation) {
  const std::vector<double> p = {0.9, 0.8, 0.2, 0.1};
  const std::vector<int> y = {1, 1, 0, 0};
  const auto m = compute_metrics(p, y);
  EXPECT_DOUBLE_EQ(m.macro.f1, 1.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  ASSERT_TRUE(m.auc);
  EXPECT_DOUBLE_EQ(*m.auc, 1.0);
}

TEST(Metrics, ConstantScoresHaveChanceAuc) {
  const std::vector<double> p = {0.5, 0.5, 0.5, 0.5};
  const std::vector<int> y = {1, 0, 1, 0};
  const auto m = compute_metrics(p, y);
  ASSERT_TRUE(m.auc);
  EXPECT_DOUBLE_EQ(*m.auc, 0.5);
  EXPECT_DOUBLE_EQ(m.per_class[1].precision, 0.0);  // nothing predicted positive
  EXPECT_DOUBLE_EQ(m.per_class[0].recall, 1.0);
}

TEST(Metrics, SingleClassHasNoAuc) {
  const std::vector<double> p = {0.3, 0.7};
  const std::vector<int> y = {0, 0};
  EXPECT_FALSE(compute_metrics(p, y).auc);
}

TEST(Metrics, AucMatchesPairCounting) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p;
    std::vector<int> y;
    for (std::uint64_t i = 0, n = 2 + rng.below(30); i < n; ++i) {
      p.push_back(double(rng.below(5)) / 4.0);
      y.push_back(int(rng.below(2)));
    }
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (y[i] == 1 && y[j] == 0) {
          pairs += 1.0;
          wins += p[i] > p[j] ? 1.0 : p[i] == p[j] ? 0.5 : 0.0;
        }
      }
    }
    const auto auc = roc_auc(p, y);
    if (pairs == 0.0) {
      ASSERT_FALSE(auc);
    } else {
      ASSERT_TRUE(auc);
      ASSERT_NEAR(*auc, wins / pairs, 1e-12);
    }
  }
}

Gate tiny_gate() {
  Gate g;
  auto tokens = Vocabulary().tokens();
  tokens.insert(tokens.end(), {"coca", "cola"});
  g.vocab = Vocabulary::from_tokens(tokens);
  g.max_seq_len = 12;
  g.model = GateModel::initialize({g.vocab.size(), 4, 3, 2}, 4);
  return g;
}

TEST(ModelFile, RoundTripPreservesPredictions) {
  const auto g = tiny_gate();
  std::stringstream buf;
  save_gate(buf, g);
  const auto back = load_gate(buf);
  EXPECT_EQ(back.vocab.tokens(), g.vocab.tokens());
  EXPECT_EQ(back.max_seq_len, g.max_seq_len);
  EXPECT_EQ(back.model.dims, g.model.dims);
  const PhocoConfig cfg{0.25, Representation::Wbet, Selector::Win};
  EXPECT_EQ(back.probability("coca gola", "coca cola", cfg), g.probability("coca gola", "coca cola", cfg));
}

TEST(ModelFile, RejectsCorruptFiles) {
  const auto g = tiny_gate();
  std::stringstream buf;
  save_gate(buf, g);
  const std::string bytes = buf.str();

  std::istringstream bad_magic("NOTAGATE" + bytes.substr(8));
  EXPECT_THROW(load_gate(bad_magic), std::runtime_error);

  std::string bad_version = bytes;
  bad_version[8] = 9;
  std::istringstream v(bad_version);
  EXPECT_THROW(load_gate(v), std::runtime_error);

  std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_gate(truncated), std::runtime_error);

  // hidden size 3 -> 4 makes every recurrent block the wrong shape
  std::string bad_dims = bytes;
  bad_dims[8 + 4 + 8 + 16] = 4;
  std::istringstream d(bad_dims);
  EXPECT_THROW(load_gate(d), std::runtime_error);
}

}  // namespace
}  // namespace phoco
