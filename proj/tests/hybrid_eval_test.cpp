#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "phoco/hybrid_eval.hpp"

namespace phoco {
namespace {

const Context& coca_context() {
  static const Context ctx({"coca cola"});
  return ctx;
}

const PhocoConfig kCfg{0.2, Representation::Plain, Selector::Win};

TEST(HybridCorrect, AcceptsOnlyAboveOneHalf) {
  auto fixed = [](double p) {
    return [p](std::string_view, std::string_view, const PhocoConfig&) { return p; };
  };
  EXPECT_EQ(hybrid_correct("una coca gola", coca_context(), kCfg, fixed(0.7)), "una coca cola");
  EXPECT_EQ(hybrid_correct("una coca gola", coca_context(), kCfg, fixed(0.5)), "una coca gola");
  EXPECT_EQ(hybrid_correct("una coca gola", coca_context(), kCfg, fixed(0.1)), "una coca gola");
}

TEST(HybridCorrect, ScorerSeesHypothesisCandidateAndConfig) {
  std::string seen_h, seen_c;
  double seen_t = -1;
  hybrid_correct("una coca gola", coca_context(), kCfg,
                 [&](std::string_view h, std::string_view c, const PhocoConfig& k) {
                   seen_h = h;
                   seen_c = c;
                   seen_t = k.threshold;
                   return 1.0;
                 });
  EXPECT_EQ(seen_h, "una coca gola");
  EXPECT_EQ(seen_c, "una coca cola");
  EXPECT_EQ(seen_t, 0.2);
}

TEST(HybridCorrect, ScorerSkippedWithoutProposal) {
  int calls = 0;
  const auto out = hybrid_correct("quiero pan", coca_context(), kCfg,
                                  [&](std::string_view, std::string_view, const PhocoConfig&) {
                                    ++calls;
                                    return 1.0;
                                  });
  EXPECT_EQ(out, "quiero pan");
  EXPECT_EQ(calls, 0);
}

TEST(HybridCorrect, TrainedGateOverload) {
  Gate gate;
  gate.model = GateModel::zeros({gate.vocab.size(), 4, 3, 2});
  gate.model.b_out(0, 0) = 3.0;  // always accepts
  EXPECT_EQ(hybrid_correct("una coca gola", coca_context(), kCfg, gate), "una coca cola");
  gate.model.b_out(0, 0) = -3.0;
  EXPECT_EQ(hybrid_correct("una coca gola", coca_context(), kCfg, gate), "una coca gola");
}

TEST(RelativeReduction, Values) {
  EXPECT_NEAR(relative_reduction(0.338, 0.190), 0.4379, 1e-4);
  EXPECT_NEAR(relative_reduction(0.230, 0.190), 0.1739, 1e-4);
  EXPECT_DOUBLE_EQ(relative_reduction(0.5, 0.5), 0.0);
  EXPECT_LT(relative_reduction(0.2, 0.3), 0.0);
  EXPECT_THROW(relative_reduction(0.0, 0.1), std::invalid_argument);
}

CorrectionCandidate make(double t, double wer_hyp, double wer_cand, bool changes) {
  CorrectionCandidate c;
  c.utterance = {"u", "a b", "a c", "a c"};
  c.cfg = {t, Representation::Plain, Selector::Win};
  c.candidate = changes ? "a b" : "a c";
  c.wer_hyp = wer_hyp;
  c.wer_cand = wer_cand;
  c.label = wer_cand < wer_hyp ? 1 : 0;
  return c;
}

TEST(BuildReport, HandComputedRows) {
  const std::vector<CorrectionCandidate> cands = {
      make(0.05, 0.5, 0.0, true),   // good fix
      make(0.05, 0.5, 1.0, true),   // bad fix
      make(0.10, 0.5, 0.5, false),  // no change
      make(0.10, 0.5, 0.0, true),
  };
  const auto accept_all = [](const CorrectionCandidate&) { return true; };
  const auto r = build_report(cands, accept_all);
  EXPECT_DOUBLE_EQ(r.baseline_asr_wer, 0.5);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].count, 2u);
  EXPECT_DOUBLE_EQ(r.rows[0].mean_phoco_wer, 0.5);
  EXPECT_DOUBLE_EQ(r.rows[0].mean_hybrid_wer, 0.5);
  EXPECT_DOUBLE_EQ(r.rows[1].mean_phoco_wer, 0.25);

  const auto o = build_report(cands, oracle_gate);
  EXPECT_DOUBLE_EQ(o.rows[0].mean_hybrid_wer, 0.25);
  EXPECT_DOUBLE_EQ(o.rows[0].rel_vs_asr, 0.5);
  EXPECT_DOUBLE_EQ(o.rows[0].rel_vs_phoco, 0.5);
  EXPECT_DOUBLE_EQ(o.average.rel_vs_asr, 0.5 * (0.5 + 0.5));
  EXPECT_DOUBLE_EQ(o.average.mean_phoco_wer, 0.375);
}

TEST(BuildReport, UndefinedRelativeValuesAreNan) {
  const auto r = build_report({make(0.3, 0.5, 0.0, true)}, oracle_gate);
  EXPECT_TRUE(std::isnan(r.rows[0].rel_vs_phoco));
  const auto text = format_report(r);
  EXPECT_NE(text.find("n/a"), std::string::npos);
  EXPECT_NE(report_jsonl(r).find("\"rel_vs_phoco\":null"), std::string::npos);
}

TEST(BuildReport, EmptyInputThrows) {
  EXPECT_THROW(build_report({}, oracle_gate), std::invalid_argument);
}

TEST(BuildReportProperty, OracleSandwichAndRecomputableRelatives) {
  const Context ctx(default_context_phrases());
  const auto corpus = synthesize_corpus(generate_sentences(40, 6), ctx, 0.35, 6);
  const auto cands = augment(corpus, ctx);
  const auto never = build_report(cands, [](const CorrectionCandidate&) { return false; });
  const auto always = build_report(cands, [](const CorrectionCandidate&) { return true; });
  const auto oracle = build_report(cands, oracle_gate);
  ASSERT_EQ(oracle.rows.size(), kThresholdSteps);
  for (std::size_t k = 0; k < kThresholdSteps; ++k) {
    EXPECT_NEAR(never.rows[k].mean_hybrid_wer, never.baseline_asr_wer, 1e-12);
    EXPECT_DOUBLE_EQ(always.rows[k].mean_hybrid_wer, always.rows[k].mean_phoco_wer);
    const auto& r = oracle.rows[k];
    EXPECT_LE(r.mean_hybrid_wer, r.mean_phoco_wer + 1e-12);
    EXPECT_LE(r.mean_hybrid_wer, oracle.baseline_asr_wer + 1e-12);
    EXPECT_NEAR(r.rel_vs_asr, (oracle.baseline_asr_wer - r.mean_hybrid_wer) / oracle.baseline_asr_wer, 1e-12);
    if (r.mean_phoco_wer > 0) {
      EXPECT_NEAR(r.rel_vs_phoco, (r.mean_phoco_wer - r.mean_hybrid_wer) / r.mean_phoco_wer, 1e-12);
    }
  }
  EXPECT_EQ(format_report(oracle), format_report(build_report(cands, oracle_gate)));
}

TEST(FormatReport, AlignedColumns) {
  const auto r = build_report({make(0.05, 0.5, 0.0, true), make(0.6, 0.5, 0.25, true)}, oracle_gate);
  std::istringstream lines(format_report(r));
  std::string header, first, last;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, last);
  EXPECT_EQ(header.size(), first.size());
  EXPECT_EQ(first.size(), last.size());
  EXPECT_EQ(first.substr(0, 4), "0.05");
  EXPECT_NE(first.find("0.000"), std::string::npos);
  EXPECT_NE(first.find("100.0%"), std::string::npos);
}

}  // namespace
}  // namespace phoco
