#pragma once

// PhoCo followed by the neural gate, and the per-threshold WER report.

#include <cmath>
#include <concepts>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "phoco/dataset.hpp"
#include "phoco/neural_gate.hpp"
#include "phoco/phoco.hpp"

namespace phoco {

inline constexpr double kAcceptProbability = 0.5;

// (base - improved) / base. Throws std::invalid_argument unless base > 0.
inline double relative_reduction(double base, double improved) {
  if (!(base > 0.0)) throw std::invalid_argument("relative_reduction: base must be positive");
  return (base - improved) / base;
}

// Runs PhoCo; the correction is kept only if `score(hypothesis, candidate,
// cfg)` is strictly greater than 0.5. The scorer is not called when PhoCo
// leaves the hypothesis unchanged.
template <typename Scorer>
  requires std::invocable<Scorer&, std::string_view, std::string_view, const PhocoConfig&>
std::string hybrid_correct(std::string_view hypothesis, const Context& ctx, const PhocoConfig& cfg,
                           Scorer&& score) {
  auto proposal = correct(hypothesis, ctx, cfg);
  if (proposal.text == hypothesis) return std::string(hypothesis);
  const double p = score(hypothesis, std::string_view(proposal.text), cfg);
  return p > kAcceptProbability ? std::move(proposal.text) : std::string(hypothesis);
}

inline std::string hybrid_correct(std::string_view hypothesis, const Context& ctx,
                                  const PhocoConfig& cfg, const Gate& gate) {
  return hybrid_correct(hypothesis, ctx, cfg,
                        [&gate](std::string_view h, std::string_view c, const PhocoConfig& k) {
                          return gate.probability(h, c, k);
                        });
}

struct ReportRow {
  double threshold = 0.0;
  std::size_t count = 0;
  double mean_phoco_wer = 0.0;
  double mean_hybrid_wer = 0.0;
  double rel_vs_asr = 0.0;    // NaN when undefined
  double rel_vs_phoco = 0.0;  // NaN when undefined
};

struct EvalReport {
  double baseline_asr_wer = 0.0;
  std::vector<ReportRow> rows;  // ascending threshold
  ReportRow average;            // unweighted mean of the rows, column by column
};

namespace detail {

inline double relative_or_nan(double base, double improved) {
  return base > 0.0 ? relative_reduction(base, improved) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// `accept(candidate)` decides whether the hybrid applies a candidate. Rows are
// keyed by the grid step of each candidate's threshold.
template <typename Acceptor>
  requires std::predicate<Acceptor&, const CorrectionCandidate&>
EvalReport build_report(const std::vector<CorrectionCandidate>& candidates, Acceptor&& accept) {
  if (candidates.empty()) throw std::invalid_argument("build_report: no candidates");
  struct Sums {
    std::size_t n = 0;
    double phoco = 0.0;
    double hybrid = 0.0;
  };
  std::vector<Sums> sums(kThresholdSteps);
  double baseline = 0.0;
  for (const auto& c : candidates) {
    auto& s = sums[threshold_step(c.cfg.threshold) - 1];
    ++s.n;
    s.phoco += c.wer_cand;
    const bool applied = c.changes_hypothesis() && accept(c);
    s.hybrid += applied ? c.wer_cand : c.wer_hyp;
    baseline += c.wer_hyp;
  }

  EvalReport report;
  report.baseline_asr_wer = baseline / double(candidates.size());
  for (std::size_t k = 0; k < kThresholdSteps; ++k) {
    if (sums[k].n == 0) continue;
    ReportRow row;
    row.threshold = grid_threshold(k + 1);
    row.count = sums[k].n;
    row.mean_phoco_wer = sums[k].phoco / double(sums[k].n);
    row.mean_hybrid_wer = sums[k].hybrid / double(sums[k].n);
    row.rel_vs_asr = detail::relative_or_nan(report.baseline_asr_wer, row.mean_hybrid_wer);
    row.rel_vs_phoco = detail::relative_or_nan(row.mean_phoco_wer, row.mean_hybrid_wer);
    report.rows.push_back(row);
  }
  const double n = double(report.rows.size());
  for (const auto& r : report.rows) {
    report.average.count += r.count;
    report.average.mean_phoco_wer += r.mean_phoco_wer / n;
    report.average.mean_hybrid_wer += r.mean_hybrid_wer / n;
    report.average.rel_vs_asr += r.rel_vs_asr / n;
    report.average.rel_vs_phoco += r.rel_vs_phoco / n;
  }
  report.average.threshold = std::numeric_limits<double>::quiet_NaN();
  return report;
}

inline EvalReport build_report(const std::vector<CorrectionCandidate>& candidates, const Gate& gate) {
  return build_report(candidates, [&gate](const CorrectionCandidate& c) {
    return gate.probability(c) > kAcceptProbability;
  });
}

// Accepts exactly the candidates that lower the WER.
inline bool oracle_gate(const CorrectionCandidate& c) { return c.label == 1; }

// Aligned text table: WERs with 3 decimals, relative reductions in percent
// with 1 decimal.
inline std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  char line[160];
  auto pct = [](double v) {
    char buf[32];
    if (std::isnan(v)) return std::string("n/a");
    std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * v);
    return std::string(buf);
  };
  std::snprintf(line, sizeof(line), "%-10s %10s %11s %13s %13s\n", "Threshold", "PhoCo WER",
                "Hybrid WER", "WERrel ASR", "WERrel PhoCo");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line), "%-10.2f %10.3f %11.3f %13s %13s\n", r.threshold,
                  r.mean_phoco_wer, r.mean_hybrid_wer, pct(r.rel_vs_asr).c_str(),
                  pct(r.rel_vs_phoco).c_str());
    out << line;
  }
  const auto& a = report.average;
  std::snprintf(line, sizeof(line), "%-10s %10.3f %11.3f %13s %13s\n", "Average", a.mean_phoco_wer,
                a.mean_hybrid_wer, pct(a.rel_vs_asr).c_str(), pct(a.rel_vs_phoco).c_str());
  out << line;
  std::snprintf(line, sizeof(line), "Baseline ASR WER: %.3f\n", report.baseline_asr_wer);
  out << line;
  return out.str();
}

// One JSON object per row plus a final "average" row; NaN becomes null.
inline std::string report_jsonl(const EvalReport& report) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  std::ostringstream out;
  auto emit = [&](const ReportRow& r, const char* kind) {
    nlohmann::json j = {{"row", kind},
                        {"threshold", num(r.threshold)},
                        {"count", r.count},
                        {"mean_phoco_wer", r.mean_phoco_wer},
                        {"mean_hybrid_wer", r.mean_hybrid_wer},
                        {"rel_vs_asr", num(r.rel_vs_asr)},
                        {"rel_vs_phoco", num(r.rel_vs_phoco)},
                        {"baseline_asr_wer", report.baseline_asr_wer}};
    out << j.dump() << '\n';
  };
  for (const auto& r : report.rows) emit(r, "threshold");
  emit(report.average, "average");
  return out.str();
}

}  // namespace phoco
