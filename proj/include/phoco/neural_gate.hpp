#pragma once

// Binary classifier deciding whether a phonetic correction should be applied.
//
//   tokens -> embedding -> LSTM -> max over time (non-PAD steps)
//          -> dense + ReLU -> dense + sigmoid
//
// Trained with mean binary cross-entropy and Adam. Gradients are computed by
// hand (backpropagation through time); everything runs in double precision.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phoco/dataset.hpp"
#include "phoco/phoco.hpp"
#include "phoco/random.hpp"
#include "phoco/utf8.hpp"

namespace phoco {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSep = 2;
  static constexpr int kFirstThreshold = 3;                                  // THR_01..THR_12
  static constexpr int kFirstRep = kFirstThreshold + int(kThresholdSteps);  // REP_*
  static constexpr int kFirstSelector = kFirstRep + 3;                       // SEL_*
  static constexpr int kFirstWord = kFirstSelector + 2;

  Vocabulary() {
    tokens_ = {"<pad>", "<unk>", "<sep>"};
    for (std::size_t k = 1; k <= kThresholdSteps; ++k) {
      char name[8];
      std::snprintf(name, sizeof(name), "THR_%02zu", k);
      tokens_.emplace_back(name);
    }
    for (const char* name : {"REP_PLAIN", "REP_IPA", "REP_WBET", "SEL_WIN", "SEL_LET"}) {
      tokens_.emplace_back(name);
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], int(i));
  }

  // Words from hypotheses and candidates, most frequent first, ties broken
  // lexicographically.
  static Vocabulary build(const std::vector<CorrectionCandidate>& training) {
    std::map<std::string, std::size_t> counts;
    for (const auto& c : training) {
      for (auto& t : split_tokens(c.hypothesis())) ++counts[std::move(t)];
      for (auto& t : split_tokens(c.candidate)) ++counts[std::move(t)];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary v;
    for (auto& [word, n] : ranked) v.add(word);
    return v;
  }

  static Vocabulary from_tokens(std::vector<std::string> tokens) {
    Vocabulary v;
    if (tokens.size() < std::size_t(kFirstWord) ||
        !std::equal(v.tokens_.begin(), v.tokens_.end(), tokens.begin())) {
      throw std::invalid_argument("vocabulary does not start with the reserved tokens");
    }
    for (std::size_t i = kFirstWord; i < tokens.size(); ++i) {
      if (!v.add(tokens[i])) throw std::invalid_argument("duplicate vocabulary token '" + tokens[i] + "'");
    }
    return v;
  }

  int index(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static int threshold_token(double threshold) {
    return kFirstThreshold + int(threshold_step(threshold)) - 1;
  }
  static int rep_token(Representation rep) { return kFirstRep + int(rep); }
  static int selector_token(Selector sel) { return kFirstSelector + int(sel); }

 private:
  bool add(const std::string& word) {
    if (!index_.emplace(word, int(tokens_.size())).second) return false;
    tokens_.push_back(word);
    return true;
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// hypothesis SEP candidate SEP THR REP SEL, right-padded. When too long the
// hypothesis loses tokens from its left end first, then the candidate does.
inline std::vector<int> encode(std::string_view hypothesis, std::string_view candidate,
                               const PhocoConfig& cfg, const Vocabulary& vocab,
                               std::size_t max_seq_len) {
  constexpr std::size_t kFixed = 5;
  if (max_seq_len < kFixed) throw std::invalid_argument("max_seq_len must be at least 5");
  const auto hyp = split_tokens(hypothesis);
  const auto cand = split_tokens(candidate);
  const std::size_t room = max_seq_len - kFixed;
  const std::size_t cand_keep = std::min(cand.size(), room);
  const std::size_t hyp_keep = std::min(hyp.size(), room - cand_keep);

  std::vector<int> seq;
  seq.reserve(max_seq_len);
  for (std::size_t i = hyp.size() - hyp_keep; i < hyp.size(); ++i) seq.push_back(vocab.index(hyp[i]));
  seq.push_back(Vocabulary::kSep);
  for (std::size_t i = cand.size() - cand_keep; i < cand.size(); ++i) seq.push_back(vocab.index(cand[i]));
  seq.push_back(Vocabulary::kSep);
  seq.push_back(Vocabulary::threshold_token(cfg.threshold));
  seq.push_back(Vocabulary::rep_token(cfg.rep));
  seq.push_back(Vocabulary::selector_token(cfg.selector));
  seq.resize(max_seq_len, Vocabulary::kPad);
  return seq;
}

inline std::vector<int> encode(const CorrectionCandidate& c, const Vocabulary& vocab,
                               std::size_t max_seq_len) {
  return encode(c.hypothesis(), c.candidate, c.cfg, vocab, max_seq_len);
}

// ---------------------------------------------------------------------------
// Model

struct GateDims {
  std::size_t vocab = 0;
  std::size_t embed = 128;
  std::size_t hidden = 60;
  std::size_t dense = 50;

  friend bool operator==(const GateDims&, const GateDims&) = default;
};

// Gate blocks of the recurrent cell are stacked row-wise in the order
// input, forget, candidate, output.
struct GateModel {
  GateDims dims;
  Matrix embedding;    // vocab x embed, one row per token
  Matrix w_input;      // 4*hidden x embed
  Matrix w_recurrent;  // 4*hidden x hidden
  Matrix b_gates;      // 4*hidden x 1
  Matrix w_dense;      // dense x hidden
  Matrix b_dense;      // dense x 1
  Matrix w_out;        // 1 x dense
  Matrix b_out;        // 1 x 1

  static GateModel zeros(const GateDims& dims) {
    GateModel m;
    m.dims = dims;
    const auto v = Eigen::Index(dims.vocab), d = Eigen::Index(dims.embed),
               h = Eigen::Index(dims.hidden), f = Eigen::Index(dims.dense);
    m.embedding = Matrix::Zero(v, d);
    m.w_input = Matrix::Zero(4 * h, d);
    m.w_recurrent = Matrix::Zero(4 * h, h);
    m.b_gates = Matrix::Zero(4 * h, 1);
    m.w_dense = Matrix::Zero(f, h);
    m.b_dense = Matrix::Zero(f, 1);
    m.w_out = Matrix::Zero(1, f);
    m.b_out = Matrix::Zero(1, 1);
    return m;
  }

  // Embeddings U(-0.05, 0.05); weight matrices Glorot-uniform; biases zero
  // except the forget gate, which starts at 1.
  static GateModel initialize(const GateDims& dims, std::uint64_t seed) {
    GateModel m = zeros(dims);
    Rng rng(seed);
    auto fill = [&rng](Matrix& w, double limit) {
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-limit, limit);
    };
    auto glorot = [&fill](Matrix& w, double fan_in, double fan_out) {
      fill(w, std::sqrt(6.0 / (fan_in + fan_out)));
    };
    const double d = double(dims.embed), h = double(dims.hidden), f = double(dims.dense);
    fill(m.embedding, 0.05);
    glorot(m.w_input, d, 4 * h);
    glorot(m.w_recurrent, h, 4 * h);
    m.b_gates.block(Eigen::Index(dims.hidden), 0, Eigen::Index(dims.hidden), 1).setOnes();
    glorot(m.w_dense, h, f);
    glorot(m.w_out, f, 1);
    return m;
  }

  template <typename Fn>
  void for_each_block(Fn&& fn) {
    fn("embedding", embedding);
    fn("lstm.w_input", w_input);
    fn("lstm.w_recurrent", w_recurrent);
    fn("lstm.bias", b_gates);
    fn("dense.weight", w_dense);
    fn("dense.bias", b_dense);
    fn("output.weight", w_out);
    fn("output.bias", b_out);
  }

  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    const_cast<GateModel*>(this)->for_each_block(
        [&fn](std::string_view name, const Matrix& block) { fn(name, block); });
  }

  bool all_finite() const {
    bool ok = true;
    for_each_block([&ok](std::string_view, const Matrix& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_block([&n](std::string_view, const Matrix& m) { n += std::size_t(m.size()); });
    return n;
  }
};

namespace detail {

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -[y log s(z) + (1-y) log(1 - s(z))] without forming s(z).
inline double bce_from_logit(double z, int label) {
  return std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
}

// Everything the backward pass needs from one forward pass.
struct Trace {
  std::vector<int> steps;  // token at each processed position
  std::vector<bool> pooled_mask;
  Matrix x;       // embed x T
  Matrix gates;   // 4H x T, post-activation
  Matrix cell;    // H x T
  Matrix hidden;  // H x T
  Vector pooled;  // H
  std::vector<Eigen::Index> argmax;  // per hidden unit; -1 when nothing pooled
  Vector z_dense;
  Vector dense_out;  // after ReLU and dropout
  Vector dropout_scale;  // empty when dropout is off
  double logit = 0.0;
};

// Positions after the last non-PAD token cannot reach the pooled features,
// so the recurrence stops there.
inline Trace run_forward(const GateModel& m, std::span<const int> seq,
                         const Vector* dropout_scale = nullptr) {
  const auto H = Eigen::Index(m.dims.hidden);
  Trace tr;
  std::size_t T = seq.size();
  while (T > 0 && seq[T - 1] == Vocabulary::kPad) --T;
  tr.steps.assign(seq.begin(), seq.begin() + std::ptrdiff_t(T));
  const auto t_len = Eigen::Index(T);

  tr.x.resize(Eigen::Index(m.dims.embed), t_len);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const int idx = tr.steps[std::size_t(t)];
    if (idx < 0 || std::size_t(idx) >= m.dims.vocab) {
      throw std::out_of_range("token index " + std::to_string(idx) + " outside vocabulary");
    }
    tr.x.col(t) = m.embedding.row(idx).transpose();
  }
  tr.gates = m.w_input * tr.x;
  tr.gates.colwise() += m.b_gates.col(0);
  tr.cell.resize(H, t_len);
  tr.hidden.resize(H, t_len);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    auto a = tr.gates.col(t);
    if (t > 0) a.noalias() += m.w_recurrent * tr.hidden.col(t - 1);
    for (Eigen::Index k = 0; k < H; ++k) {
      a(k) = logistic(a(k));
      a(H + k) = logistic(a(H + k));
      a(2 * H + k) = std::tanh(a(2 * H + k));
      a(3 * H + k) = logistic(a(3 * H + k));
      const double c_prev = t > 0 ? tr.cell(k, t - 1) : 0.0;
      const double c = a(H + k) * c_prev + a(k) * a(2 * H + k);
      tr.cell(k, t) = c;
      tr.hidden(k, t) = a(3 * H + k) * std::tanh(c);
    }
  }

  tr.pooled = Vector::Zero(H);
  tr.argmax.assign(std::size_t(H), -1);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    if (tr.steps[std::size_t(t)] == Vocabulary::kPad) continue;
    for (Eigen::Index k = 0; k < H; ++k) {
      auto& best = tr.argmax[std::size_t(k)];
      if (best < 0 || tr.hidden(k, t) > tr.hidden(k, best)) best = t;
    }
  }
  for (Eigen::Index k = 0; k < H; ++k) {
    if (tr.argmax[std::size_t(k)] >= 0) tr.pooled(k) = tr.hidden(k, tr.argmax[std::size_t(k)]);
  }

  tr.z_dense = m.w_dense * tr.pooled + m.b_dense.col(0);
  tr.dense_out = tr.z_dense.cwiseMax(0.0);
  if (dropout_scale != nullptr) {
    tr.dropout_scale = *dropout_scale;
    tr.dense_out.array() *= dropout_scale->array();
  }
  tr.logit = (m.w_out * tr.dense_out)(0, 0) + m.b_out(0, 0);
  return tr;
}

// Accumulates d(loss)/d(params) scaled by `weight` into `grad`.
inline void run_backward(const GateModel& m, const Trace& tr, int label, double weight,
                         GateModel& grad) {
  const auto H = Eigen::Index(m.dims.hidden);
  const double d_logit = weight * (logistic(tr.logit) - label);

  grad.w_out.noalias() += d_logit * tr.dense_out.transpose();
  grad.b_out(0, 0) += d_logit;
  Vector d_dense = d_logit * m.w_out.row(0).transpose();
  if (tr.dropout_scale.size() > 0) d_dense.array() *= tr.dropout_scale.array();
  for (Eigen::Index i = 0; i < d_dense.size(); ++i) {
    if (tr.z_dense(i) <= 0.0) d_dense(i) = 0.0;
  }
  grad.w_dense.noalias() += d_dense * tr.pooled.transpose();
  grad.b_dense.col(0) += d_dense;
  const Vector d_pooled = m.w_dense.transpose() * d_dense;

  const auto t_len = Eigen::Index(tr.steps.size());
  if (t_len == 0) return;
  Matrix d_hidden = Matrix::Zero(H, t_len);
  for (Eigen::Index k = 0; k < H; ++k) {
    const auto t = tr.argmax[std::size_t(k)];
    if (t >= 0) d_hidden(k, t) += d_pooled(k);
  }

  Matrix d_gates(4 * H, t_len);
  Vector dh_next = Vector::Zero(H);
  Vector dc_next = Vector::Zero(H);
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    const auto a = tr.gates.col(t);
    for (Eigen::Index k = 0; k < H; ++k) {
      const double i = a(k), f = a(H + k), g = a(2 * H + k), o = a(3 * H + k);
      const double tanh_c = std::tanh(tr.cell(k, t));
      const double c_prev = t > 0 ? tr.cell(k, t - 1) : 0.0;
      const double dh = d_hidden(k, t) + dh_next(k);
      const double dc = dc_next(k) + dh * o * (1.0 - tanh_c * tanh_c);
      d_gates(k, t) = dc * g * i * (1.0 - i);
      d_gates(H + k, t) = dc * c_prev * f * (1.0 - f);
      d_gates(2 * H + k, t) = dc * i * (1.0 - g * g);
      d_gates(3 * H + k, t) = dh * tanh_c * o * (1.0 - o);
      dc_next(k) = dc * f;
    }
    dh_next.noalias() = m.w_recurrent.transpose() * d_gates.col(t);
  }

  grad.w_input.noalias() += d_gates * tr.x.transpose();
  if (t_len > 1) {
    grad.w_recurrent.noalias() +=
        d_gates.rightCols(t_len - 1) * tr.hidden.leftCols(t_len - 1).transpose();
  }
  grad.b_gates.col(0) += d_gates.rowwise().sum();
  const Matrix d_x = m.w_input.transpose() * d_gates;
  for (Eigen::Index t = 0; t < t_len; ++t) {
    grad.embedding.row(tr.steps[std::size_t(t)]) += d_x.col(t).transpose();
  }
}

}  // namespace detail

// Probability that the correction should be applied.
inline double forward(const GateModel& model, std::span<const int> sequence) {
  return detail::logistic(detail::run_forward(model, sequence).logit);
}

// Mean binary cross-entropy over a batch.
inline double batch_loss(const GateModel& model, const std::vector<std::vector<int>>& sequences,
                         std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    total += detail::bce_from_logit(detail::run_forward(model, sequences[i]).logit, labels[i]);
  }
  return total / double(sequences.size());
}

// Mean loss and its gradient with respect to every parameter block.
inline std::pair<double, GateModel> batch_gradient(const GateModel& model,
                                                   const std::vector<std::vector<int>>& sequences,
                                                   std::span<const int> labels) {
  GateModel grad = GateModel::zeros(model.dims);
  const double w = 1.0 / double(sequences.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto tr = detail::run_forward(model, sequences[i]);
    total += detail::bce_from_logit(tr.logit, labels[i]);
    detail::run_backward(model, tr, labels[i], w, grad);
  }
  return {total * w, std::move(grad)};
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::size_t epochs = 2;
  std::size_t batch_size = 64;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_seq_len = 64;
  std::uint64_t seed = 42;
  double dropout = 0.0;  // on the dense layer; 0 disables it
  std::size_t embed = 128;
  std::size_t hidden = 60;
  std::size_t dense = 50;

  void validate() const {
    if (epochs == 0 || batch_size == 0 || max_seq_len < 5 || embed == 0 || hidden == 0 ||
        dense == 0) {
      throw std::invalid_argument("training configuration values must be positive");
    }
    if (!(learning_rate > 0.0) || !(dropout >= 0.0 && dropout < 1.0)) {
      throw std::invalid_argument("learning_rate must be > 0 and dropout in [0, 1)");
    }
  }
};

class Adam {
 public:
  Adam(const GateModel& shape, const TrainConfig& cfg)
      : cfg_(cfg), m_(GateModel::zeros(shape.dims)), v_(GateModel::zeros(shape.dims)) {}

  void step(GateModel& model, const GateModel& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    const double lr = cfg_.learning_rate;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2, eps = cfg_.epsilon;
    std::vector<Matrix*> params, ms, vs;
    model.for_each_block([&](std::string_view, Matrix& p) { params.push_back(&p); });
    m_.for_each_block([&](std::string_view, Matrix& p) { ms.push_back(&p); });
    v_.for_each_block([&](std::string_view, Matrix& p) { vs.push_back(&p); });
    std::size_t i = 0;
    grad.for_each_block([&](std::string_view, const Matrix& g) {
      Matrix& p = *params[i];
      Matrix& m = *ms[i];
      Matrix& v = *vs[i];
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
      ++i;
    });
  }

  std::size_t steps() const { return t_; }

 private:
  TrainConfig cfg_;
  GateModel m_;
  GateModel v_;
  std::size_t t_ = 0;
};

struct TrainingCurves {
  std::vector<double> batch_loss;
  std::vector<double> batch_accuracy;
  std::vector<double> validation_loss;  // one per epoch
  std::vector<double> validation_accuracy;
};

// Mini-batch Adam on pre-encoded sequences. Shuffles once per epoch; throws
// std::runtime_error if the loss stops being finite.
inline TrainingCurves fit(GateModel& model, const std::vector<std::vector<int>>& sequences,
                          const std::vector<int>& labels, const TrainConfig& cfg,
                          const std::vector<std::vector<int>>& val_sequences = {},
                          const std::vector<int>& val_labels = {}) {
  cfg.validate();
  if (sequences.empty()) throw std::invalid_argument("fit: empty training set");
  if (sequences.size() != labels.size()) throw std::invalid_argument("fit: label count mismatch");
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("fit: labels must be 0 or 1");
  }

  Adam adam(model, cfg);
  Rng shuffle_rng(mix_seed(cfg.seed, 1));
  Rng dropout_rng(mix_seed(cfg.seed, 2));
  TrainingCurves curves;
  std::vector<std::size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  GateModel grad = GateModel::zeros(model.dims);
  Vector scale(Eigen::Index(model.dims.dense));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double w = 1.0 / double(stop - start);
      grad.for_each_block([](std::string_view, Matrix& g) { g.setZero(); });
      double loss = 0.0;
      std::size_t correct = 0;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        const Vector* mask = nullptr;
        if (cfg.dropout > 0.0) {
          for (Eigen::Index k = 0; k < scale.size(); ++k) {
            scale(k) = dropout_rng.uniform() < cfg.dropout ? 0.0 : 1.0 / (1.0 - cfg.dropout);
          }
          mask = &scale;
        }
        const auto tr = detail::run_forward(model, sequences[i], mask);
        loss += detail::bce_from_logit(tr.logit, labels[i]);
        if ((tr.logit > 0.0 ? 1 : 0) == labels[i]) ++correct;
        detail::run_backward(model, tr, labels[i], w, grad);
      }
      loss *= w;
      if (!std::isfinite(loss)) {
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch + 1) + ", step " +
                                 std::to_string(adam.steps() + 1));
      }
      curves.batch_loss.push_back(loss);
      curves.batch_accuracy.push_back(double(correct) * w);
      adam.step(model, grad);
    }
    if (!val_sequences.empty()) {
      double loss = 0.0;
      std::size_t correct = 0;
      for (std::size_t i = 0; i < val_sequences.size(); ++i) {
        const double z = detail::run_forward(model, val_sequences[i]).logit;
        loss += detail::bce_from_logit(z, val_labels[i]);
        if ((z > 0.0 ? 1 : 0) == val_labels[i]) ++correct;
      }
      curves.validation_loss.push_back(loss / double(val_sequences.size()));
      curves.validation_accuracy.push_back(double(correct) / double(val_sequences.size()));
    }
  }
  return curves;
}

// A trained classifier together with the vocabulary and sequence length it
// was trained with.
struct Gate {
  GateModel model;
  Vocabulary vocab;
  std::size_t max_seq_len = 64;

  double probability(std::string_view hypothesis, std::string_view candidate,
                     const PhocoConfig& cfg) const {
    return forward(model, encode(hypothesis, candidate, cfg, vocab, max_seq_len));
  }

  double probability(const CorrectionCandidate& c) const {
    return forward(model, encode(c, vocab, max_seq_len));
  }
};

struct TrainResult {
  Gate gate;
  TrainingCurves curves;
};

inline TrainResult train(const std::vector<CorrectionCandidate>& training,
                         const std::vector<CorrectionCandidate>& validation,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (training.empty()) throw std::invalid_argument("train: empty training set");
  TrainResult out;
  out.gate.vocab = Vocabulary::build(training);
  out.gate.max_seq_len = cfg.max_seq_len;
  const GateDims dims{out.gate.vocab.size(), cfg.embed, cfg.hidden, cfg.dense};
  out.gate.model = GateModel::initialize(dims, mix_seed(cfg.seed, 0));

  auto encode_all = [&](const std::vector<CorrectionCandidate>& set) {
    std::pair<std::vector<std::vector<int>>, std::vector<int>> enc;
    enc.first.reserve(set.size());
    enc.second.reserve(set.size());
    for (const auto& c : set) {
      enc.first.push_back(encode(c, out.gate.vocab, cfg.max_seq_len));
      enc.second.push_back(c.label);
    }
    return enc;
  };
  const auto [train_x, train_y] = encode_all(training);
  const auto [val_x, val_y] = encode_all(validation);
  out.curves = fit(out.gate.model, train_x, train_y, cfg, val_x, val_y);
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct GateMetrics {
  std::array<ClassMetrics, 2> per_class;
  ClassMetrics macro;  // unweighted mean over the two classes; support = total
  double accuracy = 0.0;
  std::optional<double> auc;  // absent when only one class is present
};

// Probability that a random positive outranks a random negative, ties
// counted as one half (midranks).
inline std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * double(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double p = double(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * double(negatives));
}

// Class prediction is probability > 0.5.
inline GateMetrics compute_metrics(std::span<const double> probabilities,
                                   std::span<const int> labels) {
  if (probabilities.empty()) throw std::invalid_argument("compute_metrics: empty set");
  std::size_t confusion[2][2] = {{0, 0}, {0, 0}};  // [label][prediction]
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    ++confusion[labels[i]][probabilities[i] > 0.5 ? 1 : 0];
  }
  GateMetrics out;
  for (int c = 0; c < 2; ++c) {
    const double tp = double(confusion[c][c]);
    const double predicted = double(confusion[0][c] + confusion[1][c]);
    const double actual = double(confusion[c][0] + confusion[c][1]);
    auto& m = out.per_class[std::size_t(c)];
    m.precision = predicted > 0 ? tp / predicted : 0.0;
    m.recall = actual > 0 ? tp / actual : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.support = std::size_t(actual);
  }
  out.macro.precision = 0.5 * (out.per_class[0].precision + out.per_class[1].precision);
  out.macro.recall = 0.5 * (out.per_class[0].recall + out.per_class[1].recall);
  out.macro.f1 = 0.5 * (out.per_class[0].f1 + out.per_class[1].f1);
  out.macro.support = probabilities.size();
  out.accuracy = double(confusion[0][0] + confusion[1][1]) / double(probabilities.size());
  out.auc = roc_auc(probabilities, labels);
  return out;
}

inline GateMetrics evaluate(const Gate& gate, const std::vector<CorrectionCandidate>& test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<double> probs;
  std::vector<int> labels;
  probs.reserve(test.size());
  labels.reserve(test.size());
  for (const auto& c : test) {
    probs.push_back(gate.probability(c));
    labels.push_back(c.label);
  }
  return compute_metrics(probs, labels);
}

inline std::string format_metrics(const GateMetrics& m) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-14s %9s %9s %9s %9s\n", "Class", "Precision", "Recall",
                "F1 score", "Support");
  out << line;
  auto row = [&](const char* name, const ClassMetrics& c) {
    std::snprintf(line, sizeof(line), "%-14s %9.2f %9.2f %9.2f %9zu\n", name, c.precision,
                  c.recall, c.f1, c.support);
    out << line;
  };
  row("0", m.per_class[0]);
  row("1", m.per_class[1]);
  row("Macro average", m.macro);
  std::snprintf(line, sizeof(line), "Accuracy %.4f\n", m.accuracy);
  out << line;
  if (m.auc) {
    std::snprintf(line, sizeof(line), "ROC AUC  %.4f\n", *m.auc);
  } else {
    std::snprintf(line, sizeof(line), "ROC AUC  n/a (single class)\n");
  }
  out << line;
  return out.str();
}

// ---------------------------------------------------------------------------
// Model file: little-endian binary
//   "PHOCOGAT" u32 version u64 max_seq_len u64 dims[4]
//   u64 vocab_size { u32 len, bytes }*
//   u32 blocks { u32 name_len, name, u64 rows, u64 cols, f64 data (column-major) }*

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

inline constexpr char kGateMagic[8] = {'P', 'H', 'O', 'C', 'O', 'G', 'A', 'T'};
inline constexpr std::uint32_t kGateFormatVersion = 1;

namespace detail {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw std::runtime_error("model file is truncated");
  }
  return value;
}

inline std::string get_string(std::istream& in, std::size_t max_len = 1 << 20) {
  const auto len = get<std::uint32_t>(in);
  if (len > max_len) throw std::runtime_error("model file has an implausible string length");
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) throw std::runtime_error("model file is truncated");
  return s;
}

}  // namespace detail

inline void save_gate(std::ostream& out, const Gate& gate) {
  out.write(kGateMagic, sizeof(kGateMagic));
  detail::put<std::uint32_t>(out, kGateFormatVersion);
  detail::put<std::uint64_t>(out, gate.max_seq_len);
  const auto& d = gate.model.dims;
  for (auto v : {d.vocab, d.embed, d.hidden, d.dense}) detail::put<std::uint64_t>(out, v);
  detail::put<std::uint64_t>(out, gate.vocab.size());
  for (const auto& t : gate.vocab.tokens()) {
    detail::put<std::uint32_t>(out, std::uint32_t(t.size()));
    out.write(t.data(), std::streamsize(t.size()));
  }
  detail::put<std::uint32_t>(out, 8);
  gate.model.for_each_block([&out](std::string_view name, const Matrix& m) {
    detail::put<std::uint32_t>(out, std::uint32_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    detail::put<std::uint64_t>(out, std::uint64_t(m.rows()));
    detail::put<std::uint64_t>(out, std::uint64_t(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), std::streamsize(m.size() * sizeof(double)));
  });
  if (!out) throw std::runtime_error("failed to write model file");
}

// Validates magic, version, vocabulary, block names and shapes, and
// finiteness of every parameter.
inline Gate load_gate(std::istream& in) {
  char magic[sizeof(kGateMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + 8, kGateMagic)) {
    throw std::runtime_error("not a gate model file");
  }
  const auto version = detail::get<std::uint32_t>(in);
  if (version != kGateFormatVersion) {
    throw std::runtime_error("unsupported model file version " + std::to_string(version));
  }
  Gate gate;
  gate.max_seq_len = detail::get<std::uint64_t>(in);
  GateDims dims;
  dims.vocab = detail::get<std::uint64_t>(in);
  dims.embed = detail::get<std::uint64_t>(in);
  dims.hidden = detail::get<std::uint64_t>(in);
  dims.dense = detail::get<std::uint64_t>(in);
  constexpr std::uint64_t kMaxDim = 1u << 24;
  if (dims.vocab > kMaxDim || dims.embed > kMaxDim || dims.hidden > kMaxDim || dims.dense > kMaxDim) {
    throw std::runtime_error("model file has implausible dimensions");
  }
  const auto vocab_size = detail::get<std::uint64_t>(in);
  if (vocab_size != dims.vocab) throw std::runtime_error("vocabulary size does not match model");
  std::vector<std::string> tokens;
  tokens.reserve(vocab_size);
  for (std::uint64_t i = 0; i < vocab_size; ++i) tokens.push_back(detail::get_string(in));
  gate.vocab = Vocabulary::from_tokens(std::move(tokens));

  gate.model = GateModel::zeros(dims);
  const auto blocks = detail::get<std::uint32_t>(in);
  if (blocks != 8) throw std::runtime_error("model file must hold 8 parameter blocks");
  gate.model.for_each_block([&in](std::string_view expected, Matrix& m) {
    const auto name = detail::get_string(in);
    if (name != expected) {
      throw std::runtime_error("expected block '" + std::string(expected) + "', found '" + name + "'");
    }
    const auto rows = detail::get<std::uint64_t>(in);
    const auto cols = detail::get<std::uint64_t>(in);
    if (rows != std::uint64_t(m.rows()) || cols != std::uint64_t(m.cols())) {
      throw std::runtime_error("block '" + name + "' has shape " + std::to_string(rows) + "x" +
                               std::to_string(cols) + ", expected " + std::to_string(m.rows()) +
                               "x" + std::to_string(m.cols()));
    }
    if (!in.read(reinterpret_cast<char*>(m.data()), std::streamsize(m.size() * sizeof(double)))) {
      throw std::runtime_error("model file is truncated");
    }
  });
  if (!gate.model.all_finite()) throw std::runtime_error("model file holds non-finite parameters");
  if (gate.max_seq_len < 5) throw std::runtime_error("model file has max_seq_len < 5");
  return gate;
}

inline void save_gate(const std::string& path, const Gate& gate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  save_gate(out, gate);
}

inline Gate load_gate(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return load_gate(in);
}

}  // namespace phoco
