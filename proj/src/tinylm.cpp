#include "lim/tinylm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "lim/error.hpp"
#include "lim/rng.hpp"

namespace lim::tinylm {
namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Slot-level losses of one example, used by evaluation.
struct SlotLoss {
  double nll;
  bool y;
};

}  // namespace

TinyLmParams init_params(std::size_t vocab_size, std::size_t hidden_dim,
                         std::size_t context_radius, std::uint64_t seed) {
  require(vocab_size >= 1 && hidden_dim >= 1, "vocab_size and hidden_dim must be positive");
  Rng rng(seed, streams::kInit, 0);
  const auto v = static_cast<Eigen::Index>(vocab_size);
  const auto h = static_cast<Eigen::Index>(hidden_dim);
  TinyLmParams p;
  p.embeddings.resize(v, h);
  p.w_mlm.resize(v, h);
  for (Eigen::Index r = 0; r < v; ++r) {
    for (Eigen::Index c = 0; c < h; ++c) p.embeddings(r, c) = rng.uniform(-0.05, 0.05);
  }
  for (Eigen::Index r = 0; r < v; ++r) {
    for (Eigen::Index c = 0; c < h; ++c) p.w_mlm(r, c) = rng.uniform(-0.05, 0.05);
  }
  p.b_mlm = Eigen::VectorXd::Zero(v);
  p.context_radius = context_radius;
  return p;
}

std::vector<PieceId> MeanContextEncoder::context_ids(const MaskedExample& ex, std::size_t slot,
                                                     std::size_t radius) {
  const std::size_t n = ex.input_ids.size();
  const std::size_t center = ex.masked_positions[slot];
  const std::size_t lo = radius == 0 || center < radius ? 0 : center - radius;
  const std::size_t hi = radius == 0 ? n : std::min(n, center + radius + 1);
  std::vector<PieceId> ids;
  auto masked = ex.masked_positions.begin();
  for (std::size_t q = lo; q < hi; ++q) {
    masked = std::lower_bound(masked, ex.masked_positions.end(), static_cast<std::uint32_t>(q));
    if (masked != ex.masked_positions.end() && *masked == q) continue;
    ids.push_back(ex.input_ids[q]);
  }
  return ids;
}

HiddenStates MeanContextEncoder::encode(const MaskedExample& ex, const TinyLmParams& params) const {
  HiddenStates out;
  const auto h = static_cast<Eigen::Index>(params.hidden_dim());
  const std::size_t slots = std::max(ex.weights.size(), ex.masked_positions.size());
  out.hidden = Eigen::MatrixXd::Zero(h, static_cast<Eigen::Index>(slots));
  out.empty_context.assign(slots, false);
  for (std::size_t i = 0; i < ex.masked_positions.size(); ++i) {
    const std::vector<PieceId> ids = context_ids(ex, i, params.context_radius);
    if (ids.empty()) {
      out.empty_context[i] = true;
      continue;
    }
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(h);
    for (const PieceId id : ids) sum += params.embeddings.row(id).transpose();
    out.hidden.col(static_cast<Eigen::Index>(i)) = sum / static_cast<double>(ids.size());
  }
  return out;
}

void MeanContextEncoder::backward(const MaskedExample& ex, const TinyLmParams& params,
                                  const Eigen::MatrixXd& d_hidden,
                                  Eigen::MatrixXd& d_embeddings) const {
  for (std::size_t i = 0; i < ex.masked_positions.size(); ++i) {
    const std::vector<PieceId> ids = context_ids(ex, i, params.context_radius);
    if (ids.empty()) continue;
    const Eigen::VectorXd share =
        d_hidden.col(static_cast<Eigen::Index>(i)) / static_cast<double>(ids.size());
    for (const PieceId id : ids) d_embeddings.row(id) += share.transpose();
  }
}

HiddenStates context_encode(const MaskedExample& example, const TinyLmParams& params) {
  return MeanContextEncoder().encode(example, params);
}

Eigen::MatrixXd predict(const Eigen::MatrixXd& hidden, const TinyLmParams& params) {
  require(hidden.rows() == params.w_mlm.cols(), "hidden dimension mismatch");
  Eigen::MatrixXd logits = params.w_mlm * hidden;
  logits.colwise() += params.b_mlm;
  if (!all_finite(logits)) fail(ErrorKind::kNumeric, "non-finite logits");
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
  return logits;
}

LossResult mlm_loss(std::span<const Eigen::MatrixXd> predictions,
                    std::span<const std::vector<PieceId>> labels,
                    std::span<const std::vector<double>> weights) {
  require(predictions.size() == labels.size() && labels.size() == weights.size(),
          "batch components differ in size");
  LossResult result;
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    const Eigen::MatrixXd& p = predictions[j];
    for (std::size_t i = 0; i < weights[j].size(); ++i) {
      const double w = weights[j][i];
      if (w == 0.0) continue;
      require(i < labels[j].size(), "weighted slot without a label");
      require(static_cast<Eigen::Index>(i) < p.cols(), "weighted slot without a prediction");
      const PieceId label = labels[j][i];
      require(label >= 0 && label < p.rows(), "label outside the vocabulary");
      double prob = p(label, static_cast<Eigen::Index>(i));
      if (prob < kProbabilityFloor) {
        prob = kProbabilityFloor;
        ++result.clamped;
      }
      numerator += -std::log(prob) * w;
      denominator += w;
    }
  }
  if (denominator == 0.0) fail(ErrorKind::kInvalidArgument, "no prediction slots");
  result.loss = numerator / denominator;
  return result;
}

double batch_loss(std::span<const MaskedExample> batch, const TinyLmParams& params,
                  const Encoder& encoder) {
  std::vector<Eigen::MatrixXd> predictions;
  std::vector<std::vector<PieceId>> labels;
  std::vector<std::vector<double>> weights;
  for (const MaskedExample& ex : batch) {
    predictions.push_back(predict(encoder.encode(ex, params).hidden, params));
    labels.push_back(ex.labels);
    weights.push_back(ex.weights);
  }
  return mlm_loss(predictions, labels, weights).loss;
}

Gradients compute_gradients(std::span<const MaskedExample> batch, const TinyLmParams& params,
                            const Encoder& encoder) {
  Gradients g;
  g.embeddings = Eigen::MatrixXd::Zero(params.embeddings.rows(), params.embeddings.cols());
  g.w_mlm = Eigen::MatrixXd::Zero(params.w_mlm.rows(), params.w_mlm.cols());
  g.b_mlm = Eigen::VectorXd::Zero(params.b_mlm.size());

  double total_weight = 0.0;
  for (const MaskedExample& ex : batch) {
    for (const double w : ex.weights) total_weight += w;
  }
  if (total_weight == 0.0) fail(ErrorKind::kInvalidArgument, "no prediction slots");

  double numerator = 0.0;
  for (const MaskedExample& ex : batch) {
    const HiddenStates states = encoder.encode(ex, params);
    const Eigen::MatrixXd probs = predict(states.hidden, params);
    // dL/dlogits = (p - onehot(label)) * w / sum(w), column per slot.
    Eigen::MatrixXd d_logits = Eigen::MatrixXd::Zero(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < ex.weights.size(); ++i) {
      const double w = ex.weights[i];
      if (w == 0.0) continue;
      const auto col = static_cast<Eigen::Index>(i);
      const PieceId label = ex.labels.at(i);
      numerator += -std::log(std::max(probs(label, col), kProbabilityFloor)) * w;
      d_logits.col(col) = probs.col(col) * (w / total_weight);
      d_logits(label, col) -= w / total_weight;
    }
    g.b_mlm += d_logits.rowwise().sum();
    g.w_mlm += d_logits * states.hidden.transpose();
    const Eigen::MatrixXd d_hidden = params.w_mlm.transpose() * d_logits;
    encoder.backward(ex, params, d_hidden, g.embeddings);
  }
  g.loss = numerator / total_weight;
  return g;
}

double grad_and_step(std::span<const MaskedExample> batch, TinyLmParams& params, double lr,
                     const Encoder& encoder) {
  require(lr >= 0.0 && std::isfinite(lr), "lr must be a non-negative finite number");
  const Gradients g = compute_gradients(batch, params, encoder);
  if (!all_finite(g.embeddings) || !all_finite(g.w_mlm) || !g.b_mlm.allFinite()) {
    fail(ErrorKind::kNumeric, "non-finite gradient");
  }
  if (lr > 0.0) {
    params.embeddings -= lr * g.embeddings;
    params.w_mlm -= lr * g.w_mlm;
    params.b_mlm -= lr * g.b_mlm;
  }
  return g.loss;
}

double grad_and_step(std::span<const MaskedExample> batch, TinyLmParams& params, double lr) {
  return grad_and_step(batch, params, lr, MeanContextEncoder());
}

EvalLosses evaluate(std::span<const MaskedExample> examples, const TinyLmParams& params,
                    const Encoder& encoder) {
  std::vector<SlotLoss> slots;
  double numerator = 0.0;
  double denominator = 0.0;
  for (const MaskedExample& ex : examples) {
    const Eigen::MatrixXd probs = predict(encoder.encode(ex, params).hidden, params);
    for (std::size_t i = 0; i < ex.masked_positions.size(); ++i) {
      const double w = ex.weights[i];
      if (w == 0.0) continue;
      const double nll =
          -std::log(std::max(probs(ex.labels[i], static_cast<Eigen::Index>(i)), kProbabilityFloor));
      numerator += nll * w;
      denominator += w;
      slots.push_back({nll, !ex.y.empty() && ex.y[ex.masked_positions[i]]});
    }
  }
  if (denominator == 0.0) fail(ErrorKind::kInvalidArgument, "no prediction slots");
  EvalLosses out;
  out.total = numerator / denominator;
  double sum[2] = {0, 0};
  std::size_t count[2] = {0, 0};
  for (const SlotLoss& s : slots) {
    sum[s.y] += s.nll;
    ++count[s.y];
  }
  if (count[1] > 0) out.nc = sum[1] / static_cast<double>(count[1]);
  if (count[0] > 0) out.non_nc = sum[0] / static_cast<double>(count[0]);
  return out;
}

std::vector<MetricsRow> train(std::span<const masking::TokenizedSequence> train_sequences,
                              std::span<const masking::TokenizedSequence> eval_sequences,
                              const masking::MaskingConfig& masking, const TrainConfig& config,
                              TinyLmParams* final_params) {
  masking.validate();
  require(!train_sequences.empty(), "training corpus is empty");
  require(!eval_sequences.empty(), "evaluation corpus is empty");
  require(config.batch_size >= 1, "batch_size must be at least 1");
  require(config.eval_every >= 1, "eval_every must be at least 1");
  require(config.hidden_dim >= 1, "hidden_dim must be at least 1");

  const MeanContextEncoder encoder;
  TinyLmParams params =
      init_params(masking.vocab_size, config.hidden_dim, config.context_radius, config.seed);

  masking::MaskingConfig eval_masking = masking;
  eval_masking.strategy = masking::Strategy::kMlm;
  std::vector<MaskedExample> eval_examples;
  eval_examples.reserve(eval_sequences.size());
  for (std::size_t i = 0; i < eval_sequences.size(); ++i) {
    Rng rng(config.seed, streams::kEval, i);
    eval_examples.push_back(masking::build_example(
        masking::truncate(eval_sequences[i], masking.max_seq_len), eval_masking, rng));
  }

  std::vector<MetricsRow> rows;
  const auto eval_row = [&](std::size_t step) {
    const EvalLosses e = evaluate(eval_examples, params, encoder);
    if (!std::isfinite(e.total)) {
      fail(ErrorKind::kNumeric, "evaluation loss diverged at step " + std::to_string(step) +
                                    " (lr " + format_double(config.lr) + ")");
    }
    rows.push_back({step, e.total, e.nc, e.non_nc, true});
  };
  eval_row(0);

  std::vector<MaskedExample> batch(config.batch_size);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    Rng pick(config.seed, streams::kTrainBatch, step);
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const auto& seq = train_sequences[pick.index(train_sequences.size())];
      Rng rng(masking.seed, streams::kMasking, (step - 1) * config.batch_size + b);
      batch[b] = masking::build_example(masking::truncate(seq, masking.max_seq_len), masking, rng);
    }
    const EvalLosses split = evaluate(batch, params, encoder);
    const double loss = grad_and_step(batch, params, config.lr, encoder);
    if (!std::isfinite(loss)) {
      fail(ErrorKind::kNumeric, "training loss diverged at step " + std::to_string(step) +
                                    " (lr " + format_double(config.lr) + ")");
    }
    rows.push_back({step, loss, split.nc, split.non_nc, false});
    if (step % config.eval_every == 0 || step == config.steps) eval_row(step);
  }
  if (final_params != nullptr) *final_params = std::move(params);
  return rows;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "step,total_loss,nc_token_loss,non_nc_token_loss,eval\n";
  const auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const MetricsRow& r : rows) {
    out << r.step << ',' << format_double(r.total_loss) << ',' << opt(r.nc_token_loss) << ','
        << opt(r.non_nc_token_loss) << ',' << (r.eval ? 1 : 0) << '\n';
  }
}

}  // namespace lim::tinylm
