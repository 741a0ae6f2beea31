#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lim/masking.hpp"

namespace lim::tinylm {

using masking::MaskedExample;
using masking::PieceId;

/// Reference masked-LM head: embedding table, output projection and bias.
struct TinyLmParams {
  Eigen::MatrixXd embeddings;  // V x H
  Eigen::MatrixXd w_mlm;       // V x H
  Eigen::VectorXd b_mlm;       // V
  /// Context half-width of the encoder; 0 means the whole sequence.
  std::size_t context_radius = 0;

  std::size_t vocab_size() const { return static_cast<std::size_t>(w_mlm.rows()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(w_mlm.cols()); }
};

/// Embeddings and projection uniform in (-0.05, 0.05), bias zero.
TinyLmParams init_params(std::size_t vocab_size, std::size_t hidden_dim,
                         std::size_t context_radius, std::uint64_t seed);

/// Final hidden vectors of the prediction slots, one column per slot
/// (H x max_pred). Padding columns are zero.
struct HiddenStates {
  Eigen::MatrixXd hidden;
  /// Slot had no usable context and its hidden vector is zero.
  std::vector<bool> empty_context;
};

/// Produces the hidden vectors at the masked positions. Selecting those
/// columns of the per-position outputs is the one-hot contraction with the
/// masking matrix.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual HiddenStates encode(const MaskedExample& example, const TinyLmParams& params) const = 0;
  /// Adds dL/d(embeddings) given dL/d(hidden) (H x max_pred).
  virtual void backward(const MaskedExample& example, const TinyLmParams& params,
                        const Eigen::MatrixXd& d_hidden, Eigen::MatrixXd& d_embeddings) const = 0;
};

/// Mean of the embeddings of unmasked pieces within context_radius of the
/// masked position (every unmasked piece when the radius is 0).
class MeanContextEncoder final : public Encoder {
 public:
  HiddenStates encode(const MaskedExample& example, const TinyLmParams& params) const override;
  void backward(const MaskedExample& example, const TinyLmParams& params,
                const Eigen::MatrixXd& d_hidden, Eigen::MatrixXd& d_embeddings) const override;

  /// Input ids feeding slot `slot`.
  static std::vector<PieceId> context_ids(const MaskedExample& example, std::size_t slot,
                                          std::size_t radius);
};

HiddenStates context_encode(const MaskedExample& example, const TinyLmParams& params);

/// softmax(W_mlm x + b_mlm) for every column x of `hidden`; V x K result.
/// Throws on non-finite logits.
Eigen::MatrixXd predict(const Eigen::MatrixXd& hidden, const TinyLmParams& params);

inline constexpr double kProbabilityFloor = 1e-12;

struct LossResult {
  double loss = 0.0;
  /// Label probabilities raised to kProbabilityFloor.
  std::size_t clamped = 0;
};

/// Weighted mean cross-entropy over all prediction slots of the batch:
///   sum_j sum_i -log(p_ij[label_ij]) w_ij / sum_j sum_i w_ij.
/// predictions[j] is V x K_j, labels[j] and weights[j] have one entry per slot
/// (labels may stop at the last weighted slot). Throws when every weight is 0.
LossResult mlm_loss(std::span<const Eigen::MatrixXd> predictions,
                    std::span<const std::vector<PieceId>> labels,
                    std::span<const std::vector<double>> weights);

struct Gradients {
  Eigen::MatrixXd embeddings;
  Eigen::MatrixXd w_mlm;
  Eigen::VectorXd b_mlm;
  double loss = 0.0;
};

double batch_loss(std::span<const MaskedExample> batch, const TinyLmParams& params,
                  const Encoder& encoder);

/// Analytic gradients of the batch loss.
Gradients compute_gradients(std::span<const MaskedExample> batch, const TinyLmParams& params,
                            const Encoder& encoder);

/// One plain gradient-descent step; returns the pre-step loss. lr = 0 leaves
/// the parameters untouched. Throws on negative lr or non-finite gradients.
double grad_and_step(std::span<const MaskedExample> batch, TinyLmParams& params, double lr,
                     const Encoder& encoder);
double grad_and_step(std::span<const MaskedExample> batch, TinyLmParams& params, double lr);

struct TrainConfig {
  double lr = 0.5;
  std::size_t steps = 2000;
  std::size_t batch_size = 32;
  std::size_t eval_every = 100;
  std::uint64_t seed = 1;
  std::size_t context_radius = 2;
  std::size_t hidden_dim = 16;
};

struct MetricsRow {
  std::size_t step = 0;
  double total_loss = 0.0;
  std::optional<double> nc_token_loss;
  std::optional<double> non_nc_token_loss;
  bool eval = false;
};

struct EvalLosses {
  double total = 0.0;
  std::optional<double> nc;
  std::optional<double> non_nc;
};

/// Total loss plus mean -log p split by the y flag of the masked position.
EvalLosses evaluate(std::span<const MaskedExample> examples, const TinyLmParams& params,
                    const Encoder& encoder);

/// Trains on masked examples drawn from `train_sequences` under `masking`.
/// Evaluation examples are masked once with plain MLM (same mask_prob) so
/// runs with different strategies share one held-out set. Emits an eval row at
/// step 0, every eval_every steps and after the last step, plus one training
/// row per step.
std::vector<MetricsRow> train(std::span<const masking::TokenizedSequence> train_sequences,
                              std::span<const masking::TokenizedSequence> eval_sequences,
                              const masking::MaskingConfig& masking, const TrainConfig& config,
                              TinyLmParams* final_params = nullptr);

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);

}  // namespace lim::tinylm
