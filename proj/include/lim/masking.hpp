#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lim/chunker.hpp"
#include "lim/rng.hpp"
#include "lim/subword.hpp"

namespace lim::masking {

using subword::PieceId;

enum class Strategy { kMlm, kLim };

/// Which pool a LIM sequence drew its masked positions from.
enum class Branch { kNc, kNonNc, kNone };

Strategy parse_strategy(std::string_view name);
std::string_view strategy_name(Strategy strategy);
Branch parse_branch(std::string_view name);
std::string_view branch_name(Branch branch);

/// What a selected position is replaced with. Fractions must sum to 1.
struct ReplacePolicy {
  double mask_frac = 0.8;
  double random_frac = 0.1;
  double keep_frac = 0.1;
};

struct MaskingConfig {
  double mask_prob = 0.15;
  std::size_t max_pred = 20;
  std::size_t max_seq_len = 128;
  Strategy strategy = Strategy::kMlm;
  /// Probability that a LIM sequence masks only noun-chunk pieces.
  double p_nc = 0.75;
  ReplacePolicy replace;
  std::uint64_t seed = 12345;
  PieceId mask_id = 0;
  /// Random replacements are drawn uniformly from [0, vocab_size).
  std::size_t vocab_size = 1;

  /// Throws on out-of-range values.
  void validate() const;
};

/// Piece ids of one sentence with the noun-chunk flag each piece inherits
/// from its source word.
struct TokenizedSequence {
  std::vector<PieceId> pieces;
  std::vector<bool> y;
  std::string doc_id;
};

struct MaskedExample {
  std::vector<PieceId> input_ids;
  std::vector<std::uint32_t> masked_positions;
  std::vector<PieceId> labels;
  /// One slot per prediction; 1 for real slots, 0 for padding. Size max_pred.
  std::vector<double> weights;
  Strategy strategy = Strategy::kMlm;
  Branch branch = Branch::kNone;
  std::string doc_id;
  /// Noun-chunk flag of every input position.
  std::vector<bool> y;
  /// Set when the coin's pool was empty and the other pool was used.
  bool fallback = false;

  friend bool operator==(const MaskedExample&, const MaskedExample&) = default;
};

struct SentencePair {
  TokenizedSequence first;
  TokenizedSequence second;
  bool is_next = false;
};

/// Encodes every token of the sentence; each piece inherits its word's flag.
TokenizedSequence tokenize_annotated(const chunker::AnnotatedSentence& sentence,
                                     const subword::Vocabulary& vocab, std::string doc_id);

/// Encodes a plain sentence; no piece is flagged.
TokenizedSequence tokenize_plain(std::string_view sentence, const subword::Vocabulary& vocab,
                                 std::string doc_id);

/// min(max_pred, max(1, round(mask_prob * seq_len))).
std::size_t select_mask_count(std::size_t seq_len, const MaskingConfig& config);

/// Truncates pieces and flags to max_seq_len.
TokenizedSequence truncate(TokenizedSequence seq, std::size_t max_seq_len);

/// Positions drawn uniformly without replacement from every position.
MaskedExample build_mlm_example(const TokenizedSequence& seq, const MaskingConfig& config,
                                Rng& rng);

/// One coin per sequence picks the noun-chunk pool (probability p_nc) or the
/// non-chunk pool; positions are drawn only from that pool. The count is
/// capped at the pool size; an empty pool falls back to the other one.
MaskedExample build_lim_example(const TokenizedSequence& seq, const MaskingConfig& config,
                                Rng& rng);

MaskedExample build_example(const TokenizedSequence& seq, const MaskingConfig& config, Rng& rng);

/// Sequence i uses the sub-generator (seed, i); identical output for any
/// worker count.
std::vector<MaskedExample> generate_examples(std::span<const TokenizedSequence> sequences,
                                             const MaskingConfig& config,
                                             std::size_t workers = 1);

enum class PairMode { kRandom, kForcePositive, kForceNegative };

/// Adjacent sentences within each document become pairs; each is kept as the
/// true next sentence with probability 1/2, otherwise its second half is
/// replaced by a uniformly drawn sentence of another document.
std::vector<SentencePair> build_sentence_pairs(
    std::span<const std::vector<TokenizedSequence>> documents, const MaskingConfig& config,
    PairMode mode = PairMode::kRandom, std::size_t workers = 1);

void write_example(std::ostream& out, const MaskedExample& example);
void write_examples(std::span<const MaskedExample> examples, const std::filesystem::path& path);
std::vector<MaskedExample> read_examples(const std::filesystem::path& path);

/// Streaming reader; errors name the offending line.
class ExampleReader {
 public:
  explicit ExampleReader(const std::filesystem::path& path);

  std::optional<MaskedExample> next();

 private:
  std::ifstream in_;
  std::size_t line_number_ = 0;
};

void write_pair(std::ostream& out, const SentencePair& pair);

}  // namespace lim::masking
