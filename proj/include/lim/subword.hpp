#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lim::subword {

using PieceId = std::int32_t;

/// Immutable subword vocabulary. Ids are dense and follow insertion order.
/// Word-initial pieces and continuation pieces (prefix stripped) live in two
/// byte tries, so the longest match at a position is one walk.
class Vocabulary {
 public:
  static constexpr std::string_view kDefaultContinuationPrefix = "##";
  static constexpr std::string_view kDefaultUnkPiece = "[UNK]";
  static constexpr std::string_view kDefaultMaskPiece = "[MASK]";

  /// Throws on duplicate pieces, an empty list, or a missing unk piece.
  static Vocabulary from_pieces(std::vector<std::string> pieces,
                                std::string continuation_prefix = std::string(kDefaultContinuationPrefix),
                                std::string unk_piece = std::string(kDefaultUnkPiece));

  std::size_t size() const { return pieces_.size(); }
  const std::string& piece(PieceId id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  std::optional<PieceId> find(std::string_view piece) const;
  bool contains(std::string_view piece) const { return find(piece).has_value(); }

  const std::string& continuation_prefix() const { return continuation_prefix_; }
  const std::string& unk_piece() const { return unk_piece_; }
  PieceId unk_id() const { return unk_id_; }

  /// Byte length of the longest piece matching `text` at `offset`, using the
  /// continuation trie when `continuation` is set. Zero when nothing matches.
  std::size_t longest_match(std::string_view text, std::size_t offset, bool continuation) const;

 private:
  struct Node {
    std::map<unsigned char, std::uint32_t> children;
    std::optional<PieceId> id;
  };

  void insert(std::vector<Node>& trie, std::string_view key, PieceId id);
  std::optional<PieceId> lookup(const std::vector<Node>& trie, std::string_view key) const;

  std::vector<std::string> pieces_;
  std::string continuation_prefix_;
  std::string unk_piece_;
  PieceId unk_id_ = 0;
  std::vector<Node> initial_;
  std::vector<Node> continuation_;
};

/// One piece per line, line order = id. Throws "duplicate piece: X" or on an
/// empty file.
Vocabulary load_vocab(const std::filesystem::path& path,
                      std::string continuation_prefix = std::string(Vocabulary::kDefaultContinuationPrefix),
                      std::string unk_piece = std::string(Vocabulary::kDefaultUnkPiece));

/// Words longer than this many code points encode as the unk piece.
inline constexpr std::size_t kMaxWordChars = 200;

struct WordEncoding {
  std::vector<std::string> pieces;
  std::vector<PieceId> ids;
};

/// Greedy longest-match-first encoding. The first piece is word-initial, the
/// rest carry the continuation prefix; an unencodable word becomes [unk].
WordEncoding encode_word_ids(std::string_view word, const Vocabulary& vocab);
std::vector<std::string> encode_word(std::string_view word, const Vocabulary& vocab);

struct Encoding {
  std::vector<std::string> pieces;
  std::vector<PieceId> ids;
  /// Index of the source word of each piece.
  std::vector<std::size_t> word_index;
  std::size_t word_count = 0;
  double split_ratio = 0.0;
};

/// Splits on whitespace and encodes every word. Throws on a sentence without
/// words.
Encoding encode_sentence(std::string_view sentence, const Vocabulary& vocab);

/// Mergeable split-ratio statistics.
struct SplitStats {
  std::uint64_t n_sentences = 0;
  double ratio_sum = 0.0;
  std::map<std::size_t, std::uint64_t> encoding_hist;
  std::map<std::size_t, std::uint64_t> word_hist;

  double mean_split_ratio() const;
  void add(const Encoding& encoding);
  void merge(const SplitStats& other);
};

/// Throws on an empty sentence list.
SplitStats corpus_split_stats(std::span<const std::string> sentences, const Vocabulary& vocab,
                              std::size_t workers = 1);

}  // namespace lim::subword
