#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lim::chunker {

/// Universal POS tags.
enum class Pos {
  kAdj, kAdp, kAdv, kAux, kCconj, kDet, kIntj, kNoun, kNum,
  kPart, kPron, kPropn, kPunct, kSconj, kSym, kVerb, kX,
};

/// Returns nullopt for tags outside the universal set.
std::optional<Pos> parse_pos(std::string_view tag);
std::string_view pos_name(Pos pos);

struct AnnotatedToken {
  std::string surface;
  Pos pos = Pos::kX;
};

/// Half-open token range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  bool contains(std::size_t k) const { return k >= begin && k < end; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Tokens with noun-chunk spans and the per-token membership flags derived
/// from them. Construct through from_spans/from_flags so the two views agree.
struct AnnotatedSentence {
  std::vector<AnnotatedToken> tokens;
  std::vector<Span> chunk_spans;
  std::vector<bool> y;

  /// Throws on unsorted, overlapping, empty or out-of-bounds spans.
  static AnnotatedSentence from_spans(std::vector<AnnotatedToken> tokens,
                                      std::vector<Span> spans);
};

std::vector<bool> flags_from_spans(std::size_t n_tokens, std::span<const Span> spans);

/// Maximal runs of true flags. Adjacent chunks are indistinguishable in the
/// flag view, so this inverts flags_from_spans only for non-touching spans.
std::vector<Span> spans_from_flags(const std::vector<bool>& y);

/// Rule chunker: leftmost-longest matches of
///   DET? (ADJ | NUM | NOUN | PROPN | hyphen-or-slash PUNCT between nominals)* (NOUN | PROPN)
std::vector<Span> extract_noun_chunks(std::span<const AnnotatedToken> tokens);

/// Keeps spans of at most max_len tokens, order preserved.
std::vector<Span> filter_chunks(std::span<const Span> spans, std::size_t max_len = 10);

inline constexpr std::size_t kDefaultMaxChunkLength = 10;

/// Reader for the annotation TSV: `surface<TAB>pos<TAB>chunk_id` per token,
/// chunk_id `-` outside chunks, blank line between sentences.
class AnnotationReader {
 public:
  explicit AnnotationReader(const std::filesystem::path& path);

  std::optional<AnnotatedSentence> next();

  std::size_t unknown_pos_count() const { return unknown_pos_; }

 private:
  std::ifstream in_;
  std::size_t line_number_ = 0;
  std::size_t unknown_pos_ = 0;
};

std::vector<AnnotatedSentence> parse_annotations(const std::filesystem::path& path,
                                                 std::size_t* unknown_pos = nullptr);

void write_annotations(std::ostream& out, std::span<const AnnotatedSentence> sentences);

/// Chunk-length histogram plus token counts. Moments are derived from the
/// integer histogram so merged shards agree with a sequential run exactly.
struct ChunkStats {
  std::map<std::size_t, std::uint64_t> histogram;
  std::uint64_t n_sentences = 0;
  std::uint64_t n_tokens = 0;
  std::uint64_t n_chunk_tokens = 0;
  std::uint64_t n_filtered = 0;

  std::uint64_t n_chunks() const;
  double mean() const;
  /// Population standard deviation.
  double sd() const;
  double token_nc_prob() const;

  /// Applies the length filter, then counts chunks and flagged tokens.
  void add(const AnnotatedSentence& sentence, std::size_t max_len = kDefaultMaxChunkLength);
  void merge(const ChunkStats& other);
};

/// Throws when the corpus holds no tokens.
ChunkStats chunk_stats(std::span<const AnnotatedSentence> corpus,
                       std::size_t max_len = kDefaultMaxChunkLength);

}  // namespace lim::chunker
