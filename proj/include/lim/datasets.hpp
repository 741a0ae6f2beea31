#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lim::datasets {

struct Citation {
  std::string cited_pub_number;
  /// Single-letter search-report category, e.g. "X", "Y", "A".
  std::string category;
};

struct PatentRecord {
  std::string pub_number;
  std::string title;
  std::string abstract;
  std::string claims;
  std::string description;
  std::vector<std::string> ipc_tags;
  std::vector<Citation> citations;
};

struct IpcExample {
  std::string pub_number;
  std::string text;
  std::string label;
};

struct SimilarityPair {
  std::string id_a;
  std::string id_b;
  std::string text_a;
  std::string text_b;
  bool label = false;
};

/// Section letter, two class digits and subclass letter of an IPC code,
/// uppercased. "A61K 31/00" -> "A61K". Throws "malformed IPC tag: ...".
std::string ipc_subclass(std::string_view full_tag);

struct IpcBuildCounters {
  std::size_t skipped_no_tags = 0;
  std::size_t skipped_empty_claims = 0;
  std::size_t malformed_tags = 0;
};

/// The most frequent subclass of a record's tags; ties go to the
/// lexicographically smallest. Text is the normalized claims.
std::vector<IpcExample> build_ipc_examples(std::span<const PatentRecord> records,
                                           IpcBuildCounters* counters = nullptr);

struct PairBuildCounters {
  std::size_t positives = 0;
  std::size_t dropped_same_document = 0;
  std::size_t dropped_after_redraws = 0;
  std::size_t redraws = 0;
};

inline constexpr int kMaxNegativeRedraws = 10;

/// Positives are the ordered (citing, cited) X-category citations between
/// records with non-empty claims. Each positive's citing patent gets one
/// negative partner drawn from the patents that occur in positives. Drawing
/// the anchor itself drops both the negative and its positive; drawing a known
/// X partner redraws up to kMaxNegativeRedraws times. Output is shuffled.
std::vector<SimilarityPair> build_similarity_pairs(std::span<const PatentRecord> records,
                                                   std::uint64_t seed,
                                                   PairBuildCounters* counters = nullptr);

struct SplitResult {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded split of item indices. Items sharing a group key stay together;
/// groups are shuffled and assigned to train until it holds
/// round(train_fraction * n) items. Throws unless the fractions sum to 1.
SplitResult split_dataset(std::span<const std::string> group_keys, double train_fraction,
                          double test_fraction, std::uint64_t seed);

/// Unordered key "min|max" so (a, b) and (b, a) share a split.
std::string pair_group_key(const SimilarityPair& pair);

/// JSONL patent records: pub_number, title, abstract, claims, description,
/// ipc (semicolon-joined string or list), citations (list of {pub, category}).
class PatentReader {
 public:
  explicit PatentReader(const std::filesystem::path& path);
  std::optional<PatentRecord> next();

 private:
  std::ifstream in_;
  std::size_t line_number_ = 0;
};

std::vector<PatentRecord> read_patents(const std::filesystem::path& path);

void write_ipc_example(std::ostream& out, const IpcExample& example);
void write_similarity_pair(std::ostream& out, const SimilarityPair& pair);

}  // namespace lim::datasets
