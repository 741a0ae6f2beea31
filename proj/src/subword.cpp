#include "lim/subword.hpp"

#include <fstream>
#include <unordered_set>

#include "lim/error.hpp"
#include "lim/parallel.hpp"
#include "utf8.hpp"

namespace lim::subword {

Vocabulary Vocabulary::from_pieces(std::vector<std::string> pieces,
                                   std::string continuation_prefix, std::string unk_piece) {
  if (pieces.empty()) fail(ErrorKind::kInvalidArgument, "empty vocabulary");
  Vocabulary vocab;
  vocab.continuation_prefix_ = std::move(continuation_prefix);
  vocab.unk_piece_ = std::move(unk_piece);
  vocab.initial_.emplace_back();
  vocab.continuation_.emplace_back();

  std::unordered_set<std::string_view> seen;
  seen.reserve(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].empty()) fail(ErrorKind::kInvalidArgument, "empty piece at id " + std::to_string(i));
    if (!seen.insert(pieces[i]).second) {
      fail(ErrorKind::kInvalidArgument, "duplicate piece: " + pieces[i]);
    }
  }
  vocab.pieces_ = std::move(pieces);

  const std::string& prefix = vocab.continuation_prefix_;
  for (std::size_t i = 0; i < vocab.pieces_.size(); ++i) {
    const std::string_view p = vocab.pieces_[i];
    const auto id = static_cast<PieceId>(i);
    if (!prefix.empty() && p.size() > prefix.size() && p.starts_with(prefix)) {
      vocab.insert(vocab.continuation_, p.substr(prefix.size()), id);
    } else {
      vocab.insert(vocab.initial_, p, id);
    }
  }
  const auto unk = vocab.find(vocab.unk_piece_);
  if (!unk) fail(ErrorKind::kInvalidArgument, "vocabulary lacks unk piece " + vocab.unk_piece_);
  vocab.unk_id_ = *unk;
  return vocab;
}

void Vocabulary::insert(std::vector<Node>& trie, std::string_view key, PieceId id) {
  std::uint32_t node = 0;
  for (const char c : key) {
    const auto byte = static_cast<unsigned char>(c);
    auto it = trie[node].children.find(byte);
    if (it == trie[node].children.end()) {
      const auto next = static_cast<std::uint32_t>(trie.size());
      trie[node].children.emplace(byte, next);
      trie.emplace_back();
      node = next;
    } else {
      node = it->second;
    }
  }
  trie[node].id = id;
}

std::optional<PieceId> Vocabulary::lookup(const std::vector<Node>& trie,
                                          std::string_view key) const {
  std::uint32_t node = 0;
  for (const char c : key) {
    const auto it = trie[node].children.find(static_cast<unsigned char>(c));
    if (it == trie[node].children.end()) return std::nullopt;
    node = it->second;
  }
  return trie[node].id;
}

std::optional<PieceId> Vocabulary::find(std::string_view piece) const {
  const std::string& prefix = continuation_prefix_;
  if (!prefix.empty() && piece.size() > prefix.size() && piece.starts_with(prefix)) {
    return lookup(continuation_, piece.substr(prefix.size()));
  }
  return lookup(initial_, piece);
}

std::size_t Vocabulary::longest_match(std::string_view text, std::size_t offset,
                                      bool continuation) const {
  const std::vector<Node>& trie = continuation ? continuation_ : initial_;
  std::uint32_t node = 0;
  std::size_t best = 0;
  for (std::size_t i = offset; i < text.size(); ++i) {
    const auto it = trie[node].children.find(static_cast<unsigned char>(text[i]));
    if (it == trie[node].children.end()) break;
    node = it->second;
    if (trie[node].id) best = i + 1 - offset;
  }
  return best;
}

Vocabulary load_vocab(const std::filesystem::path& path, std::string continuation_prefix,
                      std::string unk_piece) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::string> pieces;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      fail(ErrorKind::kParse, "empty piece at line " + std::to_string(line_number));
    }
    pieces.push_back(std::move(line));
  }
  if (pieces.empty()) fail(ErrorKind::kParse, "empty vocabulary file " + path.string());
  try {
    return Vocabulary::from_pieces(std::move(pieces), std::move(continuation_prefix),
                                   std::move(unk_piece));
  } catch (const Error& e) {
    fail(ErrorKind::kParse, e.what());
  }
}

WordEncoding encode_word_ids(std::string_view word, const Vocabulary& vocab) {
  WordEncoding out;
  const auto unk = [&] {
    out.pieces.assign(1, vocab.unk_piece());
    out.ids.assign(1, vocab.unk_id());
    return out;
  };
  if (word.empty() || utf8::length(word) > kMaxWordChars) return unk();

  std::size_t start = 0;
  while (start < word.size()) {
    const bool continuation = start > 0;
    const std::size_t len = vocab.longest_match(word, start, continuation);
    if (len == 0) return unk();
    std::string piece = continuation ? vocab.continuation_prefix() : std::string();
    piece.append(word.substr(start, len));
    out.ids.push_back(*vocab.find(piece));
    out.pieces.push_back(std::move(piece));
    start += len;
  }
  return out;
}

std::vector<std::string> encode_word(std::string_view word, const Vocabulary& vocab) {
  return encode_word_ids(word, vocab).pieces;
}

Encoding encode_sentence(std::string_view sentence, const Vocabulary& vocab) {
  Encoding enc;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && utf8::is_ascii_space(sentence[i])) ++i;
    std::size_t j = i;
    while (j < sentence.size() && !utf8::is_ascii_space(sentence[j])) ++j;
    if (j > i) {
      WordEncoding word = encode_word_ids(sentence.substr(i, j - i), vocab);
      for (std::size_t p = 0; p < word.ids.size(); ++p) {
        enc.pieces.push_back(std::move(word.pieces[p]));
        enc.ids.push_back(word.ids[p]);
        enc.word_index.push_back(enc.word_count);
      }
      ++enc.word_count;
    }
    i = j;
  }
  if (enc.word_count == 0) fail(ErrorKind::kInvalidArgument, "empty sentence");
  enc.split_ratio = static_cast<double>(enc.pieces.size()) / static_cast<double>(enc.word_count);
  return enc;
}

double SplitStats::mean_split_ratio() const {
  return n_sentences == 0 ? 0.0 : ratio_sum / static_cast<double>(n_sentences);
}

void SplitStats::add(const Encoding& encoding) {
  ++n_sentences;
  ratio_sum += encoding.split_ratio;
  ++encoding_hist[encoding.pieces.size()];
  ++word_hist[encoding.word_count];
}

void SplitStats::merge(const SplitStats& other) {
  n_sentences += other.n_sentences;
  ratio_sum += other.ratio_sum;
  for (const auto& [k, v] : other.encoding_hist) encoding_hist[k] += v;
  for (const auto& [k, v] : other.word_hist) word_hist[k] += v;
}

SplitStats corpus_split_stats(std::span<const std::string> sentences, const Vocabulary& vocab,
                              std::size_t workers) {
  if (sentences.empty()) fail(ErrorKind::kInvalidArgument, "empty sentence stream");
  // Per-sentence results are reduced in input order so the floating-point sum
  // does not depend on the worker count.
  std::vector<Encoding> encodings(sentences.size());
  parallel_for(sentences.size(), workers,
               [&](std::size_t i) { encodings[i] = encode_sentence(sentences[i], vocab); });
  SplitStats stats;
  for (const Encoding& e : encodings) stats.add(e);
  return stats;
}

}  // namespace lim::subword
