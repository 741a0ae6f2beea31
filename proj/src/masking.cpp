#include "lim/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "lim/error.hpp"
#include "lim/parallel.hpp"

namespace lim::masking {
namespace {

using nlohmann::json;

/// Draws `count` distinct entries of `pool` (partial Fisher-Yates), sorted.
std::vector<std::uint32_t> draw_positions(std::vector<std::uint32_t> pool, std::size_t count,
                                          Rng& rng) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

MaskedExample finish_example(const TokenizedSequence& seq, std::vector<std::uint32_t> positions,
                             const MaskingConfig& config, Rng& rng) {
  MaskedExample ex;
  ex.input_ids = seq.pieces;
  ex.y = seq.y;
  ex.doc_id = seq.doc_id;
  ex.strategy = config.strategy;
  ex.labels.reserve(positions.size());
  for (const std::uint32_t pos : positions) {
    ex.labels.push_back(seq.pieces[pos]);
    const double u = rng.uniform();
    if (u < config.replace.mask_frac) {
      ex.input_ids[pos] = config.mask_id;
    } else if (u < config.replace.mask_frac + config.replace.random_frac) {
      ex.input_ids[pos] = static_cast<PieceId>(rng.index(config.vocab_size));
    }
  }
  ex.weights.assign(config.max_pred, 0.0);
  std::fill_n(ex.weights.begin(), positions.size(), 1.0);
  ex.masked_positions = std::move(positions);
  return ex;
}

void check_sequence(const TokenizedSequence& seq) {
  if (seq.pieces.empty()) fail(ErrorKind::kInvalidArgument, "empty sequence");
  if (seq.y.size() != seq.pieces.size()) {
    fail(ErrorKind::kInvalidArgument, "chunk flags do not match sequence length");
  }
}

template <typename T>
std::vector<T> get_array(const json& record, const char* field, std::size_t line) {
  const auto it = record.find(field);
  if (it == record.end() || !it->is_array()) {
    fail(ErrorKind::kParse,
         "missing field: " + std::string(field) + " at line " + std::to_string(line));
  }
  try {
    return it->get<std::vector<T>>();
  } catch (const json::exception&) {
    fail(ErrorKind::kParse, "bad field " + std::string(field) + " at line " + std::to_string(line));
  }
}

json sequence_json(const TokenizedSequence& seq) {
  std::vector<int> y(seq.y.begin(), seq.y.end());
  return json{{"doc_id", seq.doc_id}, {"pieces", seq.pieces}, {"y", y}};
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "mlm") return Strategy::kMlm;
  if (name == "lim") return Strategy::kLim;
  fail(ErrorKind::kInvalidArgument, "unknown strategy: " + std::string(name));
}

std::string_view strategy_name(Strategy strategy) {
  return strategy == Strategy::kLim ? "lim" : "mlm";
}

Branch parse_branch(std::string_view name) {
  if (name == "nc") return Branch::kNc;
  if (name == "non_nc") return Branch::kNonNc;
  if (name == "n/a") return Branch::kNone;
  fail(ErrorKind::kInvalidArgument, "unknown branch: " + std::string(name));
}

std::string_view branch_name(Branch branch) {
  switch (branch) {
    case Branch::kNc: return "nc";
    case Branch::kNonNc: return "non_nc";
    case Branch::kNone: break;
  }
  return "n/a";
}

void MaskingConfig::validate() const {
  require(mask_prob > 0.0 && mask_prob < 1.0, "mask_prob must be in (0, 1)");
  require(max_pred >= 1, "max_pred must be at least 1");
  require(max_seq_len >= 1, "max_seq_len must be at least 1");
  require(p_nc >= 0.0 && p_nc <= 1.0, "p_nc must be in [0, 1]");
  require(replace.mask_frac >= 0 && replace.random_frac >= 0 && replace.keep_frac >= 0,
          "replacement fractions must be non-negative");
  require(std::abs(replace.mask_frac + replace.random_frac + replace.keep_frac - 1.0) < 1e-9,
          "replacement fractions must sum to 1");
  require(vocab_size >= 1, "vocab_size must be at least 1");
  require(mask_id >= 0 && static_cast<std::size_t>(mask_id) < vocab_size,
          "mask_id must lie inside the vocabulary");
}

TokenizedSequence tokenize_annotated(const chunker::AnnotatedSentence& sentence,
                                     const subword::Vocabulary& vocab, std::string doc_id) {
  TokenizedSequence seq;
  seq.doc_id = std::move(doc_id);
  for (std::size_t k = 0; k < sentence.tokens.size(); ++k) {
    const auto word = subword::encode_word_ids(sentence.tokens[k].surface, vocab);
    seq.pieces.insert(seq.pieces.end(), word.ids.begin(), word.ids.end());
    seq.y.insert(seq.y.end(), word.ids.size(), sentence.y[k]);
  }
  return seq;
}

TokenizedSequence tokenize_plain(std::string_view sentence, const subword::Vocabulary& vocab,
                                 std::string doc_id) {
  const subword::Encoding enc = subword::encode_sentence(sentence, vocab);
  return {enc.ids, std::vector<bool>(enc.ids.size(), false), std::move(doc_id)};
}

std::size_t select_mask_count(std::size_t seq_len, const MaskingConfig& config) {
  const auto rounded = static_cast<std::size_t>(
      std::llround(config.mask_prob * static_cast<double>(seq_len)));
  return std::min(config.max_pred, std::max<std::size_t>(1, rounded));
}

TokenizedSequence truncate(TokenizedSequence seq, std::size_t max_seq_len) {
  if (seq.pieces.size() > max_seq_len) {
    seq.pieces.resize(max_seq_len);
    seq.y.resize(max_seq_len);
  }
  return seq;
}

MaskedExample build_mlm_example(const TokenizedSequence& seq, const MaskingConfig& config,
                                Rng& rng) {
  check_sequence(seq);
  std::vector<std::uint32_t> pool(seq.pieces.size());
  std::iota(pool.begin(), pool.end(), 0u);
  auto positions = draw_positions(std::move(pool), select_mask_count(seq.pieces.size(), config), rng);
  MaskedExample ex = finish_example(seq, std::move(positions), config, rng);
  ex.strategy = Strategy::kMlm;
  ex.branch = Branch::kNone;
  return ex;
}

MaskedExample build_lim_example(const TokenizedSequence& seq, const MaskingConfig& config,
                                Rng& rng) {
  check_sequence(seq);
  std::vector<std::uint32_t> nc_pool;
  std::vector<std::uint32_t> other_pool;
  for (std::uint32_t k = 0; k < seq.pieces.size(); ++k) {
    (seq.y[k] ? nc_pool : other_pool).push_back(k);
  }
  Branch branch = rng.bernoulli(config.p_nc) ? Branch::kNc : Branch::kNonNc;
  bool fallback = false;
  if ((branch == Branch::kNc ? nc_pool : other_pool).empty()) {
    branch = branch == Branch::kNc ? Branch::kNonNc : Branch::kNc;
    fallback = true;
  }
  auto& pool = branch == Branch::kNc ? nc_pool : other_pool;
  auto positions =
      draw_positions(std::move(pool), select_mask_count(seq.pieces.size(), config), rng);
  MaskedExample ex = finish_example(seq, std::move(positions), config, rng);
  ex.strategy = Strategy::kLim;
  ex.branch = branch;
  ex.fallback = fallback;
  return ex;
}

MaskedExample build_example(const TokenizedSequence& seq, const MaskingConfig& config, Rng& rng) {
  return config.strategy == Strategy::kLim ? build_lim_example(seq, config, rng)
                                           : build_mlm_example(seq, config, rng);
}

std::vector<MaskedExample> generate_examples(std::span<const TokenizedSequence> sequences,
                                             const MaskingConfig& config, std::size_t workers) {
  config.validate();
  std::vector<MaskedExample> out(sequences.size());
  parallel_for(sequences.size(), workers, [&](std::size_t i) {
    Rng rng(config.seed, streams::kMasking, i);
    out[i] = build_example(truncate(sequences[i], config.max_seq_len), config, rng);
  });
  return out;
}

std::vector<SentencePair> build_sentence_pairs(
    std::span<const std::vector<TokenizedSequence>> documents, const MaskingConfig& config,
    PairMode mode, std::size_t workers) {
  // Global sentence index: document d owns [offset[d], offset[d + 1]).
  std::vector<std::size_t> offset(documents.size() + 1, 0);
  std::vector<std::size_t> pair_offset(documents.size() + 1, 0);
  std::size_t docs_with_sentences = 0;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    const std::size_t n = documents[d].size();
    offset[d + 1] = offset[d] + n;
    pair_offset[d + 1] = pair_offset[d] + (n >= 2 ? n - 1 : 0);
    if (n > 0) ++docs_with_sentences;
  }
  const std::size_t total = offset.back();
  if (mode != PairMode::kForcePositive && docs_with_sentences < 2 && pair_offset.back() > 0) {
    fail(ErrorKind::kInvalidArgument, "negative pairs need at least 2 documents");
  }
  const auto sentence_at = [&](std::size_t g) -> const TokenizedSequence& {
    const auto it = std::upper_bound(offset.begin(), offset.end(), g);
    const auto d = static_cast<std::size_t>(it - offset.begin()) - 1;
    return documents[d][g - offset[d]];
  };

  std::vector<SentencePair> pairs(pair_offset.back());
  parallel_for(documents.size(), workers, [&](std::size_t d) {
    const auto& doc = documents[d];
    if (doc.size() < 2) return;
    Rng rng(config.seed, streams::kPairs, d);
    const std::size_t own = doc.size();
    for (std::size_t i = 0; i + 1 < doc.size(); ++i) {
      SentencePair& pair = pairs[pair_offset[d] + i];
      bool is_next = mode == PairMode::kForcePositive ||
                     (mode == PairMode::kRandom && rng.bernoulli(0.5));
      pair.first = doc[i];
      if (is_next) {
        pair.second = doc[i + 1];
      } else {
        // Uniform over every sentence outside this document.
        std::size_t g = rng.index(total - own);
        if (g >= offset[d]) g += own;
        pair.second = sentence_at(g);
      }
      pair.is_next = is_next;
      // Trim the longer side until the pair fits.
      while (pair.first.pieces.size() + pair.second.pieces.size() > config.max_seq_len) {
        auto& longer = pair.first.pieces.size() >= pair.second.pieces.size() ? pair.first
                                                                              : pair.second;
        longer.pieces.pop_back();
        longer.y.pop_back();
      }
    }
  });
  return pairs;
}

void write_example(std::ostream& out, const MaskedExample& ex) {
  std::vector<int> y(ex.y.begin(), ex.y.end());
  const json record = {
      {"input_ids", ex.input_ids},
      {"masked_positions", ex.masked_positions},
      {"labels", ex.labels},
      {"weights", ex.weights},
      {"strategy", strategy_name(ex.strategy)},
      {"branch", branch_name(ex.branch)},
      {"doc_id", ex.doc_id},
      {"y", y},
      {"fallback", ex.fallback},
  };
  out << record.dump() << '\n';
}

void write_examples(std::span<const MaskedExample> examples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  for (const MaskedExample& ex : examples) write_example(out, ex);
  out.flush();
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

ExampleReader::ExampleReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) fail(ErrorKind::kIo, "cannot open " + path.string());
}

std::optional<MaskedExample> ExampleReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_number_;
    if (line.empty()) continue;
    const std::size_t n = line_number_;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kParse, "malformed example at line " + std::to_string(n) + ": " + e.what());
    }
    if (!record.is_object()) {
      fail(ErrorKind::kParse, "malformed example at line " + std::to_string(n));
    }
    MaskedExample ex;
    ex.input_ids = get_array<PieceId>(record, "input_ids", n);
    ex.masked_positions = get_array<std::uint32_t>(record, "masked_positions", n);
    ex.labels = get_array<PieceId>(record, "labels", n);
    ex.weights = get_array<double>(record, "weights", n);
    try {
      ex.strategy = parse_strategy(record.at("strategy").get<std::string>());
      ex.branch = parse_branch(record.at("branch").get<std::string>());
      ex.doc_id = record.at("doc_id").get<std::string>();
      ex.fallback = record.value("fallback", false);
    } catch (const std::exception& e) {
      fail(ErrorKind::kParse, "bad example at line " + std::to_string(n) + ": " + e.what());
    }
    if (record.contains("y")) {
      for (const int v : get_array<int>(record, "y", n)) ex.y.push_back(v != 0);
    }

    const auto bad = [n](const char* what) {
      fail(ErrorKind::kParse, std::string(what) + " at line " + std::to_string(n));
    };
    if (ex.labels.size() != ex.masked_positions.size()) bad("labels do not align with positions");
    if (ex.masked_positions.size() > ex.weights.size()) bad("more positions than weight slots");
    for (std::size_t i = 0; i < ex.masked_positions.size(); ++i) {
      if (ex.masked_positions[i] >= ex.input_ids.size()) bad("masked position out of bounds");
      if (i > 0 && ex.masked_positions[i] <= ex.masked_positions[i - 1]) {
        bad("masked positions not strictly increasing");
      }
    }
    if (!ex.y.empty() && ex.y.size() != ex.input_ids.size()) bad("y flags do not match input");
    return ex;
  }
  if (in_.bad()) fail(ErrorKind::kIo, "read error after line " + std::to_string(line_number_));
  return std::nullopt;
}

std::vector<MaskedExample> read_examples(const std::filesystem::path& path) {
  ExampleReader reader(path);
  std::vector<MaskedExample> out;
  while (auto ex = reader.next()) out.push_back(std::move(*ex));
  return out;
}

void write_pair(std::ostream& out, const SentencePair& pair) {
  const json record = {
      {"first", sequence_json(pair.first)},
      {"second", sequence_json(pair.second)},
      {"is_next", pair.is_next},
  };
  out << record.dump() << '\n';
}

}  // namespace lim::masking
