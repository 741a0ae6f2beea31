#include "lim/chunker.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <utility>

#include "lim/error.hpp"

namespace lim::chunker {
namespace {

constexpr std::array<std::pair<std::string_view, Pos>, 17> kPosNames = {{
    {"ADJ", Pos::kAdj},     {"ADP", Pos::kAdp},     {"ADV", Pos::kAdv},
    {"AUX", Pos::kAux},     {"CCONJ", Pos::kCconj}, {"DET", Pos::kDet},
    {"INTJ", Pos::kIntj},   {"NOUN", Pos::kNoun},   {"NUM", Pos::kNum},
    {"PART", Pos::kPart},   {"PRON", Pos::kPron},   {"PROPN", Pos::kPropn},
    {"PUNCT", Pos::kPunct}, {"SCONJ", Pos::kSconj}, {"SYM", Pos::kSym},
    {"VERB", Pos::kVerb},   {"X", Pos::kX},
}};

bool is_head(Pos pos) { return pos == Pos::kNoun || pos == Pos::kPropn; }

bool is_nominal(Pos pos) {
  return is_head(pos) || pos == Pos::kAdj || pos == Pos::kNum;
}

bool is_joiner(std::string_view surface) {
  return surface == "-" || surface == "/" || surface == "‐" || surface == "‑" ||
         surface == "–";
}

bool is_body(std::span<const AnnotatedToken> tokens, std::size_t k) {
  const Pos pos = tokens[k].pos;
  if (is_nominal(pos)) return true;
  if (pos != Pos::kPunct || !is_joiner(tokens[k].surface)) return false;
  return k > 0 && k + 1 < tokens.size() && is_nominal(tokens[k - 1].pos) &&
         is_nominal(tokens[k + 1].pos);
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  fail(ErrorKind::kParse, what + " at line " + std::to_string(line));
}

}  // namespace

std::optional<Pos> parse_pos(std::string_view tag) {
  for (const auto& [name, pos] : kPosNames) {
    if (name == tag) return pos;
  }
  return std::nullopt;
}

std::string_view pos_name(Pos pos) {
  for (const auto& [name, p] : kPosNames) {
    if (p == pos) return name;
  }
  return "X";
}

std::vector<bool> flags_from_spans(std::size_t n_tokens, std::span<const Span> spans) {
  std::vector<bool> y(n_tokens, false);
  for (const Span& s : spans) {
    for (std::size_t k = s.begin; k < s.end && k < n_tokens; ++k) y[k] = true;
  }
  return y;
}

std::vector<Span> spans_from_flags(const std::vector<bool>& y) {
  std::vector<Span> spans;
  std::size_t k = 0;
  while (k < y.size()) {
    if (!y[k]) {
      ++k;
      continue;
    }
    const std::size_t begin = k;
    while (k < y.size() && y[k]) ++k;
    spans.push_back({begin, k});
  }
  return spans;
}

AnnotatedSentence AnnotatedSentence::from_spans(std::vector<AnnotatedToken> tokens,
                                                std::vector<Span> spans) {
  std::size_t prev_end = 0;
  for (const Span& s : spans) {
    if (s.begin >= s.end) fail(ErrorKind::kInvalidArgument, "empty chunk span");
    if (s.end > tokens.size()) fail(ErrorKind::kInvalidArgument, "span out of bounds");
    if (s.begin < prev_end) fail(ErrorKind::kInvalidArgument, "overlapping spans");
    prev_end = s.end;
  }
  AnnotatedSentence sentence;
  sentence.y = flags_from_spans(tokens.size(), spans);
  sentence.tokens = std::move(tokens);
  sentence.chunk_spans = std::move(spans);
  return sentence;
}

std::vector<Span> extract_noun_chunks(std::span<const AnnotatedToken> tokens) {
  std::vector<Span> spans;
  std::size_t start = 0;
  while (start < tokens.size()) {
    std::size_t k = start;
    if (tokens[k].pos == Pos::kDet) ++k;
    std::optional<std::size_t> last_head;
    while (k < tokens.size() && is_body(tokens, k)) {
      if (is_head(tokens[k].pos)) last_head = k;
      ++k;
    }
    if (last_head) {
      spans.push_back({start, *last_head + 1});
      start = *last_head + 1;
    } else {
      ++start;
    }
  }
  return spans;
}

std::vector<Span> filter_chunks(std::span<const Span> spans, std::size_t max_len) {
  require(max_len >= 1, "max_len must be at least 1");
  std::vector<Span> kept;
  kept.reserve(spans.size());
  for (const Span& s : spans) {
    if (s.length() <= max_len) kept.push_back(s);
  }
  return kept;
}

AnnotationReader::AnnotationReader(const std::filesystem::path& path) : in_(path) {
  if (!in_) fail(ErrorKind::kIo, "cannot open " + path.string());
}

std::optional<AnnotatedSentence> AnnotationReader::next() {
  std::vector<AnnotatedToken> tokens;
  // chunk id -> (first token, last token, token count)
  std::map<std::string, std::array<std::size_t, 3>> chunks;
  std::size_t first_line = 0;
  std::string line;
  while (std::getline(in_, line)) {
    ++line_number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (tokens.empty()) continue;
      break;
    }
    if (tokens.empty()) first_line = line_number_;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      parse_error(line_number_, "expected 3 tab-separated columns");
    }
    AnnotatedToken token;
    token.surface = line.substr(0, t1);
    if (token.surface.empty()) parse_error(line_number_, "empty token surface");
    const std::string tag = line.substr(t1 + 1, t2 - t1 - 1);
    if (const auto pos = parse_pos(tag)) {
      token.pos = *pos;
    } else {
      token.pos = Pos::kX;
      ++unknown_pos_;
    }
    const std::string chunk_id = line.substr(t2 + 1);
    if (chunk_id != "-") {
      if (chunk_id.empty() || chunk_id.find_first_not_of("0123456789") != std::string::npos) {
        parse_error(line_number_, "chunk id must be an integer or '-'");
      }
      const std::size_t k = tokens.size();
      auto [it, inserted] = chunks.try_emplace(chunk_id, std::array<std::size_t, 3>{k, k, 0});
      it->second[1] = k;
      ++it->second[2];
    }
    tokens.push_back(std::move(token));
  }
  if (tokens.empty()) {
    if (in_.bad()) fail(ErrorKind::kIo, "read error after line " + std::to_string(line_number_));
    return std::nullopt;
  }

  std::vector<Span> spans;
  spans.reserve(chunks.size());
  for (const auto& [id, range] : chunks) {
    spans.push_back({range[0], range[1] + 1});
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].begin < spans[i - 1].end) {
      parse_error(first_line, "overlapping spans in sentence starting");
    }
  }
  for (const auto& [id, range] : chunks) {
    if (range[1] + 1 - range[0] != range[2]) {
      parse_error(first_line, "chunk " + id + " is not contiguous in sentence starting");
    }
  }
  return AnnotatedSentence::from_spans(std::move(tokens), std::move(spans));
}

std::vector<AnnotatedSentence> parse_annotations(const std::filesystem::path& path,
                                                 std::size_t* unknown_pos) {
  AnnotationReader reader(path);
  std::vector<AnnotatedSentence> sentences;
  while (auto s = reader.next()) sentences.push_back(std::move(*s));
  if (unknown_pos != nullptr) *unknown_pos = reader.unknown_pos_count();
  return sentences;
}

void write_annotations(std::ostream& out, std::span<const AnnotatedSentence> sentences) {
  bool first = true;
  for (const AnnotatedSentence& s : sentences) {
    if (!first) out << '\n';
    first = false;
    std::vector<std::string> ids(s.tokens.size(), "-");
    for (std::size_t c = 0; c < s.chunk_spans.size(); ++c) {
      for (std::size_t k = s.chunk_spans[c].begin; k < s.chunk_spans[c].end; ++k) {
        ids[k] = std::to_string(c);
      }
    }
    for (std::size_t k = 0; k < s.tokens.size(); ++k) {
      out << s.tokens[k].surface << '\t' << pos_name(s.tokens[k].pos) << '\t' << ids[k] << '\n';
    }
  }
}

std::uint64_t ChunkStats::n_chunks() const {
  std::uint64_t n = 0;
  for (const auto& [len, count] : histogram) n += count;
  return n;
}

double ChunkStats::mean() const {
  const std::uint64_t n = n_chunks();
  if (n == 0) return 0.0;
  std::uint64_t total = 0;
  for (const auto& [len, count] : histogram) total += len * count;
  return static_cast<double>(total) / static_cast<double>(n);
}

double ChunkStats::sd() const {
  const std::uint64_t n = n_chunks();
  if (n == 0) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (const auto& [len, count] : histogram) {
    const double d = static_cast<double>(len) - m;
    ss += static_cast<double>(count) * d * d;
  }
  return std::sqrt(ss / static_cast<double>(n));
}

double ChunkStats::token_nc_prob() const {
  if (n_tokens == 0) return 0.0;
  return static_cast<double>(n_chunk_tokens) / static_cast<double>(n_tokens);
}

void ChunkStats::add(const AnnotatedSentence& sentence, std::size_t max_len) {
  const std::vector<Span> kept = filter_chunks(sentence.chunk_spans, max_len);
  ++n_sentences;
  n_tokens += sentence.tokens.size();
  n_filtered += sentence.chunk_spans.size() - kept.size();
  for (const Span& s : kept) {
    ++histogram[s.length()];
    n_chunk_tokens += s.length();
  }
}

void ChunkStats::merge(const ChunkStats& other) {
  for (const auto& [len, count] : other.histogram) histogram[len] += count;
  n_sentences += other.n_sentences;
  n_tokens += other.n_tokens;
  n_chunk_tokens += other.n_chunk_tokens;
  n_filtered += other.n_filtered;
}

ChunkStats chunk_stats(std::span<const AnnotatedSentence> corpus, std::size_t max_len) {
  ChunkStats stats;
  for (const AnnotatedSentence& s : corpus) stats.add(s, max_len);
  if (stats.n_tokens == 0) fail(ErrorKind::kInvalidArgument, "empty corpus");
  return stats;
}

}  // namespace lim::chunker
