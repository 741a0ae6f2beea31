#include "lim/corpus.hpp"

#include <array>
#include <algorithm>

#include "json.hpp"
#include "lim/error.hpp"
#include "utf8.hpp"

namespace lim::corpus {
namespace {

using nlohmann::json;

bool is_alnum(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
           (cp >= 'A' && cp <= 'Z');
  }
  // Latin-1 punctuation and signs, multiplication/division signs.
  if (cp <= 0xBF || cp == 0xD7 || cp == 0xF7) return false;
  // General punctuation through miscellaneous symbols and arrows
  // (math operators, technical symbols, box drawing, dingbats, ...).
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;
  if (cp == 0xFFFD) return false;
  return true;
}

bool is_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

bool is_operator(char32_t cp) {
  return cp == U'=' || cp == U'^' || cp == U'∑' || cp == U'∫';
}

bool is_formula_token(std::string_view token) {
  std::vector<char32_t> cps;
  for (std::size_t pos = 0; pos < token.size();) cps.push_back(utf8::decode(token, pos));
  if (cps.empty()) return false;

  const auto non_alnum = std::count_if(cps.begin(), cps.end(),
                                       [](char32_t c) { return !is_alnum(c); });
  if (2 * static_cast<std::size_t>(non_alnum) > cps.size()) return true;

  // An operator counts only when it binds a digit or another symbol.
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (!is_operator(cps[i])) continue;
    for (const std::size_t j : {i - 1, i + 1}) {
      if (j >= cps.size()) continue;  // wraps for i == 0
      if (is_digit(cps[j]) || !is_alnum(cps[j])) return true;
    }
  }
  return false;
}

std::string strip_dollar_spans(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t pos = 0;
  while (pos < raw.size()) {
    const std::size_t open = raw.find('$', pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = raw.find('$', open + 1);
    if (close == std::string_view::npos) break;
    out.append(raw.substr(pos, open - pos));
    out.push_back(' ');
    pos = close + 1;
  }
  out.append(raw.substr(pos));
  return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && utf8::is_ascii_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !utf8::is_ascii_space(s[j])) ++j;
    if (j > i) tokens.push_back(s.substr(i, j - i));
    i = j;
  }
  return tokens;
}

constexpr std::array<std::string_view, 5> kAbbreviations = {"Fig.", "No.", "e.g.", "i.e.",
                                                            "U.S."};

bool is_abbreviation(std::string_view text, std::size_t token_end) {
  std::size_t token_begin = text.rfind(' ', token_end - 1);
  token_begin = token_begin == std::string_view::npos ? 0 : token_begin + 1;
  const std::string_view token = text.substr(token_begin, token_end - token_begin);
  if (std::find(kAbbreviations.begin(), kAbbreviations.end(), token) != kAbbreviations.end()) {
    return true;
  }
  if (token == "al." && token_begin >= 3) {
    std::size_t prev_begin = text.rfind(' ', token_begin - 2);
    prev_begin = prev_begin == std::string_view::npos ? 0 : prev_begin + 1;
    return text.substr(prev_begin, token_begin - 1 - prev_begin) == "et";
  }
  return false;
}

bool starts_uppercase(std::string_view s) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  const char32_t cp = utf8::decode(s, pos);
  return (cp >= 'A' && cp <= 'Z') || (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7);
}

std::string get_string_field(const json& record, const char* field, std::size_t line) {
  const auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    fail(ErrorKind::kParse,
         "missing field: " + std::string(field) + " at line " + std::to_string(line));
  }
  if (!it->is_string()) {
    fail(ErrorKind::kParse, "field " + std::string(field) + " is not a string at line " +
                                std::to_string(line));
  }
  return it->get<std::string>();
}

}  // namespace

Section parse_section(std::string_view name) {
  if (name == "title") return Section::kTitle;
  if (name == "abstract") return Section::kAbstract;
  if (name == "claims") return Section::kClaims;
  if (name == "description") return Section::kDescription;
  return Section::kOther;
}

std::string_view section_name(Section section) {
  switch (section) {
    case Section::kTitle: return "title";
    case Section::kAbstract: return "abstract";
    case Section::kClaims: return "claims";
    case Section::kDescription: return "description";
    case Section::kOther: break;
  }
  return "other";
}

InputFormat parse_input_format(std::string_view name) {
  if (name == "jsonl") return InputFormat::kJsonl;
  if (name == "tsv") return InputFormat::kTsv;
  fail(ErrorKind::kInvalidArgument, "unknown input format: " + std::string(name));
}

std::string normalize_text(std::string_view raw) {
  const std::string without_spans = strip_dollar_spans(raw);
  std::string out;
  out.reserve(without_spans.size());
  for (const std::string_view token : split_ws(without_spans)) {
    if (is_formula_token(token)) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(token);
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view clean) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i + 1 < clean.size(); ++i) {
    const char c = clean[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (clean[i + 1] != ' ' || !starts_uppercase(clean.substr(i + 2))) continue;
    if (c == '.' && is_abbreviation(clean, i + 1)) continue;
    sentences.emplace_back(clean.substr(start, i + 1 - start));
    start = i + 2;
  }
  if (start < clean.size()) sentences.emplace_back(clean.substr(start));
  std::erase_if(sentences, [](const std::string& s) {
    return s.find_first_not_of(' ') == std::string::npos;
  });
  return sentences;
}

CleanDocument clean_document(const RawDocument& doc) {
  return CleanDocument{doc.id, split_sentences(normalize_text(doc.text))};
}

DocumentReader::DocumentReader(const std::filesystem::path& path, InputFormat format)
    : in_(path), format_(format) {
  if (!in_) fail(ErrorKind::kIo, "cannot open " + path.string());
}

std::optional<RawDocument> DocumentReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    RawDocument doc;
    if (format_ == InputFormat::kTsv) {
      const std::size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        fail(ErrorKind::kParse, "malformed record at line " + std::to_string(line_number_) +
                                    ": expected id<TAB>text");
      }
      doc.id = line.substr(0, tab);
      doc.text = line.substr(tab + 1);
    } else {
      json record;
      try {
        record = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(ErrorKind::kParse,
             "malformed record at line " + std::to_string(line_number_) + ": " + e.what());
      }
      if (!record.is_object()) {
        fail(ErrorKind::kParse, "malformed record at line " + std::to_string(line_number_) +
                                    ": expected an object");
      }
      doc.id = get_string_field(record, "id", line_number_);
      doc.text = get_string_field(record, "text", line_number_);
      if (const auto it = record.find("section"); it != record.end() && it->is_string()) {
        doc.section = parse_section(it->get<std::string>());
      }
    }
    if (doc.id.empty()) {
      fail(ErrorKind::kParse, "empty id at line " + std::to_string(line_number_));
    }
    return doc;
  }
  if (in_.bad()) fail(ErrorKind::kIo, "read error after line " + std::to_string(line_number_));
  return std::nullopt;
}

std::vector<RawDocument> ingest_documents(const std::filesystem::path& path,
                                          InputFormat format) {
  DocumentReader reader(path, format);
  std::vector<RawDocument> docs;
  while (auto doc = reader.next()) docs.push_back(std::move(*doc));
  return docs;
}

}  // namespace lim::corpus
