#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lim::corpus {

enum class Section { kTitle, kAbstract, kClaims, kDescription, kOther };

Section parse_section(std::string_view name);
std::string_view section_name(Section section);

struct RawDocument {
  std::string id;
  std::string text;
  Section section = Section::kOther;
};

/// A normalized document split into sentences. No sentence is empty or
/// contains a tab or two consecutive spaces.
struct CleanDocument {
  std::string id;
  std::vector<std::string> sentences;
};

enum class InputFormat { kJsonl, kTsv };

InputFormat parse_input_format(std::string_view name);

/// Collapses whitespace runs (tabs and newlines included) to one space, drops
/// formula spans and trims. A formula span is a `$...$` region, a token with
/// one of `= ∑ ∫ ^` next to a digit or symbol, or a token that is more than
/// half non-alphanumeric characters.
std::string normalize_text(std::string_view raw);

/// Splits after `.`, `!` or `?` when followed by a space and an uppercase
/// letter, unless the terminating token is a known abbreviation (Fig., No.,
/// e.g., i.e., et al., U.S.). Expects normalized input.
std::vector<std::string> split_sentences(std::string_view clean);

CleanDocument clean_document(const RawDocument& doc);

/// Streams documents from a JSONL (`id`, `text`, optional `section`) or
/// two-column TSV (`id<TAB>text`) file. Blank lines are not records.
class DocumentReader {
 public:
  DocumentReader(const std::filesystem::path& path, InputFormat format);

  std::optional<RawDocument> next();
  std::size_t line_number() const { return line_number_; }

 private:
  std::ifstream in_;
  InputFormat format_;
  std::size_t line_number_ = 0;
};

std::vector<RawDocument> ingest_documents(const std::filesystem::path& path,
                                          InputFormat format);

}  // namespace lim::corpus
