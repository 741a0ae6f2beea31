#include "lim/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "lim/corpus.hpp"
#include "lim/error.hpp"
#include "lim/rng.hpp"

namespace lim::datasets {
namespace {

using nlohmann::json;

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string string_field(const json& record, const char* field) {
  const auto it = record.find(field);
  if (it == record.end() || it->is_null()) return {};
  if (!it->is_string()) throw std::invalid_argument(std::string("field ") + field + " is not a string");
  return it->get<std::string>();
}

std::vector<std::string> split_tags(std::string_view joined) {
  std::vector<std::string> tags;
  std::size_t start = 0;
  while (start <= joined.size()) {
    std::size_t end = joined.find(';', start);
    if (end == std::string_view::npos) end = joined.size();
    std::string tag(joined.substr(start, end - start));
    const auto first = tag.find_first_not_of(" \t");
    if (first != std::string::npos) {
      tag = tag.substr(first, tag.find_last_not_of(" \t") - first + 1);
      tags.push_back(std::move(tag));
    }
    start = end + 1;
  }
  return tags;
}

}  // namespace

std::string ipc_subclass(std::string_view full_tag) {
  std::string tag;
  for (const char c : full_tag) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    tag.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  if (tag.size() < 4 || !is_upper(tag[0]) || !is_digit(tag[1]) || !is_digit(tag[2]) ||
      !is_upper(tag[3])) {
    fail(ErrorKind::kInvalidArgument, "malformed IPC tag: " + std::string(full_tag));
  }
  return tag.substr(0, 4);
}

std::vector<IpcExample> build_ipc_examples(std::span<const PatentRecord> records,
                                           IpcBuildCounters* counters) {
  IpcBuildCounters local;
  std::vector<IpcExample> out;
  for (const PatentRecord& rec : records) {
    std::map<std::string, std::size_t> freq;
    for (const std::string& tag : rec.ipc_tags) {
      try {
        ++freq[ipc_subclass(tag)];
      } catch (const Error&) {
        ++local.malformed_tags;
      }
    }
    if (freq.empty()) {
      ++local.skipped_no_tags;
      continue;
    }
    std::string text = corpus::normalize_text(rec.claims);
    if (text.empty()) {
      ++local.skipped_empty_claims;
      continue;
    }
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    auto best = freq.begin();
    for (auto it = freq.begin(); it != freq.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    out.push_back({rec.pub_number, std::move(text), best->first});
  }
  if (counters != nullptr) *counters = local;
  return out;
}

std::vector<SimilarityPair> build_similarity_pairs(std::span<const PatentRecord> records,
                                                   std::uint64_t seed,
                                                   PairBuildCounters* counters) {
  std::unordered_map<std::string, std::string> claims;
  for (const PatentRecord& rec : records) {
    std::string text = corpus::normalize_text(rec.claims);
    if (!text.empty()) claims.emplace(rec.pub_number, std::move(text));
  }

  std::vector<std::pair<std::string, std::string>> positives;
  std::set<std::pair<std::string, std::string>> positive_set;
  bool any_x = false;
  for (const PatentRecord& rec : records) {
    for (const Citation& c : rec.citations) {
      if (c.category != "X") continue;
      any_x = true;
      if (c.cited_pub_number == rec.pub_number) continue;
      if (!claims.contains(rec.pub_number) || !claims.contains(c.cited_pub_number)) continue;
      if (positive_set.emplace(rec.pub_number, c.cited_pub_number).second) {
        positives.emplace_back(rec.pub_number, c.cited_pub_number);
      }
    }
  }
  if (!any_x) fail(ErrorKind::kInvalidArgument, "no X-category citations in input");

  std::set<std::string> participant_set;
  for (const auto& [a, b] : positives) {
    participant_set.insert(a);
    participant_set.insert(b);
  }
  const std::vector<std::string> participants(participant_set.begin(), participant_set.end());
  const auto is_partner = [&](const std::string& a, const std::string& b) {
    return positive_set.contains({a, b}) || positive_set.contains({b, a});
  };

  PairBuildCounters local;
  std::vector<SimilarityPair> out;
  out.reserve(2 * positives.size());
  Rng rng(seed, streams::kSimilarity, 0);
  for (const auto& [anchor, cited] : positives) {
    enum class Outcome { kPartner, kSameDocument, kExhausted } outcome = Outcome::kExhausted;
    const std::string* partner = nullptr;
    for (int attempt = 0; attempt <= kMaxNegativeRedraws; ++attempt) {
      if (attempt > 0) ++local.redraws;
      const std::string& draw = participants[rng.index(participants.size())];
      if (draw == anchor) {
        outcome = Outcome::kSameDocument;
        break;
      }
      if (!is_partner(anchor, draw)) {
        outcome = Outcome::kPartner;
        partner = &draw;
        break;
      }
    }
    if (outcome == Outcome::kSameDocument) {
      ++local.dropped_same_document;
      continue;
    }
    out.push_back({anchor, cited, claims.at(anchor), claims.at(cited), true});
    ++local.positives;
    if (outcome == Outcome::kPartner) {
      out.push_back({anchor, *partner, claims.at(anchor), claims.at(*partner), false});
    } else {
      ++local.dropped_after_redraws;
    }
  }
  Rng shuffle_rng(seed, streams::kSimilarity, 1);
  shuffle_rng.shuffle(std::span(out));
  if (counters != nullptr) *counters = local;
  return out;
}

std::string pair_group_key(const SimilarityPair& pair) {
  const auto& [lo, hi] = std::minmax(pair.id_a, pair.id_b);
  return lo + "|" + hi;
}

SplitResult split_dataset(std::span<const std::string> group_keys, double train_fraction,
                          double test_fraction, std::uint64_t seed) {
  require(train_fraction >= 0.0 && test_fraction >= 0.0, "split fractions must be non-negative");
  require(std::abs(train_fraction + test_fraction - 1.0) < 1e-9, "split fractions must sum to 1");

  std::vector<std::vector<std::size_t>> groups;
  std::unordered_map<std::string_view, std::size_t> group_of;
  for (std::size_t i = 0; i < group_keys.size(); ++i) {
    auto [it, inserted] = group_of.try_emplace(group_keys[i], groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  Rng rng(seed, streams::kSplit, 0);
  rng.shuffle(std::span(groups));

  const auto target = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(group_keys.size())));
  SplitResult result;
  for (const auto& group : groups) {
    auto& side = result.train.size() + group.size() <= target ? result.train : result.test;
    side.insert(side.end(), group.begin(), group.end());
  }
  std::sort(result.train.begin(), result.train.end());
  std::sort(result.test.begin(), result.test.end());
  return result;
}

PatentReader::PatentReader(const std::filesystem::path& path) : in_(path) {
  if (!in_) fail(ErrorKind::kIo, "cannot open " + path.string());
}

std::optional<PatentRecord> PatentReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_number_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string at = " at line " + std::to_string(line_number_);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kParse, "malformed record" + at + ": " + e.what());
    }
    if (!record.is_object()) fail(ErrorKind::kParse, "malformed record" + at);

    PatentRecord rec;
    try {
      rec.pub_number = string_field(record, "pub_number");
      rec.title = string_field(record, "title");
      rec.abstract = string_field(record, "abstract");
      rec.claims = string_field(record, "claims");
      rec.description = string_field(record, "description");
      if (const auto it = record.find("ipc"); it != record.end() && !it->is_null()) {
        if (it->is_string()) {
          rec.ipc_tags = split_tags(it->get<std::string>());
        } else {
          rec.ipc_tags = it->get<std::vector<std::string>>();
        }
      }
      if (const auto it = record.find("citations"); it != record.end() && !it->is_null()) {
        for (const json& c : *it) {
          Citation citation{c.at("pub").get<std::string>(), c.at("category").get<std::string>()};
          if (citation.category.size() != 1 ||
              !std::isalpha(static_cast<unsigned char>(citation.category[0]))) {
            throw std::invalid_argument("citation category must be a single letter: " +
                                        citation.category);
          }
          rec.citations.push_back(std::move(citation));
        }
      }
    } catch (const std::exception& e) {
      fail(ErrorKind::kParse, std::string(e.what()) + at);
    }
    if (rec.pub_number.empty()) fail(ErrorKind::kParse, "missing field: pub_number" + at);
    return rec;
  }
  return std::nullopt;
}

std::vector<PatentRecord> read_patents(const std::filesystem::path& path) {
  PatentReader reader(path);
  std::vector<PatentRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

void write_ipc_example(std::ostream& out, const IpcExample& ex) {
  out << json{{"pub_number", ex.pub_number}, {"text", ex.text}, {"label", ex.label}}.dump()
      << '\n';
}

void write_similarity_pair(std::ostream& out, const SimilarityPair& pair) {
  out << json{{"id_a", pair.id_a},
              {"id_b", pair.id_b},
              {"text_a", pair.text_a},
              {"text_b", pair.text_b},
              {"label", pair.label}}
             .dump()
      << '\n';
}

}  // namespace lim::datasets
