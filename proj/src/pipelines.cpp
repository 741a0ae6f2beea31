#include "lim/pipelines.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lim/chunker.hpp"
#include "lim/corpus.hpp"
#include "lim/datasets.hpp"
#include "lim/error.hpp"
#include "lim/masking.hpp"
#include "lim/parallel.hpp"
#include "lim/stats.hpp"
#include "lim/subword.hpp"
#include "lim/synthetic.hpp"
#include "lim/tinylm.hpp"

namespace lim::pipelines {
namespace {

template <typename T>
T get(const Json& config, const char* key, T fallback) {
  const auto it = config.find(key);
  if (it == config.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    fail(ErrorKind::kInvalidArgument, std::string("config key ") + key + " has the wrong type");
  }
}

std::string get_path(const Json& config, const char* key) {
  return get<std::string>(config, key, "");
}

std::string require_path(const Json& config, const char* key) {
  std::string path = get_path(config, key);
  if (path.empty()) fail(ErrorKind::kInvalidArgument, std::string("missing config key: ") + key);
  return path;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path);
  return out;
}

void close_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) fail(ErrorKind::kIo, "write failed for " + path);
}

void write_json_file(const std::string& path, const Json& value) {
  std::ofstream out = open_output(path);
  out << value.dump(2) << '\n';
  close_output(out, path);
}

std::size_t workers_of(const Json& config) {
  const auto workers = get<std::int64_t>(config, "workers", 1);
  require(workers >= 1, "workers must be at least 1");
  return static_cast<std::size_t>(workers);
}

template <typename Map>
Json histogram_json(const Map& hist) {
  Json out = Json::object();
  for (const auto& [key, count] : hist) out[std::to_string(key)] = count;
  return out;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

subword::Vocabulary load_vocab_from(const Json& config) {
  return subword::load_vocab(require_path(config, "vocab"),
                             get<std::string>(config, "continuation_prefix", "##"),
                             get<std::string>(config, "unk_piece", "[UNK]"));
}

masking::MaskingConfig masking_config(const Json& config) {
  masking::MaskingConfig m;
  m.strategy = masking::parse_strategy(get<std::string>(config, "strategy", "mlm"));
  m.p_nc = get<double>(config, "p_nc", m.p_nc);
  m.mask_prob = get<double>(config, "mask_prob", m.mask_prob);
  m.max_pred = get<std::size_t>(config, "max_pred", m.max_pred);
  m.max_seq_len = get<std::size_t>(config, "max_seq_len", m.max_seq_len);
  m.seed = get<std::uint64_t>(config, "seed", m.seed);
  m.replace.mask_frac = get<double>(config, "mask_frac", m.replace.mask_frac);
  m.replace.random_frac = get<double>(config, "random_frac", m.replace.random_frac);
  m.replace.keep_frac = get<double>(config, "keep_frac", m.replace.keep_frac);
  return m;
}

void bind_vocab(masking::MaskingConfig& m, const subword::Vocabulary& vocab, const Json& config) {
  const std::string mask_piece = get<std::string>(config, "mask_piece", "[MASK]");
  const auto id = vocab.find(mask_piece);
  if (!id) fail(ErrorKind::kInvalidArgument, "vocabulary lacks mask piece " + mask_piece);
  m.mask_id = *id;
  m.vocab_size = vocab.size();
}

synthetic::FlagCorpusConfig flag_corpus_config(const Json& config, std::size_t default_n) {
  synthetic::FlagCorpusConfig c;
  c.n_sentences = get<std::size_t>(config, "synthetic_sequences", default_n);
  c.p_y1 = get<double>(config, "p_y1", c.p_y1);
  c.seed = get<std::uint64_t>(config, "corpus_seed", c.seed);
  return c;
}

void bind_flag_vocab(masking::MaskingConfig& m, const synthetic::FlagCorpusConfig& c) {
  m.mask_id = 1;
  m.vocab_size = static_cast<std::size_t>(c.first_word_id) + c.n_words;
}

std::vector<masking::TokenizedSequence> annotated_sequences(const std::string& path,
                                                            const subword::Vocabulary& vocab,
                                                            std::size_t workers) {
  const auto sentences = chunker::parse_annotations(path);
  std::vector<masking::TokenizedSequence> out(sentences.size());
  parallel_for(sentences.size(), workers, [&](std::size_t i) {
    out[i] = masking::tokenize_annotated(sentences[i], vocab, "s" + std::to_string(i));
  });
  return out;
}

Json report_json(const stats::MaskProbReport& r) {
  return Json{
      {"n_sequences", r.n_sequences},
      {"n_tokens", r.n_tokens},
      {"n_fallback", r.n_fallback},
      {"p_y1", r.p_y1},
      {"p_mask_given_y1", optional_json(r.p_mask_given_y1)},
      {"p_mask_given_y0", optional_json(r.p_mask_given_y0)},
      {"se_y1", optional_json(r.se_y1)},
      {"se_y0", optional_json(r.se_y0)},
      {"expected_p_mask_given_y1", optional_json(r.expected_p_mask_given_y1)},
      {"expected_p_mask_given_y0", optional_json(r.expected_p_mask_given_y0)},
      {"abs_error", optional_json(r.abs_error)},
      {"abs_error_y0", optional_json(r.abs_error_y0)},
  };
}

std::vector<double> histogram_sample(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::kParse, "malformed histogram file " + path + ": " + e.what());
  }
  const Json& hist = doc.contains("histogram") ? doc.at("histogram") : doc;
  if (!hist.is_object()) fail(ErrorKind::kParse, "histogram in " + path + " is not an object");
  std::vector<double> sample;
  for (const auto& [key, count] : hist.items()) {
    double value;
    std::uint64_t n;
    try {
      value = std::stod(key);
      n = count.get<std::uint64_t>();
    } catch (const std::exception&) {
      fail(ErrorKind::kParse, "bad histogram entry " + key + " in " + path);
    }
    sample.insert(sample.end(), n, value);
  }
  if (sample.empty()) fail(ErrorKind::kInvalidArgument, "empty histogram in " + path);
  return sample;
}

// Writes the full item list and, when requested, a seeded train/test split.
template <typename Item, typename KeyFn, typename WriteFn>
Json write_with_split(const Json& config, const std::vector<Item>& items, KeyFn key_of,
                      WriteFn write_item) {
  Json summary;
  const std::string output = require_path(config, "output");
  {
    std::ofstream out = open_output(output);
    for (const Item& item : items) write_item(out, item);
    close_output(out, output);
  }
  const std::string train_output = get_path(config, "train_output");
  const std::string test_output = get_path(config, "test_output");
  if (train_output.empty() != test_output.empty()) {
    fail(ErrorKind::kInvalidArgument, "train_output and test_output must be given together");
  }
  if (!train_output.empty()) {
    std::vector<std::string> keys;
    keys.reserve(items.size());
    for (const Item& item : items) keys.push_back(key_of(item));
    const double train_fraction = get<double>(config, "train_fraction", 0.8);
    const auto split = datasets::split_dataset(keys, train_fraction, 1.0 - train_fraction,
                                               get<std::uint64_t>(config, "seed", 12345));
    for (const auto& [path, indices] : {std::pair{train_output, &split.train},
                                        std::pair{test_output, &split.test}}) {
      std::ofstream out = open_output(path);
      for (const std::size_t i : *indices) write_item(out, items[i]);
      close_output(out, path);
    }
    summary["n_train"] = split.train.size();
    summary["n_test"] = split.test.size();
  }
  return summary;
}

}  // namespace

Json normalize(const Json& config) {
  const auto docs = corpus::ingest_documents(
      require_path(config, "input"),
      corpus::parse_input_format(get<std::string>(config, "format", "jsonl")));
  std::vector<corpus::CleanDocument> clean(docs.size());
  parallel_for(docs.size(), workers_of(config),
               [&](std::size_t i) { clean[i] = corpus::clean_document(docs[i]); });

  const std::string output = require_path(config, "output");
  std::ofstream out = open_output(output);
  std::size_t n_sentences = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    n_sentences += clean[i].sentences.size();
    out << Json{{"id", clean[i].id},
                {"section", corpus::section_name(docs[i].section)},
                {"sentences", clean[i].sentences}}
               .dump()
        << '\n';
  }
  close_output(out, output);
  return Json{{"n_documents", clean.size()}, {"n_sentences", n_sentences}};
}

Json chunk_stats(const Json& config) {
  std::size_t unknown_pos = 0;
  auto sentences = chunker::parse_annotations(require_path(config, "input"), &unknown_pos);
  const auto max_len = get<std::size_t>(config, "max_len", chunker::kDefaultMaxChunkLength);
  require(max_len >= 1, "max_len must be at least 1");
  const bool rechunk = get<bool>(config, "rechunk", false);
  const std::size_t workers = workers_of(config);

  // Contiguous shards merged in order; counts are integers so the result is
  // independent of the shard count.
  std::vector<chunker::ChunkStats> shards(workers);
  const std::size_t block = (sentences.size() + workers - 1) / std::max<std::size_t>(1, workers);
  parallel_for(workers, workers, [&](std::size_t w) {
    for (std::size_t i = w * block; i < std::min(sentences.size(), (w + 1) * block); ++i) {
      if (rechunk) {
        auto spans = chunker::extract_noun_chunks(sentences[i].tokens);
        sentences[i] = chunker::AnnotatedSentence::from_spans(std::move(sentences[i].tokens),
                                                              std::move(spans));
      }
      shards[w].add(sentences[i], max_len);
    }
  });
  chunker::ChunkStats stats;
  for (const auto& shard : shards) stats.merge(shard);
  if (stats.n_tokens == 0) fail(ErrorKind::kInvalidArgument, "empty corpus");

  const Json result = {
      {"histogram", histogram_json(stats.histogram)},
      {"mean", stats.mean()},
      {"sd", stats.sd()},
      {"token_nc_prob", stats.token_nc_prob()},
      {"n_sentences", stats.n_sentences},
      {"n_tokens", stats.n_tokens},
      {"n_chunks", stats.n_chunks()},
      {"n_filtered", stats.n_filtered},
      {"unknown_pos", unknown_pos},
      {"max_len", max_len},
  };
  if (const std::string output = get_path(config, "output"); !output.empty()) {
    write_json_file(output, result);
  }
  return result;
}

Json tokenize_stats(const Json& config) {
  const subword::Vocabulary vocab = load_vocab_from(config);
  const std::string input = require_path(config, "input");
  const std::string format = get<std::string>(config, "format", "lines");
  std::vector<std::string> sentences;
  if (format == "lines") {
    std::ifstream in(input);
    if (!in) fail(ErrorKind::kIo, "cannot open " + input);
    std::string line;
    while (std::getline(in, line)) {
      std::string clean = corpus::normalize_text(line);
      if (!clean.empty()) sentences.push_back(std::move(clean));
    }
  } else {
    for (const auto& doc : corpus::ingest_documents(input, corpus::parse_input_format(format))) {
      for (auto& s : corpus::clean_document(doc).sentences) sentences.push_back(std::move(s));
    }
  }
  const subword::SplitStats stats =
      subword::corpus_split_stats(sentences, vocab, workers_of(config));
  const Json result = {
      {"mean_split_ratio", stats.mean_split_ratio()},
      {"encoding_hist", histogram_json(stats.encoding_hist)},
      {"word_hist", histogram_json(stats.word_hist)},
      {"n_sentences", stats.n_sentences},
  };
  if (const std::string output = get_path(config, "output"); !output.empty()) {
    write_json_file(output, result);
  }
  return result;
}

Json make_pretraining_data(const Json& config) {
  masking::MaskingConfig m = masking_config(config);
  const std::size_t workers = workers_of(config);
  std::vector<masking::TokenizedSequence> sequences;
  std::optional<subword::Vocabulary> vocab;
  if (get<std::size_t>(config, "synthetic_sequences", 0) > 0) {
    const auto corpus_config = flag_corpus_config(config, 0);
    bind_flag_vocab(m, corpus_config);
    sequences = synthetic::flag_sequences(corpus_config);
  } else {
    vocab = load_vocab_from(config);
    bind_vocab(m, *vocab, config);
    sequences = annotated_sequences(require_path(config, "input"), *vocab, workers);
  }
  std::erase_if(sequences, [](const auto& s) { return s.pieces.empty(); });
  const auto examples = masking::generate_examples(sequences, m, workers);
  const std::string output = require_path(config, "output");
  masking::write_examples(examples, output);

  Json summary = {{"n_examples", examples.size()}};
  std::size_t n_nc = 0, n_non_nc = 0, n_fallback = 0;
  for (const auto& ex : examples) {
    n_nc += ex.branch == masking::Branch::kNc;
    n_non_nc += ex.branch == masking::Branch::kNonNc;
    n_fallback += ex.fallback;
  }
  summary["n_branch_nc"] = n_nc;
  summary["n_branch_non_nc"] = n_non_nc;
  summary["n_fallback"] = n_fallback;

  if (const std::string pairs_input = get_path(config, "pairs_input"); !pairs_input.empty()) {
    if (!vocab) vocab = load_vocab_from(config);
    const auto docs = corpus::ingest_documents(
        pairs_input, corpus::parse_input_format(get<std::string>(config, "pairs_format", "jsonl")));
    std::vector<std::vector<masking::TokenizedSequence>> documents(docs.size());
    parallel_for(docs.size(), workers, [&](std::size_t d) {
      for (const auto& sentence : corpus::clean_document(docs[d]).sentences) {
        documents[d].push_back(masking::tokenize_plain(sentence, *vocab, docs[d].id));
      }
    });
    const auto pairs = masking::build_sentence_pairs(documents, m, masking::PairMode::kRandom, workers);
    const std::string pairs_output = require_path(config, "pairs_output");
    std::ofstream out = open_output(pairs_output);
    std::size_t positives = 0;
    for (const auto& pair : pairs) {
      masking::write_pair(out, pair);
      positives += pair.is_next;
    }
    close_output(out, pairs_output);
    summary["n_pairs"] = pairs.size();
    summary["n_positive_pairs"] = positives;
  }
  return summary;
}

Json verify_masking(const Json& config) {
  masking::MaskingConfig m = masking_config(config);
  const double tolerance = get<double>(config, "tolerance", 0.005);
  stats::MaskCounter counter;
  if (const std::string examples = get_path(config, "examples"); !examples.empty()) {
    masking::ExampleReader reader(examples);
    while (auto ex = reader.next()) counter.add(*ex);
  } else {
    const auto corpus_config = flag_corpus_config(config, 100000);
    bind_flag_vocab(m, corpus_config);
    const auto sequences = synthetic::flag_sequences(corpus_config);
    for (const auto& ex : masking::generate_examples(sequences, m, workers_of(config))) {
      counter.add(ex);
    }
  }
  if (counter.n_sequences == 0) fail(ErrorKind::kInvalidArgument, "empty example stream");
  const stats::MaskProbReport report = stats::make_mask_report(counter, m.strategy, m.mask_prob, m.p_nc);

  const auto within = [&](const std::optional<double>& err) { return err && *err <= tolerance; };
  // A conditional with no tokens behind it is undefined and cannot breach.
  const bool y1_ok = !report.p_mask_given_y1 || within(report.abs_error);
  const bool y0_ok = !report.p_mask_given_y0 || within(report.abs_error_y0);

  Json result = report_json(report);
  result["strategy"] = masking::strategy_name(m.strategy);
  result["mask_prob"] = m.mask_prob;
  result["p_nc"] = m.p_nc;
  result["tolerance"] = tolerance;
  result["passed"] = y1_ok && y0_ok;
  if (const std::string output = get_path(config, "output"); !output.empty()) {
    write_json_file(output, result);
  }
  return result;
}

Json make_ipc(const Json& config) {
  const auto records = datasets::read_patents(require_path(config, "input"));
  datasets::IpcBuildCounters counters;
  const auto examples = datasets::build_ipc_examples(records, &counters);
  Json summary = write_with_split(
      config, examples, [](const datasets::IpcExample& e) { return e.pub_number; },
      datasets::write_ipc_example);
  std::set<std::string> labels;
  for (const auto& e : examples) labels.insert(e.label);
  summary["n_examples"] = examples.size();
  summary["n_labels"] = labels.size();
  summary["skipped_no_tags"] = counters.skipped_no_tags;
  summary["skipped_empty_claims"] = counters.skipped_empty_claims;
  summary["malformed_tags"] = counters.malformed_tags;
  return summary;
}

Json make_pairs(const Json& config) {
  const auto records = datasets::read_patents(require_path(config, "input"));
  datasets::PairBuildCounters counters;
  const auto pairs =
      datasets::build_similarity_pairs(records, get<std::uint64_t>(config, "seed", 12345), &counters);
  Json summary = write_with_split(config, pairs, datasets::pair_group_key,
                                  datasets::write_similarity_pair);
  summary["n_pairs"] = pairs.size();
  summary["n_positive"] = counters.positives;
  summary["n_negative"] = pairs.size() - counters.positives;
  summary["dropped_same_document"] = counters.dropped_same_document;
  summary["dropped_after_redraws"] = counters.dropped_after_redraws;
  summary["redraws"] = counters.redraws;
  return summary;
}

Json train_tiny(const Json& config) {
  tinylm::TrainConfig t;
  t.lr = get<double>(config, "lr", t.lr);
  t.steps = get<std::size_t>(config, "steps", t.steps);
  t.batch_size = get<std::size_t>(config, "batch_size", t.batch_size);
  t.eval_every = get<std::size_t>(config, "eval_every", t.eval_every);
  t.seed = get<std::uint64_t>(config, "seed", t.seed);
  t.context_radius = get<std::size_t>(config, "context_radius", t.context_radius);
  t.hidden_dim = get<std::size_t>(config, "hidden_dim", t.hidden_dim);

  masking::MaskingConfig m = masking_config(config);
  std::vector<masking::TokenizedSequence> sequences;
  if (const std::string input = get_path(config, "input"); !input.empty()) {
    const subword::Vocabulary vocab = load_vocab_from(config);
    bind_vocab(m, vocab, config);
    sequences = annotated_sequences(input, vocab, workers_of(config));
    std::erase_if(sequences, [](const auto& s) { return s.pieces.empty(); });
  } else {
    synthetic::TermCorpusConfig c;
    c.n_sequences = get<std::size_t>(config, "synthetic_sequences", c.n_sequences);
    c.seed = get<std::uint64_t>(config, "corpus_seed", c.seed);
    const auto corpus = synthetic::term_corpus(c);
    m.mask_id = corpus.mask_id;
    m.vocab_size = corpus.vocab_size;
    sequences = corpus.sequences;
  }
  const double eval_fraction = get<double>(config, "eval_fraction", 0.2);
  require(eval_fraction > 0.0 && eval_fraction < 1.0, "eval_fraction must be in (0, 1)");
  const auto n_eval = std::max<std::size_t>(
      1, static_cast<std::size_t>(eval_fraction * static_cast<double>(sequences.size())));
  require(sequences.size() > n_eval, "corpus too small for a held-out split");
  const std::span<const masking::TokenizedSequence> all(sequences);
  const auto train_part = all.first(sequences.size() - n_eval);
  const auto eval_part = all.last(n_eval);

  const auto rows = tinylm::train(train_part, eval_part, m, t);
  const std::string output = require_path(config, "output");
  std::ofstream out = open_output(output);
  tinylm::write_metrics_csv(out, rows);
  close_output(out, output);

  const auto last_eval =
      std::find_if(rows.rbegin(), rows.rend(), [](const auto& r) { return r.eval; });
  require(last_eval != rows.rend(), "training produced no evaluation rows");
  const tinylm::MetricsRow& last = *last_eval;
  return Json{{"steps", t.steps},
              {"final_eval_loss", last.total_loss},
              {"final_nc_token_loss", optional_json(last.nc_token_loss)},
              {"final_non_nc_token_loss", optional_json(last.non_nc_token_loss)},
              {"n_rows", rows.size()}};
}

Json ks_compare(const Json& config) {
  const auto a = histogram_sample(require_path(config, "hist_a"));
  const auto b = histogram_sample(require_path(config, "hist_b"));
  const stats::KsResult ks = stats::ks_two_sample(a, b);
  const auto sa = stats::summarize_distribution(a);
  const auto sb = stats::summarize_distribution(b);
  const Json result = {
      {"d_statistic", ks.d_statistic}, {"p_value", ks.p_value}, {"n1", ks.n1},
      {"n2", ks.n2},                   {"mean_a", sa.mean},     {"sd_a", sa.sd},
      {"mean_b", sb.mean},             {"sd_b", sb.sd},
  };
  if (const std::string output = get_path(config, "output"); !output.empty()) {
    write_json_file(output, result);
  }
  return result;
}

Json run(const std::string& command, const Json& config) {
  if (!config.is_object()) fail(ErrorKind::kInvalidArgument, "config must be a JSON object");
  if (command == "normalize") return normalize(config);
  if (command == "chunk-stats") return chunk_stats(config);
  if (command == "tokenize-stats") return tokenize_stats(config);
  if (command == "make-pretraining-data") return make_pretraining_data(config);
  if (command == "verify-masking") return verify_masking(config);
  if (command == "make-ipc") return make_ipc(config);
  if (command == "make-pairs") return make_pairs(config);
  if (command == "train-tiny") return train_tiny(config);
  if (command == "ks-compare") return ks_compare(config);
  fail(ErrorKind::kInvalidArgument, "unknown subcommand: " + command);
}

}  // namespace lim::pipelines
