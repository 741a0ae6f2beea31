// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exits non-zero
// when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lim/chunker.hpp"
#include "lim/corpus.hpp"
#include "lim/datasets.hpp"
#include "lim/masking.hpp"
#include "lim/stats.hpp"
#include "lim/subword.hpp"
#include "lim/synthetic.hpp"
#include "lim/tinylm.hpp"
#include "oracles.hpp"

namespace {

using Clock = std::chrono::steady_clock;
using lim::masking::Strategy;

enum class Outcome { kPass, kFail, kSkip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

lim::stats::MaskProbReport flag_corpus_report(Strategy strategy, double p_nc, std::size_t n) {
  lim::synthetic::FlagCorpusConfig fc;
  fc.n_sentences = n;
  lim::masking::MaskingConfig c;
  c.strategy = strategy;
  c.p_nc = p_nc;
  c.mask_id = 1;
  c.vocab_size = static_cast<std::size_t>(fc.first_word_id) + fc.n_words;
  lim::stats::MaskCounter counter;
  for (const auto& ex : lim::masking::generate_examples(lim::synthetic::flag_sequences(fc), c)) {
    counter.add(ex);
  }
  return lim::stats::make_mask_report(counter, strategy, c.mask_prob, p_nc);
}

Verdict conditional_masking_law() {
  const auto start = Clock::now();
  const auto r = flag_corpus_report(Strategy::kLim, 0.75, 100000);
  const double elapsed = seconds_since(start);
  const double y1 = *r.p_mask_given_y1;
  const double y0 = *r.p_mask_given_y0;
  const bool ok = std::abs(y1 - 0.222) <= 0.005 && std::abs(y0 - 0.076) <= 0.005 && elapsed < 60.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("p(mask|y=1)=%.4f p(mask|y=0)=%.4f p_y1=%.4f n=100000 %.1fs", y1, y0, r.p_y1, elapsed)};
}

Verdict mlm_reduction() {
  const auto lim_r = flag_corpus_report(Strategy::kLim, 0.507, 100000);
  const auto mlm_r = flag_corpus_report(Strategy::kMlm, 0.507, 100000);
  const double diff = std::abs(*lim_r.p_mask_given_y1 - *mlm_r.p_mask_given_y1);
  const double pooled = std::hypot(*lim_r.se_y1, *mlm_r.se_y1);
  const bool ok = std::abs(*lim_r.p_mask_given_y1 - 0.15) < 0.005 && diff < 3.0 * pooled;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("LIM %.4f MLM %.4f |diff|=%.5f pooled SE=%.5f", *lim_r.p_mask_given_y1,
              *mlm_r.p_mask_given_y1, diff, pooled)};
}

Verdict tokenization() {
  using Pieces = std::vector<std::string>;
  const auto bert = fixtures::bert_vocab();
  const auto sci = fixtures::scibert_vocab();
  const auto pat = fixtures::patent_vocab();
  bool ok = lim::subword::encode_word("femto", bert) == Pieces{"f", "##em", "##to"} &&
            lim::subword::encode_word("femto", sci) == Pieces{"fem", "##to"} &&
            lim::subword::encode_word("femto", pat) == Pieces{"femto"};
  const double rb = lim::subword::encode_sentence("femto access point", bert).split_ratio;
  const double rs = lim::subword::encode_sentence("femto access point", sci).split_ratio;
  const double rp = lim::subword::encode_sentence("femto access point", pat).split_ratio;
  ok = ok && rb == 5.0 / 3.0 && rs == 4.0 / 3.0 && rp == 1.0;
  return {ok ? Outcome::kPass : Outcome::kFail, fmt("ratios %.4f %.4f %.4f", rb, rs, rp)};
}

Verdict split_ratio_ordering() {
  const char* bert_path = std::getenv("LIM_BERT_VOCAB");
  const char* sci_path = std::getenv("LIM_SCIBERT_VOCAB");
  const char* sentences_path = std::getenv("LIM_PATENT_SENTENCES");
  if (!bert_path || !sci_path || !sentences_path) {
    return {Outcome::kSkip,
            "set LIM_BERT_VOCAB, LIM_SCIBERT_VOCAB and LIM_PATENT_SENTENCES to run"};
  }
  std::vector<std::string> sentences;
  std::ifstream in(sentences_path);
  for (std::string line; std::getline(in, line);) {
    std::string clean = lim::corpus::normalize_text(line);
    if (!clean.empty()) sentences.push_back(std::move(clean));
  }
  if (sentences.size() < 10000) {
    return {Outcome::kSkip, fmt("only %zu sentences, need 10000", sentences.size())};
  }
  const double rb =
      lim::subword::corpus_split_stats(sentences, lim::subword::load_vocab(bert_path)).mean_split_ratio();
  const double rs =
      lim::subword::corpus_split_stats(sentences, lim::subword::load_vocab(sci_path)).mean_split_ratio();
  const bool ok = rb > rs && std::abs(rb - 1.29) <= 0.05 && std::abs(rs - 1.21) <= 0.05;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("BERT %.4f SciBERT %.4f over %zu sentences", rb, rs, sentences.size())};
}

Verdict loss_exactness() {
  lim::Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t v = 2 + rng.index(30);
    std::vector<Eigen::MatrixXd> preds;
    std::vector<std::vector<lim::subword::PieceId>> labels;
    std::vector<std::vector<double>> weights;
    const std::size_t batch = 1 + rng.index(6);
    for (std::size_t j = 0; j < batch; ++j) {
      const std::size_t k = 1 + rng.index(8);
      Eigen::MatrixXd logits(v, k);
      for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.uniform(-4, 4);
      preds.push_back(oracle::softmax(logits));
      std::vector<lim::subword::PieceId> l;
      std::vector<double> w;
      for (std::size_t i = 0; i < k; ++i) {
        l.push_back(static_cast<lim::subword::PieceId>(rng.index(v)));
        w.push_back(rng.bernoulli(0.7) ? 1.0 : 0.0);
      }
      if (j == 0) w[0] = 1.0;
      labels.push_back(std::move(l));
      weights.push_back(std::move(w));
    }
    const double got = lim::tinylm::mlm_loss(preds, labels, weights).loss;
    const double want = oracle::loss(preds, labels, weights);
    worst = std::max(worst, std::abs(got - want) / std::abs(want));
  }
  double uniform_err = 0.0;
  for (std::size_t v : {2u, 4u, 7u, 30522u}) {
    const std::vector<Eigen::MatrixXd> preds = {
        Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(v), 3, 1.0 / static_cast<double>(v))};
    const std::vector<std::vector<lim::subword::PieceId>> labels = {{0, 1, 0}};
    const std::vector<std::vector<double>> weights = {{1, 1, 1}};
    uniform_err = std::max(uniform_err, std::abs(lim::tinylm::mlm_loss(preds, labels, weights).loss -
                                                 std::log(static_cast<double>(v))));
  }
  const bool ok = worst < 1e-10 && uniform_err < 1e-12;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("max rel err %.2e over 1000 batches, uniform |L-ln V| %.2e", worst, uniform_err)};
}

Verdict gradient_check() {
  lim::Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t v = 3 + rng.index(18);
    const std::size_t h = 1 + rng.index(8);
    const auto params = oracle::random_params(rng, v, h, rng.index(4), 0.8);
    std::vector<lim::masking::MaskedExample> batch;
    for (std::size_t j = 0; j < 1 + rng.index(3); ++j) batch.push_back(oracle::random_example(rng, v, 4));
    const auto grads =
        lim::tinylm::compute_gradients(batch, params, lim::tinylm::MeanContextEncoder());
    worst = std::max(worst, oracle::max_gradient_error(batch, params, grads));
  }
  return {worst < 1e-4 ? Outcome::kPass : Outcome::kFail,
          fmt("max rel err %.2e over 100 instances", worst)};
}

Verdict ks_oracle() {
  lim::Rng rng(500);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(1 + rng.index(50)), b(1 + rng.index(50));
    const std::uint64_t range = 1 + rng.index(20);
    for (double& x : a) x = static_cast<double>(rng.index(range));
    for (double& x : b) x = static_cast<double>(rng.index(range + rng.index(5)));
    mismatches += lim::stats::ks_two_sample(a, b).d_statistic != oracle::ks_d(a, b);
  }
  const std::vector<double> s = {3, 1, 4, 1, 5};
  const double d_same = lim::stats::ks_two_sample(s, s).d_statistic;
  const double d_disjoint =
      lim::stats::ks_two_sample(std::vector<double>{1, 2}, std::vector<double>{3, 4}).d_statistic;
  const bool ok = mismatches == 0 && d_same == 0.0 && d_disjoint == 1.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("%zu/500 mismatches, identical D=%g, disjoint D=%g", mismatches, d_same, d_disjoint)};
}

Verdict directional_effect() {
  const auto start = Clock::now();
  const auto corpus = lim::synthetic::term_corpus({});
  const std::span<const lim::masking::TokenizedSequence> all(corpus.sequences);
  const std::size_t n_eval = all.size() / 5;
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double nc_loss[2];
    for (int s = 0; s < 2; ++s) {
      lim::masking::MaskingConfig m;
      m.strategy = s == 0 ? Strategy::kMlm : Strategy::kLim;
      m.p_nc = 1.0;
      m.seed = seed;
      m.mask_id = corpus.mask_id;
      m.vocab_size = corpus.vocab_size;
      lim::tinylm::TrainConfig t;
      t.seed = seed;
      t.steps = 2000;
      const auto rows = lim::tinylm::train(all.first(all.size() - n_eval), all.last(n_eval), m, t);
      const auto last_eval =
          std::find_if(rows.rbegin(), rows.rend(), [](const auto& r) { return r.eval; });
      nc_loss[s] = *last_eval->nc_token_loss;
    }
    wins += nc_loss[1] <= nc_loss[0];
    detail += fmt("%s[%.3f vs %.3f]", seed == 1 ? "" : " ", nc_loss[1], nc_loss[0]);
  }
  const double elapsed = seconds_since(start);
  const bool ok = wins >= 4 && elapsed < 300.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("LIM <= MLM held-out chunk loss in %d/5 seeds ", wins) + detail +
              fmt(" %.0fs", elapsed)};
}

Verdict dataset_builders() {
  const auto records = fixtures::patent_records();
  const auto ipc = lim::datasets::build_ipc_examples(records);
  const auto expected = fixtures::expected_ipc_labels();
  std::size_t label_errors = ipc.size() == expected.size() ? 0 : 1;
  for (std::size_t i = 0; i < std::min(ipc.size(), expected.size()); ++i) {
    label_errors += ipc[i].label != expected[i];
  }

  std::set<std::pair<std::string, std::string>> x_pairs;
  for (const auto& r : records) {
    for (const auto& c : r.citations) {
      if (c.category == "X") x_pairs.insert({r.pub_number, c.cited_pub_number});
    }
  }
  std::size_t violations = 0;
  double worst_fraction_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pairs = lim::datasets::build_similarity_pairs(records, seed);
    std::size_t positives = 0;
    for (const auto& p : pairs) {
      violations += p.id_a == p.id_b;
      const bool known = x_pairs.count({p.id_a, p.id_b}) || x_pairs.count({p.id_b, p.id_a});
      violations += p.label ? !x_pairs.count({p.id_a, p.id_b}) : known;
      positives += p.label;
    }
    worst_fraction_gap = std::max(
        worst_fraction_gap, std::abs(static_cast<double>(positives) / pairs.size() - 0.5));
  }
  const bool ok = label_errors == 0 && violations == 0 && worst_fraction_gap <= 0.05;
  return {ok ? Outcome::kPass : Outcome::kFail,
          fmt("%zu label errors, %zu pair violations, max |positive fraction - 0.5| %.3f over 20 seeds",
              label_errors, violations, worst_fraction_gap)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LIMTOOL_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism() {
  fixtures::TempDir dir;
  const auto p = [&](const std::string& name) { return dir.file(name).string(); };

  // Inputs for every generator.
  std::ostringstream docs;
  for (int i = 0; i < 200; ++i) {
    docs << nlohmann::json{{"id", "d" + std::to_string(i)},
                           {"text", "The femto access point " + std::to_string(i) +
                                        " works. A second point follows. Access is fast."}}
                .dump()
         << '\n';
  }
  dir.write("docs.jsonl", docs.str());
  lim::synthetic::FlagCorpusConfig fc;
  fc.n_sentences = 3000;
  std::ostringstream ann;
  lim::chunker::write_annotations(ann, lim::synthetic::flag_annotations(fc));
  dir.write("ann.tsv", ann.str());
  std::ostringstream vocab;
  vocab << "[UNK]\n[MASK]\nfemto\naccess\npoint\nthe\nThe\n##s\nworks.\nA\nsecond\nfollows.\nis\nfast.\n";
  for (int w = 0; w < 1002; ++w) vocab << "w" << w << "\n";
  dir.write("vocab.txt", vocab.str());
  std::ostringstream patents;
  for (const auto& r : fixtures::patent_records()) {
    nlohmann::json cites = nlohmann::json::array();
    for (const auto& c : r.citations) cites.push_back({{"pub", c.cited_pub_number}, {"category", c.category}});
    patents << nlohmann::json{{"pub_number", r.pub_number}, {"claims", r.claims}, {"ipc", r.ipc_tags},
                              {"citations", cites}}
                   .dump()
            << '\n';
  }
  dir.write("patents.jsonl", patents.str());
  dir.write("ha.json", R"({"histogram":{"1":5,"2":9,"3":4}})");
  dir.write("hb.json", R"({"histogram":{"1":3,"2":9,"4":6}})");

  struct Job {
    std::string name;
    std::string args;  // {out} is replaced by the output prefix
    std::vector<std::string> outputs;
  };
  const std::vector<Job> jobs = {
      {"normalize", "normalize --input " + p("docs.jsonl") + " --output {out}.jsonl", {".jsonl"}},
      {"chunk-stats", "chunk-stats --input " + p("ann.tsv") + " --output {out}.json", {".json"}},
      {"tokenize-stats",
       "tokenize-stats --vocab " + p("vocab.txt") + " --input " + p("docs.jsonl") +
           " --format jsonl --output {out}.json",
       {".json"}},
      {"make-pretraining-data/lim",
       "make-pretraining-data --input " + p("ann.tsv") + " --vocab " + p("vocab.txt") +
           " --strategy lim --seed 7 --pairs-input " + p("docs.jsonl") +
           " --pairs-output {out}.pairs.jsonl --output {out}.jsonl",
       {".jsonl", ".pairs.jsonl"}},
      {"make-pretraining-data/mlm",
       "make-pretraining-data --synthetic-sequences 20000 --strategy mlm --seed 7 --output {out}.jsonl",
       {".jsonl"}},
      {"verify-masking", "verify-masking --strategy lim --n 20000 --seed 7 --output {out}.json", {".json"}},
      {"make-ipc",
       "make-ipc --input " + p("patents.jsonl") +
           " --seed 7 --output {out}.jsonl --train-output {out}.train --test-output {out}.test",
       {".jsonl", ".train", ".test"}},
      {"make-pairs",
       "make-pairs --input " + p("patents.jsonl") +
           " --seed 7 --output {out}.jsonl --train-output {out}.train --test-output {out}.test",
       {".jsonl", ".train", ".test"}},
      {"train-tiny", "train-tiny --strategy lim --p-nc 1.0 --steps 200 --seed 7 --output {out}.csv", {".csv"}},
      {"ks-compare", "ks-compare --hist-a " + p("ha.json") + " --hist-b " + p("hb.json") + " --output {out}.json",
       {".json"}},
  };

  std::vector<std::string> failures;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const std::string variants[3] = {" --workers 1", " --workers 1", " --workers 8"};
    std::string reference[3];
    for (int v = 0; v < 3; ++v) {
      std::string args = jobs[j].args;
      const std::string prefix = p("job" + std::to_string(j) + "_" + std::to_string(v));
      for (std::size_t at; (at = args.find("{out}")) != std::string::npos;) args.replace(at, 5, prefix);
      if (run_cli(args + variants[v]) != 0) {
        failures.push_back(jobs[j].name + " exited non-zero");
        break;
      }
      for (const auto& suffix : jobs[j].outputs) reference[v] += fixtures::read_file(prefix + suffix) + '\x1e';
    }
    if (reference[0].size() <= jobs[j].outputs.size()) {
      failures.push_back(jobs[j].name + " produced no output");
    } else if (reference[0] != reference[1] || reference[0] != reference[2]) {
      failures.push_back(jobs[j].name + " differs");
    }
  }
  if (!failures.empty()) {
    std::string detail;
    for (const auto& f : failures) detail += (detail.empty() ? "" : "; ") + f;
    return {Outcome::kFail, detail};
  }
  return {Outcome::kPass, fmt("%zu subcommand runs byte-identical across reruns and --workers 8", jobs.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"conditional masking law", conditional_masking_law},
      {"MLM reduction", mlm_reduction},
      {"tokenization", tokenization},
      {"split-ratio ordering (data-dependent)", split_ratio_ordering},
      {"loss exactness", loss_exactness},
      {"gradient correctness", gradient_check},
      {"KS oracle", ks_oracle},
      {"directional LIM effect", directional_effect},
      {"dataset builders", dataset_builders},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = v.outcome == Outcome::kPass ? "PASS" : v.outcome == Outcome::kFail ? "FAIL" : "SKIP";
    std::cout << tag << "  " << name << ": " << v.detail << std::endl;
    failed += v.outcome == Outcome::kFail;
  }
  std::cout << (failed == 0 ? "all criteria met" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
