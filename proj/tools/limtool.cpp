// Command-line front end. Every subcommand resolves a JSON configuration
// from an optional --config file plus flag overrides and hands it to the
// shared library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lim/lim.h"

namespace {

using Json = nlohmann::json;

constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitIo = 74;
constexpr int kExitCheckFailed = 2;

enum class Kind { kString, kInt, kDouble, kFlag };

struct OptionSpec {
  const char* flag;
  const char* key;
  Kind kind;
  const char* help;
};

const std::vector<OptionSpec> kMaskingOptions = {
    {"--strategy", "strategy", Kind::kString, "mlm or lim"},
    {"--p-nc", "p_nc", Kind::kDouble, "probability of masking inside noun chunks"},
    {"--mask-prob", "mask_prob", Kind::kDouble, "fraction of pieces to predict"},
    {"--max-pred", "max_pred", Kind::kInt, "prediction slots per sequence"},
    {"--max-seq-len", "max_seq_len", Kind::kInt, "maximum sequence length in pieces"},
    {"--mask-frac", "mask_frac", Kind::kDouble, "share of targets replaced by the mask piece"},
    {"--random-frac", "random_frac", Kind::kDouble, "share replaced by a random piece"},
    {"--keep-frac", "keep_frac", Kind::kDouble, "share left unchanged"},
};

struct Subcommand {
  const char* name;
  const char* description;
  std::vector<OptionSpec> options;
  bool masking = false;
};

std::vector<Subcommand> subcommands() {
  return {
      {"normalize",
       "Clean raw documents and split them into sentences",
       {{"--input", "input", Kind::kString, "raw documents"},
        {"--format", "format", Kind::kString, "jsonl or tsv"},
        {"--output", "output", Kind::kString, "clean documents (JSONL)"}}},
      {"chunk-stats",
       "Noun-chunk length statistics from an annotated corpus",
       {{"--input", "input", Kind::kString, "annotation TSV"},
        {"--max-len", "max_len", Kind::kInt, "longest chunk kept"},
        {"--rechunk", "rechunk", Kind::kFlag, "recompute chunks from POS tags"},
        {"--output", "output", Kind::kString, "statistics JSON"}}},
      {"tokenize-stats",
       "Subword split ratios of a corpus under a vocabulary",
       {{"--vocab", "vocab", Kind::kString, "vocabulary file, one piece per line"},
        {"--input", "input", Kind::kString, "sentences"},
        {"--format", "format", Kind::kString, "lines, jsonl or tsv"},
        {"--output", "output", Kind::kString, "statistics JSON"}}},
      {"make-pretraining-data",
       "Generate masked pre-training examples",
       {{"--input", "input", Kind::kString, "annotation TSV"},
        {"--vocab", "vocab", Kind::kString, "vocabulary file"},
        {"--synthetic-sequences", "synthetic_sequences", Kind::kInt,
         "use a synthetic corpus of this size instead of --input"},
        {"--p-y1", "p_y1", Kind::kDouble, "noun-chunk token share of the synthetic corpus"},
        {"--output", "output", Kind::kString, "examples JSONL"},
        {"--pairs-input", "pairs_input", Kind::kString, "documents for sentence pairs"},
        {"--pairs-format", "pairs_format", Kind::kString, "jsonl or tsv"},
        {"--pairs-output", "pairs_output", Kind::kString, "sentence pairs JSONL"}},
       true},
      {"verify-masking",
       "Check empirical conditional mask probabilities against their expectation",
       {{"--examples", "examples", Kind::kString, "examples JSONL (default: synthetic corpus)"},
        {"--n,--synthetic-sequences", "synthetic_sequences", Kind::kInt, "synthetic corpus size"},
        {"--p-y1", "p_y1", Kind::kDouble, "noun-chunk token share of the synthetic corpus"},
        {"--tolerance", "tolerance", Kind::kDouble, "largest accepted absolute error"},
        {"--output", "output", Kind::kString, "report JSON"}},
       true},
      {"make-ipc",
       "Build the patent classification dataset",
       {{"--input", "input", Kind::kString, "patent records JSONL"},
        {"--output", "output", Kind::kString, "examples JSONL"},
        {"--train-output", "train_output", Kind::kString, "train split"},
        {"--test-output", "test_output", Kind::kString, "test split"},
        {"--train-fraction", "train_fraction", Kind::kDouble, "share of groups in train"}}},
      {"make-pairs",
       "Build the patent similarity dataset",
       {{"--input", "input", Kind::kString, "patent records JSONL"},
        {"--output", "output", Kind::kString, "pairs JSONL"},
        {"--train-output", "train_output", Kind::kString, "train split"},
        {"--test-output", "test_output", Kind::kString, "test split"},
        {"--train-fraction", "train_fraction", Kind::kDouble, "share of groups in train"}}},
      {"train-tiny",
       "Train the tiny masked language model and log per-class losses",
       {{"--input", "input", Kind::kString, "annotation TSV (default: synthetic term corpus)"},
        {"--vocab", "vocab", Kind::kString, "vocabulary file"},
        {"--synthetic-sequences", "synthetic_sequences", Kind::kInt, "synthetic corpus size"},
        {"--lr", "lr", Kind::kDouble, "learning rate"},
        {"--steps", "steps", Kind::kInt, "training steps"},
        {"--batch-size", "batch_size", Kind::kInt, "sequences per step"},
        {"--eval-every", "eval_every", Kind::kInt, "steps between evaluations"},
        {"--hidden-dim", "hidden_dim", Kind::kInt, "embedding width"},
        {"--context-radius", "context_radius", Kind::kInt, "context window, 0 for all"},
        {"--eval-fraction", "eval_fraction", Kind::kDouble, "held-out share of the corpus"},
        {"--output", "output", Kind::kString, "metrics CSV"}},
       true},
      {"ks-compare",
       "Two-sample Kolmogorov-Smirnov test on two length histograms",
       {{"--hist-a", "hist_a", Kind::kString, "first histogram JSON"},
        {"--hist-b", "hist_b", Kind::kString, "second histogram JSON"},
        {"--output", "output", Kind::kString, "result JSON"}}},
  };
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Json::parse(in);
}

int exit_code(lim_status status) {
  switch (status) {
    case LIM_OK: return 0;
    case LIM_INVALID_ARGUMENT:
    case LIM_UNEXPECTED_NULL: return kExitUsage;
    case LIM_IO_ERROR: return kExitIo;
    case LIM_PARSE_ERROR:
    case LIM_NUMERIC_ERROR: return kExitData;
    case LIM_CHECK_FAILED: return kExitCheckFailed;
    default: return 1;
  }
}

// Records the resolved configuration next to the main output so runs can be
// reproduced; falls back to stderr when there is no output path.
void write_sidecar(const Json& config) {
  const std::string text = config.dump(2) + "\n";
  if (config.contains("output") && config["output"].is_string()) {
    const std::string path = config["output"].get<std::string>() + ".config.json";
    std::ofstream out(path, std::ios::binary);
    if (out << text) return;
  }
  std::cerr << text;
}

struct Values {
  std::vector<std::optional<std::string>> strings;
  std::vector<std::optional<long long>> ints;
  std::vector<std::optional<double>> doubles;
  std::vector<bool> flags;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linguistically informed masking toolkit"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string(lim_version()));

  std::string config_path;
  std::string train_config_path;
  std::optional<long long> workers;
  std::optional<unsigned long long> seed;
  std::optional<unsigned long long> corpus_seed;
  bool quiet = false;

  const auto commands = subcommands();
  std::vector<CLI::App*> apps;
  std::vector<Values> values(commands.size());
  for (std::size_t c = 0; c < commands.size(); ++c) {
    const Subcommand& cmd = commands[c];
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.description);
    apps.push_back(sub);
    sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--corpus-seed", corpus_seed, "seed of the synthetic corpus");
    sub->add_flag("--quiet", quiet, "do not print the summary");
    if (std::string(cmd.name) == "train-tiny") {
      sub->add_option("--train-config", train_config_path, "JSON training configuration")
          ->check(CLI::ExistingFile);
    }
    std::vector<OptionSpec> options = cmd.options;
    if (cmd.masking) options.insert(options.end(), kMaskingOptions.begin(), kMaskingOptions.end());
    Values& v = values[c];
    v.strings.resize(options.size());
    v.ints.resize(options.size());
    v.doubles.resize(options.size());
    v.flags.resize(options.size(), false);
    for (std::size_t i = 0; i < options.size(); ++i) {
      const OptionSpec& o = options[i];
      switch (o.kind) {
        case Kind::kString: sub->add_option(o.flag, v.strings[i], o.help); break;
        case Kind::kInt: sub->add_option(o.flag, v.ints[i], o.help); break;
        case Kind::kDouble: sub->add_option(o.flag, v.doubles[i], o.help); break;
        case Kind::kFlag: {
          // vector<bool> elements are proxies; bind through a callback.
          sub->add_flag_callback(o.flag, [&v, i] { v.flags[i] = true; }, o.help);
          break;
        }
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  std::size_t index = 0;
  while (index < apps.size() && !apps[index]->parsed()) ++index;
  if (index == apps.size()) {
    std::cerr << app.help();
    return kExitUsage;
  }
  const Subcommand& cmd = commands[index];

  Json config = Json::object();
  try {
    if (!config_path.empty()) config = read_json_file(config_path);
    if (!config.is_object()) throw std::runtime_error("configuration must be a JSON object");
    if (!train_config_path.empty()) {
      const Json train = read_json_file(train_config_path);
      if (!train.is_object()) throw std::runtime_error("training configuration must be a JSON object");
      config.update(train);
    }
  } catch (const std::exception& e) {
    std::cerr << "limtool: " << e.what() << '\n';
    return kExitUsage;
  }

  std::vector<OptionSpec> options = cmd.options;
  if (cmd.masking) options.insert(options.end(), kMaskingOptions.begin(), kMaskingOptions.end());
  const Values& v = values[index];
  for (std::size_t i = 0; i < options.size(); ++i) {
    const char* key = options[i].key;
    if (v.strings[i]) config[key] = *v.strings[i];
    if (v.ints[i]) config[key] = *v.ints[i];
    if (v.doubles[i]) config[key] = *v.doubles[i];
    if (v.flags[i]) config[key] = true;
  }
  if (workers) config["workers"] = *workers;
  if (seed) config["seed"] = *seed;
  if (corpus_seed) config["corpus_seed"] = *corpus_seed;

  char* result = nullptr;
  const lim_status status = lim_run(cmd.name, config.dump().c_str(), &result);
  if (result != nullptr) {
    if (!quiet) std::cout << Json::parse(result).dump(2) << '\n';
    lim_free_string(result);
  }
  if (status == LIM_OK || status == LIM_CHECK_FAILED) write_sidecar(config);
  if (status != LIM_OK) {
    std::cerr << "limtool " << cmd.name << ": " << lim_status_name(status) << ": "
              << lim_last_error() << '\n';
  }
  return exit_code(status);
}
