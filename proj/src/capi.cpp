#include "lim/lim.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "lim/error.hpp"
#include "lim/pipelines.hpp"
#include "lim/stats.hpp"
#include "lim/subword.hpp"

struct lim_vocab {
  lim::subword::Vocabulary vocab;
};

struct lim_encoding {
  lim::subword::Encoding encoding;
};

namespace {

thread_local std::string last_error;

lim_status status_of(lim::ErrorKind kind) {
  switch (kind) {
    case lim::ErrorKind::kInvalidArgument: return LIM_INVALID_ARGUMENT;
    case lim::ErrorKind::kIo: return LIM_IO_ERROR;
    case lim::ErrorKind::kParse: return LIM_PARSE_ERROR;
    case lim::ErrorKind::kNumeric: return LIM_NUMERIC_ERROR;
    case lim::ErrorKind::kCheckFailed: return LIM_CHECK_FAILED;
  }
  return LIM_ERROR;
}

template <typename Fn>
lim_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    return fn();
  } catch (const lim::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return LIM_OUT_OF_MEMORY;
  } catch (const std::exception& e) {
    last_error = e.what();
    return LIM_ERROR;
  } catch (...) {
    last_error = "unknown error";
    return LIM_ERROR;
  }
}

lim_status null_argument(const char* name) {
  last_error = std::string("null argument: ") + name;
  return LIM_UNEXPECTED_NULL;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

lim_status run_pipeline(const char* command, const char* config_json, char** result_json) {
  if (command == nullptr) return null_argument("command");
  if (config_json == nullptr) return null_argument("config_json");
  return guarded([&] {
    if (result_json != nullptr) *result_json = nullptr;
    lim::pipelines::Json config;
    try {
      config = lim::pipelines::Json::parse(config_json);
    } catch (const lim::pipelines::Json::parse_error& e) {
      lim::fail(lim::ErrorKind::kInvalidArgument, std::string("malformed config: ") + e.what());
    }
    const auto result = lim::pipelines::run(command, config);
    if (result_json != nullptr) *result_json = copy_string(result.dump());
    if (result.contains("passed") && !result.at("passed").get<bool>()) {
      last_error = "verification failed";
      return LIM_CHECK_FAILED;
    }
    return LIM_OK;
  });
}

}  // namespace

extern "C" {

const char* lim_version(void) { return "1.0.0"; }

int lim_format_version(void) { return lim::pipelines::kFormatVersion; }

const char* lim_status_name(lim_status status) {
  switch (status) {
    case LIM_OK: return "ok";
    case LIM_INVALID_ARGUMENT: return "invalid argument";
    case LIM_IO_ERROR: return "io error";
    case LIM_PARSE_ERROR: return "parse error";
    case LIM_CHECK_FAILED: return "check failed";
    case LIM_NUMERIC_ERROR: return "numeric error";
    case LIM_UNEXPECTED_NULL: return "unexpected null";
    case LIM_OUT_OF_MEMORY: return "out of memory";
    case LIM_ERROR: return "error";
  }
  return "unknown status";
}

const char* lim_last_error(void) { return last_error.c_str(); }

void lim_free_string(char* s) { std::free(s); }

lim_status lim_run(const char* command, const char* config_json, char** result_json) {
  return run_pipeline(command, config_json, result_json);
}

lim_status lim_normalize(const char* c, char** r) { return run_pipeline("normalize", c, r); }
lim_status lim_chunk_stats(const char* c, char** r) { return run_pipeline("chunk-stats", c, r); }
lim_status lim_tokenize_stats(const char* c, char** r) {
  return run_pipeline("tokenize-stats", c, r);
}
lim_status lim_make_pretraining_data(const char* c, char** r) {
  return run_pipeline("make-pretraining-data", c, r);
}
lim_status lim_verify_masking(const char* c, char** r) {
  return run_pipeline("verify-masking", c, r);
}
lim_status lim_make_ipc(const char* c, char** r) { return run_pipeline("make-ipc", c, r); }
lim_status lim_make_pairs(const char* c, char** r) { return run_pipeline("make-pairs", c, r); }
lim_status lim_train_tiny(const char* c, char** r) { return run_pipeline("train-tiny", c, r); }
lim_status lim_ks_compare(const char* c, char** r) { return run_pipeline("ks-compare", c, r); }

lim_status lim_vocab_load(const char* path, const char* prefix, const char* unk, lim_vocab** out) {
  if (path == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    *out = nullptr;
    *out = new lim_vocab{lim::subword::load_vocab(path, prefix ? prefix : "##", unk ? unk : "[UNK]")};
    return LIM_OK;
  });
}

void lim_vocab_free(lim_vocab* vocab) { delete vocab; }

size_t lim_vocab_size(const lim_vocab* vocab) { return vocab ? vocab->vocab.size() : 0; }

lim_status lim_vocab_piece_id(const lim_vocab* vocab, const char* piece, int32_t* id) {
  if (vocab == nullptr) return null_argument("vocab");
  if (piece == nullptr) return null_argument("piece");
  if (id == nullptr) return null_argument("id");
  return guarded([&] {
    const auto found = vocab->vocab.find(piece);
    *id = found ? *found : -1;
    return LIM_OK;
  });
}

lim_status lim_encode_sentence(const lim_vocab* vocab, const char* sentence, lim_encoding** out) {
  if (vocab == nullptr) return null_argument("vocab");
  if (sentence == nullptr) return null_argument("sentence");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    *out = nullptr;
    *out = new lim_encoding{lim::subword::encode_sentence(sentence, vocab->vocab)};
    return LIM_OK;
  });
}

void lim_encoding_free(lim_encoding* encoding) { delete encoding; }

size_t lim_encoding_count(const lim_encoding* encoding) {
  return encoding ? encoding->encoding.ids.size() : 0;
}

const char* lim_encoding_piece(const lim_encoding* encoding, size_t index) {
  if (encoding == nullptr || index >= encoding->encoding.pieces.size()) return nullptr;
  return encoding->encoding.pieces[index].c_str();
}

int32_t lim_encoding_id(const lim_encoding* encoding, size_t index) {
  if (encoding == nullptr || index >= encoding->encoding.ids.size()) return -1;
  return encoding->encoding.ids[index];
}

double lim_encoding_split_ratio(const lim_encoding* encoding) {
  return encoding ? encoding->encoding.split_ratio : 0.0;
}

lim_status lim_ks_two_sample(const double* a, size_t na, const double* b, size_t nb,
                             lim_ks_result* out) {
  if (a == nullptr && na > 0) return null_argument("a");
  if (b == nullptr && nb > 0) return null_argument("b");
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    const auto r = lim::stats::ks_two_sample({a, na}, {b, nb});
    out->d_statistic = r.d_statistic;
    out->p_value = r.p_value;
    return LIM_OK;
  });
}

lim_status lim_expected_conditional_mask_prob(double mask_prob, double p_nc, double p_y1,
                                              double* out) {
  if (out == nullptr) return null_argument("out");
  return guarded([&] {
    *out = lim::stats::expected_conditional_mask_prob(mask_prob, p_nc, p_y1);
    return LIM_OK;
  });
}

}  // extern "C"
