#ifndef LIM_LIM_H_
#define LIM_LIM_H_

/* C interface to the pre-training data toolkit. All functions are thread
 * safe. Strings returned through char** out-parameters are owned by the
 * caller and released with lim_free_string. On failure a message is
 * available from lim_last_error() on the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(LIM_BUILDING_LIBRARY)
#define LIM_API __attribute__((visibility("default")))
#else
#define LIM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lim_status {
  LIM_OK = 0,
  LIM_INVALID_ARGUMENT = 1,
  LIM_IO_ERROR = 2,
  LIM_PARSE_ERROR = 3,
  /* A verification ran to completion and found a breach. */
  LIM_CHECK_FAILED = 4,
  LIM_NUMERIC_ERROR = 5,
  LIM_UNEXPECTED_NULL = 6,
  LIM_OUT_OF_MEMORY = 7,
  LIM_ERROR = 8
} lim_status;

LIM_API const char* lim_version(void);
LIM_API int lim_format_version(void);
LIM_API const char* lim_status_name(lim_status status);

/* Message for the last failing call on this thread; empty after success. */
LIM_API const char* lim_last_error(void);

LIM_API void lim_free_string(char* s);

/* Pipelines. config_json is a JSON object; *result_json receives a JSON
 * summary (may be NULL to discard it). */
LIM_API lim_status lim_run(const char* command, const char* config_json, char** result_json);
LIM_API lim_status lim_normalize(const char* config_json, char** result_json);
LIM_API lim_status lim_chunk_stats(const char* config_json, char** result_json);
LIM_API lim_status lim_tokenize_stats(const char* config_json, char** result_json);
LIM_API lim_status lim_make_pretraining_data(const char* config_json, char** result_json);
/* Returns LIM_CHECK_FAILED, with the report still written, on a breach. */
LIM_API lim_status lim_verify_masking(const char* config_json, char** result_json);
LIM_API lim_status lim_make_ipc(const char* config_json, char** result_json);
LIM_API lim_status lim_make_pairs(const char* config_json, char** result_json);
LIM_API lim_status lim_train_tiny(const char* config_json, char** result_json);
LIM_API lim_status lim_ks_compare(const char* config_json, char** result_json);

/* Subword vocabulary. */
typedef struct lim_vocab lim_vocab;
typedef struct lim_encoding lim_encoding;

/* prefix and unk may be NULL for "##" and "[UNK]". */
LIM_API lim_status lim_vocab_load(const char* path, const char* prefix, const char* unk,
                                  lim_vocab** out);
LIM_API void lim_vocab_free(lim_vocab* vocab);
LIM_API size_t lim_vocab_size(const lim_vocab* vocab);
/* Writes -1 when the piece is absent. */
LIM_API lim_status lim_vocab_piece_id(const lim_vocab* vocab, const char* piece, int32_t* id);

LIM_API lim_status lim_encode_sentence(const lim_vocab* vocab, const char* sentence,
                                       lim_encoding** out);
LIM_API void lim_encoding_free(lim_encoding* encoding);
LIM_API size_t lim_encoding_count(const lim_encoding* encoding);
/* Borrowed pointer valid until the encoding is freed; NULL if out of range. */
LIM_API const char* lim_encoding_piece(const lim_encoding* encoding, size_t index);
LIM_API int32_t lim_encoding_id(const lim_encoding* encoding, size_t index);
LIM_API double lim_encoding_split_ratio(const lim_encoding* encoding);

/* Statistics. */
typedef struct lim_ks_result {
  double d_statistic;
  double p_value;
} lim_ks_result;

LIM_API lim_status lim_ks_two_sample(const double* a, size_t na, const double* b, size_t nb,
                                     lim_ks_result* out);
LIM_API lim_status lim_expected_conditional_mask_prob(double mask_prob, double p_nc, double p_y1,
                                                      double* out);

#ifdef __cplusplus
}
#endif

#endif /* LIM_LIM_H_ */
