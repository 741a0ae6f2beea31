#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lim/chunker.hpp"
#include "lim/masking.hpp"

namespace lim::synthetic {

/// Sentences whose tokens are independently inside a noun chunk with
/// probability p_y1. Lengths are multiples of 20 (so 15% masking is an
/// integer count) between min_length and max_length.
struct FlagCorpusConfig {
  std::size_t n_sentences = 100000;
  double p_y1 = 0.507;
  std::size_t min_length = 20;
  std::size_t max_length = 120;
  std::size_t length_step = 20;
  std::uint64_t seed = 2020;
  /// Word ids are drawn from [first_word_id, first_word_id + n_words).
  std::int32_t first_word_id = 2;
  std::size_t n_words = 1000;
};

/// One piece per word; pieces carry the word's flag.
std::vector<masking::TokenizedSequence> flag_sequences(const FlagCorpusConfig& config);

/// The same corpus as annotated sentences: runs of flagged tokens become
/// chunks (split every 10 tokens), chunk tokens are ADJ/NOUN ending in NOUN,
/// other tokens VERB or ADP.
std::vector<chunker::AnnotatedSentence> flag_annotations(const FlagCorpusConfig& config);

/// Corpus for the tiny masked LM: filler words are uniform noise while
/// noun-chunk tokens belong to fixed multi-piece terms, so a chunk piece is
/// predictable from its neighbours and a filler piece is not.
struct TermCorpusConfig {
  std::size_t n_sequences = 4000;
  std::size_t sequence_length = 24;
  std::size_t n_filler = 40;
  std::size_t n_terms = 30;
  std::size_t term_pieces = 60;
  std::size_t min_term_length = 2;
  std::size_t max_term_length = 3;
  /// Chance of starting a term at a free position; 1/3.5 gives p(y=1) near 1/2.
  double term_start_prob = 1.0 / 3.5;
  std::uint64_t seed = 7;
};

struct TermCorpus {
  std::vector<masking::TokenizedSequence> sequences;
  std::size_t vocab_size = 0;
  masking::PieceId unk_id = 0;
  masking::PieceId mask_id = 1;
};

TermCorpus term_corpus(const TermCorpusConfig& config);

}  // namespace lim::synthetic
