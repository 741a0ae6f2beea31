#include "lim/synthetic.hpp"

#include <algorithm>
#include <string>

#include "lim/error.hpp"
#include "lim/rng.hpp"

namespace lim::synthetic {
namespace {

struct FlagSentence {
  std::vector<std::int32_t> words;
  std::vector<bool> y;
};

void check(const FlagCorpusConfig& c) {
  require(c.p_y1 >= 0.0 && c.p_y1 <= 1.0, "p_y1 must be in [0, 1]");
  require(c.length_step >= 1 && c.min_length >= 1 && c.min_length <= c.max_length,
          "invalid synthetic sentence lengths");
  require(c.n_words >= 1, "n_words must be positive");
}

FlagSentence flag_sentence(const FlagCorpusConfig& c, std::size_t ordinal) {
  Rng rng(c.seed, streams::kSynthetic, ordinal);
  const std::size_t n_lengths = (c.max_length - c.min_length) / c.length_step + 1;
  const std::size_t length = c.min_length + c.length_step * rng.index(n_lengths);
  FlagSentence s;
  s.words.reserve(length);
  s.y.reserve(length);
  for (std::size_t k = 0; k < length; ++k) {
    s.y.push_back(rng.bernoulli(c.p_y1));
    s.words.push_back(c.first_word_id + static_cast<std::int32_t>(rng.index(c.n_words)));
  }
  return s;
}

}  // namespace

std::vector<masking::TokenizedSequence> flag_sequences(const FlagCorpusConfig& config) {
  check(config);
  std::vector<masking::TokenizedSequence> out;
  out.reserve(config.n_sentences);
  for (std::size_t i = 0; i < config.n_sentences; ++i) {
    FlagSentence s = flag_sentence(config, i);
    out.push_back({std::move(s.words), std::move(s.y), "syn-" + std::to_string(i)});
  }
  return out;
}

std::vector<chunker::AnnotatedSentence> flag_annotations(const FlagCorpusConfig& config) {
  check(config);
  using chunker::Pos;
  std::vector<chunker::AnnotatedSentence> out;
  out.reserve(config.n_sentences);
  for (std::size_t i = 0; i < config.n_sentences; ++i) {
    const FlagSentence s = flag_sentence(config, i);
    std::vector<chunker::Span> spans;
    for (const chunker::Span& run : chunker::spans_from_flags(s.y)) {
      for (std::size_t b = run.begin; b < run.end; b += chunker::kDefaultMaxChunkLength) {
        spans.push_back({b, std::min(run.end, b + chunker::kDefaultMaxChunkLength)});
      }
    }
    std::vector<chunker::AnnotatedToken> tokens(s.words.size());
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      tokens[k].surface = "w" + std::to_string(s.words[k]);
      tokens[k].pos = s.words[k] % 2 == 0 ? Pos::kVerb : Pos::kAdp;
    }
    for (const chunker::Span& span : spans) {
      for (std::size_t k = span.begin; k < span.end; ++k) {
        tokens[k].pos = k + 1 == span.end ? Pos::kNoun : Pos::kAdj;
      }
    }
    out.push_back(chunker::AnnotatedSentence::from_spans(std::move(tokens), std::move(spans)));
  }
  return out;
}

TermCorpus term_corpus(const TermCorpusConfig& c) {
  require(c.n_filler >= 1 && c.n_terms >= 1 && c.term_pieces >= c.max_term_length,
          "invalid term corpus sizes");
  require(c.min_term_length >= 1 && c.min_term_length <= c.max_term_length,
          "invalid term lengths");
  TermCorpus corpus;
  // Ids: 0 [UNK], 1 [MASK], then filler words, then term pieces.
  const auto first_filler = static_cast<masking::PieceId>(2);
  const auto first_piece = static_cast<masking::PieceId>(2 + c.n_filler);
  corpus.vocab_size = 2 + c.n_filler + c.term_pieces;

  Rng term_rng(c.seed, streams::kSynthetic, ~std::uint64_t{0});
  std::vector<std::vector<masking::PieceId>> terms(c.n_terms);
  for (auto& term : terms) {
    const std::size_t len =
        c.min_term_length + term_rng.index(c.max_term_length - c.min_term_length + 1);
    while (term.size() < len) {
      const auto piece = first_piece + static_cast<masking::PieceId>(term_rng.index(c.term_pieces));
      if (std::find(term.begin(), term.end(), piece) == term.end()) term.push_back(piece);
    }
  }

  corpus.sequences.reserve(c.n_sequences);
  for (std::size_t i = 0; i < c.n_sequences; ++i) {
    Rng rng(c.seed, streams::kSynthetic, i);
    masking::TokenizedSequence seq;
    seq.doc_id = "term-" + std::to_string(i);
    while (seq.pieces.size() < c.sequence_length) {
      const auto& term = terms[rng.index(terms.size())];
      if (rng.bernoulli(c.term_start_prob) &&
          seq.pieces.size() + term.size() <= c.sequence_length) {
        seq.pieces.insert(seq.pieces.end(), term.begin(), term.end());
        seq.y.insert(seq.y.end(), term.size(), true);
      } else {
        seq.pieces.push_back(first_filler + static_cast<masking::PieceId>(rng.index(c.n_filler)));
        seq.y.push_back(false);
      }
    }
    corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

}  // namespace lim::synthetic
