#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimbrush/errors.hpp"
#include "claimbrush/preference.hpp"

namespace claimbrush {

enum class SegmentMode { Word, Phrase };

struct Segmentation {
  SegmentMode mode = SegmentMode::Word;
  std::vector<std::string> tokens;
};

/// Phrase-mode boundaries. Delimiters are dropped; split_after markers stay
/// with the preceding span, split_before markers open the next one. The
/// "と、" connective is covered by the 、 delimiter.
struct PhraseRules {
  std::vector<std::string> delimiters{"、", "。", "；"};
  std::vector<std::string> split_after{"であって", "において"};
  std::vector<std::string> split_before{"を備え", "を有し"};
};

/// Word mode: one token per CJK code point, whitespace-delimited runs
/// otherwise. Phrase mode: spans between the rules' boundaries, trimmed,
/// empty spans dropped.
Segmentation segment(std::string_view text, SegmentMode mode, const PhraseRules& rules = {});

using NGram = std::vector<std::string>;

struct NGramMultiset {
  int n = 1;
  std::map<NGram, int> counts;

  int total() const;
};

NGramMultiset ngrams(const std::vector<std::string>& tokens, int n);

/// Sentence-level GLEU with one reference. For each order n up to
/// min(max_n, |hypothesis|) the precision is
///   max(0, |H & R| - |H & (S minus keys of R)|) / |H|
/// and the score is the geometric mean times exp(min(0, 1 - |ref|/|hyp|)).
/// Any zero precision gives 0; an empty hypothesis scores 0.
double gleu(const std::vector<std::string>& source, const std::vector<std::string>& reference,
            const std::vector<std::string>& hypothesis, int max_n = 4);

struct SariScore {
  double score = 0.0;
  double add_f = 0.0;
  double keep_f = 0.0;
  double del_p = 0.0;
};

/// SARI with one reference: mean of add F1, keep F1 and delete precision,
/// each averaged over orders 1..min(max_n, longest of the three sequences).
/// 0/0 ratios are 0, except delete precision when the hypothesis deletes
/// nothing at an order: 1 if the reference deletes nothing there too, else 0.
SariScore sari(const std::vector<std::string>& source, const std::vector<std::string>& reference,
               const std::vector<std::string>& hypothesis, int max_n = 4);

struct SariComponents {
  double add_f = 0.0;
  double keep_f = 0.0;
  double del_p = 0.0;
};

struct InstanceScores {
  double gleu_word = 0.0;
  double gleu_phrase = 0.0;
  double sari_word = 0.0;
  double sari_phrase = 0.0;
  SariComponents sari_word_components;
  SariComponents sari_phrase_components;
};

/// Corpus scores are arithmetic means of the per-instance scores, in [0, 1].
struct MetricReport {
  double gleu_word = 0.0;
  double gleu_phrase = 0.0;
  double sari_word = 0.0;
  double sari_phrase = 0.0;
  SariComponents sari_word_components;
  SariComponents sari_phrase_components;
  std::optional<double> acceptance_rate;
  std::vector<InstanceScores> per_instance;
};

struct TextPair {
  std::string source;
  std::string reference;
};

/// Throws LengthMismatch unless pairs and hypotheses have the same non-zero
/// length.
MetricReport evaluate_corpus(const std::vector<TextPair>& pairs,
                             const std::vector<std::string>& hypotheses,
                             const PhraseRules& rules = {});

struct ScoringContext {
  std::vector<std::string> reasons;
  std::string prior_art;
};

/// Fraction of hypotheses the scorer labels Desirable (probability >= 0.5).
/// Throws EmptyBatch, LengthMismatch or UntrainedScorer.
double acceptance_rate(const std::vector<std::string>& hypotheses,
                       const std::vector<ScoringContext>& contexts, const PreferenceScorer& scorer);

}  // namespace claimbrush
