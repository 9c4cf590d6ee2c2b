#include "claimbrush/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "claimbrush/utf8.hpp"

namespace claimbrush {

namespace {

bool match(std::string_view text, std::size_t pos, std::string_view lit) {
  return text.substr(pos).starts_with(lit);
}

Segmentation segment_words(std::string_view text) {
  Segmentation seg{SegmentMode::Word, {}};
  std::string run;
  const auto flush = [&] {
    if (!run.empty()) seg.tokens.push_back(std::move(run));
    run.clear();
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t cp = utf8::next(text, pos);
    if (utf8::is_space(cp)) {
      flush();
    } else if (utf8::is_cjk(cp)) {
      flush();
      seg.tokens.emplace_back(text.substr(start, pos - start));
    } else {
      run.append(text.substr(start, pos - start));
    }
  }
  flush();
  return seg;
}

Segmentation segment_phrases(std::string_view text, const PhraseRules& rules) {
  Segmentation seg{SegmentMode::Phrase, {}};
  std::string span;
  const auto flush = [&] {
    const auto trimmed = utf8::trim(span);
    if (!trimmed.empty()) seg.tokens.emplace_back(trimmed);
    span.clear();
  };
  const auto find = [&](const std::vector<std::string>& list, std::size_t pos) -> std::size_t {
    for (const auto& marker : list) {
      if (!marker.empty() && match(text, pos, marker)) return marker.size();
    }
    return 0;
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (const auto len = find(rules.delimiters, pos)) {
      flush();
      pos += len;
    } else if (const auto len = find(rules.split_after, pos)) {
      span.append(text.substr(pos, len));
      flush();
      pos += len;
    } else if (const auto len = find(rules.split_before, pos)) {
      flush();
      span.append(text.substr(pos, len));
      pos += len;
    } else {
      const std::size_t start = pos;
      utf8::next(text, pos);
      span.append(text.substr(start, pos - start));
    }
  }
  flush();
  return seg;
}

int count_of(const NGramMultiset& m, const NGram& g) {
  const auto it = m.counts.find(g);
  return it == m.counts.end() ? 0 : it->second;
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

SariComponents sari_order(const NGramMultiset& s, const NGramMultiset& r, const NGramMultiset& c) {
  SariComponents out;

  // Keep.
  double keep_p_sum = 0.0;
  int keep_keys = 0;
  for (const auto& [g, sc] : s.counts) {
    const int kept = std::min(sc, count_of(c, g));
    if (kept == 0) continue;
    ++keep_keys;
    keep_p_sum += static_cast<double>(std::min(kept, count_of(r, g))) / kept;
  }
  double keep_r_sum = 0.0;
  int keepall_keys = 0;
  for (const auto& [g, sc] : s.counts) {
    const int should = std::min(sc, count_of(r, g));
    if (should == 0) continue;
    ++keepall_keys;
    const int good = std::min({sc, count_of(c, g), count_of(r, g)});
    keep_r_sum += static_cast<double>(good) / should;
  }
  const double keep_p = keep_keys ? keep_p_sum / keep_keys : 0.0;
  const double keep_r = keepall_keys ? keep_r_sum / keepall_keys : 0.0;
  out.keep_f = f1(keep_p, keep_r);

  // Delete.
  double del_sum = 0.0;
  int del_keys = 0;
  bool reference_deletes = false;
  for (const auto& [g, sc] : s.counts) {
    if (sc - count_of(r, g) > 0) reference_deletes = true;
    const int deleted = sc - count_of(c, g);
    if (deleted <= 0) continue;
    ++del_keys;
    // Good deletions: removed copies the reference also lacks.
    const int should = std::max(0, sc - count_of(r, g));
    del_sum += static_cast<double>(std::min(deleted, should)) / deleted;
  }
  if (del_keys) {
    out.del_p = del_sum / del_keys;
  } else {
    out.del_p = reference_deletes ? 0.0 : 1.0;
  }

  // Add (set semantics).
  int added = 0;
  int added_good = 0;
  for (const auto& [g, cc] : c.counts) {
    if (count_of(s, g) > 0) continue;
    ++added;
    if (count_of(r, g) > 0) ++added_good;
  }
  int addable = 0;
  for (const auto& [g, rc] : r.counts) {
    if (count_of(s, g) == 0) ++addable;
  }
  const double add_p = added ? static_cast<double>(added_good) / added : 0.0;
  const double add_r = addable ? static_cast<double>(added_good) / addable : 0.0;
  out.add_f = f1(add_p, add_r);
  return out;
}

InstanceScores score_instance(const std::string& source, const std::string& reference,
                              const std::string& hypothesis, const PhraseRules& rules) {
  InstanceScores out;
  for (const SegmentMode mode : {SegmentMode::Word, SegmentMode::Phrase}) {
    const auto s = segment(source, mode, rules).tokens;
    const auto r = segment(reference, mode, rules).tokens;
    const auto h = segment(hypothesis, mode, rules).tokens;
    const double g = gleu(s, r, h);
    const SariScore sc = sari(s, r, h);
    const SariComponents parts{sc.add_f, sc.keep_f, sc.del_p};
    if (mode == SegmentMode::Word) {
      out.gleu_word = g;
      out.sari_word = sc.score;
      out.sari_word_components = parts;
    } else {
      out.gleu_phrase = g;
      out.sari_phrase = sc.score;
      out.sari_phrase_components = parts;
    }
  }
  return out;
}

}  // namespace

Segmentation segment(std::string_view text, SegmentMode mode, const PhraseRules& rules) {
  return mode == SegmentMode::Word ? segment_words(text) : segment_phrases(text, rules);
}

int NGramMultiset::total() const {
  int sum = 0;
  for (const auto& [g, count] : counts) sum += count;
  return sum;
}

NGramMultiset ngrams(const std::vector<std::string>& tokens, int n) {
  if (n < 1) throw std::invalid_argument("n-gram order must be positive");
  NGramMultiset out{n, {}};
  const auto order = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    ++out.counts[NGram(tokens.begin() + i, tokens.begin() + i + order)];
  }
  return out;
}

double gleu(const std::vector<std::string>& source, const std::vector<std::string>& reference,
            const std::vector<std::string>& hypothesis, int max_n) {
  if (max_n < 1) throw std::invalid_argument("max_n must be at least 1");
  if (hypothesis.empty()) return 0.0;
  const int orders = std::min<int>(max_n, static_cast<int>(hypothesis.size()));
  double log_precision = 0.0;
  for (int n = 1; n <= orders; ++n) {
    const auto h = ngrams(hypothesis, n);
    const auto r = ngrams(reference, n);
    const auto s = ngrams(source, n);
    int matches = 0;
    int penalty = 0;
    for (const auto& [g, hc] : h.counts) {
      const int rc = count_of(r, g);
      matches += std::min(hc, rc);
      if (rc == 0) penalty += std::min(hc, count_of(s, g));
    }
    const int numerator = std::max(0, matches - penalty);
    if (numerator == 0) return 0.0;
    log_precision += std::log(static_cast<double>(numerator) / h.total());
  }
  const double ratio = static_cast<double>(reference.size()) / hypothesis.size();
  const double brevity = std::exp(std::min(0.0, 1.0 - ratio));
  return brevity * std::exp(log_precision / orders);
}

SariScore sari(const std::vector<std::string>& source, const std::vector<std::string>& reference,
               const std::vector<std::string>& hypothesis, int max_n) {
  if (max_n < 1) throw std::invalid_argument("max_n must be at least 1");
  const std::size_t longest = std::max({source.size(), reference.size(), hypothesis.size()});
  const int orders = std::max(1, std::min<int>(max_n, static_cast<int>(longest)));
  SariScore out;
  for (int n = 1; n <= orders; ++n) {
    const auto part = sari_order(ngrams(source, n), ngrams(reference, n), ngrams(hypothesis, n));
    out.add_f += part.add_f;
    out.keep_f += part.keep_f;
    out.del_p += part.del_p;
  }
  out.add_f /= orders;
  out.keep_f /= orders;
  out.del_p /= orders;
  out.score = (out.add_f + out.keep_f + out.del_p) / 3.0;
  return out;
}

MetricReport evaluate_corpus(const std::vector<TextPair>& pairs,
                             const std::vector<std::string>& hypotheses, const PhraseRules& rules) {
  if (pairs.size() != hypotheses.size() || pairs.empty()) {
    throw LengthMismatch("expected one hypothesis per pair (" + std::to_string(pairs.size()) +
                         " pairs, " + std::to_string(hypotheses.size()) + " hypotheses)");
  }
  MetricReport report;
  report.per_instance.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    report.per_instance.push_back(
        score_instance(pairs[i].source, pairs[i].reference, hypotheses[i], rules));
  }
  const double n = static_cast<double>(pairs.size());
  const auto add = [](SariComponents& acc, const SariComponents& x) {
    acc.add_f += x.add_f;
    acc.keep_f += x.keep_f;
    acc.del_p += x.del_p;
  };
  for (const InstanceScores& s : report.per_instance) {
    report.gleu_word += s.gleu_word;
    report.gleu_phrase += s.gleu_phrase;
    report.sari_word += s.sari_word;
    report.sari_phrase += s.sari_phrase;
    add(report.sari_word_components, s.sari_word_components);
    add(report.sari_phrase_components, s.sari_phrase_components);
  }
  report.gleu_word /= n;
  report.gleu_phrase /= n;
  report.sari_word /= n;
  report.sari_phrase /= n;
  for (SariComponents* c : {&report.sari_word_components, &report.sari_phrase_components}) {
    c->add_f /= n;
    c->keep_f /= n;
    c->del_p /= n;
  }
  return report;
}

double acceptance_rate(const std::vector<std::string>& hypotheses,
                       const std::vector<ScoringContext>& contexts, const PreferenceScorer& scorer) {
  if (hypotheses.empty()) throw EmptyBatch("acceptance rate of an empty hypothesis list");
  if (hypotheses.size() != contexts.size()) {
    throw LengthMismatch("expected one scoring context per hypothesis");
  }
  if (!scorer.trained()) throw UntrainedScorer("acceptance rate needs a trained scorer");
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const double p = scorer.probability(hypotheses[i], contexts[i].reasons, contexts[i].prior_art);
    if (label_desirability(p) == Desirability::Desirable) ++accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(hypotheses.size());
}

}  // namespace claimbrush
