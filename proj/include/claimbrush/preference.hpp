#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "claimbrush/corpus.hpp"
#include "claimbrush/errors.hpp"
#include "claimbrush/math.hpp"

namespace claimbrush {

enum class Desirability { Undesirable, Desirable };

std::string_view to_string(Desirability label);
/// Accepts "desirable"/"undesirable" (also "D"/"U"); throws std::invalid_argument.
Desirability parse_desirability(std::string_view text);

/// Anything that estimates the probability that a claims text overcomes its
/// refusal reasons given a prior-art text.
class PreferenceScorer {
 public:
  virtual ~PreferenceScorer() = default;
  virtual bool trained() const = 0;
  virtual double probability(std::string_view claims, const std::vector<std::string>& reasons,
                             std::string_view prior_art) const = 0;
};

struct PreferenceExample {
  std::string claims;
  std::vector<std::string> reasons;
  std::string prior_art;
  Desirability label = Desirability::Undesirable;
};

/// Deterministic stand-in for a language-model encoder.
///
/// Layout of the v1 vector:
///   0  char 3-gram overlap of claims with prior art (fraction of claim 3-grams)
///   1  char 5-gram overlap
///   2  log(1 + claim count)
///   3  log(1 + mean claim length in characters)
///   4  multi-multi claim count
///   5  log(1 + total characters)
///   6  relative length delta against prior art, clamped to [-5, 5]
///   7  log(1 + number of refusal reasons)
///   8.. one indicator per known refusal-reason label number, then "other"
class FeatureExtractor {
 public:
  static constexpr std::string_view kVersion = "cb-features-v1";
  static constexpr int kBaseFeatures = 8;

  FeatureExtractor() = default;
  explicit FeatureExtractor(std::vector<std::string> reason_codes);

  /// Collects the distinct reason label numbers of a training set.
  static FeatureExtractor fit(const std::vector<PreferenceExample>& examples);
  /// Inverse of spec(); throws std::invalid_argument on an unknown version.
  static FeatureExtractor from_spec(std::string_view spec);

  /// "cb-features-v1" followed by ";reasons=<code>,<code>,..." when the
  /// vocabulary is non-empty.
  std::string spec() const;
  int dimension() const noexcept { return kBaseFeatures + static_cast<int>(codes_.size()) + 1; }
  const std::vector<std::string>& reason_codes() const noexcept { return codes_; }

  Eigen::VectorXd extract(std::string_view claims, const std::vector<std::string>& reasons,
                          std::string_view prior_art) const;

 private:
  std::vector<std::string> codes_;
};

/// Features with an empty reason vocabulary (only the "other" bucket).
Eigen::VectorXd extract_features(std::string_view claims, const std::vector<std::string>& reasons,
                                 std::string_view prior_art);

/// Fraction of distinct character n-grams of text that also occur in other.
/// Zero when text has no n-grams.
double char_ngram_overlap(std::string_view text, std::string_view other, int n);

struct PreferenceModelParams {
  Eigen::VectorXd weights;
  double bias = 0.0;
  std::string feature_spec;
};

/// sigmoid(w . h + b). Throws DimensionMismatch.
double score(const PreferenceModelParams& params, const Eigen::Ref<const Eigen::VectorXd>& features);

/// Desirable iff prob >= 0.5.
Desirability label_desirability(double prob);

struct TrainOptions {
  double learning_rate = 0.5;
  int epochs = 200;
  int batch_size = 64;
  std::uint64_t seed = 42;
};

/// Mini-batch gradient descent on mean binary cross-entropy over a dense
/// design matrix (rows are examples, labels are 0/1). Starts from zero
/// weights. Throws DegenerateData when one class is absent.
LogisticFit<double> fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                                 const TrainOptions& options);

/// Fits the extractor vocabulary on examples, then the linear model.
PreferenceModelParams train_preference(const std::vector<PreferenceExample>& examples,
                                       const TrainOptions& options);

/// Scores text through the extractor named by the params' feature_spec.
class LinearPreferenceScorer final : public PreferenceScorer {
 public:
  LinearPreferenceScorer() = default;
  explicit LinearPreferenceScorer(PreferenceModelParams params);

  bool trained() const override { return trained_; }
  double probability(std::string_view claims, const std::vector<std::string>& reasons,
                     std::string_view prior_art) const override;

  const PreferenceModelParams& params() const noexcept { return params_; }

 private:
  PreferenceModelParams params_;
  FeatureExtractor extractor_;
  bool trained_ = false;
};

/// Two examples per refused-then-amended pair (Type 5): the filed claims as
/// Undesirable and the granted claims as Desirable, sharing one prior-art
/// text sampled per pair (empty when the pair cites none).
std::vector<PreferenceExample> make_preference_examples(const std::vector<RewritePair>& pairs,
                                                        std::uint64_t seed);

/// Uniform choice among citations. Throws NoCitations on an empty list.
std::string sample_prior_art(const std::vector<std::string>& citations, std::uint64_t seed);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::size_t predicted = 0;
};

struct PreferenceReport {
  ClassMetrics desirable;
  ClassMetrics undesirable;
  double accuracy = 0.0;
  std::size_t total = 0;
};

/// Per-class precision/recall/F1; 0/0 ratios are reported as 0.
PreferenceReport classification_report(const std::vector<Desirability>& predicted,
                                        const std::vector<Desirability>& actual);

PreferenceReport evaluate_preference(const PreferenceScorer& scorer,
                                     const std::vector<PreferenceExample>& examples);

// JSON persistence: {feature_spec, weights, bias}.
void save_model(const PreferenceModelParams& params, const std::filesystem::path& path);
PreferenceModelParams load_model(const std::filesystem::path& path);

// JSONL records: {claims, reasons, prior_art, label}.
std::vector<PreferenceExample> read_preference_examples(const std::filesystem::path& path);
void write_preference_examples(const std::vector<PreferenceExample>& examples,
                               const std::filesystem::path& path);

}  // namespace claimbrush
