#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "claimbrush/corpus.hpp"
#include "claimbrush/errors.hpp"
#include "claimbrush/preference.hpp"

namespace claimbrush {

using TokenIds = std::vector<int>;

/// A learnable bigram policy: logits(context, next) over a vocabulary whose
/// first two entries are the begin and end markers. The prompt's last token
/// (or the begin marker for an empty prompt) is the first context.
class ToyPolicy {
 public:
  static constexpr int kBegin = 0;
  static constexpr int kEnd = 1;
  static constexpr std::string_view kBeginToken = "<s>";
  static constexpr std::string_view kEndToken = "</s>";

  ToyPolicy() : ToyPolicy(std::vector<std::string>{}) {}
  /// Uniform policy (all-zero logits) over the markers plus tokens.
  explicit ToyPolicy(const std::vector<std::string>& tokens);
  /// logits must be square with one row per vocabulary entry.
  ToyPolicy(const std::vector<std::string>& tokens, Eigen::MatrixXd logits);

  /// Vocabulary of every word-segmented token in texts, sorted.
  static ToyPolicy from_texts(const std::vector<std::string>& texts);

  int size() const noexcept { return static_cast<int>(vocab_.size()); }
  const std::vector<std::string>& vocab() const noexcept { return vocab_; }

  /// Throws UnknownToken.
  int id(std::string_view token) const;
  TokenIds encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

  const Eigen::MatrixXd& logits() const noexcept { return logits_; }
  Eigen::MatrixXd& logits() noexcept { return logits_; }

  Eigen::VectorXd log_probs(int context) const;

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  Eigen::MatrixXd logits_;
};

/// Word segmentation used for toy-policy text.
std::vector<std::string> tokenize_text(std::string_view text);
/// Concatenates tokens, with a space between adjacent non-CJK tokens.
/// Marker tokens are dropped.
std::string detokenize(const std::vector<std::string>& tokens);

/// Sum over response positions of log softmax(logits[context])[token].
/// Throws UnknownToken for ids outside the vocabulary.
double policy_logprob(const ToyPolicy& policy, std::span<const int> prompt,
                      std::span<const int> response);

/// Gradient of policy_logprob with respect to every logit.
Eigen::MatrixXd logprob_gradient(const ToyPolicy& policy, std::span<const int> prompt,
                                 std::span<const int> response);

struct Sequence {
  TokenIds prompt;
  TokenIds response;
};

/// Mean negative log-likelihood. Throws EmptyBatch.
double sft_loss(const ToyPolicy& policy, const std::vector<Sequence>& batch);
Eigen::MatrixXd sft_grad(const ToyPolicy& policy, const std::vector<Sequence>& batch);
ToyPolicy sft_train_step(const ToyPolicy& policy, const std::vector<Sequence>& batch,
                         double learning_rate);

enum class Z0Pairing {
  // Response i+1 (cyclically) scored under prompt i.
  Mismatched,
  Matched,
};

struct KtoConfig {
  double beta = 0.2;
  double lambda_d = 3.0;
  double lambda_u = 1.0;
  Z0Pairing z0_pairing = Z0Pairing::Mismatched;

  /// Throws std::invalid_argument unless beta > 0 and both weights >= 0.
  void validate() const;
  double lambda(Desirability label) const {
    return label == Desirability::Desirable ? lambda_d : lambda_u;
  }
};

struct KtoExample {
  std::string prompt_text;
  TokenIds prompt;
  TokenIds response;
  Desirability label = Desirability::Undesirable;
  double policy_logprob = 0.0;
  double ref_logprob = 0.0;
};

struct KtoBatch {
  std::vector<KtoExample> examples;
  double z0 = 0.0;
};

struct KtoSample {
  TokenIds prompt;
  TokenIds response;
  Desirability label = Desirability::Undesirable;
};

inline double log_ratio(double policy_logprob, double ref_logprob) {
  return policy_logprob - ref_logprob;
}

/// Batch estimate of KL(policy || reference), clamped at zero.
/// Throws EmptyBatch.
double estimate_z0(const ToyPolicy& policy, const ToyPolicy& reference,
                   const std::vector<KtoSample>& batch, Z0Pairing pairing = Z0Pairing::Mismatched);

/// lambda_D sigmoid(beta (r - z0)) for desirable, lambda_U sigmoid(beta (z0 - r))
/// for undesirable examples.
double kto_value(double r_theta, double z0, Desirability label, const KtoConfig& config);

/// Mean over examples of lambda_y - v(x, y), using the stored log-probs.
/// Throws EmptyBatch.
double kto_loss(const KtoBatch& batch, const KtoConfig& config);

/// The KTO loss as a function of the policy with z0 held fixed.
double kto_objective(const ToyPolicy& policy, const ToyPolicy& reference,
                     const std::vector<KtoSample>& batch, const KtoConfig& config, double z0);

struct KtoGradient {
  double loss = 0.0;
  double z0 = 0.0;
  Eigen::MatrixXd gradient;
};

/// Analytic gradient of the KTO loss with respect to the policy logits. z0 is
/// estimated from the current policy and treated as a constant.
KtoGradient kto_grad(const ToyPolicy& policy, const ToyPolicy& reference,
                     const std::vector<KtoSample>& batch, const KtoConfig& config);

/// One gradient-descent step on the KTO loss. Throws std::invalid_argument
/// for a negative learning rate.
ToyPolicy kto_train_step(const ToyPolicy& policy, const ToyPolicy& reference,
                         const std::vector<KtoSample>& batch, const KtoConfig& config,
                         double learning_rate);

struct SamplingOptions {
  double top_p = 0.95;
  double temperature = 0.7;
  int max_len = 64;
};

/// softmax(logits[context] / temperature).
Eigen::VectorXd step_distribution(const ToyPolicy& policy, int context, double temperature);

/// Indices of the smallest probability-sorted prefix whose mass reaches
/// top_p, most probable first. Ties sort by lower index.
std::vector<int> nucleus(const Eigen::VectorXd& probs, double top_p);

/// Autoregressive nucleus sampling. The end marker, when drawn, is the last
/// element of the result; at most max_len tokens are produced.
TokenIds sample_top_p(const ToyPolicy& policy, std::span<const int> prompt,
                      const SamplingOptions& options, std::mt19937_64& rng);
TokenIds sample_top_p(const ToyPolicy& policy, std::span<const int> prompt,
                      const SamplingOptions& options, std::uint64_t seed);

TokenIds greedy_decode(const ToyPolicy& policy, std::span<const int> prompt, int max_len);

/// The chat-format rewriting prompt, ending right after the assistant header.
/// Reasons are rendered on one line as a JSON array of strings.
std::string build_prompt(std::string_view claims, const std::vector<std::string>& reasons);

/// build_prompt followed by the target claims and the closing marker.
std::string build_training_text(std::string_view claims, const std::vector<std::string>& reasons,
                                std::string_view output);

struct PromptFields {
  std::string claims;
  std::vector<std::string> reasons;
};

/// Inverse of build_prompt; throws std::invalid_argument on other text.
PromptFields parse_prompt(std::string_view prompt);

struct KtoBuildOptions {
  int k = 12;
  SamplingOptions sampling{};
  std::uint64_t seed = 42;
};

/// Per sample: k sampled candidates labeled by the scorer, then the filed
/// claims as Undesirable and (when present) the granted claims as Desirable.
/// Copy and gold responses end with the end marker. Throws UntrainedScorer.
std::vector<KtoExample> build_kto_dataset(const ToyPolicy& policy, const ToyPolicy& reference,
                                          const PreferenceScorer& scorer,
                                          const std::vector<RewritePair>& samples,
                                          const KtoBuildOptions& options);

std::vector<KtoSample> to_samples(const std::vector<KtoExample>& examples);

// JSONL: {prompt, response, label, policy_logprob, ref_logprob}.
void write_kto_dataset(const std::vector<KtoExample>& examples, const ToyPolicy& policy,
                       const std::filesystem::path& path);

}  // namespace claimbrush
