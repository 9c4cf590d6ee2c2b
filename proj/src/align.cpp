#include "claimbrush/align.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "claimbrush/jsonl.hpp"
#include "claimbrush/math.hpp"
#include "claimbrush/metrics.hpp"
#include "claimbrush/seed.hpp"
#include "claimbrush/utf8.hpp"

namespace claimbrush {

namespace {

constexpr std::string_view kPromptHead =
    "<|im_start|>system\n"
    "You are a helpful assistant.<|im_end|>\n"
    "<|im_start|>user\n"
    "Please rewrite the following patent claims, which may be refused, in a way that it can be "
    "published as a patent.\n";
constexpr std::string_view kReasonsHeader = "\nExpected refusal reasons:\n";
constexpr std::string_view kPromptTail = "\n<|im_end|>\n<|im_start|>assistant\n";
constexpr std::string_view kTurnEnd = "\n<|im_end|>";

int context_of(std::span<const int> prompt) {
  return prompt.empty() ? ToyPolicy::kBegin : prompt.back();
}

void check_ids(const ToyPolicy& policy, std::span<const int> ids) {
  for (int id : ids) {
    if (id < 0 || id >= policy.size()) throw UnknownToken("token id " + std::to_string(id));
  }
}

bool cjk_token(const std::string& token) {
  std::size_t pos = 0;
  return !token.empty() && utf8::is_cjk(utf8::next(token, pos));
}

// Adds scale * d logprob / d logits into grad.
void accumulate_logprob_gradient(const ToyPolicy& policy, std::span<const int> prompt,
                                 std::span<const int> response, double scale,
                                 Eigen::MatrixXd& grad) {
  int context = context_of(prompt);
  for (int token : response) {
    const Eigen::VectorXd probs = softmax(Eigen::VectorXd(policy.logits().row(context).transpose()));
    grad.row(context) -= scale * probs.transpose();
    grad(context, token) += scale;
    context = token;
  }
}

std::vector<double> log_ratios(const ToyPolicy& policy, const ToyPolicy& reference,
                               const std::vector<KtoSample>& batch) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& s : batch) {
    out.push_back(log_ratio(policy_logprob(policy, s.prompt, s.response),
                            policy_logprob(reference, s.prompt, s.response)));
  }
  return out;
}

double example_loss(double r, double z0, Desirability label, const KtoConfig& config) {
  return config.lambda(label) - kto_value(r, z0, label, config);
}

}  // namespace

ToyPolicy::ToyPolicy(const std::vector<std::string>& tokens)
    : ToyPolicy(tokens, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tokens.size()) + 2,
                                              static_cast<Eigen::Index>(tokens.size()) + 2)) {}

ToyPolicy::ToyPolicy(const std::vector<std::string>& tokens, Eigen::MatrixXd logits)
    : logits_(std::move(logits)) {
  vocab_.emplace_back(kBeginToken);
  vocab_.emplace_back(kEndToken);
  for (const auto& t : tokens) {
    if (t == kBeginToken || t == kEndToken) {
      throw std::invalid_argument("marker tokens are implicit in the vocabulary");
    }
    vocab_.push_back(t);
  }
  for (int i = 0; i < size(); ++i) {
    if (!index_.emplace(vocab_[static_cast<std::size_t>(i)], i).second) {
      throw std::invalid_argument("duplicate vocabulary token '" + vocab_[static_cast<std::size_t>(i)] + "'");
    }
  }
  if (logits_.rows() != size() || logits_.cols() != size()) {
    throw DimensionMismatch("logit table must be " + std::to_string(size()) + "x" +
                            std::to_string(size()));
  }
}

ToyPolicy ToyPolicy::from_texts(const std::vector<std::string>& texts) {
  std::set<std::string> tokens;
  for (const auto& text : texts) {
    for (auto& t : tokenize_text(text)) tokens.insert(std::move(t));
  }
  tokens.erase(std::string(kBeginToken));
  tokens.erase(std::string(kEndToken));
  return ToyPolicy(std::vector<std::string>(tokens.begin(), tokens.end()));
}

int ToyPolicy::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) throw UnknownToken("token '" + std::string(token) + "' is not in the vocabulary");
  return it->second;
}

TokenIds ToyPolicy::encode(const std::vector<std::string>& tokens) const {
  TokenIds ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> ToyPolicy::decode(std::span<const int> ids) const {
  check_ids(*this, ids);
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(vocab_[static_cast<std::size_t>(id)]);
  return out;
}

Eigen::VectorXd ToyPolicy::log_probs(int context) const {
  return log_softmax(Eigen::VectorXd(logits_.row(context).transpose()));
}

std::vector<std::string> tokenize_text(std::string_view text) {
  return segment(text, SegmentMode::Word).tokens;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool previous_latin = false;
  for (const auto& t : tokens) {
    if (t == ToyPolicy::kBeginToken || t == ToyPolicy::kEndToken) continue;
    const bool latin = !cjk_token(t);
    if (latin && previous_latin) out += ' ';
    out += t;
    previous_latin = latin;
  }
  return out;
}

double policy_logprob(const ToyPolicy& policy, std::span<const int> prompt,
                      std::span<const int> response) {
  check_ids(policy, prompt);
  check_ids(policy, response);
  double total = 0.0;
  int context = context_of(prompt);
  for (int token : response) {
    total += policy.log_probs(context)(token);
    context = token;
  }
  return total;
}

Eigen::MatrixXd logprob_gradient(const ToyPolicy& policy, std::span<const int> prompt,
                                 std::span<const int> response) {
  check_ids(policy, prompt);
  check_ids(policy, response);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(policy.size(), policy.size());
  accumulate_logprob_gradient(policy, prompt, response, 1.0, grad);
  return grad;
}

double sft_loss(const ToyPolicy& policy, const std::vector<Sequence>& batch) {
  if (batch.empty()) throw EmptyBatch("SFT loss of an empty batch");
  double total = 0.0;
  for (const auto& s : batch) total -= policy_logprob(policy, s.prompt, s.response);
  return total / static_cast<double>(batch.size());
}

Eigen::MatrixXd sft_grad(const ToyPolicy& policy, const std::vector<Sequence>& batch) {
  if (batch.empty()) throw EmptyBatch("SFT gradient of an empty batch");
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(policy.size(), policy.size());
  const double scale = -1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    check_ids(policy, s.prompt);
    check_ids(policy, s.response);
    accumulate_logprob_gradient(policy, s.prompt, s.response, scale, grad);
  }
  return grad;
}

ToyPolicy sft_train_step(const ToyPolicy& policy, const std::vector<Sequence>& batch,
                         double learning_rate) {
  ToyPolicy next = policy;
  next.logits() -= learning_rate * sft_grad(policy, batch);
  return next;
}

void KtoConfig::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("KTO beta must be positive");
  if (lambda_d < 0.0 || lambda_u < 0.0) throw std::invalid_argument("KTO weights must be non-negative");
}

double estimate_z0(const ToyPolicy& policy, const ToyPolicy& reference,
                   const std::vector<KtoSample>& batch, Z0Pairing pairing) {
  if (batch.empty()) throw EmptyBatch("z0 estimate of an empty batch");
  const std::size_t n = batch.size();
  const std::size_t shift = pairing == Z0Pairing::Mismatched ? 1 : 0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& prompt = batch[i].prompt;
    const auto& response = batch[(i + shift) % n].response;
    total += log_ratio(policy_logprob(policy, prompt, response),
                       policy_logprob(reference, prompt, response));
  }
  return std::max(0.0, total / static_cast<double>(n));
}

double kto_value(double r_theta, double z0, Desirability label, const KtoConfig& config) {
  if (label == Desirability::Desirable) {
    return config.lambda_d * sigmoid(config.beta * (r_theta - z0));
  }
  return config.lambda_u * sigmoid(config.beta * (z0 - r_theta));
}

double kto_loss(const KtoBatch& batch, const KtoConfig& config) {
  if (batch.examples.empty()) throw EmptyBatch("KTO loss of an empty batch");
  double total = 0.0;
  for (const auto& ex : batch.examples) {
    total += example_loss(log_ratio(ex.policy_logprob, ex.ref_logprob), batch.z0, ex.label, config);
  }
  return total / static_cast<double>(batch.examples.size());
}

double kto_objective(const ToyPolicy& policy, const ToyPolicy& reference,
                     const std::vector<KtoSample>& batch, const KtoConfig& config, double z0) {
  if (batch.empty()) throw EmptyBatch("KTO loss of an empty batch");
  const auto ratios = log_ratios(policy, reference, batch);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += example_loss(ratios[i], z0, batch[i].label, config);
  }
  return total / static_cast<double>(batch.size());
}

KtoGradient kto_grad(const ToyPolicy& policy, const ToyPolicy& reference,
                     const std::vector<KtoSample>& batch, const KtoConfig& config) {
  config.validate();
  if (batch.empty()) throw EmptyBatch("KTO gradient of an empty batch");
  KtoGradient out;
  out.z0 = estimate_z0(policy, reference, batch, config.z0_pairing);
  out.gradient = Eigen::MatrixXd::Zero(policy.size(), policy.size());
  const auto ratios = log_ratios(policy, reference, batch);
  const double n = static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    const double sign = s.label == Desirability::Desirable ? 1.0 : -1.0;
    const double lambda = config.lambda(s.label);
    const double u = config.beta * sign * (ratios[i] - out.z0);
    const double sig = sigmoid(u);
    out.loss += (lambda - lambda * sig) / n;
    // d(lambda - lambda sigmoid(u)) / dr
    const double dloss_dr = -lambda * sig * (1.0 - sig) * config.beta * sign;
    if (dloss_dr != 0.0) {
      accumulate_logprob_gradient(policy, s.prompt, s.response, dloss_dr / n, out.gradient);
    }
  }
  return out;
}

ToyPolicy kto_train_step(const ToyPolicy& policy, const ToyPolicy& reference,
                         const std::vector<KtoSample>& batch, const KtoConfig& config,
                         double learning_rate) {
  if (learning_rate < 0.0) throw std::invalid_argument("learning rate must be non-negative");
  ToyPolicy next = policy;
  if (learning_rate == 0.0) return next;
  next.logits() -= learning_rate * kto_grad(policy, reference, batch, config).gradient;
  return next;
}

Eigen::VectorXd step_distribution(const ToyPolicy& policy, int context, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  return softmax(Eigen::VectorXd(policy.logits().row(context).transpose() / temperature));
}

std::vector<int> nucleus(const Eigen::VectorXd& probs, double top_p) {
  if (!(top_p > 0.0) || top_p > 1.0) throw std::invalid_argument("top_p must lie in (0, 1]");
  std::vector<int> order(static_cast<std::size_t>(probs.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs(a) > probs(b); });
  double mass = 0.0;
  std::size_t keep = order.size();
  for (std::size_t i = 0; i < order.size(); ++i) {
    mass += probs(order[i]);
    if (mass >= top_p) {
      keep = i + 1;
      break;
    }
  }
  order.resize(keep);
  return order;
}

TokenIds sample_top_p(const ToyPolicy& policy, std::span<const int> prompt,
                      const SamplingOptions& options, std::mt19937_64& rng) {
  check_ids(policy, prompt);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TokenIds out;
  int context = context_of(prompt);
  for (int step = 0; step < options.max_len; ++step) {
    const Eigen::VectorXd probs = step_distribution(policy, context, options.temperature);
    const std::vector<int> kept = nucleus(probs, options.top_p);
    double mass = 0.0;
    for (int t : kept) mass += probs(t);
    const double target = unit(rng) * mass;
    int token = kept.back();
    double cumulative = 0.0;
    for (int t : kept) {
      cumulative += probs(t);
      if (target < cumulative) {
        token = t;
        break;
      }
    }
    out.push_back(token);
    if (token == ToyPolicy::kEnd) break;
    context = token;
  }
  return out;
}

TokenIds sample_top_p(const ToyPolicy& policy, std::span<const int> prompt,
                      const SamplingOptions& options, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_top_p(policy, prompt, options, rng);
}

TokenIds greedy_decode(const ToyPolicy& policy, std::span<const int> prompt, int max_len) {
  check_ids(policy, prompt);
  TokenIds out;
  int context = context_of(prompt);
  for (int step = 0; step < max_len; ++step) {
    Eigen::Index best = 0;
    policy.logits().row(context).maxCoeff(&best);
    const int token = static_cast<int>(best);
    out.push_back(token);
    if (token == ToyPolicy::kEnd) break;
    context = token;
  }
  return out;
}

std::string build_prompt(std::string_view claims, const std::vector<std::string>& reasons) {
  std::string out(kPromptHead);
  out += claims;
  out += kReasonsHeader;
  out += jsonl::Json(reasons).dump();
  out += kPromptTail;
  return out;
}

std::string build_training_text(std::string_view claims, const std::vector<std::string>& reasons,
                                std::string_view output) {
  return build_prompt(claims, reasons) + std::string(output) + std::string(kTurnEnd);
}

PromptFields parse_prompt(std::string_view prompt) {
  if (!prompt.starts_with(kPromptHead) || !prompt.ends_with(kPromptTail)) {
    throw std::invalid_argument("text does not follow the rewriting prompt template");
  }
  const std::string_view inner =
      prompt.substr(kPromptHead.size(), prompt.size() - kPromptHead.size() - kPromptTail.size());
  const std::size_t header = inner.rfind(kReasonsHeader);
  if (header == std::string_view::npos) {
    throw std::invalid_argument("prompt has no refusal-reason block");
  }
  PromptFields fields;
  fields.claims = std::string(inner.substr(0, header));
  try {
    fields.reasons = jsonl::Json::parse(inner.substr(header + kReasonsHeader.size()))
                         .get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("refusal-reason line is not a string list: ") + e.what());
  }
  return fields;
}

std::vector<KtoExample> build_kto_dataset(const ToyPolicy& policy, const ToyPolicy& reference,
                                          const PreferenceScorer& scorer,
                                          const std::vector<RewritePair>& samples,
                                          const KtoBuildOptions& options) {
  if (!scorer.trained()) throw UntrainedScorer("KTO dataset construction needs a trained scorer");
  if (options.k < 0) throw std::invalid_argument("candidate count must be non-negative");
  if (policy.vocab() != reference.vocab()) {
    throw DimensionMismatch("policy and reference vocabularies differ");
  }
  std::vector<KtoExample> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const RewritePair& pair = samples[i];
    const std::string prompt_text = build_prompt(pair.claims_before, pair.reasons);
    const TokenIds prompt = policy.encode(tokenize_text(pair.claims_before));
    const std::string prior =
        pair.prior_art.empty() ? std::string()
                               : sample_prior_art(pair.prior_art, derive_seed(options.seed, 2 * i));
    std::mt19937_64 rng(derive_seed(options.seed, 2 * i + 1));

    const auto push = [&](TokenIds response, Desirability label) {
      KtoExample ex;
      ex.prompt_text = prompt_text;
      ex.prompt = prompt;
      ex.policy_logprob = policy_logprob(policy, prompt, response);
      ex.ref_logprob = policy_logprob(reference, prompt, response);
      ex.response = std::move(response);
      ex.label = label;
      out.push_back(std::move(ex));
    };
    for (int j = 0; j < options.k; ++j) {
      TokenIds response = sample_top_p(policy, prompt, options.sampling, rng);
      const std::string text = detokenize(policy.decode(response));
      push(std::move(response), label_desirability(scorer.probability(text, pair.reasons, prior)));
    }
    TokenIds copy = prompt;
    copy.push_back(ToyPolicy::kEnd);
    push(std::move(copy), Desirability::Undesirable);
    if (pair.claims_after) {
      TokenIds gold = policy.encode(tokenize_text(*pair.claims_after));
      gold.push_back(ToyPolicy::kEnd);
      push(std::move(gold), Desirability::Desirable);
    }
  }
  return out;
}

std::vector<KtoSample> to_samples(const std::vector<KtoExample>& examples) {
  std::vector<KtoSample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back({ex.prompt, ex.response, ex.label});
  return out;
}

void write_kto_dataset(const std::vector<KtoExample>& examples, const ToyPolicy& policy,
                       const std::filesystem::path& path) {
  std::vector<jsonl::Json> rows;
  rows.reserve(examples.size());
  for (const auto& ex : examples) {
    rows.push_back({{"prompt", ex.prompt_text},
                    {"response", detokenize(policy.decode(ex.response))},
                    {"label", to_string(ex.label)},
                    {"policy_logprob", ex.policy_logprob},
                    {"ref_logprob", ex.ref_logprob}});
  }
  jsonl::write(path, rows);
}

}  // namespace claimbrush
