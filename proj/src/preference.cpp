#include "claimbrush/preference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "claimbrush/claims.hpp"
#include "claimbrush/jsonl.hpp"
#include "claimbrush/seed.hpp"
#include "claimbrush/utf8.hpp"

namespace claimbrush {

namespace {

constexpr std::string_view kReasonsKey = ";reasons=";

std::set<std::u32string> char_ngrams(const std::u32string& text, int n) {
  std::set<std::u32string> out;
  const auto order = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + order <= text.size(); ++i) out.insert(text.substr(i, order));
  return out;
}

std::u32string to_u32(std::string_view text) {
  const auto cps = utf8::decode(text);
  return {cps.begin(), cps.end()};
}

struct ClaimShape {
  double count = 0;
  double mean_length = 0;
  double multi_multi = 0;
};

ClaimShape claim_shape(std::string_view text) {
  ClaimShape shape;
  const HeaderStyle style = detect_header_style(text);
  try {
    const ClaimSet set = parse_claims(text, style);
    shape.count = static_cast<double>(set.size());
    double total = 0;
    for (const Claim& c : set.claims()) total += static_cast<double>(utf8::length(c.body));
    shape.mean_length = total / shape.count;
    shape.multi_multi = static_cast<double>(count_multi_multi(set));
  } catch (const MalformedClaims&) {
    shape.count = static_cast<double>(count_claim_headers(text, style));
    shape.mean_length = static_cast<double>(utf8::length(text)) / std::max(1.0, shape.count);
  }
  return shape;
}

bool usable_code(const std::string& code) {
  return !code.empty() && code.find_first_of(",;") == std::string::npos;
}

}  // namespace

std::string_view to_string(Desirability label) {
  return label == Desirability::Desirable ? "desirable" : "undesirable";
}

Desirability parse_desirability(std::string_view text) {
  if (text == "desirable" || text == "D") return Desirability::Desirable;
  if (text == "undesirable" || text == "U") return Desirability::Undesirable;
  throw std::invalid_argument("unknown label '" + std::string(text) + "'");
}

double char_ngram_overlap(std::string_view text, std::string_view other, int n) {
  const auto mine = char_ngrams(to_u32(text), n);
  if (mine.empty()) return 0.0;
  const auto theirs = char_ngrams(to_u32(other), n);
  std::size_t shared = 0;
  for (const auto& g : mine) shared += theirs.count(g);
  return static_cast<double>(shared) / static_cast<double>(mine.size());
}

FeatureExtractor::FeatureExtractor(std::vector<std::string> reason_codes)
    : codes_(std::move(reason_codes)) {}

FeatureExtractor FeatureExtractor::fit(const std::vector<PreferenceExample>& examples) {
  std::set<std::string> codes;
  for (const auto& ex : examples) {
    for (const auto& label : ex.reasons) {
      std::string code = refusal_reason_code(label);
      if (usable_code(code)) codes.insert(std::move(code));
    }
  }
  return FeatureExtractor({codes.begin(), codes.end()});
}

FeatureExtractor FeatureExtractor::from_spec(std::string_view spec) {
  if (!spec.starts_with(kVersion)) {
    throw std::invalid_argument("unsupported feature spec '" + std::string(spec) + "'");
  }
  std::string_view rest = spec.substr(kVersion.size());
  if (rest.empty()) return FeatureExtractor();
  if (!rest.starts_with(kReasonsKey)) {
    throw std::invalid_argument("unsupported feature spec '" + std::string(spec) + "'");
  }
  rest.remove_prefix(kReasonsKey.size());
  std::vector<std::string> codes;
  std::size_t start = 0;
  while (start <= rest.size()) {
    const std::size_t at = std::min(rest.find(',', start), rest.size());
    codes.emplace_back(rest.substr(start, at - start));
    start = at + 1;
  }
  return FeatureExtractor(std::move(codes));
}

std::string FeatureExtractor::spec() const {
  std::string out(kVersion);
  if (codes_.empty()) return out;
  out += kReasonsKey;
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    if (i) out += ',';
    out += codes_[i];
  }
  return out;
}

Eigen::VectorXd FeatureExtractor::extract(std::string_view claims,
                                          const std::vector<std::string>& reasons,
                                          std::string_view prior_art) const {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(dimension());
  h(0) = char_ngram_overlap(claims, prior_art, 3);
  h(1) = char_ngram_overlap(claims, prior_art, 5);
  const ClaimShape shape = claim_shape(claims);
  h(2) = std::log1p(shape.count);
  h(3) = std::log1p(shape.mean_length);
  h(4) = shape.multi_multi;
  const double chars = static_cast<double>(utf8::length(claims));
  const double prior_chars = static_cast<double>(utf8::length(prior_art));
  h(5) = std::log1p(chars);
  h(6) = prior_chars > 0 ? std::clamp((chars - prior_chars) / prior_chars, -5.0, 5.0) : 0.0;
  h(7) = std::log1p(static_cast<double>(reasons.size()));
  for (const auto& label : reasons) {
    const std::string code = refusal_reason_code(label);
    const auto it = std::find(codes_.begin(), codes_.end(), code);
    const auto slot = it == codes_.end() ? codes_.size() : static_cast<std::size_t>(it - codes_.begin());
    h(kBaseFeatures + static_cast<Eigen::Index>(slot)) = 1.0;
  }
  return h;
}

Eigen::VectorXd extract_features(std::string_view claims, const std::vector<std::string>& reasons,
                                 std::string_view prior_art) {
  return FeatureExtractor().extract(claims, reasons, prior_art);
}

double score(const PreferenceModelParams& params, const Eigen::Ref<const Eigen::VectorXd>& features) {
  if (params.weights.size() != features.size()) {
    throw DimensionMismatch("model expects " + std::to_string(params.weights.size()) +
                            " features, got " + std::to_string(features.size()));
  }
  return sigmoid(params.weights.dot(features) + params.bias);
}

Desirability label_desirability(double prob) {
  return prob >= 0.5 ? Desirability::Desirable : Desirability::Undesirable;
}

LogisticFit<double> fit_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                                 const TrainOptions& options) {
  const Eigen::Index n = features.rows();
  if (labels.size() != n) throw DimensionMismatch("one label per feature row expected");
  const double positives = labels.sum();
  if (n == 0 || positives == 0.0 || positives == static_cast<double>(n)) {
    throw DegenerateData("training data needs both desirable and undesirable examples");
  }
  if (!(options.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");

  LogisticFit<double> fit;
  fit.weights = Eigen::VectorXd::Zero(features.cols());
  const Eigen::Index batch =
      options.batch_size > 0 ? std::min<Eigen::Index>(options.batch_size, n) : n;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(options.seed);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index m = std::min(batch, n - start);
      const std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + start + m);
      const Eigen::MatrixXd xb = features(rows, Eigen::all);
      const Eigen::VectorXd yb = labels(rows);
      const Eigen::VectorXd residual =
          sigmoid(((xb * fit.weights).array() + fit.bias)).matrix() - yb;
      fit.weights -= options.learning_rate * (xb.transpose() * residual) / static_cast<double>(m);
      fit.bias -= options.learning_rate * residual.mean();
    }
    fit.loss_history.push_back(mean_cross_entropy(features, labels, fit.weights, fit.bias));
  }
  return fit;
}

PreferenceModelParams train_preference(const std::vector<PreferenceExample>& examples,
                                       const TrainOptions& options) {
  const FeatureExtractor extractor = FeatureExtractor::fit(examples);
  const auto n = static_cast<Eigen::Index>(examples.size());
  Eigen::MatrixXd x(n, extractor.dimension());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ex = examples[static_cast<std::size_t>(i)];
    x.row(i) = extractor.extract(ex.claims, ex.reasons, ex.prior_art).transpose();
    y(i) = ex.label == Desirability::Desirable ? 1.0 : 0.0;
  }
  if (n == 0) throw DegenerateData("no training examples");

  // Fit on standardized columns, then fold the scaling back into (w, b) so
  // the stored model applies to raw features.
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd scale =
      ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n)).sqrt();
  scale = scale.unaryExpr([](double s) { return s > 1e-12 ? s : 1.0; });
  const Eigen::MatrixXd standardized = (x.rowwise() - mean).array().rowwise() / scale.array();

  const LogisticFit<double> fit = fit_logistic(standardized, y, options);
  PreferenceModelParams params;
  params.weights = fit.weights.array() / scale.transpose().array();
  params.bias = fit.bias - params.weights.dot(mean.transpose());
  params.feature_spec = extractor.spec();
  return params;
}

LinearPreferenceScorer::LinearPreferenceScorer(PreferenceModelParams params)
    : params_(std::move(params)), extractor_(FeatureExtractor::from_spec(params_.feature_spec)) {
  if (params_.weights.size() != extractor_.dimension()) {
    throw DimensionMismatch("feature spec '" + params_.feature_spec + "' has dimension " +
                            std::to_string(extractor_.dimension()) + " but the model has " +
                            std::to_string(params_.weights.size()) + " weights");
  }
  trained_ = true;
}

double LinearPreferenceScorer::probability(std::string_view claims,
                                           const std::vector<std::string>& reasons,
                                           std::string_view prior_art) const {
  if (!trained_) throw UntrainedScorer("scorer has no trained parameters");
  return score(params_, extractor_.extract(claims, reasons, prior_art));
}

std::vector<PreferenceExample> make_preference_examples(const std::vector<RewritePair>& pairs,
                                                        std::uint64_t seed) {
  std::vector<PreferenceExample> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const RewritePair& pair = pairs[i];
    if (classify_type(pair) != PairType::Type5) continue;
    const std::string prior =
        pair.prior_art.empty() ? std::string() : sample_prior_art(pair.prior_art, derive_seed(seed, i));
    out.push_back({pair.claims_before, pair.reasons, prior, Desirability::Undesirable});
    out.push_back({*pair.claims_after, pair.reasons, prior, Desirability::Desirable});
  }
  return out;
}

std::string sample_prior_art(const std::vector<std::string>& citations, std::uint64_t seed) {
  if (citations.empty()) throw NoCitations("no prior-art citations to sample from");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, citations.size() - 1);
  return citations[pick(rng)];
}

PreferenceReport classification_report(const std::vector<Desirability>& predicted,
                                        const std::vector<Desirability>& actual) {
  if (predicted.size() != actual.size()) throw LengthMismatch("one prediction per label expected");
  const auto ratio = [](std::size_t a, std::size_t b) {
    return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0;
  };
  const auto per_class = [&](Desirability positive) {
    ClassMetrics m;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      m.support += actual[i] == positive;
      m.predicted += predicted[i] == positive;
      tp += actual[i] == positive && predicted[i] == positive;
    }
    m.precision = ratio(tp, m.predicted);
    m.recall = ratio(tp, m.support);
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
  };
  PreferenceReport report;
  report.desirable = per_class(Desirability::Desirable);
  report.undesirable = per_class(Desirability::Undesirable);
  report.total = actual.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) correct += predicted[i] == actual[i];
  report.accuracy = ratio(correct, actual.size());
  return report;
}

PreferenceReport evaluate_preference(const PreferenceScorer& scorer,
                                     const std::vector<PreferenceExample>& examples) {
  std::vector<Desirability> predicted;
  std::vector<Desirability> actual;
  for (const auto& ex : examples) {
    predicted.push_back(label_desirability(scorer.probability(ex.claims, ex.reasons, ex.prior_art)));
    actual.push_back(ex.label);
  }
  return classification_report(predicted, actual);
}

void save_model(const PreferenceModelParams& params, const std::filesystem::path& path) {
  const std::vector<double> weights(params.weights.data(),
                                    params.weights.data() + params.weights.size());
  jsonl::write_json(path, {{"feature_spec", params.feature_spec},
                           {"weights", weights},
                           {"bias", params.bias}});
}

PreferenceModelParams load_model(const std::filesystem::path& path) {
  const jsonl::Json doc = jsonl::read_json(path);
  try {
    PreferenceModelParams params;
    params.feature_spec = jsonl::require_string(doc, "feature_spec");
    const auto weights = doc.at("weights").get<std::vector<double>>();
    params.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                       static_cast<Eigen::Index>(weights.size()));
    params.bias = doc.at("bias").get<double>();
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(1, path.string() + ": " + e.what());
  }
}

std::vector<PreferenceExample> read_preference_examples(const std::filesystem::path& path) {
  std::vector<PreferenceExample> out;
  jsonl::for_each(path, [&](const jsonl::Json& row, std::size_t) {
    out.push_back({jsonl::require_string(row, "claims"), jsonl::string_list(row, "reasons"),
                   row.contains("prior_art") && row.at("prior_art").is_string()
                       ? row.at("prior_art").get<std::string>()
                       : std::string(),
                   parse_desirability(jsonl::require_string(row, "label"))});
  });
  return out;
}

void write_preference_examples(const std::vector<PreferenceExample>& examples,
                               const std::filesystem::path& path) {
  std::vector<jsonl::Json> rows;
  for (const auto& ex : examples) {
    rows.push_back({{"claims", ex.claims},
                    {"reasons", ex.reasons},
                    {"prior_art", ex.prior_art},
                    {"label", to_string(ex.label)}});
  }
  jsonl::write(path, rows);
}

}  // namespace claimbrush
