#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "claimbrush/corpus.hpp"
#include "claimbrush/preference.hpp"
#include "support.hpp"
#include "synthetic.hpp"

using namespace claimbrush;

TEST_CASE("desirability labels") {
  CHECK(label_desirability(0.5) == Desirability::Desirable);
  CHECK(label_desirability(0.4999) == Desirability::Undesirable);
  CHECK(label_desirability(1.0) == Desirability::Desirable);
  CHECK(label_desirability(0.0) == Desirability::Undesirable);
  CHECK(parse_desirability(to_string(Desirability::Desirable)) == Desirability::Desirable);
  CHECK(parse_desirability("U") == Desirability::Undesirable);
  CHECK_THROWS_AS(parse_desirability("maybe"), std::invalid_argument);
}

TEST_CASE("character n-gram overlap") {
  CHECK(char_ngram_overlap("装飾板の遊技盤", "装飾板の遊技盤", 3) == 1.0);
  CHECK(char_ngram_overlap("甲乙丙丁", "子丑寅卯", 3) == 0.0);
  CHECK(char_ngram_overlap("甲乙", "甲乙丙", 3) == 0.0);
  // 甲乙丙, 乙丙丁: only the first occurs in the other text.
  CHECK(char_ngram_overlap("甲乙丙丁", "甲乙丙", 3) == 0.5);
}

TEST_CASE("feature extraction") {
  const std::string claims = "【請求項1】装飾板。\n【請求項2】請求項1に記載の装飾板からなる遊技盤。";
  const Eigen::VectorXd self = extract_features(claims, {}, claims);
  CHECK(self.size() == FeatureExtractor::kBaseFeatures + 1);
  CHECK(self(0) == 1.0);
  CHECK(self(1) == 1.0);
  CHECK(self(6) == 0.0);

  const Eigen::VectorXd disjoint = extract_features("【請求項1】甲乙丙丁戊", {}, "子丑寅卯辰");
  CHECK(disjoint(0) == 0.0);
  CHECK(disjoint(1) == 0.0);

  const RewritePair table = read_pairs(support::fixture("amended_pair.jsonl")).at(0);
  const FeatureExtractor extractor({"22", "36"});
  const Eigen::VectorXd h = extractor.extract(table.claims_before, table.reasons, table.prior_art[0]);
  CHECK(h.size() == extractor.dimension());
  CHECK(h.size() == FeatureExtractor::kBaseFeatures + 3);
  CHECK(h.allFinite());
  CHECK(h(0) >= 0.0);
  CHECK(h(0) <= 1.0);
  CHECK(h(2) == doctest::Approx(std::log1p(3.0)));
  CHECK(h(8) == 1.0);   // code 22
  CHECK(h(9) == 0.0);   // code 36
  CHECK(h(10) == 0.0);  // other
  CHECK(extractor.extract("【請求項1】X", {"99:unknown"}, "")(10) == 1.0);
}

TEST_CASE("feature spec round trip") {
  const FeatureExtractor e({"22", "36"});
  CHECK(e.spec() == "cb-features-v1;reasons=22,36");
  CHECK(FeatureExtractor::from_spec(e.spec()).reason_codes() == e.reason_codes());
  CHECK(FeatureExtractor::from_spec("cb-features-v1").dimension() == FeatureExtractor::kBaseFeatures + 1);
  CHECK_THROWS_AS(FeatureExtractor::from_spec("cb-features-v0"), std::invalid_argument);
}

TEST_CASE("linear score") {
  PreferenceModelParams p{Eigen::VectorXd::Zero(3), 0.0, ""};
  CHECK(score(p, Eigen::VectorXd::Ones(3)) == 0.5);
  p.bias = 50.0;
  CHECK(score(p, Eigen::VectorXd::Ones(3)) > 1.0 - 1e-9);
  PreferenceModelParams one{Eigen::VectorXd::Constant(1, 1.0), -1.0, ""};
  CHECK(score(one, Eigen::VectorXd::Constant(1, 2.0)) == doctest::Approx(0.7310585786300049));
  CHECK_THROWS_AS(score(one, Eigen::VectorXd::Zero(2)), DimensionMismatch);
}

TEST_CASE("logistic fit recovers a separating line") {
  // Labels follow x0 + 2 x1 > 0 with a margin.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto draw = [&](int n, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
    x.resize(n, 2);
    y.resize(n);
    for (int i = 0; i < n;) {
      const double a = u(rng), b = u(rng);
      if (std::abs(a + 2 * b) < 0.1) continue;
      x(i, 0) = a;
      x(i, 1) = b;
      y(i) = a + 2 * b > 0 ? 1.0 : 0.0;
      ++i;
    }
  };
  Eigen::MatrixXd xt, xh;
  Eigen::VectorXd yt, yh;
  draw(400, xt, yt);
  draw(200, xh, yh);
  const auto fit = fit_logistic(xt, yt, {});
  int correct = 0;
  for (Eigen::Index i = 0; i < xh.rows(); ++i) {
    const double p = sigmoid(xh.row(i).dot(fit.weights) + fit.bias);
    correct += ((p >= 0.5) == (yh(i) == 1.0)) ? 1 : 0;
  }
  CHECK(correct / 200.0 >= 0.95);
  const Eigen::Vector2d truth(1.0, 2.0);
  CHECK(fit.weights.normalized().dot(truth.normalized()) > 0.95);
  CHECK(fit.loss_history.back() < fit.loss_history.front());

  CHECK_THROWS_AS(fit_logistic(xt, Eigen::VectorXd::Ones(xt.rows()), {}), DegenerateData);
  CHECK_THROWS_AS(fit_logistic(xt, Eigen::VectorXd::Ones(3), {}), DimensionMismatch);
}

TEST_CASE("preference training on separable and noise corpora") {
  const auto train = synthetic::separable_corpus(400, 1);
  const auto heldout = synthetic::separable_corpus(100, 2);
  const PreferenceModelParams params = train_preference(train, {});
  const LinearPreferenceScorer scorer(params);
  CHECK(scorer.trained());
  CHECK(evaluate_preference(scorer, heldout).accuracy >= 0.95);

  const auto noise_train = synthetic::noise_corpus(1000, 3);
  const auto noise_held = synthetic::noise_corpus(1000, 4);
  const LinearPreferenceScorer noise(train_preference(noise_train, {}));
  const double acc = evaluate_preference(noise, noise_held).accuracy;
  CHECK(acc > 0.4);
  CHECK(acc < 0.6);

  auto single = train;
  for (auto& ex : single) ex.label = Desirability::Desirable;
  CHECK_THROWS_AS(train_preference(single, {}), DegenerateData);
  CHECK_THROWS_AS(train_preference({}, {}), DegenerateData);
}

TEST_CASE("training is deterministic per seed") {
  const auto data = synthetic::separable_corpus(100, 9);
  const auto a = train_preference(data, {});
  const auto b = train_preference(data, {});
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
  CHECK(a.feature_spec == b.feature_spec);
}

TEST_CASE("untrained scorer refuses to score") {
  const LinearPreferenceScorer untrained;
  CHECK_FALSE(untrained.trained());
  CHECK_THROWS_AS(untrained.probability("x", {}, ""), UntrainedScorer);
}

TEST_CASE("prior-art sampling") {
  CHECK(sample_prior_art({"only"}, 3) == "only");
  const RewritePair table = read_pairs(support::fixture("amended_pair.jsonl")).at(0);
  std::set<std::string> seen;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const std::string p = sample_prior_art(table.prior_art, s);
    CHECK(std::find(table.prior_art.begin(), table.prior_art.end(), p) != table.prior_art.end());
    CHECK(sample_prior_art(table.prior_art, s) == p);
    seen.insert(p);
  }
  CHECK(seen.size() == 5);
  CHECK_THROWS_AS(sample_prior_art({}, 0), NoCitations);
}

TEST_CASE("classification report arithmetic") {
  using D = Desirability;
  std::vector<D> predicted, actual;
  const auto add = [&](D p, D a, int n) {
    for (int i = 0; i < n; ++i) {
      predicted.push_back(p);
      actual.push_back(a);
    }
  };
  add(D::Desirable, D::Desirable, 70);
  add(D::Desirable, D::Undesirable, 30);
  add(D::Undesirable, D::Desirable, 30);
  add(D::Undesirable, D::Undesirable, 70);
  const PreferenceReport r = classification_report(predicted, actual);
  for (const ClassMetrics& m : {r.desirable, r.undesirable}) {
    CHECK(m.precision == doctest::Approx(0.7));
    CHECK(m.recall == doctest::Approx(0.7));
    CHECK(m.f1 == doctest::Approx(0.7));
    CHECK(m.support == 100);
  }
  CHECK(r.accuracy == doctest::Approx(0.7));

  const PreferenceReport perfect = classification_report(actual, actual);
  CHECK(perfect.desirable.f1 == 1.0);
  CHECK(perfect.undesirable.f1 == 1.0);
  CHECK(perfect.accuracy == 1.0);

  const std::vector<D> all_d(actual.size(), D::Desirable);
  const PreferenceReport optimist = classification_report(all_d, actual);
  CHECK(optimist.desirable.recall == 1.0);
  CHECK(optimist.desirable.precision == 0.5);
  CHECK(optimist.undesirable.precision == 0.0);
  CHECK(optimist.undesirable.recall == 0.0);

  CHECK_THROWS_AS(classification_report({D::Desirable}, {}), LengthMismatch);
}

TEST_CASE("examples from refused-then-amended pairs") {
  const auto pairs = [] {
    const auto a = read_records(support::fixture("corpus_a.jsonl"));
    const auto b9 = read_records(support::fixture("corpus_b9.jsonl"));
    return join_pairs(a, b9, read_history(support::fixture("corpus_history.jsonl"))).pairs;
  }();
  const auto examples = make_preference_examples(pairs, 42);
  REQUIRE(examples.size() == 6);  // three Type 5 pairs
  for (std::size_t i = 0; i < examples.size(); i += 2) {
    CHECK(examples[i].label == Desirability::Undesirable);
    CHECK(examples[i + 1].label == Desirability::Desirable);
    CHECK(examples[i].prior_art == examples[i + 1].prior_art);
    CHECK(examples[i].reasons == examples[i + 1].reasons);
  }
  CHECK(examples[4].prior_art.empty());  // JP010 cites nothing
  CHECK(make_preference_examples(pairs, 42).size() == examples.size());
}

TEST_CASE("model and example persistence") {
  support::TempDir dir;
  const auto data = synthetic::separable_corpus(50, 4);
  const PreferenceModelParams params = train_preference(data, {});
  save_model(params, dir / "model.json");
  const PreferenceModelParams loaded = load_model(dir / "model.json");
  CHECK(loaded.feature_spec == params.feature_spec);
  CHECK(loaded.bias == params.bias);
  CHECK(loaded.weights == params.weights);

  write_preference_examples(data, dir / "examples.jsonl");
  const auto back = read_preference_examples(dir / "examples.jsonl");
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].claims == data[i].claims);
    CHECK(back[i].reasons == data[i].reasons);
    CHECK(back[i].prior_art == data[i].prior_art);
    CHECK(back[i].label == data[i].label);
  }
}
