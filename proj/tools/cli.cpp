#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "claimbrush/baselines.hpp"
#include "claimbrush/claims.hpp"
#include "claimbrush/corpus.hpp"
#include "claimbrush/jsonl.hpp"
#include "claimbrush/metrics.hpp"
#include "claimbrush/preference.hpp"
#include "claimbrush/seed.hpp"

namespace claimbrush::cli {

namespace fs = std::filesystem;
using jsonl::Json;

namespace {

struct Logger {
  std::ostream& err;
  bool quiet = false;
  void operator()(const std::string& line) const {
    if (!quiet) err << line << '\n';
  }
};

void emit(const Json& value, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << value.dump(2) << '\n';
  } else {
    jsonl::write_json(path, value);
  }
}

Json to_json(const SariComponents& c) {
  return {{"add_f", c.add_f}, {"keep_f", c.keep_f}, {"del_p", c.del_p}};
}

Json to_json(const MetricReport& report) {
  Json j = {{"n", report.per_instance.size()},
            {"gleu_word", report.gleu_word},
            {"gleu_phrase", report.gleu_phrase},
            {"sari_word", report.sari_word},
            {"sari_phrase", report.sari_phrase},
            {"sari_components",
             {{"word", to_json(report.sari_word_components)},
              {"phrase", to_json(report.sari_phrase_components)}}}};
  j["acceptance_rate"] = report.acceptance_rate ? Json(*report.acceptance_rate) : Json(nullptr);
  return j;
}

Json to_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"support", m.support},     {"predicted", m.predicted}};
}

Json to_json(const PreferenceReport& r) {
  return {{"accuracy", r.accuracy},
          {"total", r.total},
          {"desirable", to_json(r.desirable)},
          {"undesirable", to_json(r.undesirable)}};
}

ClaimSet parse_any(const std::string& text) {
  return parse_claims(text, detect_header_style(text));
}

struct Hypothesis {
  std::string application_number;
  std::string text;
};

std::vector<Hypothesis> read_hypotheses(const fs::path& path) {
  std::vector<Hypothesis> out;
  jsonl::for_each(path, [&](const Json& row, std::size_t) {
    out.push_back({row.contains("app_no") ? jsonl::require_string(row, "app_no") : std::string(),
                   jsonl::require_string(row, "hypothesis")});
  });
  return out;
}

std::string prior_art_for(const RewritePair& pair, std::uint64_t seed) {
  return pair.prior_art.empty() ? std::string() : sample_prior_art(pair.prior_art, seed);
}

std::vector<PreferenceExample> load_examples(const std::string& data, const std::string& from_pairs,
                                             std::uint64_t seed) {
  if (!data.empty()) return read_preference_examples(data);
  return make_preference_examples(read_pairs(from_pairs), seed);
}

struct Options {
  std::uint64_t seed = kDefaultSeed;
  bool quiet = false;

  std::string a_path, b9_path, history_path, pairs_path, hyps_path, out_path, stats_path;
  std::string baseline = "copy";
  std::string scorer_path, per_instance_path, data_path, heldout_path, report_path, model_path;

  TrainOptions train{};
  double heldout_fraction = 0.2;

  KtoConfig kto{};
  std::string z0_pairing = "mismatched";
  int k = 12;
  SamplingOptions sampling{};
  int sft_steps = 20;
  double sft_lr = 0.5;
  int demo_steps = 50;
  double demo_lr = 0.1;
};

int cmd_pair(const Options& o, std::ostream& out, const Logger& log) {
  const auto a = read_records(o.a_path);
  const auto b9 = read_records(o.b9_path);
  const auto history = o.history_path.empty() ? std::vector<ExaminationRecord>{}
                                              : read_history(o.history_path);
  const JoinResult joined = join_pairs(a, b9, history);
  write_pairs(joined.pairs, o.out_path);
  const CorpusStats stats = compute_stats(joined.pairs);
  if (!o.stats_path.empty()) {
    jsonl::write_json(o.stats_path, to_json(stats));
  } else if (!o.quiet) {
    out << to_json(stats).dump(2) << '\n';
  }
  log("pairs: " + std::to_string(joined.pairs.size()) + ", orphan B9: " +
      std::to_string(joined.orphans.size()) + ", superseded B9: " +
      std::to_string(joined.superseded.size()));
  return 0;
}

int cmd_stats(const Options& o, std::ostream& out, const Logger&) {
  emit(to_json(compute_stats(read_pairs(o.pairs_path))), o.out_path, out);
  return 0;
}

int cmd_rewrite(const Options& o, std::ostream&, const Logger& log) {
  const Baseline baseline = parse_baseline(o.baseline);
  const auto pairs = read_pairs(o.pairs_path);
  std::vector<Json> rows;
  rows.reserve(pairs.size());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const ClaimSet set = parse_any(pairs[i].claims_before);
    const RewriteResult result = rewrite(set, baseline, derive_seed(o.seed, i));
    // Unchanged sets keep the input text byte-for-byte.
    std::string hypothesis =
        result.deleted.empty() ? pairs[i].claims_before : serialize_claims(result.output);
    changed += result.deleted.empty() ? 0 : 1;
    rows.push_back({{"app_no", pairs[i].application_number}, {"hypothesis", std::move(hypothesis)}});
  }
  jsonl::write(o.out_path, rows);
  log("rewrote " + std::to_string(changed) + " of " + std::to_string(pairs.size()) +
      " claim sets with " + o.baseline);
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out, const Logger& log) {
  const auto pairs = read_pairs(o.pairs_path);
  const auto hyps = read_hypotheses(o.hyps_path);
  if (pairs.size() != hyps.size()) {
    throw LengthMismatch(std::to_string(pairs.size()) + " pairs but " +
                         std::to_string(hyps.size()) + " hypotheses");
  }
  std::vector<TextPair> refs;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!pairs[i].claims_after) {
      throw InsufficientData("pair " + pairs[i].application_number + " has no granted claims");
    }
    if (!hyps[i].application_number.empty() &&
        hyps[i].application_number != pairs[i].application_number) {
      throw LengthMismatch("hypothesis " + std::to_string(i) + " is for " +
                           hyps[i].application_number + ", expected " +
                           pairs[i].application_number);
    }
    refs.push_back({pairs[i].claims_before, *pairs[i].claims_after});
    texts.push_back(hyps[i].text);
  }
  MetricReport report = evaluate_corpus(refs, texts);
  if (!o.scorer_path.empty()) {
    const LinearPreferenceScorer scorer(load_model(o.scorer_path));
    std::vector<ScoringContext> contexts;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      contexts.push_back({pairs[i].reasons, prior_art_for(pairs[i], derive_seed(o.seed, i))});
    }
    report.acceptance_rate = acceptance_rate(texts, contexts, scorer);
  }
  if (!o.per_instance_path.empty()) {
    std::vector<Json> rows;
    for (std::size_t i = 0; i < report.per_instance.size(); ++i) {
      const auto& s = report.per_instance[i];
      rows.push_back({{"index", i},
                      {"gleu_word", s.gleu_word},
                      {"gleu_phrase", s.gleu_phrase},
                      {"sari_word", s.sari_word},
                      {"sari_phrase", s.sari_phrase}});
    }
    jsonl::write(o.per_instance_path, rows);
  }
  emit(to_json(report), o.out_path, out);
  log("evaluated " + std::to_string(pairs.size()) + " hypotheses");
  return 0;
}

int cmd_pref_train(const Options& o, std::ostream& out, const Logger& log) {
  auto examples = load_examples(o.data_path, o.pairs_path, o.seed);
  std::vector<PreferenceExample> heldout;
  if (!o.heldout_path.empty()) {
    heldout = read_preference_examples(o.heldout_path);
  } else if (o.heldout_fraction > 0.0) {
    std::mt19937_64 rng(derive_seed(o.seed, 1));
    std::shuffle(examples.begin(), examples.end(), rng);
    const auto n = static_cast<std::size_t>(o.heldout_fraction * static_cast<double>(examples.size()));
    heldout.assign(examples.end() - static_cast<std::ptrdiff_t>(n), examples.end());
    examples.resize(examples.size() - n);
  }
  TrainOptions train = o.train;
  train.seed = o.seed;
  const PreferenceModelParams params = train_preference(examples, train);
  save_model(params, o.model_path);

  Json report = {{"feature_spec", params.feature_spec},
                 {"train_size", examples.size()},
                 {"train", to_json(evaluate_preference(LinearPreferenceScorer(params), examples))}};
  report["heldout_size"] = heldout.size();
  if (!heldout.empty()) {
    const PreferenceReport held = evaluate_preference(LinearPreferenceScorer(params), heldout);
    report["heldout"] = to_json(held);
    report["heldout_accuracy"] = held.accuracy;
  } else {
    report["heldout"] = nullptr;
    report["heldout_accuracy"] = nullptr;
  }
  emit(report, o.report_path, out);
  log("trained on " + std::to_string(examples.size()) + " examples");
  return 0;
}

int cmd_pref_eval(const Options& o, std::ostream& out, const Logger&) {
  const LinearPreferenceScorer scorer(load_model(o.model_path));
  const auto examples = load_examples(o.data_path, o.pairs_path, o.seed);
  emit(to_json(evaluate_preference(scorer, examples)), o.report_path, out);
  return 0;
}

int cmd_kto_build(const Options& o, std::ostream&, const Logger& log) {
  const auto pairs = read_pairs(o.pairs_path);
  const LinearPreferenceScorer scorer(load_model(o.scorer_path));
  std::vector<std::string> texts;
  std::vector<Sequence> sft;
  for (const auto& p : pairs) {
    texts.push_back(p.claims_before);
    if (p.claims_after) texts.push_back(*p.claims_after);
  }
  ToyPolicy policy = ToyPolicy::from_texts(texts);
  for (const auto& p : pairs) {
    if (!p.claims_after) continue;
    TokenIds response = policy.encode(tokenize_text(*p.claims_after));
    response.push_back(ToyPolicy::kEnd);
    sft.push_back({policy.encode(tokenize_text(p.claims_before)), std::move(response)});
  }
  // Warm start on the granted claims; the warmed policy is also the reference.
  if (!sft.empty()) {
    for (int step = 0; step < o.sft_steps; ++step) policy = sft_train_step(policy, sft, o.sft_lr);
  }
  const ToyPolicy reference = policy;
  KtoBuildOptions options;
  options.k = o.k;
  options.sampling = o.sampling;
  options.seed = o.seed;
  const auto examples = build_kto_dataset(policy, reference, scorer, pairs, options);
  write_kto_dataset(examples, policy, o.out_path);
  const auto desirable = std::count_if(examples.begin(), examples.end(), [](const KtoExample& e) {
    return e.label == Desirability::Desirable;
  });
  log("wrote " + std::to_string(examples.size()) + " examples (" + std::to_string(desirable) +
      " desirable) for " + std::to_string(pairs.size()) + " pairs");
  return 0;
}

int cmd_kto_demo(const Options& o, std::ostream& out, const Logger&) {
  KtoConfig config = o.kto;
  config.z0_pairing = o.z0_pairing == "matched" ? Z0Pairing::Matched : Z0Pairing::Mismatched;
  const auto rows = run_kto_demo(make_kto_demo(), config, o.demo_steps, o.demo_lr);
  std::ostringstream table;
  table << "step\tloss\tz0\tmean_r_desirable\tmean_r_undesirable\n" << std::setprecision(10);
  for (const auto& r : rows) {
    table << r.step << '\t' << r.loss << '\t' << r.z0 << '\t' << r.desirable_ratio << '\t'
          << r.undesirable_ratio << '\n';
  }
  if (o.out_path.empty()) {
    out << table.str();
  } else {
    std::ofstream file(o.out_path);
    if (!file) throw Error("cannot write " + o.out_path);
    file << table.str();
  }
  return 0;
}

}  // namespace

KtoDemo make_kto_demo() {
  KtoDemo demo{ToyPolicy({"a", "b", "c", "d"}), {}};
  const auto ids = [&](std::initializer_list<const char*> tokens) {
    TokenIds out;
    for (const char* t : tokens) out.push_back(demo.policy.id(t));
    return out;
  };
  demo.batch = {
      {ids({"a"}), ids({"b", "c", "</s>"}), Desirability::Desirable},
      {ids({"c"}), ids({"d", "</s>"}), Desirability::Desirable},
      {ids({"a"}), ids({"d", "d", "</s>"}), Desirability::Undesirable},
      {ids({"b"}), ids({"a", "</s>"}), Desirability::Undesirable},
  };
  return demo;
}

std::vector<KtoDemoRow> run_kto_demo(const KtoDemo& demo, const KtoConfig& config, int steps,
                                     double learning_rate) {
  const ToyPolicy& reference = demo.policy;
  ToyPolicy policy = demo.policy;
  std::vector<KtoDemoRow> rows;
  for (int step = 0; step <= steps; ++step) {
    const KtoGradient g = kto_grad(policy, reference, demo.batch, config);
    KtoDemoRow row{step, g.loss, g.z0, 0.0, 0.0};
    int nd = 0, nu = 0;
    for (const auto& s : demo.batch) {
      const double r = log_ratio(policy_logprob(policy, s.prompt, s.response),
                                 policy_logprob(reference, s.prompt, s.response));
      if (s.label == Desirability::Desirable) {
        row.desirable_ratio += r;
        ++nd;
      } else {
        row.undesirable_ratio += r;
        ++nu;
      }
    }
    if (nd > 0) row.desirable_ratio /= nd;
    if (nu > 0) row.undesirable_ratio /= nu;
    rows.push_back(row);
    if (step < steps) policy.logits() -= learning_rate * g.gradient;
  }
  return rows;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Patent claim rewriting toolkit: corpus pairing, baselines, metrics, "
               "preference scoring and KTO data."};
  app.require_subcommand(1);
  app.add_option("--seed", o.seed, "Run seed")->capture_default_str();
  app.add_flag("--quiet", o.quiet, "Suppress log lines");

  auto* pair = app.add_subcommand("pair", "Join A and B9 records into rewrite pairs");
  pair->add_option("--a", o.a_path, "A-record JSONL")->required()->check(CLI::ExistingFile);
  pair->add_option("--b9", o.b9_path, "B9-record JSONL")->required()->check(CLI::ExistingFile);
  pair->add_option("--history", o.history_path, "Examination history JSONL")
      ->check(CLI::ExistingFile);
  pair->add_option("--out", o.out_path, "Pair JSONL to write")->required();
  pair->add_option("--stats", o.stats_path, "Stats JSON to write");

  auto* stats = app.add_subcommand("stats", "Per-type statistics of a pair file");
  stats->add_option("--pairs", o.pairs_path)->required()->check(CLI::ExistingFile);
  stats->add_option("--out", o.out_path, "JSON to write (default stdout)");

  auto* rewrite_cmd = app.add_subcommand("rewrite", "Apply a baseline to the filed claims");
  rewrite_cmd->add_option("--pairs", o.pairs_path)->required()->check(CLI::ExistingFile);
  rewrite_cmd->add_option("--baseline", o.baseline, "copy | rdc | dmmc")->capture_default_str();
  rewrite_cmd->add_option("--out", o.out_path, "Hypothesis JSONL to write")->required();

  auto* eval = app.add_subcommand("eval", "GLEU/SARI (and acceptance rate) of hypotheses");
  eval->add_option("--pairs", o.pairs_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--hyps", o.hyps_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--scorer", o.scorer_path, "Preference model JSON")->check(CLI::ExistingFile);
  eval->add_option("--out", o.out_path, "Report JSON to write (default stdout)");
  eval->add_option("--per-instance", o.per_instance_path, "Per-instance JSONL to write");

  auto* pref_train = app.add_subcommand("pref-train", "Train the preference model");
  auto* data_opt = pref_train->add_option("--data", o.data_path, "Preference example JSONL")
                       ->check(CLI::ExistingFile);
  auto* from_opt = pref_train->add_option("--from-pairs", o.pairs_path, "Pair JSONL (Type 5 used)")
                       ->check(CLI::ExistingFile);
  data_opt->excludes(from_opt);
  pref_train->add_option("--heldout", o.heldout_path, "Held-out example JSONL")
      ->check(CLI::ExistingFile);
  pref_train->add_option("--heldout-fraction", o.heldout_fraction)
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.9));
  pref_train->add_option("--out", o.model_path, "Model JSON to write")->required();
  pref_train->add_option("--report", o.report_path, "Report JSON to write (default stdout)");
  pref_train->add_option("--lr", o.train.learning_rate)->capture_default_str();
  pref_train->add_option("--epochs", o.train.epochs)->capture_default_str();
  pref_train->add_option("--batch-size", o.train.batch_size)->capture_default_str();

  auto* pref_eval = app.add_subcommand("pref-eval", "Classification report of a preference model");
  pref_eval->add_option("--model", o.model_path)->required()->check(CLI::ExistingFile);
  auto* eval_data = pref_eval->add_option("--data", o.data_path)->check(CLI::ExistingFile);
  auto* eval_from = pref_eval->add_option("--from-pairs", o.pairs_path)->check(CLI::ExistingFile);
  eval_data->excludes(eval_from);
  pref_eval->add_option("--report", o.report_path, "Report JSON to write (default stdout)");

  auto* kto_build = app.add_subcommand("kto-build", "Sample, label and write a KTO dataset");
  kto_build->add_option("--pairs", o.pairs_path)->required()->check(CLI::ExistingFile);
  kto_build->add_option("--scorer", o.scorer_path)->required()->check(CLI::ExistingFile);
  kto_build->add_option("--out", o.out_path, "KTO JSONL to write")->required();
  kto_build->add_option("--k", o.k, "Candidates per pair")->capture_default_str()->check(
      CLI::NonNegativeNumber);
  kto_build->add_option("--top-p", o.sampling.top_p)->capture_default_str();
  kto_build->add_option("--temperature", o.sampling.temperature)->capture_default_str();
  kto_build->add_option("--max-len", o.sampling.max_len)->capture_default_str();
  kto_build->add_option("--sft-steps", o.sft_steps)->capture_default_str();
  kto_build->add_option("--sft-lr", o.sft_lr)->capture_default_str();

  auto* kto_demo = app.add_subcommand("kto-demo", "KTO training on a toy policy; prints a loss table");
  kto_demo->add_option("--steps", o.demo_steps)->capture_default_str();
  kto_demo->add_option("--lr", o.demo_lr)->capture_default_str();
  kto_demo->add_option("--beta", o.kto.beta)->capture_default_str();
  kto_demo->add_option("--lambda-d", o.kto.lambda_d)->capture_default_str();
  kto_demo->add_option("--lambda-u", o.kto.lambda_u)->capture_default_str();
  kto_demo->add_option("--z0-pairing", o.z0_pairing)
      ->capture_default_str()
      ->check(CLI::IsMember({"mismatched", "matched"}));
  kto_demo->add_option("--out", o.out_path, "Table to write (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  const Logger log{err, o.quiet};
  try {
    if (*pair) return cmd_pair(o, out, log);
    if (*stats) return cmd_stats(o, out, log);
    if (*rewrite_cmd) return cmd_rewrite(o, out, log);
    if (*eval) return cmd_eval(o, out, log);
    if (*pref_train) {
      if (o.data_path.empty() && o.pairs_path.empty()) {
        throw InsufficientData("pref-train needs --data or --from-pairs");
      }
      return cmd_pref_train(o, out, log);
    }
    if (*pref_eval) {
      if (o.data_path.empty() && o.pairs_path.empty()) {
        throw InsufficientData("pref-eval needs --data or --from-pairs");
      }
      return cmd_pref_eval(o, out, log);
    }
    if (*kto_build) return cmd_kto_build(o, out, log);
    if (*kto_demo) return cmd_kto_demo(o, out, log);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace claimbrush::cli
