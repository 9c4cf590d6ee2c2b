#include <doctest.h>

#include <set>

#include "claimbrush/corpus.hpp"
#include "support.hpp"

using namespace claimbrush;

namespace {

JoinResult fixture_join() {
  return join_pairs(read_records(support::fixture("corpus_a.jsonl")),
                    read_records(support::fixture("corpus_b9.jsonl")),
                    read_history(support::fixture("corpus_history.jsonl")));
}

DocumentRecord record(std::string app, DocumentKind kind, std::string claims, std::string date) {
  return {std::move(app), kind, std::move(claims), std::move(date)};
}

}  // namespace

TEST_CASE("refusal reason labels") {
  const std::string label = "22:第29条第1項|第29条第2項|第29条第1項+第29条第2項";
  const RefusalReason r = parse_refusal_reason(label);
  CHECK(r.code == "22");
  REQUIRE(r.alternatives.size() == 3);
  CHECK(r.alternatives[2] == std::vector<std::string>{"第29条第1項", "第29条第2項"});
  CHECK(format_refusal_reason(r) == label);
  CHECK(refusal_reason_code("第29条第2項") == "第29条第2項");
}

TEST_CASE("joining A and B9 records") {
  SUBCASE("matched") {
    const auto j = join_pairs({record("1", DocumentKind::A, "a", "2010-01-01")},
                              {record("1", DocumentKind::B9, "b", "2012-01-01")});
    REQUIRE(j.pairs.size() == 1);
    CHECK(j.pairs[0].claims_before == "a");
    CHECK(j.pairs[0].claims_after == std::optional<std::string>("b"));
  }
  SUBCASE("A only") {
    const auto j = join_pairs({record("1", DocumentKind::A, "a", "2010-01-01")}, {});
    REQUIRE(j.pairs.size() == 1);
    CHECK_FALSE(j.pairs[0].claims_after.has_value());
    CHECK(classify_type(j.pairs[0]) == PairType::Type1);
  }
  SUBCASE("B9 only") {
    const auto j = join_pairs({}, {record("9", DocumentKind::B9, "b", "2012-01-01")});
    CHECK(j.pairs.empty());
    CHECK(j.orphans == std::vector<std::string>{"9"});
  }
  SUBCASE("duplicates") {
    const auto a = record("7", DocumentKind::A, "a", "2010-01-01");
    CHECK_THROWS_AS(join_pairs({a, a}, {}), DuplicateRecord);
    const auto b = record("7", DocumentKind::B9, "b", "2012-01-01");
    CHECK_THROWS_AS(join_pairs({a}, {b, b}), DuplicateRecord);
    try {
      join_pairs({a, a}, {});
    } catch (const DuplicateRecord& e) {
      CHECK(std::string(e.what()).find("7") != std::string::npos);
    }
  }
  SUBCASE("records are dispatched on their kind") {
    const auto j = join_pairs({record("1", DocumentKind::A, "a", "2010-01-01"),
                               record("1", DocumentKind::B9, "b", "2012-01-01")},
                              {});
    REQUIRE(j.pairs.size() == 1);
    CHECK(j.pairs[0].claims_after == std::optional<std::string>("b"));
  }
}

TEST_CASE("fixture corpus: join and type classification") {
  const JoinResult j = fixture_join();
  REQUIRE(j.pairs.size() == 10);
  CHECK(j.orphans == std::vector<std::string>{"JP099"});
  REQUIRE(j.superseded.size() == 1);
  CHECK(j.superseded[0].application_number == "JP008");
  CHECK(j.superseded[0].publication_date == "2016-05-01");

  const std::vector<PairType> hand{PairType::Type1, PairType::Type1, PairType::Type2,
                                   PairType::Type2, PairType::Type3, PairType::Type4,
                                   PairType::Type4, PairType::Type5, PairType::Type5,
                                   PairType::Type5};
  for (std::size_t i = 0; i < 10; ++i) {
    CAPTURE(j.pairs[i].application_number);
    CHECK(classify_type(j.pairs[i]) == hand[i]);
  }
  CHECK(j.pairs[8].reasons.size() == 2);
  CHECK(j.pairs[7].prior_art.size() == 2);
}

TEST_CASE("classification edge cases") {
  RewritePair p{"1", "【請求項1】A。", std::string("【請求項1】A。"), {"22:第29条第2項"}, {}};
  CHECK(classify_type(p) == PairType::Type3);
  p.reasons.clear();
  CHECK(classify_type(p) == PairType::Type2);
  p.claims_after = "【請求項1】B。";
  CHECK(classify_type(p) == PairType::Type4);
  p.reasons = {"22:第29条第2項"};
  CHECK(classify_type(p) == PairType::Type5);
  CHECK(normalize_claims_text("a  \r\nb\t\r\n\n") == "a\nb");
}

TEST_CASE("fixture corpus statistics match the hand tally") {
  const CorpusStats s = compute_stats(fixture_join().pairs);
  CHECK(s.total == 10);

  const TypeStats& t1 = s.of(PairType::Type1);
  CHECK(t1.frequency == 2);
  CHECK(*t1.avg_chars == doctest::Approx((100 + 200) / 2.0));
  CHECK(*t1.avg_claims == doctest::Approx(1.5));
  CHECK_FALSE(t1.pct_chars.has_value());
  CHECK_FALSE(t1.pct_claims.has_value());

  const TypeStats& t2 = s.of(PairType::Type2);
  CHECK(t2.frequency == 2);
  CHECK(*t2.avg_chars == doctest::Approx(50.0));
  CHECK(*t2.avg_claims == doctest::Approx(1.5));
  CHECK(*t2.pct_chars == 0.0);
  CHECK(*t2.pct_claims == 0.0);

  const TypeStats& t3 = s.of(PairType::Type3);
  CHECK(t3.frequency == 1);
  CHECK(*t3.avg_chars == doctest::Approx(62.0));
  CHECK(*t3.avg_claims == doctest::Approx(3.0));
  CHECK(*t3.pct_chars == 0.0);
  CHECK(*t3.pct_claims == 0.0);

  const TypeStats& t4 = s.of(PairType::Type4);
  CHECK(t4.frequency == 2);
  CHECK(*t4.avg_chars == doctest::Approx((80 + 150) / 2.0));
  CHECK(*t4.avg_claims == doctest::Approx(1.0));
  CHECK(*t4.pct_chars == doctest::Approx((-20.0 + -25.0) / 2));
  CHECK(*t4.pct_claims == doctest::Approx((0.0 + -50.0) / 2));

  const TypeStats& t5 = s.of(PairType::Type5);
  CHECK(t5.frequency == 3);
  CHECK(*t5.avg_chars == doctest::Approx((95 + 160 + 130) / 3.0));
  CHECK(*t5.avg_claims == doctest::Approx(2.0));
  CHECK(*t5.pct_chars == doctest::Approx((-5.0 + -20.0 + 30.0) / 3));
  CHECK(*t5.pct_claims == doctest::Approx((0.0 + 0.0 + 50.0) / 3));
}

TEST_CASE("percent change arithmetic") {
  const auto pair = [](int before, int after) {
    return RewritePair{"x" + std::to_string(before) + "-" + std::to_string(after),
                       "【請求項1】" + std::string(static_cast<std::size_t>(before - 6), 'a'),
                       "【請求項1】" + std::string(static_cast<std::size_t>(after - 6), 'b'),
                       {"22"},
                       {}};
  };
  const CorpusStats s = compute_stats({pair(100, 80), pair(100, 95)});
  CHECK(*s.of(PairType::Type5).pct_chars == doctest::Approx(-12.5));

  // A zero-length filed text is left out of the percent mean and counted.
  const CorpusStats z = compute_stats({pair(100, 80), RewritePair{"z", "", std::string("x"), {"22"}, {}}});
  CHECK(*z.of(PairType::Type5).pct_chars == doctest::Approx(-20.0));
  CHECK(z.of(PairType::Type5).excluded_chars == 1);
  CHECK(z.of(PairType::Type5).excluded_claims == 1);
}

TEST_CASE("length filter") {
  const std::vector<RewritePair> pairs{{"a", "12345", std::string("123"), {}, {}},
                                       {"b", "1234", std::string("1234"), {}, {}},
                                       {"c", "装置", std::nullopt, {}, {}}};
  const auto kept = filter_by_length(pairs, 8);
  REQUIRE(kept.size() == 3);  // 8, 8 and 2 code points
  CHECK(filter_by_length(pairs, 7).size() == 1);
  CHECK(filter_by_length(pairs, 1).empty());
  CHECK_THROWS(filter_by_length(pairs, 0));
  const auto bytes = filter_by_length(pairs, 5, [](std::string_view t) { return t.size(); });
  CHECK(bytes.empty());  // 装置 is six bytes
}

TEST_CASE("dataset splits") {
  const auto pairs = fixture_join().pairs;
  const DatasetSplit a = split_dataset(pairs, {8, 1, 1}, 42);
  CHECK(a.train.size() == 8);
  CHECK(a.valid.size() == 1);
  CHECK(a.test.size() == 1);
  std::set<std::string> all;
  for (const auto* part : {&a.train, &a.valid, &a.test}) {
    for (const auto& p : *part) all.insert(p.application_number);
  }
  CHECK(all.size() == 10);

  const DatasetSplit b = split_dataset(pairs, {8, 1, 1}, 42);
  CHECK(a.train == b.train);
  CHECK(a.valid == b.valid);
  CHECK(a.test == b.test);
  const DatasetSplit c = split_dataset(pairs, {8, 1, 1}, 43);
  CHECK_FALSE((a.train == c.train && a.valid == c.valid && a.test == c.test));

  CHECK_THROWS_AS(split_dataset(pairs, {8, 2, 1}, 1), InsufficientData);
  auto dup = pairs;
  dup.push_back(pairs[0]);
  CHECK_THROWS_AS(split_dataset(dup, {1, 1, 1}, 1), DuplicateRecord);
}

TEST_CASE("jsonl persistence") {
  support::TempDir dir;
  support::spit(dir / "empty.jsonl", "");
  CHECK(read_records(dir / "empty.jsonl").empty());

  const auto pairs = read_pairs(support::fixture("amended_pair.jsonl"));
  write_pairs(pairs, dir / "pairs.jsonl");
  CHECK(read_pairs(dir / "pairs.jsonl") == pairs);
  write_pairs(read_pairs(dir / "pairs.jsonl"), dir / "again.jsonl");
  CHECK(support::slurp(dir / "again.jsonl") == support::slurp(dir / "pairs.jsonl"));

  const auto records = read_records(support::fixture("corpus_a.jsonl"));
  write_records(records, dir / "records.jsonl");
  CHECK(read_records(dir / "records.jsonl") == records);

  const auto fixture_pairs = fixture_join().pairs;
  write_pairs(fixture_pairs, dir / "fixture_pairs.jsonl");
  CHECK(read_pairs(dir / "fixture_pairs.jsonl") == fixture_pairs);

  support::spit(dir / "bad.jsonl",
                "{\"app_no\":\"1\",\"kind\":\"A\",\"claims\":\"x\",\"pub_date\":\"2010\"}\n"
                "{\"app_no\":\"2\",\"kind\":\"A\",\"claims\":\"y\",\"pub_date\":\"2010\"}\n"
                "{\"app_no\":\"3\",\"kind\":\n");
  try {
    read_records(dir / "bad.jsonl");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  support::spit(dir / "badkind.jsonl",
                "{\"app_no\":\"1\",\"kind\":\"C\",\"claims\":\"x\",\"pub_date\":\"2010\"}\n");
  CHECK_THROWS_AS(read_records(dir / "badkind.jsonl"), ParseError);
  CHECK_THROWS_AS(read_records(dir / "missing.jsonl"), Error);
}

TEST_CASE("stats json") {
  const auto j = to_json(compute_stats(fixture_join().pairs));
  CHECK(j.at("total") == 10);
  CHECK(j.at("types").at("type1").at("pct_chars").is_null());
  CHECK(j.at("types").at("type2").at("pct_chars") == 0.0);
  CHECK(j.at("types").at("type5").at("freq") == 3);
}
