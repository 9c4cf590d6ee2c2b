#include "claimbrush/corpus.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "claimbrush/claims.hpp"
#include "claimbrush/utf8.hpp"

namespace claimbrush {

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t at = text.find(sep, start);
    out.emplace_back(utf8::trim(text.substr(start, at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

std::string_view kind_name(DocumentKind kind) { return kind == DocumentKind::A ? "A" : "B9"; }

DocumentKind parse_kind(const std::string& text) {
  if (text == "A") return DocumentKind::A;
  if (text == "B9") return DocumentKind::B9;
  throw std::invalid_argument("unknown document kind '" + text + "'");
}

std::size_t claim_count(std::string_view text) {
  return count_claim_headers(text, detect_header_style(text));
}

jsonl::Json optional_number(const std::optional<double>& value) {
  return value ? jsonl::Json(*value) : jsonl::Json(nullptr);
}

}  // namespace

RefusalReason parse_refusal_reason(std::string_view label) {
  RefusalReason reason;
  const std::size_t colon = label.find(':');
  std::string_view body = label;
  if (colon == std::string_view::npos) {
    reason.code = std::string(utf8::trim(label));
  } else {
    reason.code = std::string(utf8::trim(label.substr(0, colon)));
    body = label.substr(colon + 1);
  }
  for (const std::string& alternative : split(body, '|')) {
    reason.alternatives.push_back(split(alternative, '+'));
  }
  return reason;
}

std::string format_refusal_reason(const RefusalReason& reason) {
  std::string out = reason.code + ":";
  for (std::size_t i = 0; i < reason.alternatives.size(); ++i) {
    if (i) out += '|';
    for (std::size_t j = 0; j < reason.alternatives[i].size(); ++j) {
      if (j) out += '+';
      out += reason.alternatives[i][j];
    }
  }
  return out;
}

std::string refusal_reason_code(std::string_view label) {
  return parse_refusal_reason(label).code;
}

JoinResult join_pairs(const std::vector<DocumentRecord>& a_records,
                      const std::vector<DocumentRecord>& b9_records,
                      const std::vector<ExaminationRecord>& history) {
  std::vector<const DocumentRecord*> filed;
  std::map<std::string, const DocumentRecord*> granted;
  std::vector<DocumentRecord> superseded;
  std::set<std::string> seen_a;

  const auto take = [&](const DocumentRecord& record) {
    const std::string& app = record.application_number;
    if (record.kind == DocumentKind::A) {
      if (!seen_a.insert(app).second) throw DuplicateRecord("duplicate A record for application " + app);
      filed.push_back(&record);
      return;
    }
    auto [it, inserted] = granted.try_emplace(app, &record);
    if (inserted) return;
    if (it->second->publication_date == record.publication_date) {
      throw DuplicateRecord("duplicate B9 record for application " + app);
    }
    if (record.publication_date > it->second->publication_date) {
      superseded.push_back(*it->second);
      it->second = &record;
    } else {
      superseded.push_back(record);
    }
  };
  for (const auto& r : a_records) take(r);
  for (const auto& r : b9_records) take(r);

  std::map<std::string, const ExaminationRecord*> linked;
  for (const auto& h : history) {
    if (!linked.try_emplace(h.application_number, &h).second) {
      throw DuplicateRecord("duplicate history record for application " + h.application_number);
    }
  }

  JoinResult result;
  result.superseded = std::move(superseded);
  for (const DocumentRecord* a : filed) {
    RewritePair pair;
    pair.application_number = a->application_number;
    pair.claims_before = a->claims;
    if (const auto it = granted.find(a->application_number); it != granted.end()) {
      pair.claims_after = it->second->claims;
    }
    if (const auto it = linked.find(a->application_number); it != linked.end()) {
      pair.reasons = it->second->reasons;
      pair.prior_art = it->second->prior_art;
    }
    result.pairs.push_back(std::move(pair));
  }
  for (const auto& [app, record] : granted) {
    if (!seen_a.count(app)) result.orphans.push_back(app);
  }
  return result;
}

std::string normalize_claims_text(std::string_view text) {
  std::string unified;
  unified.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      unified += '\n';
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      unified += text[i];
    }
  }
  std::string out;
  out.reserve(unified.size());
  std::size_t start = 0;
  while (start <= unified.size()) {
    const std::size_t end = std::min(unified.find('\n', start), unified.size());
    std::string_view line(unified.data() + start, end - start);
    const std::size_t last = line.find_last_not_of(" \t");
    out.append(line.substr(0, last == std::string_view::npos ? 0 : last + 1));
    if (end == unified.size()) break;
    out += '\n';
    start = end + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string_view describe(PairType type) {
  switch (type) {
    case PairType::Type1: return "A only (no corresponding B9)";
    case PairType::Type2: return "A and B9 identical, no refusal reasons";
    case PairType::Type3: return "A and B9 identical, with refusal reasons";
    case PairType::Type4: return "A and B9 differ, no refusal reasons";
    case PairType::Type5: return "A and B9 differ, with refusal reasons";
  }
  return "unknown";
}

PairType classify_type(const RewritePair& pair) {
  if (!pair.claims_after) return PairType::Type1;
  const bool identical =
      normalize_claims_text(pair.claims_before) == normalize_claims_text(*pair.claims_after);
  const bool refused = !pair.reasons.empty();
  if (identical) return refused ? PairType::Type3 : PairType::Type2;
  return refused ? PairType::Type5 : PairType::Type4;
}

CorpusStats compute_stats(const std::vector<RewritePair>& pairs) {
  struct Tally {
    double chars = 0, claims = 0;
    double pct_chars = 0, pct_claims = 0;
    std::size_t n_pct_chars = 0, n_pct_claims = 0;
  };
  std::array<Tally, 5> tally{};
  CorpusStats stats;
  stats.total = pairs.size();
  for (const RewritePair& pair : pairs) {
    const PairType type = classify_type(pair);
    const auto index = static_cast<std::size_t>(type) - 1;
    TypeStats& ts = stats.types[index];
    Tally& t = tally[index];
    ++ts.frequency;

    const std::string before = normalize_claims_text(pair.claims_before);
    const double before_chars = static_cast<double>(utf8::length(before));
    const double before_claims = static_cast<double>(claim_count(before));
    if (type == PairType::Type1) {
      t.chars += before_chars;
      t.claims += before_claims;
      continue;
    }
    const std::string after = normalize_claims_text(*pair.claims_after);
    const double after_chars = static_cast<double>(utf8::length(after));
    const double after_claims = static_cast<double>(claim_count(after));
    t.chars += after_chars;
    t.claims += after_claims;
    if (before_chars > 0) {
      t.pct_chars += (after_chars - before_chars) / before_chars;
      ++t.n_pct_chars;
    } else {
      ++ts.excluded_chars;
    }
    if (before_claims > 0) {
      t.pct_claims += (after_claims - before_claims) / before_claims;
      ++t.n_pct_claims;
    } else {
      ++ts.excluded_claims;
    }
  }
  for (std::size_t i = 0; i < 5; ++i) {
    TypeStats& ts = stats.types[i];
    const Tally& t = tally[i];
    if (ts.frequency == 0) continue;
    const double n = static_cast<double>(ts.frequency);
    ts.avg_chars = t.chars / n;
    ts.avg_claims = t.claims / n;
    if (i == 0) continue;
    if (t.n_pct_chars) ts.pct_chars = 100.0 * t.pct_chars / static_cast<double>(t.n_pct_chars);
    if (t.n_pct_claims) ts.pct_claims = 100.0 * t.pct_claims / static_cast<double>(t.n_pct_claims);
  }
  return stats;
}

std::size_t char_length(std::string_view text) { return utf8::length(text); }

std::vector<RewritePair> filter_by_length(const std::vector<RewritePair>& pairs,
                                          std::size_t max_units, const LengthFn& length) {
  if (max_units == 0) throw std::invalid_argument("max_units must be positive");
  std::vector<RewritePair> kept;
  for (const RewritePair& pair : pairs) {
    std::size_t units = length(pair.claims_before);
    if (pair.claims_after) units += length(*pair.claims_after);
    if (units <= max_units) kept.push_back(pair);
  }
  return kept;
}

DatasetSplit split_dataset(const std::vector<RewritePair>& pairs,
                           const std::array<std::size_t, 3>& sizes, std::uint64_t seed) {
  const std::size_t needed = sizes[0] + sizes[1] + sizes[2];
  if (needed > pairs.size()) {
    throw InsufficientData("split needs " + std::to_string(needed) + " pairs, have " +
                           std::to_string(pairs.size()));
  }
  std::set<std::string> apps;
  for (const RewritePair& pair : pairs) {
    if (!apps.insert(pair.application_number).second) {
      throw DuplicateRecord("application " + pair.application_number + " appears twice");
    }
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  DatasetSplit split;
  std::size_t next = 0;
  for (auto [target, count] : {std::pair{&split.train, sizes[0]}, std::pair{&split.valid, sizes[1]},
                               std::pair{&split.test, sizes[2]}}) {
    for (std::size_t i = 0; i < count; ++i) target->push_back(pairs[order[next++]]);
  }
  return split;
}

jsonl::Json to_json(const DocumentRecord& record) {
  return {{"app_no", record.application_number},
          {"kind", kind_name(record.kind)},
          {"claims", record.claims},
          {"pub_date", record.publication_date}};
}

jsonl::Json to_json(const RewritePair& pair) {
  return {{"app_no", pair.application_number},
          {"before", pair.claims_before},
          {"after", pair.claims_after ? jsonl::Json(*pair.claims_after) : jsonl::Json(nullptr)},
          {"reasons", pair.reasons},
          {"prior_art", pair.prior_art}};
}

jsonl::Json to_json(const CorpusStats& stats) {
  jsonl::Json types = jsonl::Json::object();
  for (int i = 1; i <= 5; ++i) {
    const TypeStats& ts = stats.of(static_cast<PairType>(i));
    types["type" + std::to_string(i)] = {
        {"description", describe(static_cast<PairType>(i))},
        {"freq", ts.frequency},
        {"avg_chars", optional_number(ts.avg_chars)},
        {"avg_claims", optional_number(ts.avg_claims)},
        {"pct_chars", optional_number(ts.pct_chars)},
        {"pct_claims", optional_number(ts.pct_claims)},
        {"excluded_chars", ts.excluded_chars},
        {"excluded_claims", ts.excluded_claims},
    };
  }
  return {{"total", stats.total}, {"types", types}};
}

std::vector<DocumentRecord> read_records(const std::filesystem::path& path) {
  std::vector<DocumentRecord> out;
  jsonl::for_each(path, [&](const jsonl::Json& row, std::size_t) {
    out.push_back({jsonl::require_string(row, "app_no"),
                   parse_kind(jsonl::require_string(row, "kind")),
                   jsonl::require_string(row, "claims"),
                   row.contains("pub_date") && row.at("pub_date").is_string()
                       ? row.at("pub_date").get<std::string>()
                       : std::string()});
  });
  return out;
}

void write_records(const std::vector<DocumentRecord>& records, const std::filesystem::path& path) {
  std::vector<jsonl::Json> rows;
  for (const auto& r : records) rows.push_back(to_json(r));
  jsonl::write(path, rows);
}

std::vector<ExaminationRecord> read_history(const std::filesystem::path& path) {
  std::vector<ExaminationRecord> out;
  jsonl::for_each(path, [&](const jsonl::Json& row, std::size_t) {
    out.push_back({jsonl::require_string(row, "app_no"), jsonl::string_list(row, "reasons"),
                   jsonl::string_list(row, "prior_art")});
  });
  return out;
}

std::vector<RewritePair> read_pairs(const std::filesystem::path& path) {
  std::vector<RewritePair> out;
  jsonl::for_each(path, [&](const jsonl::Json& row, std::size_t) {
    RewritePair pair;
    pair.application_number = jsonl::require_string(row, "app_no");
    pair.claims_before = jsonl::require_string(row, "before");
    if (row.contains("after") && !row.at("after").is_null()) {
      pair.claims_after = jsonl::require_string(row, "after");
    }
    pair.reasons = jsonl::string_list(row, "reasons");
    pair.prior_art = jsonl::string_list(row, "prior_art");
    out.push_back(std::move(pair));
  });
  return out;
}

void write_pairs(const std::vector<RewritePair>& pairs, const std::filesystem::path& path) {
  std::vector<jsonl::Json> rows;
  rows.reserve(pairs.size());
  for (const auto& p : pairs) rows.push_back(to_json(p));
  jsonl::write(path, rows);
}

}  // namespace claimbrush
