#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claimbrush/errors.hpp"
#include "claimbrush/jsonl.hpp"

namespace claimbrush {

// A: publication before examination. B9: granted patent publication.
enum class DocumentKind { A, B9 };

struct DocumentRecord {
  std::string application_number;
  DocumentKind kind = DocumentKind::A;
  std::string claims;
  std::string publication_date;  // ISO yyyy-mm-dd, compared lexically

  friend bool operator==(const DocumentRecord&, const DocumentRecord&) = default;
};

/// Examination history linked by application number.
struct ExaminationRecord {
  std::string application_number;
  std::vector<std::string> reasons;
  std::vector<std::string> prior_art;
};

struct RewritePair {
  std::string application_number;
  std::string claims_before;
  std::optional<std::string> claims_after;
  std::vector<std::string> reasons;
  std::vector<std::string> prior_art;

  friend bool operator==(const RewritePair&, const RewritePair&) = default;
};

/// A refusal-reason label such as "22:第29条第1項|第29条第2項|第29条第1項+第29条第2項":
/// '|' separates alternatives, '+' joins provisions that apply together.
struct RefusalReason {
  std::string code;
  std::vector<std::vector<std::string>> alternatives;

  friend bool operator==(const RefusalReason&, const RefusalReason&) = default;
};

/// A label without ':' uses the whole label as its code.
RefusalReason parse_refusal_reason(std::string_view label);
std::string format_refusal_reason(const RefusalReason& reason);
std::string refusal_reason_code(std::string_view label);

struct JoinResult {
  std::vector<RewritePair> pairs;
  // B9 application numbers without an A record.
  std::vector<std::string> orphans;
  // Older B9 records replaced by a later publication of the same application.
  std::vector<DocumentRecord> superseded;
};

/// One pair per A record, in input order. Records are dispatched on their
/// kind. Throws DuplicateRecord on a repeated A record, on two B9 records of
/// one application with the same date, or on repeated history entries.
JoinResult join_pairs(const std::vector<DocumentRecord>& a_records,
                      const std::vector<DocumentRecord>& b9_records,
                      const std::vector<ExaminationRecord>& history = {});

/// CRLF/CR become LF and trailing whitespace is stripped from every line and
/// from the end of the text.
std::string normalize_claims_text(std::string_view text);

enum class PairType { Type1 = 1, Type2, Type3, Type4, Type5 };

std::string_view describe(PairType type);

PairType classify_type(const RewritePair& pair);

struct TypeStats {
  std::size_t frequency = 0;
  std::optional<double> avg_chars;
  std::optional<double> avg_claims;
  // Mean per-application percent change from A to B9; unset for Type 1.
  std::optional<double> pct_chars;
  std::optional<double> pct_claims;
  // Applications left out of a percent-change mean for a zero A count.
  std::size_t excluded_chars = 0;
  std::size_t excluded_claims = 0;
};

struct CorpusStats {
  std::size_t total = 0;
  std::array<TypeStats, 5> types;

  const TypeStats& of(PairType type) const { return types[static_cast<int>(type) - 1]; }
};

/// Characters are code points of the normalized claims text including
/// headers; claims are header occurrences.
CorpusStats compute_stats(const std::vector<RewritePair>& pairs);

using LengthFn = std::function<std::size_t(std::string_view)>;

std::size_t char_length(std::string_view text);

/// Keeps pairs whose before + after length is at most max_units.
std::vector<RewritePair> filter_by_length(const std::vector<RewritePair>& pairs,
                                          std::size_t max_units,
                                          const LengthFn& length = char_length);

struct DatasetSplit {
  std::vector<RewritePair> train;
  std::vector<RewritePair> valid;
  std::vector<RewritePair> test;
};

/// Seeded shuffle, then consecutive slices. Throws InsufficientData and
/// DuplicateRecord (split disjointness is by application number).
DatasetSplit split_dataset(const std::vector<RewritePair>& pairs,
                           const std::array<std::size_t, 3>& sizes, std::uint64_t seed);

// JSONL schemas.
//   record:  {app_no, kind: "A"|"B9", claims, pub_date}
//   history: {app_no, reasons, prior_art}
//   pair:    {app_no, before, after|null, reasons, prior_art}
jsonl::Json to_json(const DocumentRecord& record);
jsonl::Json to_json(const RewritePair& pair);
jsonl::Json to_json(const CorpusStats& stats);

std::vector<DocumentRecord> read_records(const std::filesystem::path& path);
void write_records(const std::vector<DocumentRecord>& records, const std::filesystem::path& path);
std::vector<ExaminationRecord> read_history(const std::filesystem::path& path);
std::vector<RewritePair> read_pairs(const std::filesystem::path& path);
void write_pairs(const std::vector<RewritePair>& pairs, const std::filesystem::path& path);

}  // namespace claimbrush
