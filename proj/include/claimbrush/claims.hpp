#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "claimbrush/errors.hpp"

namespace claimbrush {

// 【請求項N】 headers, or the "[Claim N]" ASCII fallback.
enum class HeaderStyle { Japanese, Ascii };

struct Reference {
  int target = 0;
  // True for disjunctive citations (又は, 若しくは, ranges, "or") and for a
  // lone citation; false for conjunctive ones (及び, "and").
  bool selective = true;

  friend bool operator==(const Reference&, const Reference&) = default;
};

struct Claim {
  int number = 0;
  std::string body;
  std::vector<Reference> refs;

  friend bool operator==(const Claim&, const Claim&) = default;
};

enum class ClaimCategory { Independent, DependentSingle, DependentMulti, MultiMulti };

std::string_view to_string(ClaimCategory category);

/// An immutable, validated claims section.
///
/// Claim numbers run 1..K without gaps and every reference points at an
/// earlier claim. Equality is structural: raw_text is not compared.
class ClaimSet {
 public:
  ClaimSet() = default;

  /// Validates the invariants and throws MalformedClaims when they fail.
  ClaimSet(std::vector<Claim> claims, std::string raw_text,
           HeaderStyle style = HeaderStyle::Japanese);

  const std::vector<Claim>& claims() const noexcept { return claims_; }
  std::size_t size() const noexcept { return claims_.size(); }
  bool contains(int number) const noexcept {
    return number >= 1 && static_cast<std::size_t>(number) <= claims_.size();
  }
  /// Throws UnknownClaim when absent.
  const Claim& at(int number) const;

  const std::string& raw_text() const noexcept { return raw_text_; }
  HeaderStyle style() const noexcept { return style_; }

  friend bool operator==(const ClaimSet& a, const ClaimSet& b) {
    return a.style_ == b.style_ && a.claims_ == b.claims_;
  }

 private:
  std::vector<Claim> claims_;
  std::string raw_text_;
  HeaderStyle style_ = HeaderStyle::Japanese;
};

/// A citation phrase found in a claim body. Offsets are byte offsets into the
/// scanned text; [begin, end) covers the whole phrase including any trailing
/// "のいずれか一項" or leading "any one of".
struct ReferencePhrase {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<int> targets;
  bool selective = true;
  bool ascii = false;
};

/// Finds every citation phrase in a claim body, in text order.
/// Throws MalformedClaims on an inverted range ("請求項3から1").
std::vector<ReferencePhrase> scan_references(std::string_view body);

/// Splits a claims section at its headers. Text before the first header is
/// ignored; bodies are trimmed of surrounding whitespace.
ClaimSet parse_claims(std::string_view text, HeaderStyle style = HeaderStyle::Japanese);

/// Japanese when the text carries a 【請求項 header, ASCII otherwise.
HeaderStyle detect_header_style(std::string_view text);

/// Counts header occurrences without validating numbering.
std::size_t count_claim_headers(std::string_view text, HeaderStyle style);

std::string serialize_claims(const ClaimSet& set);

ClaimCategory classify_claim(const ClaimSet& set, int number);

std::size_t count_multi_multi(const ClaimSet& set);

/// Minimal superset of targets closed under "cites a member".
std::set<int> dependents_closure(const ClaimSet& set, const std::set<int>& targets);

/// Rewrites every citation phrase of a body through map. Targets mapped to
/// nullopt are dropped from their phrase; phrases whose mapped targets are
/// unchanged are kept verbatim. Throws std::invalid_argument when a phrase
/// would lose all of its targets.
std::string rewrite_references(std::string_view body,
                               const std::function<std::optional<int>(int)>& map);

}  // namespace claimbrush
