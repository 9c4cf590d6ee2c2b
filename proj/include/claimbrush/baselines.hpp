#pragma once

#include <cstdint>
#include <map>
#include <set>

#include "claimbrush/claims.hpp"

namespace claimbrush {

struct RewriteResult {
  ClaimSet output;
  std::set<int> deleted;
  // Surviving original claim number -> its number in output.
  std::map<int, int> renumber_map;
};

enum class Baseline { Copy, Rdc, Dmmc };

/// Parses "copy", "rdc" or "dmmc"; throws std::invalid_argument otherwise.
Baseline parse_baseline(std::string_view name);

RewriteResult rewrite_copy(const ClaimSet& set);

/// Deletes targets plus everything citing them, renumbers the survivors
/// contiguously and rewrites their citation phrases.
RewriteResult delete_claims(const ClaimSet& set, const std::set<int>& targets);

/// The claim RDC deletes for this seed: uniform over 2..K. Requires K >= 2.
int rdc_candidate(std::size_t claim_count, std::uint64_t seed);

/// Random Delete of Claims. A single-claim set is returned unchanged.
RewriteResult rewrite_rdc(const ClaimSet& set, std::uint64_t seed);

/// Delete of Multi-Multi Claims.
RewriteResult rewrite_dmmc(const ClaimSet& set);

RewriteResult rewrite(const ClaimSet& set, Baseline baseline, std::uint64_t seed);

}  // namespace claimbrush
