#include "claimbrush/baselines.hpp"

#include <random>
#include <stdexcept>

namespace claimbrush {

Baseline parse_baseline(std::string_view name) {
  if (name == "copy") return Baseline::Copy;
  if (name == "rdc") return Baseline::Rdc;
  if (name == "dmmc") return Baseline::Dmmc;
  throw std::invalid_argument("unknown baseline '" + std::string(name) +
                              "' (expected copy, rdc or dmmc)");
}

RewriteResult rewrite_copy(const ClaimSet& set) {
  RewriteResult result{set, {}, {}};
  for (const Claim& claim : set.claims()) result.renumber_map[claim.number] = claim.number;
  return result;
}

RewriteResult delete_claims(const ClaimSet& set, const std::set<int>& targets) {
  if (targets.empty()) return rewrite_copy(set);
  RewriteResult result;
  result.deleted = dependents_closure(set, targets);

  int next = 1;
  for (const Claim& claim : set.claims()) {
    if (!result.deleted.count(claim.number)) result.renumber_map[claim.number] = next++;
  }
  if (result.renumber_map.empty()) {
    throw std::invalid_argument("deletion would remove every claim");
  }

  const auto map = [&](int target) -> std::optional<int> {
    const auto it = result.renumber_map.find(target);
    if (it == result.renumber_map.end()) return std::nullopt;
    return it->second;
  };
  std::vector<Claim> survivors;
  for (const Claim& claim : set.claims()) {
    const auto it = result.renumber_map.find(claim.number);
    if (it == result.renumber_map.end()) continue;
    survivors.push_back({it->second, rewrite_references(claim.body, map), {}});
  }
  // Re-parsing derives refs from the rewritten bodies, so output refs always
  // agree with the text that gets serialized.
  const ClaimSet staged(std::move(survivors), {}, set.style());
  const std::string text = serialize_claims(staged);
  result.output = parse_claims(text, set.style());
  return result;
}

int rdc_candidate(std::size_t claim_count, std::uint64_t seed) {
  if (claim_count < 2) throw std::invalid_argument("RDC needs at least two claims");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(2, static_cast<int>(claim_count));
  return pick(rng);
}

RewriteResult rewrite_rdc(const ClaimSet& set, std::uint64_t seed) {
  if (set.size() < 2) return rewrite_copy(set);
  return delete_claims(set, {rdc_candidate(set.size(), seed)});
}

RewriteResult rewrite_dmmc(const ClaimSet& set) {
  std::set<int> multi_multi;
  for (const Claim& claim : set.claims()) {
    if (classify_claim(set, claim.number) == ClaimCategory::MultiMulti) {
      multi_multi.insert(claim.number);
    }
  }
  return delete_claims(set, multi_multi);
}

RewriteResult rewrite(const ClaimSet& set, Baseline baseline, std::uint64_t seed) {
  switch (baseline) {
    case Baseline::Copy: return rewrite_copy(set);
    case Baseline::Rdc: return rewrite_rdc(set, seed);
    case Baseline::Dmmc: return rewrite_dmmc(set);
  }
  return rewrite_copy(set);
}

}  // namespace claimbrush
