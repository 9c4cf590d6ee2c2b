#include "claimbrush/claims.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "claimbrush/utf8.hpp"

namespace claimbrush {

namespace {

constexpr std::string_view kClaimWord = "請求項";
constexpr std::string_view kHeaderOpen = "【請求項";
constexpr std::string_view kHeaderClose = "】";

bool match(std::string_view text, std::size_t pos, std::string_view lit) {
  return pos <= text.size() && text.substr(pos).starts_with(lit);
}

bool imatch(std::string_view text, std::size_t pos, std::string_view lit) {
  if (pos + lit.size() > text.size()) return false;
  for (std::size_t i = 0; i < lit.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != lit[i]) return false;
  }
  return true;
}

bool is_alpha(std::string_view text, std::size_t pos) {
  return pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]));
}

// ASCII or full-width (U+FF10..U+FF19) decimal digits.
std::optional<int> parse_number(std::string_view text, std::size_t& pos, bool ascii_only = false) {
  std::size_t p = pos;
  long value = 0;
  int digits = 0;
  while (p < text.size()) {
    int d = -1;
    const auto c = static_cast<unsigned char>(text[p]);
    if (c >= '0' && c <= '9') {
      d = c - '0';
      p += 1;
    } else if (!ascii_only && c == 0xEF && p + 2 < text.size() &&
               static_cast<unsigned char>(text[p + 1]) == 0xBC) {
      const auto c3 = static_cast<unsigned char>(text[p + 2]);
      if (c3 < 0x90 || c3 > 0x99) break;
      d = c3 - 0x90;
      p += 3;
    } else {
      break;
    }
    value = value * 10 + d;
    if (value > 1'000'000) return std::nullopt;
    ++digits;
  }
  if (digits == 0) return std::nullopt;
  pos = p;
  return static_cast<int>(value);
}

void skip_spaces(std::string_view text, std::size_t& pos) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
}

enum class Connector { None, List, Selective, Conjunctive, Range };

void append_range(std::vector<int>& targets, int high) {
  const int low = targets.back();
  if (high < low) {
    throw MalformedClaims("inverted citation range " + std::to_string(low) + " to " +
                          std::to_string(high));
  }
  for (int t = low + 1; t <= high; ++t) targets.push_back(t);
}

bool phrase_selective(std::size_t count, bool saw_selective, bool saw_conjunctive) {
  return count == 1 || saw_selective || !saw_conjunctive;
}

std::vector<ReferencePhrase> scan_japanese(std::string_view text) {
  std::vector<ReferencePhrase> out;
  std::size_t pos = 0;
  while ((pos = text.find(kClaimWord, pos)) != std::string_view::npos) {
    const std::size_t begin = pos;
    std::size_t p = pos + kClaimWord.size();
    pos = p;
    const auto first = parse_number(text, p);
    if (!first) continue;

    ReferencePhrase phrase;
    phrase.begin = begin;
    phrase.targets.push_back(*first);
    bool saw_selective = false;
    bool saw_conjunctive = false;
    for (;;) {
      std::size_t q = p;
      Connector kind = Connector::None;
      static constexpr std::pair<std::string_view, Connector> kConnectors[] = {
          {"又は", Connector::Selective}, {"若しくは", Connector::Selective},
          {"及び", Connector::Conjunctive}, {"、", Connector::List},
          {",", Connector::List},          {"から", Connector::Range},
          {"乃至", Connector::Range},       {"～", Connector::Range},
          {"〜", Connector::Range},
      };
      for (const auto& [lit, k] : kConnectors) {
        if (match(text, q, lit)) {
          kind = k;
          q += lit.size();
          break;
        }
      }
      if (kind == Connector::None) break;
      if (match(text, q, kClaimWord)) q += kClaimWord.size();
      const auto n = parse_number(text, q);
      if (!n) break;
      if (kind == Connector::Range) {
        append_range(phrase.targets, *n);
        if (match(text, q, "まで")) q += std::string_view("まで").size();
        saw_selective = true;
      } else {
        phrase.targets.push_back(*n);
        saw_selective |= kind == Connector::Selective;
        saw_conjunctive |= kind == Connector::Conjunctive;
      }
      p = q;
    }
    for (std::string_view suffix : {"のいずれか一項", "のいずれか１項", "のいずれか1項", "のいずれか"}) {
      if (match(text, p, suffix)) {
        p += suffix.size();
        break;
      }
    }
    phrase.end = p;
    phrase.selective = phrase_selective(phrase.targets.size(), saw_selective, saw_conjunctive);
    phrase.ascii = false;
    out.push_back(std::move(phrase));
    pos = p;
  }
  return out;
}

std::vector<ReferencePhrase> scan_ascii(std::string_view text) {
  std::vector<ReferencePhrase> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (!imatch(text, pos, "claim") || (pos > 0 && is_alpha(text, pos - 1))) {
      ++pos;
      continue;
    }
    std::size_t begin = pos;
    std::size_t p = pos + 5;
    pos = p;
    if (imatch(text, p, "s")) ++p;
    if (p >= text.size() || text[p] != ' ') continue;
    skip_spaces(text, p);
    const auto first = parse_number(text, p, true);
    if (!first) continue;

    ReferencePhrase phrase;
    phrase.targets.push_back(*first);
    bool saw_selective = false;
    bool saw_conjunctive = false;
    for (;;) {
      std::size_t q = p;
      skip_spaces(text, q);
      Connector kind = Connector::None;
      auto word = [&](std::string_view w) {
        if (imatch(text, q, w) && q + w.size() < text.size() && text[q + w.size()] == ' ') {
          q += w.size();
          return true;
        }
        return false;
      };
      if (q < text.size() && text[q] == ',') {
        ++q;
        skip_spaces(text, q);
        kind = Connector::List;
        if (word("or")) kind = Connector::Selective;
        else if (word("and")) kind = Connector::Conjunctive;
      } else if (word("or")) {
        kind = Connector::Selective;
      } else if (word("and")) {
        kind = Connector::Conjunctive;
      } else if (word("to") || word("through")) {
        kind = Connector::Range;
      } else if (q < text.size() && text[q] == '-') {
        ++q;
        kind = Connector::Range;
      }
      if (kind == Connector::None) break;
      skip_spaces(text, q);
      if (imatch(text, q, "claims ")) q += 7;
      else if (imatch(text, q, "claim ")) q += 6;
      const auto n = parse_number(text, q, true);
      if (!n) break;
      if (kind == Connector::Range) {
        append_range(phrase.targets, *n);
        saw_selective = true;
      } else {
        phrase.targets.push_back(*n);
        saw_selective |= kind == Connector::Selective;
        saw_conjunctive |= kind == Connector::Conjunctive;
      }
      p = q;
    }
    constexpr std::string_view kPrefix = "any one of ";
    if (begin >= kPrefix.size() && imatch(text, begin - kPrefix.size(), kPrefix)) {
      begin -= kPrefix.size();
    }
    phrase.begin = begin;
    phrase.end = p;
    phrase.selective = phrase_selective(phrase.targets.size(), saw_selective, saw_conjunctive);
    phrase.ascii = true;
    out.push_back(std::move(phrase));
    pos = p;
  }
  return out;
}

struct Header {
  int number;
  std::size_t begin;
  std::size_t end;
};

std::vector<Header> find_headers(std::string_view text, HeaderStyle style) {
  std::vector<Header> out;
  std::size_t pos = 0;
  if (style == HeaderStyle::Japanese) {
    while ((pos = text.find(kHeaderOpen, pos)) != std::string_view::npos) {
      std::size_t p = pos + kHeaderOpen.size();
      const auto n = parse_number(text, p);
      if (n && match(text, p, kHeaderClose)) {
        out.push_back({*n, pos, p + kHeaderClose.size()});
        pos = p + kHeaderClose.size();
      } else {
        pos += kHeaderOpen.size();
      }
    }
  } else {
    while ((pos = text.find('[', pos)) != std::string_view::npos) {
      std::size_t p = pos + 1;
      if (imatch(text, p, "claim ")) {
        p += 6;
        skip_spaces(text, p);
        const auto n = parse_number(text, p, true);
        if (n && p < text.size() && text[p] == ']') {
          out.push_back({*n, pos, p + 1});
          pos = p + 1;
          continue;
        }
      }
      ++pos;
    }
  }
  return out;
}

std::string join_numbers(const std::vector<int>& targets, std::size_t count, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out += sep;
    out += std::to_string(targets[i]);
  }
  return out;
}

bool contiguous(const std::vector<int>& targets) {
  for (std::size_t i = 1; i < targets.size(); ++i) {
    if (targets[i] != targets[i - 1] + 1) return false;
  }
  return true;
}

std::string emit_japanese(const std::vector<int>& t, bool selective) {
  const std::string head = std::string(kClaimWord);
  if (t.size() == 1) return head + std::to_string(t[0]);
  const std::string last = std::to_string(t.back());
  if (!selective) return head + join_numbers(t, t.size() - 1, "、") + "及び" + last;
  if (t.size() == 2) return head + std::to_string(t[0]) + "又は" + last;
  if (contiguous(t)) return head + std::to_string(t[0]) + "から" + last + "までのいずれか一項";
  return head + join_numbers(t, t.size() - 1, "、") + "又は" + last + "のいずれか一項";
}

std::string emit_ascii(const std::vector<int>& t, bool selective, bool capital) {
  std::string out;
  const std::string last = std::to_string(t.back());
  if (t.size() == 1) {
    out = "claim " + last;
  } else if (!selective) {
    out = "claims " + join_numbers(t, t.size() - 1, ", ") + " and " + last;
  } else if (t.size() == 2) {
    out = "claim " + std::to_string(t[0]) + " or " + last;
  } else if (contiguous(t)) {
    out = "any one of claims " + std::to_string(t[0]) + " to " + last;
  } else {
    out = "any one of claims " + join_numbers(t, t.size() - 1, ", ") + " or " + last;
  }
  if (capital) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

int selective_count(const Claim& claim) {
  return static_cast<int>(std::count_if(claim.refs.begin(), claim.refs.end(),
                                        [](const Reference& r) { return r.selective; }));
}

}  // namespace

std::string_view to_string(ClaimCategory category) {
  switch (category) {
    case ClaimCategory::Independent: return "independent";
    case ClaimCategory::DependentSingle: return "dependent-single";
    case ClaimCategory::DependentMulti: return "dependent-multi";
    case ClaimCategory::MultiMulti: return "multi-multi";
  }
  return "unknown";
}

ClaimSet::ClaimSet(std::vector<Claim> claims, std::string raw_text, HeaderStyle style)
    : claims_(std::move(claims)), raw_text_(std::move(raw_text)), style_(style) {
  if (claims_.empty()) throw MalformedClaims("a claims section holds at least one claim");
  for (std::size_t i = 0; i < claims_.size(); ++i) {
    const Claim& claim = claims_[i];
    if (claim.number != static_cast<int>(i) + 1) {
      throw MalformedClaims("claim numbers must run 1..K; position " + std::to_string(i + 1) +
                            " holds claim " + std::to_string(claim.number));
    }
    std::set<int> seen;
    for (const Reference& ref : claim.refs) {
      if (ref.target < 1 || ref.target >= claim.number) {
        throw MalformedClaims("claim " + std::to_string(claim.number) + " cites claim " +
                              std::to_string(ref.target) + ", which does not precede it");
      }
      if (!seen.insert(ref.target).second) {
        throw MalformedClaims("claim " + std::to_string(claim.number) + " cites claim " +
                              std::to_string(ref.target) + " twice");
      }
    }
  }
}

const Claim& ClaimSet::at(int number) const {
  if (!contains(number)) throw UnknownClaim("no claim " + std::to_string(number));
  return claims_[static_cast<std::size_t>(number - 1)];
}

std::vector<ReferencePhrase> scan_references(std::string_view body) {
  auto phrases = scan_japanese(body);
  auto ascii = scan_ascii(body);
  phrases.insert(phrases.end(), std::make_move_iterator(ascii.begin()),
                 std::make_move_iterator(ascii.end()));
  std::sort(phrases.begin(), phrases.end(),
            [](const ReferencePhrase& a, const ReferencePhrase& b) { return a.begin < b.begin; });
  return phrases;
}

HeaderStyle detect_header_style(std::string_view text) {
  return text.find(kHeaderOpen) != std::string_view::npos ? HeaderStyle::Japanese
                                                          : HeaderStyle::Ascii;
}

std::size_t count_claim_headers(std::string_view text, HeaderStyle style) {
  return find_headers(text, style).size();
}

ClaimSet parse_claims(std::string_view text, HeaderStyle style) {
  const auto headers = find_headers(text, style);
  if (headers.empty()) throw MalformedClaims("no claim headers found");

  std::vector<Claim> claims;
  claims.reserve(headers.size());
  std::set<int> seen;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const Header& h = headers[i];
    const int expected = static_cast<int>(i) + 1;
    if (h.number != expected) {
      if (seen.count(h.number)) {
        throw MalformedClaims("duplicated claim header " + std::to_string(h.number));
      }
      throw MalformedClaims("non-contiguous claim numbering: expected " +
                            std::to_string(expected) + ", found " + std::to_string(h.number));
    }
    seen.insert(h.number);
    const std::size_t body_end = i + 1 < headers.size() ? headers[i + 1].begin : text.size();

    Claim claim;
    claim.number = h.number;
    claim.body = std::string(utf8::trim(text.substr(h.end, body_end - h.end)));
    std::set<int> cited;
    for (const ReferencePhrase& phrase : scan_references(claim.body)) {
      for (int target : phrase.targets) {
        if (target < 1 || target >= claim.number) {
          throw MalformedClaims("claim " + std::to_string(claim.number) + " cites claim " +
                                std::to_string(target) + ", which does not precede it");
        }
        if (cited.insert(target).second) claim.refs.push_back({target, phrase.selective});
      }
    }
    claims.push_back(std::move(claim));
  }
  return ClaimSet(std::move(claims), std::string(text), style);
}

std::string serialize_claims(const ClaimSet& set) {
  std::string out;
  for (const Claim& claim : set.claims()) {
    if (!out.empty()) out += '\n';
    if (set.style() == HeaderStyle::Japanese) {
      out += "【請求項" + std::to_string(claim.number) + "】" + claim.body;
    } else {
      out += "[Claim " + std::to_string(claim.number) + "]";
      if (!claim.body.empty()) out += " " + claim.body;
    }
  }
  return out;
}

ClaimCategory classify_claim(const ClaimSet& set, int number) {
  const Claim& claim = set.at(number);
  if (claim.refs.empty()) return ClaimCategory::Independent;
  if (selective_count(claim) < 2) return ClaimCategory::DependentSingle;
  for (const Reference& ref : claim.refs) {
    if (ref.selective && selective_count(set.at(ref.target)) >= 2) {
      return ClaimCategory::MultiMulti;
    }
  }
  return ClaimCategory::DependentMulti;
}

std::size_t count_multi_multi(const ClaimSet& set) {
  std::size_t n = 0;
  for (const Claim& claim : set.claims()) {
    if (classify_claim(set, claim.number) == ClaimCategory::MultiMulti) ++n;
  }
  return n;
}

std::set<int> dependents_closure(const ClaimSet& set, const std::set<int>& targets) {
  for (int t : targets) {
    if (!set.contains(t)) throw UnknownClaim("no claim " + std::to_string(t));
  }
  // References only point backwards, so one ascending pass is transitive.
  std::set<int> closed = targets;
  for (const Claim& claim : set.claims()) {
    if (closed.count(claim.number)) continue;
    for (const Reference& ref : claim.refs) {
      if (closed.count(ref.target)) {
        closed.insert(claim.number);
        break;
      }
    }
  }
  return closed;
}

std::string rewrite_references(std::string_view body,
                               const std::function<std::optional<int>(int)>& map) {
  std::string out;
  std::size_t cursor = 0;
  for (const ReferencePhrase& phrase : scan_references(body)) {
    std::vector<int> mapped;
    for (int t : phrase.targets) {
      const auto m = map(t);
      if (m && std::find(mapped.begin(), mapped.end(), *m) == mapped.end()) mapped.push_back(*m);
    }
    out.append(body.substr(cursor, phrase.begin - cursor));
    cursor = phrase.end;
    if (mapped == phrase.targets) {
      out.append(body.substr(phrase.begin, phrase.end - phrase.begin));
      continue;
    }
    if (mapped.empty()) {
      throw std::invalid_argument("citation phrase would lose all of its targets");
    }
    if (phrase.ascii) {
      const bool capital = std::isupper(static_cast<unsigned char>(body[phrase.begin]));
      out += emit_ascii(mapped, phrase.selective, capital);
    } else {
      out += emit_japanese(mapped, phrase.selective);
    }
  }
  out.append(body.substr(cursor));
  return out;
}

}  // namespace claimbrush
