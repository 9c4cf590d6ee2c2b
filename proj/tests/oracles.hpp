#pragma once

// Independent reference implementations used only by tests. They favour
// explicit enumeration over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Tokens = std::vector<std::string>;

// Every n-gram occurrence, in order, repetitions included.
inline std::vector<Tokens> occurrences(const Tokens& tokens, int n) {
  std::vector<Tokens> out;
  for (int i = 0; i + n <= static_cast<int>(tokens.size()); ++i) {
    out.emplace_back(tokens.begin() + i, tokens.begin() + i + n);
  }
  return out;
}

inline int count(const std::vector<Tokens>& list, const Tokens& g) {
  int c = 0;
  for (const auto& x : list) c += (x == g) ? 1 : 0;
  return c;
}

inline std::vector<Tokens> distinct(const std::vector<Tokens>& list) {
  std::vector<Tokens> out;
  for (const auto& x : list) {
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
  }
  return out;
}

// Sentence GLEU, orders 1..min(max_n, |hyp|); source n-grams absent from the
// reference are penalized when the hypothesis contains them.
inline double gleu(const Tokens& src, const Tokens& ref, const Tokens& hyp, int max_n = 4) {
  if (hyp.empty()) return 0.0;
  const int orders = std::min<int>(max_n, static_cast<int>(hyp.size()));
  double product = 1.0;
  for (int n = 1; n <= orders; ++n) {
    const auto h = occurrences(hyp, n);
    const auto r = occurrences(ref, n);
    const auto s = occurrences(src, n);
    int numerator = 0;
    for (const auto& g : distinct(h)) {
      const int hc = count(h, g);
      const int rc = count(r, g);
      numerator += std::min(hc, rc);
      if (rc == 0) numerator -= std::min(hc, count(s, g));
    }
    numerator = std::max(numerator, 0);
    if (numerator == 0) return 0.0;
    product *= static_cast<double>(numerator) / static_cast<double>(h.size());
  }
  const double bp = hyp.size() >= ref.size()
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref.size()) / hyp.size());
  return bp * std::pow(product, 1.0 / orders);
}

struct Sari {
  double score, add_f, keep_f, del_p;
};

inline double ratio(double a, double b) { return b == 0.0 ? 0.0 : a / b; }
inline double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2 * p * r / (p + r); }

// Single-reference SARI with the library's conventions: 0/0 is 0, except a
// hypothesis that deletes nothing scores delete precision 1 when the
// reference deletes nothing either.
inline Sari sari(const Tokens& src, const Tokens& ref, const Tokens& hyp, int max_n = 4) {
  const int longest = static_cast<int>(std::max({src.size(), ref.size(), hyp.size()}));
  const int orders = std::max(1, std::min(max_n, longest));
  double add = 0, keep = 0, del = 0;
  for (int n = 1; n <= orders; ++n) {
    const auto s = occurrences(src, n);
    const auto r = occurrences(ref, n);
    const auto c = occurrences(hyp, n);
    std::vector<Tokens> universe = s;
    universe.insert(universe.end(), r.begin(), r.end());
    universe.insert(universe.end(), c.begin(), c.end());
    universe = distinct(universe);

    double kp = 0, kr = 0, dp = 0;
    int kp_n = 0, kr_n = 0, dp_n = 0;
    bool ref_deletes = false;
    int added = 0, added_good = 0, addable = 0;
    for (const auto& g : universe) {
      const int S = count(s, g), R = count(r, g), C = count(c, g);
      if (std::min(S, C) > 0) {
        ++kp_n;
        kp += static_cast<double>(std::min({S, C, R})) / std::min(S, C);
      }
      if (std::min(S, R) > 0) {
        ++kr_n;
        kr += static_cast<double>(std::min({S, C, R})) / std::min(S, R);
      }
      if (S - R > 0) ref_deletes = true;
      if (S - C > 0) {
        ++dp_n;
        dp += static_cast<double>(std::min(S - C, std::max(S - R, 0))) / (S - C);
      }
      if (S == 0 && C > 0) {
        ++added;
        if (R > 0) ++added_good;
      }
      if (S == 0 && R > 0) ++addable;
    }
    keep += harmonic(ratio(kp, kp_n), ratio(kr, kr_n));
    del += dp_n > 0 ? dp / dp_n : (ref_deletes ? 0.0 : 1.0);
    add += harmonic(ratio(added_good, added), ratio(added_good, addable));
  }
  Sari out{0, add / orders, keep / orders, del / orders};
  out.score = (out.add_f + out.keep_f + out.del_p) / 3.0;
  return out;
}

inline Tokens random_tokens(std::mt19937_64& rng, int alphabet, int max_len, int min_len = 0) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<int> sym(0, alphabet - 1);
  Tokens out(static_cast<std::size_t>(len(rng)));
  for (auto& t : out) t = std::string(1, static_cast<char>('a' + sym(rng)));
  return out;
}

// A claim dependency graph. refs[i] lists the targets of claim i + 1;
// selective[i] tells whether that claim's citation is disjunctive.
struct ClaimGraph {
  std::vector<std::vector<int>> refs;
  std::vector<bool> selective;
  int size() const { return static_cast<int>(refs.size()); }
};

inline ClaimGraph random_graph(std::mt19937_64& rng, int max_claims) {
  std::uniform_int_distribution<int> size_dist(1, max_claims);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ClaimGraph g;
  const int k = size_dist(rng);
  for (int n = 1; n <= k; ++n) {
    std::vector<int> targets;
    if (n > 1 && unit(rng) < 0.75) {
      std::uniform_int_distribution<int> count_dist(1, std::min(4, n - 1));
      const int want = count_dist(rng);
      std::vector<int> pool(static_cast<std::size_t>(n - 1));
      for (int i = 0; i < n - 1; ++i) pool[static_cast<std::size_t>(i)] = i + 1;
      std::shuffle(pool.begin(), pool.end(), rng);
      targets.assign(pool.begin(), pool.begin() + want);
      std::sort(targets.begin(), targets.end());
    }
    g.refs.push_back(targets);
    g.selective.push_back(targets.size() < 2 || unit(rng) < 0.7);
  }
  return g;
}

// Japanese claims text for a graph. Multi-target citations are written as
// "請求項A、B又はC" (selective) or "請求項A、B及びC" (conjunctive).
inline std::string render(const ClaimGraph& g) {
  std::string text;
  for (int n = 1; n <= g.size(); ++n) {
    const auto& t = g.refs[static_cast<std::size_t>(n - 1)];
    text += "【請求項" + std::to_string(n) + "】";
    if (!t.empty()) {
      text += "請求項";
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i > 0) {
          if (i + 1 < t.size()) {
            text += "、";
          } else {
            text += g.selective[static_cast<std::size_t>(n - 1)] ? "又は" : "及び";
          }
        }
        text += std::to_string(t[i]);
      }
      text += "に記載の";
    }
    text += "装置" + std::to_string(n) + "。\n";
  }
  return text;
}

// Definition check: a multi claim selectively cites two or more claims; a
// multi-multi claim is a multi claim that cites a multi claim.
inline bool is_multi(const ClaimGraph& g, int n) {
  const auto i = static_cast<std::size_t>(n - 1);
  return g.refs[i].size() >= 2 && g.selective[i];
}

inline bool is_multi_multi(const ClaimGraph& g, int n) {
  if (!is_multi(g, n)) return false;
  for (int t : g.refs[static_cast<std::size_t>(n - 1)]) {
    if (is_multi(g, t)) return true;
  }
  return false;
}

// Fixed-point reverse reachability.
inline std::set<int> closure(const ClaimGraph& g, std::set<int> seed) {
  bool grew = true;
  while (grew) {
    grew = false;
    for (int n = 1; n <= g.size(); ++n) {
      if (seed.count(n)) continue;
      for (int t : g.refs[static_cast<std::size_t>(n - 1)]) {
        if (seed.count(t)) {
          seed.insert(n);
          grew = true;
          break;
        }
      }
    }
  }
  return seed;
}

// Log-probability of a bigram chain, each factor exp(l_y) / sum_j exp(l_j)
// evaluated directly.
inline double chain_logprob(const Eigen::MatrixXd& logits, const std::vector<int>& prompt,
                            const std::vector<int>& response) {
  int context = prompt.empty() ? 0 : prompt.back();
  double p = 0.0;
  for (int y : response) {
    double z = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) z += std::exp(logits(context, j));
    p += std::log(std::exp(logits(context, y)) / z);
    context = y;
  }
  return p;
}

// Central differences of f over every entry of x.
inline Eigen::MatrixXd numeric_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                                        const Eigen::MatrixXd& x, double h = 1e-5) {
  Eigen::MatrixXd grad(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double saved = probe(i, j);
      probe(i, j) = saved + h;
      const double up = f(probe);
      probe(i, j) = saved - h;
      const double down = f(probe);
      probe(i, j) = saved;
      grad(i, j) = (up - down) / (2 * h);
    }
  }
  return grad;
}

// ||a - b|| / max(||a||, ||b||, floor).
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             double floor = 1e-8) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

}  // namespace oracle
