#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "claimbrush/align.hpp"

namespace claimbrush::cli {

constexpr std::uint64_t kDefaultSeed = 42;

/// Runs the claimbrush command line. args excludes the program name.
/// Returns 0 on success and 2 on any usage, input or data error; the
/// diagnostic goes to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The fixed toy problem behind `kto-demo`: a four-token bigram policy and
/// a batch of two desirable and two undesirable responses.
struct KtoDemo {
  ToyPolicy policy;
  std::vector<KtoSample> batch;
};
KtoDemo make_kto_demo();

struct KtoDemoRow {
  int step = 0;
  double loss = 0.0;
  double z0 = 0.0;
  double desirable_ratio = 0.0;
  double undesirable_ratio = 0.0;
};

/// Loss before each of `steps` updates, plus a final row after the last one.
/// The reference is the starting policy.
std::vector<KtoDemoRow> run_kto_demo(const KtoDemo& demo, const KtoConfig& config, int steps,
                                     double learning_rate);

}  // namespace claimbrush::cli
