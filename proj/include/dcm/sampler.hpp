#pragma once

#include <cstdint>
#include <vector>

#include "dcm/rng.hpp"
#include "dcm/simulate.hpp"
#include "dcm/types.hpp"

namespace dcm {

struct SamplerConfig {
  int iterations = 20000;
  int burnIn = 10000;
  int thinning = 5;
  std::uint64_t seed = 1;
  int stickCap = 512;     // materialized-stick safety cap
  bool betaHyperprior = true;
  double fixedBeta = 1.0; // used when the hyperprior is off

  void validate() const;
};

/// Full state of the chain. Sticks 0..L-1 are materialized; pi is kept in
/// sync with the sticks (pi_a = V_a * prod_{l<a} (1-V_l)).
struct SamplerState {
  std::vector<double> sticks;              // V_a in (0,1)
  std::vector<double> pi;                  // implied weights
  std::vector<std::vector<std::vector<double>>> probs; // [class][item] -> cell
  std::vector<int> assignments;            // 0-based class per observation
  std::vector<double> slices;              // u_i in (0, pi_{a_i})
  double beta = 1.0;

  std::size_t activeClasses() const; // max assignment + 1

  /// Throws if any invariant is violated (stick range, slice condition,
  /// cell normalization, pi consistency).
  void checkInvariants() const;
};

/// One retained draw: weights and response probabilities for the classes
/// materialized at that iteration.
struct Draw {
  int iteration = 0;
  std::vector<double> pi;
  std::vector<std::vector<std::vector<double>>> probs; // [class][item]
};

struct PosteriorDraws {
  std::size_t n = 0;      // observations the chain saw
  std::size_t items = 0;
  std::vector<int> categories;
  std::vector<Draw> draws;
};

/// Beta(1, beta) truncated to [lo, hi], sampled exactly by the inverse CDF
/// F(v) = 1 - (1-v)^beta. Used for every stick update.
double truncatedStickBeta(double beta, double lo, double hi, Rng& rng);

/// Raised when the chain cannot proceed (e.g. the stick cap is exceeded);
/// carries a state dump in what().
struct SamplerFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Crude k-means seeding into ceil(log2 n) classes, sticks from the prior,
/// slices drawn last. Deterministic given the rng stream.
SamplerState initState(const Dataset& data, const std::vector<int>& categories,
                       const SamplerConfig& cfg, Rng& rng);

/// One sweep of the five conditional updates, in order: slices, cell
/// probabilities, sticks (truncated Beta via inverse CDF), assignments over
/// A_i = {a : pi_a > u_i}, then the concentration parameter.
void gibbsStep(SamplerState& state, const Dataset& data,
               const std::vector<int>& categories, const SamplerConfig& cfg,
               Rng& rng);

PosteriorDraws runChain(const Dataset& data, const std::vector<int>& categories,
                        const SamplerConfig& cfg, bool progress = false);

} // namespace dcm
