#include "dcm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dcm {

namespace {

constexpr double kProbFloor = 1e-300;

std::vector<double> pifromSticks(const std::vector<double>& sticks) {
  std::vector<double> pi(sticks.size());
  double remaining = 1.0;
  for (std::size_t a = 0; a < sticks.size(); ++a) {
    pi[a] = sticks[a] * remaining;
    remaining *= 1.0 - sticks[a];
  }
  return pi;
}

std::vector<std::vector<double>> priorCell(const std::vector<int>& categories,
                                           Rng& rng) {
  std::vector<std::vector<double>> cell(categories.size());
  for (std::size_t j = 0; j < categories.size(); ++j)
    cell[j] = rng.dirichlet(std::vector<double>(categories[j], 1.0));
  return cell;
}

std::string dumpState(const SamplerState& s) {
  std::ostringstream os;
  os << "sticks=" << s.sticks.size() << " beta=" << s.beta << " pi=[";
  for (std::size_t a = 0; a < std::min<std::size_t>(s.pi.size(), 12); ++a)
    os << (a ? "," : "") << s.pi[a];
  os << (s.pi.size() > 12 ? ",...]" : "]");
  if (!s.slices.empty())
    os << " min_u=" << *std::min_element(s.slices.begin(), s.slices.end());
  return os.str();
}

} // namespace

double truncatedStickBeta(double beta, double lo, double hi, Rng& rng) {
  lo = std::clamp(lo, 0.0, 1.0 - 1e-15);
  hi = std::clamp(hi, lo + 1e-15, 1.0 - 1e-15);
  const double flo = 1.0 - std::pow(1.0 - lo, beta);
  const double fhi = 1.0 - std::pow(1.0 - hi, beta);
  const double w = rng.uniform(flo, fhi);
  double v = 1.0 - std::pow(1.0 - w, 1.0 / beta);
  return std::clamp(v, lo + 1e-16, hi);
}

void SamplerConfig::validate() const {
  if (burnIn < 0) throw std::invalid_argument("sampler: burn-in < 0");
  if (iterations <= burnIn)
    throw std::invalid_argument("sampler: iterations must exceed burn-in");
  if (thinning < 1) throw std::invalid_argument("sampler: thinning < 1");
  if (stickCap < 1) throw std::invalid_argument("sampler: stick cap < 1");
  if (!betaHyperprior && !(fixedBeta > 0.0))
    throw std::invalid_argument("sampler: fixed beta must be positive");
}

std::size_t SamplerState::activeClasses() const {
  if (assignments.empty()) return sticks.empty() ? 0 : 1;
  return static_cast<std::size_t>(
             *std::max_element(assignments.begin(), assignments.end())) + 1;
}

void SamplerState::checkInvariants() const {
  for (double v : sticks)
    if (!(v > 0.0 && v < 1.0))
      throw std::logic_error("sampler state: stick outside (0,1)");
  const auto expected = pifromSticks(sticks);
  for (std::size_t a = 0; a < sticks.size(); ++a)
    if (pi[a] != expected[a])
      throw std::logic_error("sampler state: pi inconsistent with sticks");
  for (std::size_t i = 0; i < slices.size(); ++i) {
    if (!(slices[i] > 0.0 && slices[i] < pi[assignments[i]]))
      throw std::logic_error("sampler state: slice condition violated");
  }
  for (const auto& cell : probs) {
    for (const auto& p : cell) {
      double sum = 0.0;
      for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0))
          throw std::logic_error("sampler state: cell prob outside [0,1]");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw std::logic_error("sampler state: cell does not sum to 1");
    }
  }
}

SamplerState initState(const Dataset& data, const std::vector<int>& categories,
                       const SamplerConfig& cfg, Rng& rng) {
  const std::size_t n = data.size();
  const std::size_t J = categories.size();
  SamplerState s;
  s.beta = cfg.betaHyperprior ? 1.0 : cfg.fixedBeta;

  std::size_t k = 1;
  if (n > 1)
    k = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n))));

  // Crude k-means over raw response codes to seed the assignments.
  std::vector<int> assign(n, 0);
  if (n > 0 && k > 1) {
    std::vector<std::vector<double>> centers;
    for (std::size_t tries = 0; centers.size() < k && tries < 20 * k; ++tries) {
      const auto& row = data.rows[rng.uniformInt(n)];
      std::vector<double> c(row.begin(), row.end());
      if (std::find(centers.begin(), centers.end(), c) == centers.end())
        centers.push_back(std::move(c));
    }
    k = centers.size(); // collapses when rows repeat heavily
    for (int iter = 0; iter < 10; ++iter) {
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::max();
        for (std::size_t c = 0; c < k; ++c) {
          double d = 0.0;
          for (std::size_t j = 0; j < J; ++j) {
            const double diff = data.rows[i][j] - centers[c][j];
            d += diff * diff;
          }
          if (d < best) {
            best = d;
            assign[i] = static_cast<int>(c);
          }
        }
      }
      std::vector<std::vector<double>> sums(k, std::vector<double>(J, 0.0));
      std::vector<int> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        ++counts[assign[i]];
        for (std::size_t j = 0; j < J; ++j) sums[assign[i]][j] += data.rows[i][j];
      }
      for (std::size_t c = 0; c < k; ++c)
        if (counts[c] > 0)
          for (std::size_t j = 0; j < J; ++j) centers[c][j] = sums[c][j] / counts[c];
    }
    // Relabel clusters by decreasing size so early sticks carry the mass.
    std::vector<int> counts(k, 0);
    for (int a : assign) ++counts[a];
    std::vector<int> order(k);
    for (std::size_t c = 0; c < k; ++c) order[c] = static_cast<int>(c);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return counts[a] > counts[b]; });
    std::vector<int> rank(k);
    for (std::size_t r = 0; r < k; ++r) rank[order[r]] = static_cast<int>(r);
    for (int& a : assign) a = rank[a];
  }
  s.assignments = std::move(assign);

  const std::size_t L = std::max<std::size_t>(k, 1);
  for (std::size_t a = 0; a < L; ++a) {
    s.sticks.push_back(truncatedStickBeta(s.beta, 0.0, 1.0, rng));
    s.probs.push_back(priorCell(categories, rng));
  }
  s.pi = pifromSticks(s.sticks);

  // Conditional posterior for the cells given the seed assignments.
  for (std::size_t a = 0; a < L; ++a) {
    for (std::size_t j = 0; j < J; ++j) {
      std::vector<double> alpha(categories[j], 1.0);
      for (std::size_t i = 0; i < n; ++i)
        if (s.assignments[i] == static_cast<int>(a))
          alpha[data.rows[i][j] - 1] += 1.0;
      s.probs[a][j] = rng.dirichlet(alpha);
    }
  }

  s.slices.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.slices[i] = rng.uniform(0.0, s.pi[s.assignments[i]]) * (1.0 - 1e-12) + 1e-300;
  return s;
}

void gibbsStep(SamplerState& s, const Dataset& data,
               const std::vector<int>& categories, const SamplerConfig& cfg,
               Rng& rng) {
  const std::size_t n = data.size();
  const std::size_t J = categories.size();

  // (1) slice variables
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform(0.0, s.pi[s.assignments[i]]);
    if (u <= 0.0) u = s.pi[s.assignments[i]] * 1e-12;
    s.slices[i] = u;
  }

  // (2) cell probabilities, conjugate Dirichlet update per occupied class
  const std::size_t mActive = s.activeClasses();
  for (std::size_t a = 0; a < mActive; ++a) {
    for (std::size_t j = 0; j < J; ++j) {
      std::vector<double> alpha(categories[j], 1.0);
      for (std::size_t i = 0; i < n; ++i)
        if (s.assignments[i] == static_cast<int>(a))
          alpha[data.rows[i][j] - 1] += 1.0;
      s.probs[a][j] = rng.dirichlet(alpha);
    }
  }

  // (3) sticks, truncated so every pi_{a_i} stays above its slice
  for (std::size_t a = 0; a < mActive; ++a) {
    double prefix = 1.0; // prod_{l<a} (1 - V_l)
    for (std::size_t l = 0; l < a; ++l) prefix *= 1.0 - s.sticks[l];
    double lo = 0.0, hi = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ai = static_cast<std::size_t>(s.assignments[i]);
      if (ai == a) {
        lo = std::max(lo, s.slices[i] / prefix);
      } else if (ai > a) {
        // pi_{a_i} carries the factor (1 - V_a)
        hi = std::min(hi, 1.0 - s.slices[i] * (1.0 - s.sticks[a]) / s.pi[ai]);
      }
    }
    s.sticks[a] = truncatedStickBeta(s.beta, lo, hi, rng);
    s.pi = pifromSticks(s.sticks);
  }
  // guard the slice condition against rounding at the truncation boundary
  for (std::size_t i = 0; i < n; ++i) {
    const double cap = s.pi[s.assignments[i]];
    if (s.slices[i] >= cap) s.slices[i] = cap * (1.0 - 1e-12);
  }

  // (4) stick extension, then assignments over A_i = {a : pi_a > u_i}
  double minSlice = std::numeric_limits<double>::infinity();
  for (double u : s.slices) minSlice = std::min(minSlice, u);
  double leftover = 1.0;
  for (double v : s.sticks) leftover *= 1.0 - v;
  while (leftover >= minSlice) {
    if (s.sticks.size() >= static_cast<std::size_t>(cfg.stickCap))
      throw SamplerFault("stick extension cap " + std::to_string(cfg.stickCap) +
                         " exceeded; " + dumpState(s));
    const double v = truncatedStickBeta(s.beta, 0.0, 1.0, rng);
    s.sticks.push_back(v);
    s.probs.push_back(priorCell(categories, rng));
    leftover *= 1.0 - v;
  }
  s.pi = pifromSticks(s.sticks);

  if (n > 0) {
    const std::size_t L = s.sticks.size();
    // log p_{j a}^{y} per class, then per-observation class weights
    std::vector<std::vector<double>> logRow(L, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < J; ++j)
          acc += std::log(std::max(s.probs[a][j][data.rows[i][j] - 1], kProbFloor));
        logRow[a][i] = acc;
      }
    }
    std::vector<std::size_t> candidates;
    std::vector<double> weights;
    for (std::size_t i = 0; i < n; ++i) {
      candidates.clear();
      weights.clear();
      double maxLog = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < L; ++a) {
        if (s.pi[a] > s.slices[i]) {
          candidates.push_back(a);
          maxLog = std::max(maxLog, logRow[a][i]);
        }
      }
      if (candidates.empty())
        throw SamplerFault("empty slice set for observation " +
                           std::to_string(i + 1) + "; " + dumpState(s));
      for (std::size_t a : candidates)
        weights.push_back(std::exp(logRow[a][i] - maxLog));
      s.assignments[i] = static_cast<int>(candidates[rng.categorical(weights)]);
    }
  }

  // (5) concentration parameter
  const std::size_t mNow = s.activeClasses();
  if (cfg.betaHyperprior) {
    double rate = 1.0;
    for (std::size_t a = 0; a < mNow; ++a) rate -= std::log(1.0 - s.sticks[a]);
    s.beta = rng.gamma(1.0 + static_cast<double>(mNow), rate);
  }

  // Drop unoccupied tail sticks; they are refreshed from the prior when the
  // slice set needs them again.
  if (s.sticks.size() > mNow) {
    s.sticks.resize(mNow);
    s.probs.resize(mNow);
    s.pi = pifromSticks(s.sticks);
  }
}

PosteriorDraws runChain(const Dataset& data, const std::vector<int>& categories,
                        const SamplerConfig& cfg, bool progress) {
  cfg.validate();
  if (data.size() > 0 && data.items() != categories.size())
    throw std::invalid_argument("runChain: category list length mismatch");

  Rng rng = Rng::stream(cfg.seed, {0x5ca1ab1e});
  SamplerState s = initState(data, categories, cfg, rng);
#ifndef NDEBUG
  s.checkInvariants();
#endif

  PosteriorDraws out;
  out.n = data.size();
  out.items = categories.size();
  out.categories = categories;

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    try {
      gibbsStep(s, data, categories, cfg, rng);
    } catch (const SamplerFault& e) {
      throw SamplerFault("iteration " + std::to_string(iter) + ": " + e.what());
    }
#ifndef NDEBUG
    s.checkInvariants();
#endif
    if (progress && iter % 100 == 0)
      std::cerr << "iteration " << iter << "/" << cfg.iterations
                << " classes=" << s.activeClasses() << " beta=" << s.beta
                << "\n";
    if (iter > cfg.burnIn && (iter - cfg.burnIn) % cfg.thinning == 0) {
      Draw d;
      d.iteration = iter;
      const std::size_t m = s.activeClasses();
      d.pi.assign(s.pi.begin(), s.pi.begin() + m);
      d.probs.assign(s.probs.begin(), s.probs.begin() + m);
      out.draws.push_back(std::move(d));
    }
  }
  if (out.draws.empty())
    throw std::invalid_argument("runChain: no draws retained after burn-in");
  return out;
}

} // namespace dcm
