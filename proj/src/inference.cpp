#include "dcm/inference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dcm/rng.hpp"

namespace dcm {

namespace {

double clampProb(double p) { return std::clamp(p, 1e-9, 1.0 - 1e-9); }

double sqDist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

double tvDist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return 0.5 * d;
}

} // namespace

ResponseProbTable PointEstimate::asTable() const {
  const std::size_t J = probs.empty() ? 0 : probs[0].size();
  ResponseProbTable t(J, classes());
  for (std::size_t a = 0; a < classes(); ++a)
    for (std::size_t j = 0; j < J; ++j) t.setProbs(j, a, probs[a][j]);
  return t;
}

PointEstimate posteriorMean(const PosteriorDraws& draws) {
  if (draws.draws.empty())
    throw std::invalid_argument("posteriorMean: no draws");

  std::size_t maxM = 0;
  for (const auto& d : draws.draws) maxM = std::max(maxM, d.pi.size());
  const std::size_t J = draws.items;
  const double R = static_cast<double>(draws.draws.size());

  // Averages draws after mapping class c of draw d to slot slotOf(d)[c].
  // Several classes of one draw may share a slot; their cells are combined
  // weighted by the classes' weights before entering the cross-draw average.
  const auto average = [&](const auto& slotOf) {
    PointEstimate est;
    est.n = draws.n;
    est.pi.assign(maxM, 0.0);
    est.probs.assign(maxM, std::vector<std::vector<double>>(J));
    std::vector<int> present(maxM, 0);
    for (std::size_t a = 0; a < maxM; ++a)
      for (std::size_t j = 0; j < J; ++j)
        est.probs[a][j].assign(draws.categories[j], 0.0);

    std::vector<double> slotPi(maxM);
    std::vector<std::vector<std::vector<double>>> slotProbs(maxM);
    for (std::size_t a = 0; a < maxM; ++a) {
      slotProbs[a].resize(J);
      for (std::size_t j = 0; j < J; ++j)
        slotProbs[a][j].resize(draws.categories[j]);
    }
    for (const auto& d : draws.draws) {
      const std::vector<std::size_t> slots = slotOf(d);
      std::fill(slotPi.begin(), slotPi.end(), 0.0);
      for (std::size_t a = 0; a < maxM; ++a)
        for (std::size_t j = 0; j < J; ++j)
          std::fill(slotProbs[a][j].begin(), slotProbs[a][j].end(), 0.0);
      for (std::size_t c = 0; c < d.pi.size(); ++c) {
        const std::size_t r = slots[c];
        slotPi[r] += d.pi[c];
        for (std::size_t j = 0; j < J; ++j)
          for (std::size_t y = 0; y < slotProbs[r][j].size(); ++y)
            slotProbs[r][j][y] += d.pi[c] * d.probs[c][j][y];
      }
      for (std::size_t r = 0; r < maxM; ++r) {
        if (slotPi[r] <= 0.0) continue;
        est.pi[r] += slotPi[r];
        ++present[r];
        for (std::size_t j = 0; j < J; ++j)
          for (std::size_t y = 0; y < slotProbs[r][j].size(); ++y)
            est.probs[r][j][y] += slotProbs[r][j][y] / slotPi[r];
      }
    }
    for (std::size_t a = 0; a < maxM; ++a) {
      est.pi[a] /= R;
      for (std::size_t j = 0; j < J; ++j) {
        double sum = 0.0;
        for (double& v : est.probs[a][j]) {
          v /= std::max(present[a], 1);
          sum += v;
        }
        if (sum > 0.0)
          for (double& v : est.probs[a][j]) v /= sum; // renormalize
        else
          est.probs[a][j].assign(est.probs[a][j].size(),
                                 1.0 / est.probs[a][j].size());
      }
    }
    return est;
  };

  // Pass 1: average by stick index. Stick positions are usually the stable
  // class identity, but the chain can swap two classes mid-run, which would
  // smear both if left as-is.
  PointEstimate est = average([](const Draw& d) {
    std::vector<std::size_t> slots(d.pi.size());
    std::iota(slots.begin(), slots.end(), 0u);
    return slots;
  });

  // Refinement passes: re-match each draw's classes to the provisional
  // average by nearest cells, heaviest class first, then re-average. This
  // undoes within-chain label swaps without relying on weight order, which
  // is ambiguous when true weights are tied. Classes too small to be
  // resolvable at this sample size (weight below 1/sqrt(n), the same cut
  // truncation applies) are folded into the nearest already-matched class
  // instead of occupying a slot of their own; such transient shards carry
  // mass the mixture prior peeled off a real class.
  const double resolvable =
      1.0 / std::sqrt(std::max<double>(1.0, static_cast<double>(draws.n)));
  for (int pass = 0; pass < 2; ++pass) {
    const PointEstimate ref = est;
    est = average([&](const Draw& d) {
      std::vector<std::size_t> order(d.pi.size());
      std::iota(order.begin(), order.end(), 0u);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                       std::size_t b) {
        return d.pi[a] > d.pi[b];
      });
      std::vector<std::size_t> slots(d.pi.size());
      std::vector<char> used(maxM, 0);
      bool anyUsed = false;
      for (std::size_t c : order) {
        double bestFree = std::numeric_limits<double>::infinity();
        double bestUsed = std::numeric_limits<double>::infinity();
        std::size_t freeSlot = 0, usedSlot = 0;
        for (std::size_t r = 0; r < maxM; ++r) {
          double dist = 0.0;
          for (std::size_t j = 0; j < J; ++j)
            dist += tvDist(d.probs[c][j], ref.probs[r][j]);
          if (used[r]) {
            if (dist < bestUsed) { bestUsed = dist; usedSlot = r; }
          } else {
            if (dist < bestFree) { bestFree = dist; freeSlot = r; }
          }
        }
        const bool shard = d.pi[c] < resolvable;
        if (anyUsed && (shard || !std::isfinite(bestFree))) {
          slots[c] = usedSlot; // merge into the nearest matched class
        } else {
          slots[c] = freeSlot;
          used[freeSlot] = 1;
          anyUsed = true;
        }
      }
      return slots;
    });
  }

  // Merge slots whose cell rows are statistically indistinguishable: the
  // chain can keep one population split across two sticks for a whole run,
  // which injective matching preserves as two near-identical classes. Two
  // estimates of the same class, with weights pi_a and pi_b out of n
  // observations, are expected to differ per cell by about
  // sqrt(2/pi) * sqrt(p(1-p)/(n pi_a) + p(1-p)/(n pi_b)); slots closer than
  // three times that summed scale carry no evidence of being distinct.
  // Distinct latent classes sit far outside this cut (their rows differ by
  // design-level amounts, not sampling noise).
  if (draws.n > 0) {
    const double nObs = static_cast<double>(draws.n);
    const auto noiseScale = [&](std::size_t a, std::size_t b) {
      double tol = 0.0;
      for (std::size_t j = 0; j < J; ++j)
        for (std::size_t y = 0; y < est.probs[a][j].size(); ++y) {
          const double va =
              est.probs[a][j][y] * (1.0 - est.probs[a][j][y]) /
              std::max(nObs * est.pi[a], 1.0);
          const double vb =
              est.probs[b][j][y] * (1.0 - est.probs[b][j][y]) /
              std::max(nObs * est.pi[b], 1.0);
          tol += 0.5 * std::sqrt(2.0 / M_PI) * std::sqrt(va + vb);
        }
      return tol;
    };
    bool merged = true;
    while (merged) {
      merged = false;
      const auto slotDist = [&](std::size_t a, std::size_t b) {
        double dist = 0.0;
        for (std::size_t j = 0; j < J; ++j)
          dist += tvDist(est.probs[a][j], est.probs[b][j]);
        return dist;
      };
      double bestRatio = std::numeric_limits<double>::infinity();
      std::size_t ba = 0, bb = 0;
      for (std::size_t a = 0; a < est.classes(); ++a) {
        if (est.pi[a] <= 0.0) continue;
        for (std::size_t b = a + 1; b < est.classes(); ++b) {
          if (est.pi[b] <= 0.0) continue;
          const double dist = slotDist(a, b);
          // A same-population pair must also stand apart from the rest:
          // closer to each other than half their distance to any third
          // class. When every pair is comparably близко -- poorly separated
          // classes at small n -- nothing is merged.
          double third = std::numeric_limits<double>::infinity();
          for (std::size_t c = 0; c < est.classes(); ++c) {
            if (c == a || c == b || est.pi[c] <= 0.0) continue;
            third = std::min({third, slotDist(a, c), slotDist(b, c)});
          }
          if (dist >= 0.5 * third) continue;
          const double ratio = dist / std::max(noiseScale(a, b), 1e-12);
          if (ratio < bestRatio) { bestRatio = ratio; ba = a; bb = b; }
        }
      }
      if (bestRatio < 3.0) {
        const double wa = est.pi[ba], wb = est.pi[bb];
        for (std::size_t j = 0; j < J; ++j)
          for (std::size_t y = 0; y < est.probs[ba][j].size(); ++y)
            est.probs[ba][j][y] =
                (wa * est.probs[ba][j][y] + wb * est.probs[bb][j][y]) /
                (wa + wb);
        est.pi[ba] = wa + wb;
        est.pi[bb] = 0.0;
        merged = true;
      }
    }
  }

  // Drop slots no draw mapped to or emptied by the merges above.
  PointEstimate out;
  out.n = est.n;
  for (std::size_t a = 0; a < est.classes(); ++a) {
    if (est.pi[a] <= 0.0) continue;
    out.pi.push_back(est.pi[a]);
    out.probs.push_back(est.probs[a]);
  }
  if (out.pi.empty()) return est;
  return out;
}

TruncationResult truncateClasses(const PointEstimate& est, std::size_t n) {
  if (n < 1) throw std::invalid_argument("truncateClasses: n < 1");
  TruncationResult out;
  out.threshold = 1.0 / std::sqrt(static_cast<double>(n));
  out.retained.n = est.n;
  for (std::size_t a = 0; a < est.classes(); ++a) {
    if (est.pi[a] >= out.threshold) {
      out.retained.pi.push_back(est.pi[a]);
      out.retained.probs.push_back(est.probs[a]);
    } else {
      out.discarded.push_back(est.pi[a]);
    }
  }
  if (out.retained.pi.empty())
    throw std::runtime_error("truncateClasses: degenerate fit, no class above " +
                             std::to_string(out.threshold));
  return out;
}

namespace {

struct KMeansResult {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

KMeansResult lloyd(const std::vector<std::vector<double>>& pts,
                   std::vector<std::vector<double>> centers) {
  const std::size_t n = pts.size();
  const std::size_t k = centers.size();
  KMeansResult res;
  res.labels.assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      int arg = res.labels[i];
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sqDist(pts[i], centers[c]);
        if (d < best) {
          best = d;
          arg = static_cast<int>(c);
        }
      }
      if (arg != res.labels[i]) {
        res.labels[i] = arg;
        changed = true;
      }
    }
    std::vector<std::vector<double>> sums(k, std::vector<double>(pts[0].size(), 0.0));
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[res.labels[i]];
      for (std::size_t d = 0; d < pts[i].size(); ++d)
        sums[res.labels[i]][d] += pts[i][d];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0)
        for (std::size_t d = 0; d < sums[c].size(); ++d)
          centers[c][d] = sums[c][d] / counts[c];
    if (!changed && iter > 0) break;
  }
  res.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    res.inertia += sqDist(pts[i], centers[res.labels[i]]);
  return res;
}

std::vector<std::vector<double>>
kppInit(const std::vector<std::vector<double>>& pts, std::size_t k, Rng& rng) {
  std::vector<std::vector<double>> centers;
  centers.push_back(pts[rng.uniformInt(pts.size())]);
  while (centers.size() < k) {
    std::vector<double> d2(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centers) best = std::min(best, sqDist(pts[i], c));
      d2[i] = best;
    }
    double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (total <= 0.0) {
      centers.push_back(pts[rng.uniformInt(pts.size())]);
      continue;
    }
    centers.push_back(pts[rng.categorical(d2)]);
  }
  return centers;
}

/// Average silhouette width over noise-floored distances: any distance below
/// the floor counts as an exact tie. Points in singleton clusters take
/// a(i) = 0, so a clustering that is pure up to the floor scores 1, while a
/// singleton split off a group within the floor has b = 0 and scores 0.
double avgSilhouette(const std::vector<std::vector<double>>& pts,
                     const std::vector<int>& labels, int k, double floor) {
  const std::size_t n = pts.size();
  const auto dist = [&](std::size_t i, std::size_t j) {
    return std::max(0.0, std::sqrt(sqDist(pts[i], pts[j])) - floor);
  };
  std::vector<int> counts(k, 0);
  for (int l : labels) ++counts[l];
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0.0;
    if (counts[labels[i]] > 1) {
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && labels[j] == labels[i]) a += dist(i, j);
      a /= counts[labels[i]] - 1;
    }
    double b = std::numeric_limits<double>::max();
    for (int c = 0; c < k; ++c) {
      if (c == labels[i] || counts[c] == 0) continue;
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (labels[j] == c) sum += dist(i, j);
      b = std::min(b, sum / counts[c]);
    }
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

std::size_t distinctCount(const std::vector<std::vector<double>>& pts) {
  std::set<std::vector<double>> seen;
  for (const auto& p : pts) {
    std::vector<double> r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = std::round(p[i] * 1e9);
    seen.insert(std::move(r));
  }
  return seen.size();
}

Partition labelsToPartition(const std::vector<int>& labels, int k) {
  Partition blocks(k);
  for (std::size_t i = 0; i < labels.size(); ++i)
    blocks[labels[i]].push_back(static_cast<int>(i));
  blocks.erase(std::remove_if(blocks.begin(), blocks.end(),
                              [](const auto& b) { return b.empty(); }),
               blocks.end());
  return canonicalPartition(std::move(blocks));
}

} // namespace

Partition clusterPartialInfo(const PointEstimate& est, std::size_t j,
                             const ClusterOptions& opts) {
  const std::size_t M = est.classes();
  std::vector<std::vector<double>> pts;
  pts.reserve(M);
  for (std::size_t a = 0; a < M; ++a) pts.push_back(est.probs[a][j]);

  std::vector<int> all(M);
  std::iota(all.begin(), all.end(), 0);
  if (M < 2) return {all};

  double maxDist = 0.0;
  for (std::size_t a = 0; a < M; ++a)
    for (std::size_t b = a + 1; b < M; ++b)
      maxDist = std::max(maxDist, std::sqrt(sqDist(pts[a], pts[b])));

  // Estimated cells carry binomial noise of order n^(-1/2); distances on
  // that scale (or below a tenth of the item's spread) are ties, not
  // structure. Noiseless inputs (n = 0) keep exact comparisons.
  const double base =
      opts.noiseFloor >= 0.0
          ? opts.noiseFloor
          : (est.n > 0 ? 2.0 / std::sqrt(static_cast<double>(est.n)) : 0.0);
  const double floor = base > 0.0 ? std::max(base, 0.1 * maxDist) : 0.0;

  if (maxDist < std::max(opts.flatGuard, floor))
    return {all}; // uninformative item

  const std::size_t distinct = distinctCount(pts);
  // The silhouette is degenerate at k = M (all singletons), so the scan
  // stops at M-1 except in the two-class case.
  const std::size_t kMax =
      std::min({static_cast<std::size_t>(opts.maxClusters), distinct,
                M == 2 ? M : M - 1});

  struct Candidate {
    int k = 0;
    double score = 0.0;
    std::vector<int> labels;
  };
  std::vector<Candidate> candidates;
  for (std::size_t k = 2; k <= kMax; ++k) {
    Rng rng = Rng::stream(0xc1a55e5u, {j, k}); // fixed seed, clustering is deterministic
    KMeansResult best;
    for (int restart = 0; restart < 8; ++restart) {
      auto r = lloyd(pts, kppInit(pts, k, rng));
      if (r.inertia < best.inertia) best = r;
    }
    if (k == distinct) {
      // seed one run with the distinct values themselves; exact-duplicate
      // inputs then always reach the pure clustering
      std::vector<std::vector<double>> centers;
      for (const auto& p : pts)
        if (std::find(centers.begin(), centers.end(), p) == centers.end())
          centers.push_back(p);
      if (centers.size() == k) {
        auto r = lloyd(pts, centers);
        if (r.inertia < best.inertia) best = r;
      }
    }
    candidates.push_back({static_cast<int>(k),
                          avgSilhouette(pts, best.labels, static_cast<int>(k), floor),
                          best.labels});
  }
  if (candidates.empty()) return {all};
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) top = std::max(top, c.score);
  // smallest k within tolerance of the best score: near-ties at the top are
  // common once sub-noise distances collapse, and the coarser partition is
  // the one the noise actually supports
  for (const auto& c : candidates)
    if (c.score >= top - opts.kTolerance)
      return labelsToPartition(c.labels, c.k);
  return {all};
}

Partition mergePartialInfoThreshold(const PointEstimate& est, std::size_t j,
                                    std::size_t n) {
  const std::size_t M = est.classes();
  const double threshold = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<int> parent(M);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t a = 0; a < M; ++a)
    for (std::size_t b = a + 1; b < M; ++b)
      if (sqDist(est.probs[a][j], est.probs[b][j]) <= threshold)
        parent[find(static_cast<int>(b))] = find(static_cast<int>(a));
  Partition blocks;
  std::vector<int> blockOf(M, -1);
  for (std::size_t a = 0; a < M; ++a) {
    const int root = find(static_cast<int>(a));
    if (blockOf[root] < 0) {
      blockOf[root] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[blockOf[root]].push_back(static_cast<int>(a));
  }
  return canonicalPartition(std::move(blocks));
}

LabelAlignment alignLabels(const PointEstimate& est,
                           const ResponseProbTable& truth) {
  const std::size_t mEst = est.classes();
  const std::size_t mTrue = truth.classes();
  if (mEst > mTrue)
    throw std::invalid_argument("alignLabels: more estimated classes than true");
  const std::size_t J = truth.items();

  // Hungarian algorithm with potentials, rows = estimated classes.
  const std::size_t nRows = mEst, nCols = mTrue;
  std::vector<std::vector<double>> cost(nRows, std::vector<double>(nCols, 0.0));
  for (std::size_t a = 0; a < nRows; ++a)
    for (std::size_t b = 0; b < nCols; ++b)
      for (std::size_t j = 0; j < J; ++j)
        cost[a][b] += tvDist(est.probs[a][j], truth.probs(j, b));

  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> u(nRows + 1, 0.0), v(nCols + 1, 0.0);
  std::vector<int> colMatch(nCols + 1, 0); // 1-based row matched to column
  std::vector<int> way(nCols + 1, 0);
  for (std::size_t i = 1; i <= nRows; ++i) {
    colMatch[0] = static_cast<int>(i);
    std::size_t j0 = 0;
    std::vector<double> minv(nCols + 1, INF);
    std::vector<char> used(nCols + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = colMatch[j0];
      double delta = INF;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= nCols; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = static_cast<int>(j0);
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= nCols; ++j) {
        if (used[j]) {
          u[colMatch[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (colMatch[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      colMatch[j0] = colMatch[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  LabelAlignment out;
  out.toTrue.assign(nRows, -1);
  for (std::size_t j = 1; j <= nCols; ++j)
    if (colMatch[j] != 0) out.toTrue[colMatch[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t a = 0; a < nRows; ++a) out.cost += cost[a][out.toTrue[a]];
  return out;
}

double partialInfoAccuracy(const std::vector<Partition>& estimated,
                           const std::vector<Partition>& truth,
                           const LabelAlignment& alignment,
                           std::size_t trueClassCount) {
  if (estimated.size() != truth.size())
    throw std::invalid_argument("partialInfoAccuracy: item count mismatch");
  if (estimated.empty()) return 0.0;
  int correct = 0;
  for (std::size_t j = 0; j < estimated.size(); ++j) {
    Partition mapped;
    bool coversAll = alignment.toTrue.size() == trueClassCount;
    for (const auto& block : estimated[j]) {
      std::vector<int> m;
      for (int a : block) m.push_back(alignment.toTrue[a]);
      mapped.push_back(std::move(m));
    }
    if (coversAll &&
        canonicalPartition(mapped) == canonicalPartition(truth[j]))
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(estimated.size());
}

namespace {

std::vector<int> deriveQRow(const Partition& partition,
                            const std::vector<Profile>& coding,
                            std::size_t K) {
  const std::size_t M = coding.size();
  std::vector<int> blockOf(M, -1);
  for (std::size_t b = 0; b < partition.size(); ++b)
    for (int a : partition[b]) blockOf[a] = static_cast<int>(b);
  std::vector<int> qrow(K, 0);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t b = a + 1; b < M; ++b) {
      if (blockOf[a] == blockOf[b]) continue;
      int diffAt = -1, diffs = 0;
      for (std::size_t k = 0; k < K; ++k) {
        if (coding[a][k] != coding[b][k]) {
          ++diffs;
          diffAt = static_cast<int>(k);
        }
      }
      if (diffs == 1) qrow[diffAt] = 1;
    }
  }
  return qrow;
}

/// True iff classes with equal profiles on the q-row support always share a
/// block.
bool rowConsistent(const Partition& partition, const std::vector<Profile>& coding,
                   const std::vector<int>& qrow) {
  const std::size_t M = coding.size();
  std::vector<int> blockOf(M, -1);
  for (std::size_t b = 0; b < partition.size(); ++b)
    for (int a : partition[b]) blockOf[a] = static_cast<int>(b);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t b = a + 1; b < M; ++b) {
      if (blockOf[a] == blockOf[b]) continue;
      bool sameRestricted = true;
      for (std::size_t k = 0; k < qrow.size(); ++k)
        if (qrow[k] == 1 && coding[a][k] != coding[b][k]) sameRestricted = false;
      if (sameRestricted) return false; // separated but indistinguishable
    }
  }
  return true;
}

} // namespace

QReconstruction reconstructQ(const std::vector<Partition>& partitions,
                             const AttributeSpace& space,
                             const std::vector<Profile>& coding) {
  QReconstruction out;
  const std::size_t K = space.attributes();
  for (std::size_t j = 0; j < partitions.size(); ++j) {
    auto qrow = deriveQRow(partitions[j], coding, K);
    if (partitions[j].size() == 1)
      out.uninformativeItems.push_back(static_cast<int>(j));
    else if (!rowConsistent(partitions[j], coding, qrow))
      out.inconsistentItems.push_back(static_cast<int>(j));
    out.rows.push_back(std::move(qrow));
  }
  return out;
}

QMatrix QReconstruction::toQMatrix() const {
  if (!inconsistentItems.empty() || !uninformativeItems.empty()) {
    std::ostringstream os;
    os << "Q reconstruction incomplete;";
    if (!uninformativeItems.empty()) {
      os << " uninformative items:";
      for (int j : uninformativeItems) os << " " << j + 1;
    }
    if (!inconsistentItems.empty()) {
      os << " inconsistent items:";
      for (int j : inconsistentItems) os << " " << j + 1;
    }
    throw std::runtime_error(os.str());
  }
  return QMatrix(rows);
}

std::vector<Profile> searchCoding(const std::vector<Partition>& partitions,
                                  const AttributeSpace& space,
                                  std::size_t classCount) {
  const std::size_t M = space.classCount();
  if (classCount > 8)
    throw std::invalid_argument(
        "searchCoding: exhaustive search supports at most 8 classes; supply a coding");
  if (classCount > M)
    throw std::invalid_argument("searchCoding: more classes than profiles");

  std::vector<int> bestViolations;
  std::vector<Profile> best;
  std::vector<std::size_t> chosen;
  std::vector<bool> used(M, false);

  std::function<bool()> recurse = [&]() -> bool {
    if (chosen.size() == classCount) {
      std::vector<Profile> coding;
      for (std::size_t idx : chosen) coding.push_back(space.profileAt(idx));
      std::vector<int> violations;
      for (std::size_t j = 0; j < partitions.size(); ++j) {
        const auto qrow = deriveQRow(partitions[j], coding, space.attributes());
        if (!rowConsistent(partitions[j], coding, qrow))
          violations.push_back(static_cast<int>(j));
      }
      if (best.empty() || violations.size() < bestViolations.size()) {
        best = coding;
        bestViolations = violations;
      }
      return violations.empty();
    }
    for (std::size_t idx = 0; idx < M; ++idx) {
      if (used[idx]) continue;
      used[idx] = true;
      chosen.push_back(idx);
      if (recurse()) return true;
      chosen.pop_back();
      used[idx] = false;
    }
    return false;
  };

  if (recurse()) return best;
  std::ostringstream os;
  os << "no class-to-profile coding is consistent with the partitions; best "
        "coding still violates items:";
  for (int j : bestViolations) os << " " << j + 1;
  throw std::runtime_error(os.str());
}

namespace {

Eigen::VectorXd leastSquares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             std::size_t item) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols())
    throw std::runtime_error("backSolveParams: singular design for item " +
                             std::to_string(item + 1));
  return qr.solve(y);
}

} // namespace

BackSolveResult backSolveParams(const PointEstimate& est, const QMatrix& q,
                                Family family,
                                const std::vector<Profile>& profiles) {
  const std::size_t J = q.items();
  const std::size_t K = q.attributes();
  const std::size_t M = est.classes();
  if (profiles.size() != M)
    throw std::invalid_argument("backSolveParams: profile count mismatch");

  // positive-response probabilities per (item, class)
  std::vector<std::vector<double>> p(J, std::vector<double>(M));
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t a = 0; a < M; ++a) p[j][a] = clampProb(est.probs[a][j][1]);

  BackSolveResult out;
  std::vector<std::vector<double>> rebuilt(J, std::vector<double>(M));

  switch (family) {
    case Family::Dina:
    case Family::Dino: {
      std::vector<double> slip(J), guess(J);
      for (std::size_t j = 0; j < J; ++j) {
        double capSum = 0.0, incSum = 0.0;
        int capN = 0, incN = 0;
        for (std::size_t a = 0; a < M; ++a) {
          const int xi = family == Family::Dina
                             ? idealResponseDina(profiles[a], q.row(j))
                             : idealResponseDino(profiles[a], q.row(j));
          (xi ? capSum : incSum) += p[j][a];
          ++(xi ? capN : incN);
        }
        if (capN == 0 || incN == 0)
          throw std::runtime_error("backSolveParams: singular design for item " +
                                   std::to_string(j + 1));
        slip[j] = clampProb(1.0 - capSum / capN);
        guess[j] = clampProb(incSum / incN);
        for (std::size_t a = 0; a < M; ++a) {
          const int xi = family == Family::Dina
                             ? idealResponseDina(profiles[a], q.row(j))
                             : idealResponseDino(profiles[a], q.row(j));
          rebuilt[j][a] = xi ? 1.0 - slip[j] : guess[j];
        }
      }
      if (family == Family::Dina)
        out.params = DinaParams{slip, guess};
      else
        out.params = DinoParams{slip, guess};
      break;
    }
    case Family::Nida: {
      NidaParams params;
      params.slip.assign(J, std::vector<double>(K, 0.5));
      params.guess.assign(J, std::vector<double>(K, 0.5));
      for (std::size_t j = 0; j < J; ++j) {
        std::vector<std::size_t> loaded;
        for (std::size_t k = 0; k < K; ++k)
          if (q(j, k) == 1) loaded.push_back(k);
        Eigen::MatrixXd X(M, 2 * loaded.size());
        Eigen::VectorXd y(M);
        for (std::size_t a = 0; a < M; ++a) {
          y(a) = std::log(p[j][a]);
          for (std::size_t c = 0; c < loaded.size(); ++c) {
            X(a, 2 * c) = profiles[a][loaded[c]];
            X(a, 2 * c + 1) = 1 - profiles[a][loaded[c]];
          }
        }
        const auto sol = leastSquares(X, y, j);
        for (std::size_t c = 0; c < loaded.size(); ++c) {
          params.slip[j][loaded[c]] = clampProb(1.0 - std::exp(sol(2 * c)));
          params.guess[j][loaded[c]] = clampProb(std::exp(sol(2 * c + 1)));
        }
        for (std::size_t a = 0; a < M; ++a) {
          double v = 1.0;
          for (std::size_t k : loaded)
            v *= profiles[a][k] ? 1.0 - params.slip[j][k] : params.guess[j][k];
          rebuilt[j][a] = v;
        }
      }
      out.params = std::move(params);
      break;
    }
    case Family::NcRum: {
      NcRumParams params;
      params.phi.assign(J, 0.5);
      params.penalty.assign(J, std::vector<double>(K, 0.5));
      for (std::size_t j = 0; j < J; ++j) {
        std::vector<std::size_t> loaded;
        for (std::size_t k = 0; k < K; ++k)
          if (q(j, k) == 1) loaded.push_back(k);
        Eigen::MatrixXd X(M, 1 + loaded.size());
        Eigen::VectorXd y(M);
        for (std::size_t a = 0; a < M; ++a) {
          y(a) = std::log(p[j][a]);
          X(a, 0) = 1.0;
          for (std::size_t c = 0; c < loaded.size(); ++c)
            X(a, 1 + c) = 1 - profiles[a][loaded[c]];
        }
        const auto sol = leastSquares(X, y, j);
        params.phi[j] = clampProb(std::exp(sol(0)));
        for (std::size_t c = 0; c < loaded.size(); ++c)
          params.penalty[j][loaded[c]] = clampProb(std::exp(sol(1 + c)));
        for (std::size_t a = 0; a < M; ++a) {
          double v = params.phi[j];
          for (std::size_t k : loaded)
            if (!profiles[a][k]) v *= params.penalty[j][k];
          rebuilt[j][a] = v;
        }
      }
      out.params = std::move(params);
      break;
    }
    case Family::Crum: {
      CrumParams params;
      params.intercept.assign(J, 0.0);
      params.slope.assign(J, std::vector<double>(K, 0.0));
      for (std::size_t j = 0; j < J; ++j) {
        std::vector<std::size_t> loaded;
        for (std::size_t k = 0; k < K; ++k)
          if (q(j, k) == 1) loaded.push_back(k);
        Eigen::MatrixXd X(M, 1 + loaded.size());
        Eigen::VectorXd y(M);
        for (std::size_t a = 0; a < M; ++a) {
          y(a) = std::log(p[j][a] / (1.0 - p[j][a]));
          X(a, 0) = 1.0;
          for (std::size_t c = 0; c < loaded.size(); ++c)
            X(a, 1 + c) = profiles[a][loaded[c]];
        }
        const auto sol = leastSquares(X, y, j);
        params.intercept[j] = sol(0);
        for (std::size_t c = 0; c < loaded.size(); ++c)
          params.slope[j][loaded[c]] = sol(1 + c);
        for (std::size_t a = 0; a < M; ++a) {
          double x = params.intercept[j];
          for (std::size_t k : loaded)
            if (profiles[a][k]) x += params.slope[j][k];
          rebuilt[j][a] = 1.0 / (1.0 + std::exp(-x));
        }
      }
      out.params = std::move(params);
      break;
    }
    case Family::Lcdm: {
      LcdmParams params;
      for (std::size_t j = 0; j < J; ++j) {
        std::vector<std::uint32_t> masks; // nonempty subsets of loaded attrs
        std::uint32_t loadedMask = 0;
        for (std::size_t k = 0; k < K; ++k)
          if (q(j, k) == 1) loadedMask |= 1u << k;
        for (std::uint32_t m = loadedMask; m > 0; m = (m - 1) & loadedMask)
          masks.push_back(m);
        std::sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
          const int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
          return pa != pb ? pa < pb : a < b;
        });
        Eigen::MatrixXd X(M, 1 + masks.size());
        Eigen::VectorXd y(M);
        for (std::size_t a = 0; a < M; ++a) {
          y(a) = std::log(p[j][a] / (1.0 - p[j][a]));
          X(a, 0) = 1.0;
          for (std::size_t c = 0; c < masks.size(); ++c) {
            double active = 1.0;
            for (std::size_t k = 0; k < K; ++k)
              if ((masks[c] >> k) & 1u)
                active *= profiles[a][k];
            X(a, 1 + c) = active;
          }
        }
        const auto sol = leastSquares(X, y, j);
        LcdmItem item;
        item.intercept = sol(0);
        for (std::size_t c = 0; c < masks.size(); ++c)
          item.terms.emplace_back(masks[c], sol(1 + c));
        for (std::size_t a = 0; a < M; ++a) {
          double x = item.intercept;
          for (std::size_t c = 0; c < masks.size(); ++c)
            x += sol(1 + c) * X(a, 1 + c);
          rebuilt[j][a] = 1.0 / (1.0 + std::exp(-x));
        }
        params.items.push_back(std::move(item));
      }
      out.params = std::move(params);
      break;
    }
    default:
      throw std::invalid_argument("backSolveParams: unsupported family");
  }

  double ss = 0.0;
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t a = 0; a < M; ++a) {
      const double diff = rebuilt[j][a] - p[j][a];
      ss += diff * diff;
    }
  out.residualNorm = std::sqrt(ss);
  return out;
}

} // namespace dcm
