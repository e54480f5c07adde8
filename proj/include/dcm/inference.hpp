#pragma once

#include <cstddef>
#include <vector>

#include "dcm/models.hpp"
#include "dcm/sampler.hpp"
#include "dcm/types.hpp"

namespace dcm {

/// Posterior-mean point estimate over the materialized class range.
struct PointEstimate {
  std::vector<double> pi;                               // pi-hat per class
  std::vector<std::vector<std::vector<double>>> probs;  // [class][item]
  std::size_t n = 0;                                    // sample size behind it

  std::size_t classes() const { return pi.size(); }
  ResponseProbTable asTable() const;
};

/// Classes are matched across draws before averaging: a first pass keyed on
/// stick index, then refinement passes that re-match each draw's classes to
/// the provisional average by nearest response cells (heaviest class first).
/// Draw classes with weight below 1/sqrt(n) are folded, weight-proportional,
/// into the nearest matched class rather than averaged on their own. After
/// averaging, classes whose rows differ by less than three times the
/// sampling-noise scale implied by their weights are merged: such pairs are
/// two estimates of one population that the chain kept on separate sticks.
/// Emptied slots are dropped, and averaged rows are renormalized.
PointEstimate posteriorMean(const PosteriorDraws& draws);

struct TruncationResult {
  PointEstimate retained;          // classes with pi-hat >= n^(-1/2)
  std::vector<double> discarded;   // weights of the dropped classes
  double threshold = 0.0;
};

TruncationResult truncateClasses(const PointEstimate& est, std::size_t n);

struct ClusterOptions {
  int maxClusters = 8;
  double flatGuard = 0.02; // max pairwise distance below which the item is
                           // treated as uninformative (single block)
  double noiseFloor = -1.0; // distances below this count as ties when scoring
                            // silhouettes; negative means derive 2/sqrt(n)
                            // from the estimate (0 when it carries no n)
  double kTolerance = 0.04; // prefer the smallest k scoring within this of
                            // the best silhouette
};

/// K-means over the per-class cell vectors of item j, k chosen by average
/// silhouette width.
Partition clusterPartialInfo(const PointEstimate& est, std::size_t j,
                             const ClusterOptions& opts = {});

/// Links class pairs with d_j = sum_y (diff)^2 <= n^(-1/2) and returns
/// connected components.
Partition mergePartialInfoThreshold(const PointEstimate& est, std::size_t j,
                                    std::size_t n);

/// Injective map from estimated class indices to true class indices.
struct LabelAlignment {
  std::vector<int> toTrue; // toTrue[estimated] = true class
  double cost = 0.0;       // sum of matched total-variation distances
};

/// Minimum-cost bipartite assignment; cost(a-hat, a) = sum_j TV distance
/// between the estimated and true cells.
LabelAlignment alignLabels(const PointEstimate& est,
                           const ResponseProbTable& truth);

/// Fraction of items whose aligned estimated partition equals the true one
/// exactly. The estimated partitions live on estimated class indices; the
/// true partitions on true class indices.
double partialInfoAccuracy(const std::vector<Partition>& estimated,
                           const std::vector<Partition>& truth,
                           const LabelAlignment& alignment,
                           std::size_t trueClassCount);

struct QReconstruction {
  std::vector<std::vector<int>> rows;   // candidate q-rows (may be all-zero)
  std::vector<int> uninformativeItems;  // single-block items, flagged
  std::vector<int> inconsistentItems;   // partition not explained by any q-row

  /// Throws if any row is all-zero or inconsistent.
  QMatrix toQMatrix() const;
};

/// q_jk = 1 iff attribute k separates some class pair that item j's
/// partition separates and whose profiles differ only in coordinate k.
QReconstruction reconstructQ(const std::vector<Partition>& partitions,
                             const AttributeSpace& space,
                             const std::vector<Profile>& coding);

/// Exhaustive search (class count <= 8) for a class-to-profile injection
/// consistent with the partitions. Throws, listing violating items, when no
/// coding explains them.
std::vector<Profile> searchCoding(const std::vector<Partition>& partitions,
                                  const AttributeSpace& space,
                                  std::size_t classCount);

struct BackSolveResult {
  ModelParams params;
  double residualNorm = 0.0; // || rebuilt p - input p ||_2 over loaded cells
};

/// Per-item least-squares inversion of the family formula on the positive
/// response probabilities, given the profile of each (estimated) class.
BackSolveResult backSolveParams(const PointEstimate& est, const QMatrix& q,
                                Family family,
                                const std::vector<Profile>& profiles);

} // namespace dcm
