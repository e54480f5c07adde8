#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "dcm/types.hpp"

namespace dcm {

/// Three disjoint, nonempty item subsets (0-based indices).
struct ItemPartition {
  std::vector<int> subset1, subset2, subset3;
  void validate(std::size_t J) const;
};

struct VerdictCondition {
  std::string name;
  bool pass = false;
  std::string detail; // certificate or failure diagnostic
};

/// Outcome of one sufficient-condition check. A FAIL means "condition not
/// verified", never "model proven nonidentifiable".
struct IdentifiabilityVerdict {
  std::string theorem;
  bool pass = false;
  std::vector<VerdictCondition> conditions;
  std::string summary() const;
};

/// T-matrix of an item subset: rows are response patterns (mixed-radix, last
/// item fastest), columns are classes; entry = prod of per-item cell probs.
/// Every column sums to 1.
Eigen::MatrixXd buildTMatrix(const ResponseProbTable& table,
                             const std::vector<int>& subset,
                             std::size_t rowCap = (1u << 20));

/// Singular values above 1e-10 of the largest one; 0 for the zero matrix.
int numericRank(const Eigen::MatrixXd& m, double tol = 1e-10);

// The theorem checkers treat the table's class set as the model's class set:
// callers wanting a support-restricted model restrict the table and weights
// first (ResponseProbTable::restrictedTo).

IdentifiabilityVerdict checkTheorem1(const ResponseProbTable& table,
                                     const MixtureWeights& pi,
                                     const ItemPartition& partition);

IdentifiabilityVerdict checkTheorem2(const ResponseProbTable& table,
                                     const MixtureWeights& pi,
                                     const ItemPartition& partition);

IdentifiabilityVerdict checkTheorem3(const ResponseProbTable& table,
                                     const MixtureWeights& pi,
                                     const ItemPartition& partition);

IdentifiabilityVerdict checkTheorem4(const ResponseProbTable& table,
                                     const MixtureWeights& pi, const QMatrix& q,
                                     const AttributeSpace& space);

/// Passes iff every attribute has at least three single-attribute rows in Q
/// (three disjoint K x K identity submatrices after rearrangement).
IdentifiabilityVerdict checkCorollary1(const QMatrix& q);

/// Searches for an item partition passing the full-rank check: round-robin
/// seed, then single-item moves. Returns the first passing partition, or the
/// best-rank one with a fail verdict.
std::pair<ItemPartition, IdentifiabilityVerdict>
searchPartition(const ResponseProbTable& table, const MixtureWeights& pi);

} // namespace dcm
