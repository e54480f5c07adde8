#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcm {

/// Attribute profile: one level per attribute, 0-based (0 = absent for
/// binary attributes).
using Profile = std::vector<int>;

/// Partition of class indices into disjoint blocks. Canonical form: elements
/// sorted within blocks, blocks ordered by smallest element.
using Partition = std::vector<std::vector<int>>;

Partition canonicalPartition(Partition p);

/// Binary J x K item-attribute loading design. Rows are items, columns are
/// attributes; q_jk = 1 means item j may depend on attribute k.
class QMatrix {
public:
  QMatrix(std::size_t items, std::size_t attributes);
  QMatrix(std::vector<std::vector<int>> rows);

  std::size_t items() const { return J_; }
  std::size_t attributes() const { return K_; }

  int operator()(std::size_t j, std::size_t k) const { return entries_[j][k]; }
  const std::vector<int>& row(std::size_t j) const { return entries_[j]; }

  void set(std::size_t j, std::size_t k, int v);

  /// Throws if any entry is not 0/1 or some row is all-zero.
  void validate() const;

private:
  std::size_t J_, K_;
  std::vector<std::vector<int>> entries_;
};

/// Discrete latent space: K attributes with levels d_1..d_K (d_k >= 2).
/// Classes are enumerated in mixed-radix ascending order with the last
/// attribute varying fastest; this fixes the column order of every table.
class AttributeSpace {
public:
  explicit AttributeSpace(std::vector<int> levels);

  static AttributeSpace binary(std::size_t attributes);

  std::size_t attributes() const { return levels_.size(); }
  int level(std::size_t k) const { return levels_[k]; }
  bool isBinary() const;

  /// Total class count M = prod d_k. Construction rejects M > 2^20.
  std::size_t classCount() const { return M_; }

  Profile profileAt(std::size_t index) const;
  std::size_t indexOf(const Profile& profile) const;

private:
  std::vector<int> levels_;
  std::size_t M_;
};

/// Per-item response category counts k_j >= 2. The pattern count
/// kappa = prod k_j may overflow; it is computed on demand.
class ResponseSpec {
public:
  explicit ResponseSpec(std::vector<int> categories);

  static ResponseSpec binary(std::size_t items);

  std::size_t items() const { return categories_.size(); }
  int categories(std::size_t j) const { return categories_[j]; }

  /// Pattern count over a subset of items; throws if it exceeds cap.
  std::size_t patternCount(const std::vector<int>& subset,
                           std::size_t cap = (1u << 20)) const;

private:
  std::vector<int> categories_;
};

/// The common currency between models, T-matrices, sampler output, and
/// clustering: for each item j and class index a, a categorical distribution
/// over the k_j response categories.
class ResponseProbTable {
public:
  ResponseProbTable(std::size_t items, std::size_t classes);

  std::size_t items() const { return J_; }
  std::size_t classes() const { return M_; }

  const std::vector<double>& probs(std::size_t j, std::size_t a) const {
    return cells_[j * M_ + a];
  }
  void setProbs(std::size_t j, std::size_t a, std::vector<double> p);

  int categories(std::size_t j) const {
    return static_cast<int>(cells_[j * M_].size());
  }

  /// Checks every cell is a probability vector: entries in [0,1], sum within
  /// 1e-12 of 1.
  void validate() const;

  /// Keep only the given class columns (in the given order).
  ResponseProbTable restrictedTo(const std::vector<std::size_t>& classes) const;

private:
  std::size_t J_, M_;
  std::vector<std::vector<double>> cells_;
};

/// Latent class proportions. Zero weights are allowed (designs may exclude
/// profiles from the support).
class MixtureWeights {
public:
  explicit MixtureWeights(std::vector<double> weights);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t a) const { return w_[a]; }
  const std::vector<double>& weights() const { return w_; }

  std::vector<std::size_t> support() const;

private:
  std::vector<double> w_;
};

} // namespace dcm
