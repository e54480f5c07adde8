#include "dcm/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dcm {

Partition canonicalPartition(Partition p) {
  for (auto& block : p) std::sort(block.begin(), block.end());
  std::sort(p.begin(), p.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return p;
}

QMatrix::QMatrix(std::size_t items, std::size_t attributes)
    : J_(items), K_(attributes),
      entries_(items, std::vector<int>(attributes, 0)) {}

QMatrix::QMatrix(std::vector<std::vector<int>> rows)
    : J_(rows.size()), K_(rows.empty() ? 0 : rows[0].size()),
      entries_(std::move(rows)) {
  for (const auto& r : entries_)
    if (r.size() != K_) throw std::invalid_argument("QMatrix: ragged rows");
  validate();
}

void QMatrix::set(std::size_t j, std::size_t k, int v) {
  if (v != 0 && v != 1) throw std::invalid_argument("QMatrix: entry not 0/1");
  entries_[j][k] = v;
}

void QMatrix::validate() const {
  for (std::size_t j = 0; j < J_; ++j) {
    int loaded = 0;
    for (std::size_t k = 0; k < K_; ++k) {
      if (entries_[j][k] != 0 && entries_[j][k] != 1)
        throw std::invalid_argument("QMatrix: entry not 0/1 at item " +
                                    std::to_string(j + 1));
      loaded += entries_[j][k];
    }
    if (loaded == 0)
      throw std::invalid_argument("QMatrix: item " + std::to_string(j + 1) +
                                  " loads on no attribute");
  }
}

AttributeSpace::AttributeSpace(std::vector<int> levels)
    : levels_(std::move(levels)) {
  if (levels_.empty())
    throw std::invalid_argument("AttributeSpace: no attributes");
  std::size_t m = 1;
  for (int d : levels_) {
    if (d < 2) throw std::invalid_argument("AttributeSpace: level count < 2");
    m *= static_cast<std::size_t>(d);
    if (m > (1u << 20))
      throw std::invalid_argument("AttributeSpace: class count exceeds 2^20");
  }
  M_ = m;
}

AttributeSpace AttributeSpace::binary(std::size_t attributes) {
  return AttributeSpace(std::vector<int>(attributes, 2));
}

bool AttributeSpace::isBinary() const {
  return std::all_of(levels_.begin(), levels_.end(),
                     [](int d) { return d == 2; });
}

Profile AttributeSpace::profileAt(std::size_t index) const {
  if (index >= M_) throw std::out_of_range("AttributeSpace: class index");
  Profile p(levels_.size());
  for (std::size_t k = levels_.size(); k-- > 0;) {
    p[k] = static_cast<int>(index % levels_[k]);
    index /= levels_[k];
  }
  return p;
}

std::size_t AttributeSpace::indexOf(const Profile& profile) const {
  if (profile.size() != levels_.size())
    throw std::invalid_argument("AttributeSpace: profile length mismatch");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (profile[k] < 0 || profile[k] >= levels_[k])
      throw std::out_of_range("AttributeSpace: profile level out of range");
    idx = idx * levels_[k] + profile[k];
  }
  return idx;
}

ResponseSpec::ResponseSpec(std::vector<int> categories)
    : categories_(std::move(categories)) {
  for (int k : categories_)
    if (k < 2) throw std::invalid_argument("ResponseSpec: k_j < 2");
}

ResponseSpec ResponseSpec::binary(std::size_t items) {
  return ResponseSpec(std::vector<int>(items, 2));
}

std::size_t ResponseSpec::patternCount(const std::vector<int>& subset,
                                       std::size_t cap) const {
  std::size_t kappa = 1;
  for (int j : subset) {
    kappa *= static_cast<std::size_t>(categories_[j]);
    if (kappa > cap)
      throw std::length_error("pattern count exceeds cap " +
                              std::to_string(cap) + " (kappa >= " +
                              std::to_string(kappa) + ")");
  }
  return kappa;
}

ResponseProbTable::ResponseProbTable(std::size_t items, std::size_t classes)
    : J_(items), M_(classes), cells_(items * classes) {}

void ResponseProbTable::setProbs(std::size_t j, std::size_t a,
                                 std::vector<double> p) {
  cells_[j * M_ + a] = std::move(p);
}

void ResponseProbTable::validate() const {
  for (std::size_t j = 0; j < J_; ++j) {
    for (std::size_t a = 0; a < M_; ++a) {
      const auto& p = probs(j, a);
      if (p.size() < 2)
        throw std::invalid_argument("ResponseProbTable: cell with < 2 categories");
      double sum = 0.0;
      for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0))
          throw std::invalid_argument("ResponseProbTable: entry outside [0,1]");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument(
            "ResponseProbTable: cell does not sum to 1 (item " +
            std::to_string(j + 1) + ", class " + std::to_string(a + 1) + ")");
    }
  }
}

ResponseProbTable
ResponseProbTable::restrictedTo(const std::vector<std::size_t>& classes) const {
  ResponseProbTable out(J_, classes.size());
  for (std::size_t j = 0; j < J_; ++j)
    for (std::size_t a = 0; a < classes.size(); ++a)
      out.setProbs(j, a, probs(j, classes[a]));
  return out;
}

MixtureWeights::MixtureWeights(std::vector<double> weights)
    : w_(std::move(weights)) {
  if (w_.empty()) throw std::invalid_argument("MixtureWeights: empty");
  double sum = 0.0;
  for (double v : w_) {
    if (!(v >= 0.0)) throw std::invalid_argument("MixtureWeights: negative weight");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("MixtureWeights: weights sum to " +
                                std::to_string(sum));
}

std::vector<std::size_t> MixtureWeights::support() const {
  std::vector<std::size_t> s;
  for (std::size_t a = 0; a < w_.size(); ++a)
    if (w_[a] > 0.0) s.push_back(a);
  return s;
}

} // namespace dcm
