#include "dcm/identify.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dcm {

namespace {

double round12(double v) { return std::round(v * 1e12) / 1e12; }

std::vector<double> rounded(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = round12(v[i]);
  return out;
}

std::string itemsToString(const std::vector<int>& items) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < items.size(); ++i)
    os << (i ? "," : "") << items[i] + 1;
  os << "}";
  return os.str();
}

bool allPositive(const MixtureWeights& pi, VerdictCondition& cond) {
  for (std::size_t a = 0; a < pi.size(); ++a) {
    if (!(pi[a] > 0.0)) {
      cond.pass = false;
      cond.detail = "class " + std::to_string(a + 1) + " has zero weight";
      return false;
    }
  }
  cond.pass = true;
  cond.detail = "all " + std::to_string(pi.size()) + " class weights positive";
  return true;
}

/// Distinct response vectors of item j across classes, after rounding.
std::size_t distinctVectorCount(const ResponseProbTable& table, std::size_t j) {
  std::set<std::vector<double>> seen;
  for (std::size_t a = 0; a < table.classes(); ++a)
    seen.insert(rounded(table.probs(j, a)));
  return seen.size();
}

void finish(IdentifiabilityVerdict& v) {
  v.pass = std::all_of(v.conditions.begin(), v.conditions.end(),
                       [](const VerdictCondition& c) { return c.pass; });
}

} // namespace

void ItemPartition::validate(std::size_t J) const {
  if (subset1.empty() || subset2.empty() || subset3.empty())
    throw std::invalid_argument("item partition: empty subset");
  std::set<int> seen;
  for (const auto* s : {&subset1, &subset2, &subset3}) {
    for (int j : *s) {
      if (j < 0 || static_cast<std::size_t>(j) >= J)
        throw std::invalid_argument("item partition: index out of range");
      if (!seen.insert(j).second)
        throw std::invalid_argument("item partition: subsets overlap");
    }
  }
}

std::string IdentifiabilityVerdict::summary() const {
  std::ostringstream os;
  os << theorem << ": " << (pass ? "PASS" : "FAIL (condition not verified)")
     << "\n";
  for (const auto& c : conditions)
    os << "  [" << (c.pass ? "ok" : "FAIL") << "] " << c.name << ": "
       << c.detail << "\n";
  return os.str();
}

Eigen::MatrixXd buildTMatrix(const ResponseProbTable& table,
                             const std::vector<int>& subset,
                             std::size_t rowCap) {
  if (subset.empty()) throw std::invalid_argument("buildTMatrix: empty subset");
  const std::size_t M = table.classes();
  std::size_t kappa = 1;
  std::vector<int> cats;
  for (int j : subset) {
    if (j < 0 || static_cast<std::size_t>(j) >= table.items())
      throw std::invalid_argument("buildTMatrix: item index out of range");
    cats.push_back(table.categories(j));
    kappa *= static_cast<std::size_t>(cats.back());
    if (kappa > rowCap)
      throw std::length_error("buildTMatrix: pattern count exceeds cap (kappa >= " +
                              std::to_string(kappa) + ")");
  }
  Eigen::MatrixXd t(kappa, M);
  std::vector<int> pattern(subset.size(), 0);
  for (std::size_t row = 0; row < kappa; ++row) {
    for (std::size_t a = 0; a < M; ++a) {
      double prod = 1.0;
      for (std::size_t i = 0; i < subset.size(); ++i)
        prod *= table.probs(subset[i], a)[pattern[i]];
      t(row, a) = prod;
    }
    // advance mixed-radix pattern, last item fastest
    for (std::size_t i = subset.size(); i-- > 0;) {
      if (++pattern[i] < cats[i]) break;
      pattern[i] = 0;
    }
  }
  return t;
}

int numericRank(const Eigen::MatrixXd& m, double tol) {
  if (!m.allFinite())
    throw std::domain_error("numericRank: non-finite entries");
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * sv(0)) ++rank;
  return rank;
}

namespace {

/// Finds a class pair whose T-matrix columns coincide (after rounding), or
/// (-1,-1) if all columns are distinct.
std::pair<int, int> duplicateColumns(const Eigen::MatrixXd& t) {
  const Eigen::Index M = t.cols();
  for (Eigen::Index a = 0; a < M; ++a)
    for (Eigen::Index b = a + 1; b < M; ++b) {
      bool same = true;
      for (Eigen::Index r = 0; r < t.rows() && same; ++r)
        same = round12(t(r, a)) == round12(t(r, b));
      if (same) return {static_cast<int>(a), static_cast<int>(b)};
    }
  return {-1, -1};
}

VerdictCondition checkTwoValued(const ResponseProbTable& table,
                                const ItemPartition& partition,
                                const std::string& name) {
  VerdictCondition cond{name, true, ""};
  for (const auto* s : {&partition.subset1, &partition.subset2, &partition.subset3}) {
    for (int j : *s) {
      const std::size_t d = distinctVectorCount(table, j);
      if (d > 2) {
        cond.pass = false;
        cond.detail = "item " + std::to_string(j + 1) + " takes " +
                      std::to_string(d) + " distinct response distributions";
        return cond;
      }
    }
  }
  cond.detail = "every partition item takes at most two response distributions";
  return cond;
}

} // namespace

IdentifiabilityVerdict checkTheorem1(const ResponseProbTable& table,
                                     const MixtureWeights& pi,
                                     const ItemPartition& partition) {
  partition.validate(table.items());
  if (pi.size() != table.classes())
    throw std::invalid_argument("theorem 1: weight/class count mismatch");
  for (std::size_t j = 0; j < table.items(); ++j)
    if (table.categories(j) != 2)
      throw std::invalid_argument("theorem 1 applies to binary responses only");

  IdentifiabilityVerdict v;
  v.theorem = "theorem-1";

  VerdictCondition a1{"A1 (distinct per-subset conditionals)", true, ""};
  int idx = 0;
  for (const auto* s : {&partition.subset1, &partition.subset2, &partition.subset3}) {
    ++idx;
    const auto t = buildTMatrix(table, *s);
    const auto [a, b] = duplicateColumns(t);
    if (a >= 0) {
      a1.pass = false;
      a1.detail = "subset " + std::to_string(idx) + " " + itemsToString(*s) +
                  " cannot distinguish classes " + std::to_string(a + 1) +
                  " and " + std::to_string(b + 1);
      break;
    }
  }
  if (a1.pass) a1.detail = "all three subsets separate every class pair";
  v.conditions.push_back(a1);

  v.conditions.push_back(
      checkTwoValued(table, partition, "A2 (two-valued response probabilities)"));

  VerdictCondition a3{"A3 (positive class weights)", true, ""};
  allPositive(pi, a3);
  v.conditions.push_back(a3);

  finish(v);
  return v;
}

IdentifiabilityVerdict checkTheorem2(const ResponseProbTable& table,
                                     const MixtureWeights& pi,
                                     const ItemPartition& partition) {
  partition.validate(table.items());
  if (pi.size() != table.classes())
    throw std::invalid_argument("theorem 2: weight/class count mismatch");

  IdentifiabilityVerdict v;
  v.theorem = "theorem-2";

  v.conditions.push_back(
      checkTwoValued(table, partition, "B1 (two-valued response vectors)"));

  // B2: within each subset, every class pair must differ in some partial CDF
  // sum p^1 + ... + p^k, k < k_j, for some item.
  VerdictCondition b2{"B2 (partial-sum separation)", true, ""};
  const std::size_t M = table.classes();
  int idx = 0;
  for (const auto* s : {&partition.subset1, &partition.subset2, &partition.subset3}) {
    ++idx;
    for (std::size_t a = 0; a < M && b2.pass; ++a) {
      for (std::size_t b = a + 1; b < M && b2.pass; ++b) {
        bool separated = false;
        for (int j : *s) {
          const auto& pa = table.probs(j, a);
          const auto& pb = table.probs(j, b);
          double cumA = 0.0, cumB = 0.0;
          for (std::size_t k = 0; k + 1 < pa.size(); ++k) {
            cumA += pa[k];
            cumB += pb[k];
            if (round12(cumA) != round12(cumB)) {
              separated = true;
              break;
            }
          }
          if (separated) break;
        }
        if (!separated) {
          b2.pass = false;
          b2.detail = "subset " + std::to_string(idx) + " " + itemsToString(*s) +
                      " has no separating partial sum for classes " +
                      std::to_string(a + 1) + " and " + std::to_string(b + 1);
        }
      }
    }
  }
  if (b2.pass) b2.detail = "every class pair separated in each subset";
  v.conditions.push_back(b2);

  VerdictCondition b3{"B3 (positive class weights)", true, ""};
  allPositive(pi, b3);
  v.conditions.push_back(b3);

  finish(v);
  return v;
}

IdentifiabilityVerdict checkTheorem3(const ResponseProbTable& table,
                                     const MixtureWeights& pi,
                                     const ItemPartition& partition) {
  partition.validate(table.items());
  if (pi.size() != table.classes())
    throw std::invalid_argument("theorem 3: weight/class count mismatch");

  IdentifiabilityVerdict v;
  v.theorem = "theorem-3";
  const int M = static_cast<int>(table.classes());

  int idx = 0;
  for (const auto* s : {&partition.subset1, &partition.subset2, &partition.subset3}) {
    ++idx;
    VerdictCondition cond{"full column rank of T for subset " + std::to_string(idx),
                          false, ""};
    Eigen::MatrixXd t;
    try {
      t = buildTMatrix(table, *s);
    } catch (const std::length_error& e) {
      cond.detail = std::string(e.what()) +
                    "; consider the single-attribute route of theorem 4";
      v.conditions.push_back(cond);
      continue;
    }
    const int rank = numericRank(t);
    cond.pass = rank == M;
    cond.detail = "items " + itemsToString(*s) + ": rank " +
                  std::to_string(rank) + " of " + std::to_string(M);
    v.conditions.push_back(cond);
  }

  VerdictCondition pos{"positive class weights", true, ""};
  allPositive(pi, pos);
  v.conditions.push_back(pos);

  finish(v);
  return v;
}

namespace {

/// Response table of a single-attribute item reduced to the levels of its
/// attribute: k_j rows, d_k columns. Representative profiles fix all other
/// attributes at level 0.
Eigen::MatrixXd reducedItemTable(const ResponseProbTable& table,
                                 const AttributeSpace& space, std::size_t j,
                                 std::size_t k) {
  const int dk = space.level(k);
  const int kj = table.categories(j);
  Eigen::MatrixXd m(kj, dk);
  Profile rep(space.attributes(), 0);
  for (int level = 0; level < dk; ++level) {
    rep[k] = level;
    const auto& p = table.probs(j, space.indexOf(rep));
    for (int y = 0; y < kj; ++y) m(y, level) = p[y];
  }
  return m;
}

/// Pattern-product (column-wise Kronecker) of two per-class tables.
Eigen::MatrixXd khatriRao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < b.rows(); ++j)
        out(i * b.rows() + j, c) = a(i, c) * b(j, c);
  return out;
}

} // namespace

IdentifiabilityVerdict checkTheorem4(const ResponseProbTable& table,
                                     const MixtureWeights& pi, const QMatrix& q,
                                     const AttributeSpace& space) {
  if (pi.size() != space.classCount() || table.classes() != space.classCount())
    throw std::invalid_argument("theorem 4: class count mismatch");
  if (q.items() != table.items() || q.attributes() != space.attributes())
    throw std::invalid_argument("theorem 4: Q shape mismatch");

  IdentifiabilityVerdict v;
  v.theorem = "theorem-4";
  const std::size_t K = space.attributes();

  for (std::size_t k = 0; k < K; ++k) {
    VerdictCondition cond{"attribute " + std::to_string(k + 1) +
                              ": three full-rank single-attribute pools",
                          false, ""};
    const int dk = space.level(k);

    std::vector<int> candidates;
    for (std::size_t j = 0; j < q.items(); ++j) {
      bool isEk = q(j, k) == 1;
      for (std::size_t l = 0; l < K && isEk; ++l)
        if (l != k && q(j, l) != 0) isEk = false;
      if (isEk) candidates.push_back(static_cast<int>(j));
    }

    // Greedy pool assignment in item order: grow the current pool until its
    // reduced T-matrix reaches full column rank d_k, then start the next.
    std::vector<std::vector<int>> pools;
    std::vector<int> pool;
    Eigen::MatrixXd poolT;
    for (int j : candidates) {
      if (pools.size() == 3) break;
      const Eigen::MatrixXd itemT = reducedItemTable(table, space, j, k);
      poolT = pool.empty() ? itemT : khatriRao(poolT, itemT);
      pool.push_back(j);
      if (numericRank(poolT) == dk) {
        pools.push_back(pool);
        pool.clear();
      }
    }

    std::ostringstream os;
    if (pools.size() == 3) {
      cond.pass = true;
      os << "pools";
      for (const auto& p : pools) os << " " << itemsToString(p);
    } else {
      os << "only " << pools.size() << " rank-" << dk
         << " pools certifiable from " << candidates.size()
         << " single-attribute items " << itemsToString(candidates)
         << " for attribute " << k + 1;
    }
    cond.detail = os.str();
    v.conditions.push_back(cond);
  }

  VerdictCondition pos{"positive class weights", true, ""};
  allPositive(pi, pos);
  v.conditions.push_back(pos);

  finish(v);
  return v;
}

IdentifiabilityVerdict checkCorollary1(const QMatrix& q) {
  IdentifiabilityVerdict v;
  v.theorem = "corollary-1";
  const std::size_t K = q.attributes();
  VerdictCondition cond{"three identity submatrices in Q", true, ""};
  std::ostringstream os;
  for (std::size_t k = 0; k < K; ++k) {
    int count = 0;
    for (std::size_t j = 0; j < q.items(); ++j) {
      bool isEk = q(j, k) == 1;
      for (std::size_t l = 0; l < K && isEk; ++l)
        if (l != k && q(j, l) != 0) isEk = false;
      if (isEk) ++count;
    }
    if (count < 3) {
      cond.pass = false;
      cond.detail = "attribute " + std::to_string(k + 1) + " has only " +
                    std::to_string(count) + " single-attribute rows (need 3)";
      break;
    }
    os << (k ? ", " : "") << "attribute " << k + 1 << ": " << count
       << " unit rows";
  }
  if (cond.pass) cond.detail = os.str();
  v.conditions.push_back(cond);
  finish(v);
  return v;
}

std::pair<ItemPartition, IdentifiabilityVerdict>
searchPartition(const ResponseProbTable& table, const MixtureWeights& pi) {
  const std::size_t J = table.items();
  if (J > 24)
    throw std::invalid_argument("searchPartition supports up to 24 items");

  auto fail = [&](const std::string& why) {
    ItemPartition p;
    IdentifiabilityVerdict v;
    v.theorem = "theorem-3";
    v.conditions.push_back({"partition search", false, why});
    v.pass = false;
    return std::make_pair(p, v);
  };
  if (J < 3) return fail("fewer than three items");

  ItemPartition p;
  for (std::size_t j = 0; j < J; ++j) {
    auto& s = j % 3 == 0 ? p.subset1 : j % 3 == 1 ? p.subset2 : p.subset3;
    s.push_back(static_cast<int>(j));
  }

  auto rankScore = [&](const ItemPartition& cand) {
    int total = 0;
    for (const auto* s : {&cand.subset1, &cand.subset2, &cand.subset3})
      total += numericRank(buildTMatrix(table, *s));
    return total;
  };

  IdentifiabilityVerdict v = checkTheorem3(table, pi, p);
  if (v.pass) return {p, v};

  // Local search: move one item between subsets while no subset empties,
  // keeping the move that most improves the total rank.
  int bestScore = rankScore(p);
  bool improved = true;
  while (improved && !v.pass) {
    improved = false;
    std::vector<std::vector<int>*> subsets{&p.subset1, &p.subset2, &p.subset3};
    for (std::size_t from = 0; from < 3 && !v.pass; ++from) {
      if (subsets[from]->size() <= 1) continue;
      for (std::size_t pos = 0; pos < subsets[from]->size() && !v.pass; ++pos) {
        for (std::size_t to = 0; to < 3 && !v.pass; ++to) {
          if (to == from) continue;
          ItemPartition cand = p;
          std::vector<std::vector<int>*> cs{&cand.subset1, &cand.subset2,
                                            &cand.subset3};
          const int item = (*cs[from])[pos];
          cs[from]->erase(cs[from]->begin() + pos);
          cs[to]->push_back(item);
          std::sort(cs[to]->begin(), cs[to]->end());
          const int score = rankScore(cand);
          if (score > bestScore) {
            p = cand;
            bestScore = score;
            improved = true;
            v = checkTheorem3(table, pi, p);
          }
        }
      }
    }
  }
  return {p, v};
}

} // namespace dcm
