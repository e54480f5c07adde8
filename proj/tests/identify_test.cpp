#include <doctest.h>

#include <cmath>

#include <dcm/designs.hpp>
#include <dcm/identify.hpp>
#include <dcm/models.hpp>

using namespace dcm;

namespace {

ResponseProbTable twoClassItem(double pLow, double pHigh) {
  ResponseProbTable t(1, 2);
  t.setProbs(0, 0, {1.0 - pLow, pLow});
  t.setProbs(0, 1, {1.0 - pHigh, pHigh});
  return t;
}

// brute-force pattern probabilities of Y restricted to a subset, summing
// over classes: the marginal the T-matrix times pi must reproduce
std::vector<double> bruteMarginal(const ResponseProbTable& table,
                                  const std::vector<int>& subset,
                                  const MixtureWeights& pi) {
  std::size_t kappa = 1;
  for (int j : subset) kappa *= table.categories(j);
  std::vector<double> out(kappa, 0.0);
  for (std::size_t pat = 0; pat < kappa; ++pat) {
    std::size_t rest = pat;
    std::vector<int> ys(subset.size());
    for (std::size_t s = subset.size(); s-- > 0;) {
      ys[s] = static_cast<int>(rest % table.categories(subset[s]));
      rest /= table.categories(subset[s]);
    }
    for (std::size_t a = 0; a < table.classes(); ++a) {
      double p = pi[a];
      for (std::size_t s = 0; s < subset.size(); ++s)
        p *= table.probs(subset[s], a)[ys[s]];
      out[pat] += p;
    }
  }
  return out;
}

} // namespace

TEST_CASE("single-item T-matrix is the transposed probability table") {
  auto t = twoClassItem(0.9, 0.1);
  auto m = buildTMatrix(t, {0});
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 2);
  CHECK(m(0, 0) == doctest::Approx(0.1));
  CHECK(m(1, 0) == doctest::Approx(0.9));
  CHECK(m(0, 1) == doctest::Approx(0.9));
  CHECK(m(1, 1) == doctest::Approx(0.1));
}

TEST_CASE("two-item T-matrix is the pattern product of the single-item ones") {
  ResponseProbTable t(2, 2);
  t.setProbs(0, 0, {0.1, 0.9});
  t.setProbs(0, 1, {0.9, 0.1});
  t.setProbs(1, 0, {0.1, 0.9});
  t.setProbs(1, 1, {0.9, 0.1});
  auto one = buildTMatrix(t, {0});
  auto both = buildTMatrix(t, {0, 1});
  REQUIRE(both.rows() == 4);
  for (int a = 0; a < 2; ++a)
    for (int y0 = 0; y0 < 2; ++y0)
      for (int y1 = 0; y1 < 2; ++y1)
        CHECK(both(y0 * 2 + y1, a) ==
              doctest::Approx(one(y0, a) * one(y1, a)).epsilon(1e-12));
}

TEST_CASE("T-matrix columns sum to one and a single class yields one column") {
  ResponseProbTable t(1, 1);
  t.setProbs(0, 0, {0.4, 0.6});
  auto m = buildTMatrix(t, {0});
  REQUIRE(m.cols() == 1);
  CHECK(m.col(0).sum() == doctest::Approx(1.0));

  auto d = designs::designByName("nida3");
  auto full = buildTMatrix(d.supportTable(), {0, 1, 2, 3});
  for (int a = 0; a < full.cols(); ++a)
    CHECK(full.col(a).sum() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("T-matrix row cap raises a size error") {
  auto d = designs::designByName("nida3");
  std::vector<int> all(13);
  for (int j = 0; j < 13; ++j) all[j] = j;
  CHECK_THROWS_AS(buildTMatrix(d.supportTable(), all, 16), std::length_error);
}

TEST_CASE("pattern-product composition over disjoint subsets") {
  auto d = designs::designByName("ncrum3");
  auto table = d.supportTable();
  std::vector<int> i1{0, 3}, i2{6, 9}, both{0, 3, 6, 9};
  auto t1 = buildTMatrix(table, i1);
  auto t2 = buildTMatrix(table, i2);
  auto t12 = buildTMatrix(table, both);
  for (int a = 0; a < t12.cols(); ++a)
    for (int r1 = 0; r1 < t1.rows(); ++r1)
      for (int r2 = 0; r2 < t2.rows(); ++r2)
        CHECK(t12(r1 * t2.rows() + r2, a) ==
              doctest::Approx(t1(r1, a) * t2(r2, a)).epsilon(1e-12));
}

TEST_CASE("T times pi reproduces brute-force pattern probabilities") {
  for (const char* name : {"nida3", "ncrum3", "lcdm3"}) {
    auto d = designs::designByName(name);
    auto table = d.supportTable();
    auto pi = d.supportPi();
    std::vector<int> subset{0, 2, 4, 6, 8, 9};
    auto T = buildTMatrix(table, subset);
    Eigen::VectorXd w(static_cast<int>(pi.size()));
    for (std::size_t a = 0; a < pi.size(); ++a) w[static_cast<int>(a)] = pi[a];
    Eigen::VectorXd marg = T * w;
    auto brute = bruteMarginal(table, subset, pi);
    REQUIRE(static_cast<std::size_t>(marg.size()) == brute.size());
    for (std::size_t r = 0; r < brute.size(); ++r)
      CHECK(marg[static_cast<int>(r)] ==
            doctest::Approx(brute[r]).epsilon(1e-12));
  }
}

TEST_CASE("numeric rank basics") {
  CHECK(numericRank(Eigen::MatrixXd::Identity(2, 2)) == 2);
  CHECK(numericRank(Eigen::MatrixXd::Zero(3, 3)) == 0);
  Eigen::MatrixXd dup(2, 3);
  dup << 1, 1, 0, 2, 2, 1;
  CHECK(numericRank(dup) == 2); // two equal columns

  Eigen::MatrixXd bad(1, 1);
  bad(0, 0) = std::nan("");
  CHECK_THROWS(numericRank(bad));
}

TEST_CASE("numeric rank is invariant to permutation and positive scaling") {
  auto d = designs::designByName("ncrum3");
  auto T = buildTMatrix(d.supportTable(), {0, 3, 6, 9, 11, 13});
  const int r = numericRank(T);
  CHECK(r == 5);

  Eigen::MatrixXd perm = T;
  perm.col(0).swap(perm.col(3));
  perm.row(1).swap(perm.row(7));
  CHECK(numericRank(perm) == r);

  Eigen::MatrixXd scaled = T;
  double factors[] = {1e-3, 0.5, 1.0, 3.0, 17.0};
  for (int c = 0; c < scaled.cols(); ++c) scaled.col(c) *= factors[c];
  CHECK(numericRank(scaled) == r);
}

TEST_CASE("constant item has rank-one T-matrix") {
  // slip + guess = 1 makes the response distribution class-independent
  QMatrix q(std::vector<std::vector<int>>{{1}});
  DinaParams p{{0.4}, {0.6}};
  auto t = buildProbTable(p, q, AttributeSpace::binary(1), ResponseSpec::binary(1));
  CHECK(numericRank(buildTMatrix(t, {0})) == 1);
}

TEST_CASE("three-way condition check on the conjunctive design") {
  auto d = designs::designByName("nida3");
  auto table = d.fullTable();
  ItemPartition part{{0, 3, 6}, {1, 4, 7}, {2, 5, 8}};

  MixtureWeights uniform(std::vector<double>(8, 0.125));
  auto v = checkTheorem1(table, uniform, part);
  CHECK(v.pass);

  std::vector<double> withZero(8, 1.0 / 7.0);
  withZero[7] = 0.0;
  auto vz = checkTheorem1(table, MixtureWeights(withZero), part);
  CHECK_FALSE(vz.pass); // positivity violated

  // an item with three distinct values violates the two-value condition
  ResponseProbTable three(9, 3);
  for (std::size_t j = 0; j < 9; ++j) {
    three.setProbs(j, 0, {0.8, 0.2});
    three.setProbs(j, 1, {0.2, 0.8});
    three.setProbs(j, 2, j == 0 ? std::vector<double>{0.5, 0.5}
                                : std::vector<double>{0.2, 0.8});
  }
  auto v3 = checkTheorem1(three, MixtureWeights({0.3, 0.3, 0.4}), part);
  CHECK_FALSE(v3.pass);
}

TEST_CASE("multi-category condition uses partial sums") {
  ItemPartition part{{0}, {1}, {2}};
  ResponseProbTable t(3, 2);
  for (std::size_t j = 0; j < 3; ++j) {
    t.setProbs(j, 0, {0.2, 0.3, 0.5});
    t.setProbs(j, 1, {0.3, 0.2, 0.5});
  }
  // vectors differ in the first partial sum even though totals agree
  auto v = checkTheorem2(t, MixtureWeights({0.5, 0.5}), part);
  CHECK(v.pass);

  ResponseProbTable same(3, 2);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t a = 0; a < 2; ++a) same.setProbs(j, a, {0.4, 0.6});
  CHECK_FALSE(checkTheorem2(same, MixtureWeights({0.5, 0.5}), part).pass);
}

TEST_CASE("binary designs passing the two-value check pass the multi-category one") {
  auto d = designs::designByName("nida3");
  auto table = d.fullTable();
  ItemPartition part{{0, 3, 6}, {1, 4, 7}, {2, 5, 8}};
  MixtureWeights uniform(std::vector<double>(8, 0.125));
  REQUIRE(checkTheorem1(table, uniform, part).pass);
  CHECK(checkTheorem2(table, uniform, part).pass);
}

TEST_CASE("full-rank check on the noncompensatory design with five classes") {
  auto d = designs::designByName("ncrum3");
  auto table = d.supportTable();
  auto pi = d.supportPi();
  ItemPartition part{{0, 3, 6, 9, 11, 13}, {1, 4, 7, 10, 12, 14}, {2, 5, 8}};
  auto v = checkTheorem3(table, pi, part);
  CHECK(v.pass);
  // certificate should mention rank 5 for each subset
  int rankConds = 0;
  for (const auto& c : v.conditions)
    if (c.detail.find("rank 5") != std::string::npos) ++rankConds;
  CHECK(rankConds >= 3);
}

TEST_CASE("full-rank check fails when a subset cannot span the classes") {
  auto d = designs::designByName("nida3");
  auto table = d.fullTable();
  MixtureWeights uniform(std::vector<double>(8, 0.125));
  // subset 3 has two binary items: kappa = 4 < 8 classes
  ItemPartition part{{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}, {10, 11}};
  auto v = checkTheorem3(table, uniform, part);
  CHECK_FALSE(v.pass);
}

TEST_CASE("unit-row counting on the design Q-matrices") {
  auto nida = designs::designByName("nida3");
  CHECK(checkCorollary1(nida.q).pass);
  auto lcdm = designs::designByName("lcdm3");
  CHECK(checkCorollary1(lcdm.q).pass);

  // only two unit rows for attribute 1
  QMatrix q({{1, 0}, {1, 0}, {0, 1}, {0, 1}, {0, 1}, {1, 1}});
  auto v = checkCorollary1(q);
  CHECK_FALSE(v.pass);
  bool names = false;
  for (const auto& c : v.conditions)
    if (!c.pass && c.detail.find("attribute 1") != std::string::npos)
      names = true;
  CHECK(names);
}

TEST_CASE("per-attribute pool check on the conjunctive design") {
  auto d = designs::designByName("nida3");
  auto table = d.fullTable();
  MixtureWeights uniform(std::vector<double>(8, 0.125));
  auto v = checkTheorem4(table, uniform, d.q, d.space);
  CHECK(v.pass);
}

TEST_CASE("per-attribute pool check fails on constant single-attribute items") {
  // three copies of an attribute-1 item with p identical across classes
  QMatrix q({{1, 0}, {1, 0}, {1, 0}, {0, 1}, {0, 1}, {0, 1}});
  DinaParams p{{0.4, 0.4, 0.4, 0.1, 0.1, 0.1},
               {0.6, 0.6, 0.6, 0.2, 0.2, 0.2}};
  AttributeSpace space = AttributeSpace::binary(2);
  auto table = buildProbTable(p, q, space, ResponseSpec::binary(6));
  MixtureWeights uniform(std::vector<double>(4, 0.25));
  auto v = checkTheorem4(table, uniform, q, space);
  CHECK_FALSE(v.pass);
  bool names = false;
  for (const auto& c : v.conditions)
    if (!c.pass && c.detail.find("attribute 1") != std::string::npos)
      names = true;
  CHECK(names);
}

TEST_CASE("ternary attribute cannot be certified by binary items") {
  // d_1 = 3: a 2-row reduced T-matrix can never reach rank 3
  AttributeSpace space({3, 2});
  QMatrix q({{1, 0}, {1, 0}, {1, 0}, {0, 1}, {0, 1}, {0, 1}});
  ResponseProbTable table(6, 6);
  for (std::size_t j = 0; j < 6; ++j)
    for (std::size_t a = 0; a < 6; ++a) {
      Profile prof = space.profileAt(a);
      double p = q(j, 0) ? 0.2 + 0.3 * prof[0] : (prof[1] ? 0.9 : 0.1);
      table.setProbs(j, a, {1.0 - p, p});
    }
  MixtureWeights uniform(std::vector<double>(6, 1.0 / 6.0));
  auto v = checkTheorem4(table, uniform, q, space);
  CHECK_FALSE(v.pass);
}

TEST_CASE("partition search finds a certifying split for the conjunctive design") {
  auto d = designs::designByName("nida3");
  auto table = d.fullTable();
  MixtureWeights uniform(std::vector<double>(8, 0.125));
  auto [part, verdict] = searchPartition(table, uniform);
  CHECK(verdict.pass);
  part.validate(13);
  CHECK(checkTheorem3(table, uniform, part).pass);
}

TEST_CASE("partition search needs at least three items") {
  ResponseProbTable t = twoClassItem(0.9, 0.1);
  ResponseProbTable two(2, 2);
  for (std::size_t j = 0; j < 2; ++j) {
    two.setProbs(j, 0, {0.1, 0.9});
    two.setProbs(j, 1, {0.9, 0.1});
  }
  auto [part, verdict] = searchPartition(two, MixtureWeights({0.5, 0.5}));
  CHECK_FALSE(verdict.pass);
}

TEST_CASE("partition search reports failure when items cannot separate classes") {
  // all items identical and 4 classes: every subset has rank <= 2
  ResponseProbTable t(6, 4);
  for (std::size_t j = 0; j < 6; ++j)
    for (std::size_t a = 0; a < 4; ++a) {
      double p = a < 2 ? 0.2 : 0.8;
      t.setProbs(j, a, {1.0 - p, p});
    }
  auto [part, verdict] = searchPartition(t, MixtureWeights({0.25, 0.25, 0.25, 0.25}));
  CHECK_FALSE(verdict.pass);
}
