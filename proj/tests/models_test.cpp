#include <doctest.h>

#include <cmath>

#include <dcm/designs.hpp>
#include <dcm/models.hpp>

using namespace dcm;

TEST_CASE("conjunctive ideal response") {
  CHECK(idealResponseDina({1, 1, 0}, {1, 1, 0}) == 1);
  CHECK(idealResponseDina({1, 0, 0}, {1, 1, 0}) == 0);
  CHECK(idealResponseDina({1, 1, 1}, {0, 0, 0}) == 1); // vacuous requirement
}

TEST_CASE("disjunctive ideal response") {
  CHECK(idealResponseDino({1, 0, 0}, {1, 1, 0}) == 1);
  CHECK(idealResponseDino({0, 0, 1}, {1, 1, 0}) == 0);
  CHECK(idealResponseDino({0, 0, 0}, {0, 0, 0}) == 0); // empty product = 1
}

TEST_CASE("noisy-input conjunctive probabilities match the three-attribute design") {
  auto d = designs::designByName("nida3");
  AttributeSpace space = AttributeSpace::binary(3);
  // item 10 loads attributes 1 and 2 with slip 0.1 and guess 0.5
  auto p11 = responseProb(d.params, d.q, 9, {1, 1, 0}, space);
  CHECK(p11[1] == doctest::Approx(0.81).epsilon(1e-12));
  auto p10 = responseProb(d.params, d.q, 9, {1, 0, 0}, space);
  CHECK(p10[1] == doctest::Approx(0.45).epsilon(1e-12));
  auto p00 = responseProb(d.params, d.q, 9, {0, 0, 0}, space);
  CHECK(p00[1] == doctest::Approx(0.25).epsilon(1e-12));
  // the unloaded attribute must not matter
  CHECK(responseProb(d.params, d.q, 9, {1, 1, 1}, space)[1] ==
        doctest::Approx(0.81).epsilon(1e-12));
}

TEST_CASE("noncompensatory penalty model probability") {
  auto d = designs::designByName("ncrum3");
  AttributeSpace space = AttributeSpace::binary(3);
  // item 10 loads attributes 1,2 with phi=0.9, r=(0.5,0.7)
  auto p = responseProb(d.params, d.q, 9, {0, 0, 1}, space);
  CHECK(p[1] == doctest::Approx(0.9 * 0.5 * 0.7).epsilon(1e-12));
  auto full = responseProb(d.params, d.q, 9, {1, 1, 0}, space);
  CHECK(full[1] == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("log-linear item with additive intercept") {
  auto d = designs::designByName("lcdm3");
  AttributeSpace space = AttributeSpace::binary(3);
  // item 1: lambda1 = 4, intercept -2
  double hi = responseProb(d.params, d.q, 0, {1, 0, 0}, space)[1];
  double lo = responseProb(d.params, d.q, 0, {0, 0, 0}, space)[1];
  CHECK(hi == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK(lo == doctest::Approx(1.0 / (1.0 + std::exp(2.0))).epsilon(1e-12));
  CHECK(hi == doctest::Approx(0.881).epsilon(1e-3));
  CHECK(lo == doctest::Approx(0.119).epsilon(1e-3));
}

TEST_CASE("slip-equals-guess collapses every class") {
  QMatrix q(std::vector<std::vector<int>>{{1}});
  DinaParams p{{0.5}, {0.5}};
  auto t = buildProbTable(p, q, AttributeSpace::binary(1), ResponseSpec::binary(1));
  for (std::size_t a = 0; a < 2; ++a)
    CHECK(t.probs(0, a)[1] == doctest::Approx(0.5));
  CHECK(truePartialInfo(t, 0) == Partition{{0, 1}});
}

TEST_CASE("saturated family copies the supplied table") {
  ResponseProbTable t(1, 2);
  t.setProbs(0, 0, {0.2, 0.3, 0.5});
  t.setProbs(0, 1, {0.1, 0.1, 0.8});
  SaturatedParams sp{t};
  QMatrix q(std::vector<std::vector<int>>{{1}});
  auto out = buildProbTable(sp, q, AttributeSpace::binary(1), ResponseSpec({3}));
  CHECK(out.probs(0, 1) == t.probs(0, 1));
}

TEST_CASE("every family emits valid probability vectors on every cell") {
  for (const char* name : {"nida3", "ncrum3", "lcdm3"}) {
    auto d = designs::designByName(name);
    auto t = d.fullTable();
    t.validate();
    for (std::size_t j = 0; j < t.items(); ++j)
      for (std::size_t a = 0; a < t.classes(); ++a) {
        double sum = 0;
        for (double v : t.probs(j, a)) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
  }
}

TEST_CASE("conjunctive/disjunctive duality at complementary profiles") {
  QMatrix q({{1, 1, 0}, {1, 0, 1}, {1, 1, 1}});
  DinaParams dina{{0.1, 0.2, 0.3}, {0.25, 0.3, 0.15}};
  DinoParams dino{{0.1, 0.2, 0.3}, {0.25, 0.3, 0.15}};
  AttributeSpace space = AttributeSpace::binary(3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t a = 0; a < 8; ++a) {
      Profile alpha = space.profileAt(a);
      Profile comp = alpha;
      for (auto& v : comp) v = 1 - v;
      // the disjunctive item succeeds at full rate exactly when the
      // conjunctive item at the complement profile guesses, so the two
      // probabilities always sum to (1-s) + g
      CHECK(responseProb(ModelParams{dino}, q, j, alpha, space)[1] +
                responseProb(ModelParams{dina}, q, j, comp, space)[1] ==
            doctest::Approx(1.0 - dina.slip[j] + dina.guess[j]).epsilon(1e-12));
    }
}

TEST_CASE("responses ignore attributes the item does not load") {
  auto d = designs::designByName("lcdm3");
  AttributeSpace space = AttributeSpace::binary(3);
  for (std::size_t j = 0; j < d.q.items(); ++j)
    for (std::size_t a = 0; a < 8; ++a) {
      Profile alpha = space.profileAt(a);
      auto base = responseProb(d.params, d.q, j, alpha, space);
      for (std::size_t k = 0; k < 3; ++k) {
        if (d.q(j, k) == 1) continue;
        Profile perturbed = alpha;
        perturbed[k] = 1 - perturbed[k];
        CHECK(responseProb(d.params, d.q, j, perturbed, space) == base);
      }
    }
}

TEST_CASE("partial information of single-attribute and two-attribute conjunctive items") {
  auto d = designs::designByName("nida3");
  auto t = d.fullTable();
  // item 1 loads only attribute 1: blocks split on alpha_1 (class index >= 4)
  auto p1 = truePartialInfo(t, 0);
  CHECK(canonicalPartition(p1) ==
        Partition{{0, 1, 2, 3}, {4, 5, 6, 7}});
  // a conjunctive DINA item with q=(1,1,0) splits on the ideal response
  QMatrix q({{1, 1, 0}});
  DinaParams dp{{0.1}, {0.2}};
  auto t2 = buildProbTable(dp, q, AttributeSpace::binary(3),
                           ResponseSpec::binary(1));
  auto p2 = canonicalPartition(truePartialInfo(t2, 0));
  CHECK(p2 == Partition{{0, 1, 2, 3, 4, 5}, {6, 7}});
}

TEST_CASE("partial info blocks are disjoint and cover all classes") {
  auto d = designs::designByName("ncrum3");
  auto t = d.fullTable();
  for (std::size_t j = 0; j < t.items(); ++j) {
    auto p = truePartialInfo(t, j);
    std::vector<int> seen(t.classes(), 0);
    for (const auto& block : p)
      for (int a : block) seen[a]++;
    for (int c : seen) CHECK(c == 1);
  }
}

TEST_CASE("parameter domain errors") {
  QMatrix q(std::vector<std::vector<int>>{{1}});
  AttributeSpace space = AttributeSpace::binary(1);
  DinaParams bad{{1.5}, {0.2}};
  CHECK_THROWS(responseProb(ModelParams{bad}, q, 0, {1}, space));
  NcRumParams badr{{0.9}, {{1.2}}};
  CHECK_THROWS(responseProb(ModelParams{badr}, q, 0, {1}, space));
}
