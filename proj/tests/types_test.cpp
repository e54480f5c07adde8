#include <doctest.h>

#include <dcm/types.hpp>

using namespace dcm;

TEST_CASE("QMatrix validates entries and rows") {
  QMatrix q({{1, 0}, {0, 1}});
  CHECK(q.items() == 2);
  CHECK(q.attributes() == 2);
  CHECK(q(0, 0) == 1);
  CHECK(q(1, 0) == 0);
  q.validate();

  CHECK_THROWS(QMatrix({{1, 0}, {0, 0}})); // all-zero row
  CHECK_THROWS(QMatrix({{1, 2}}));         // non-binary entry
  CHECK_THROWS(QMatrix({{1}, {1, 0}}));    // ragged

  QMatrix zero(2, 2); // default-constructed rows are all-zero
  CHECK_THROWS(zero.validate());
  CHECK_THROWS(zero.set(0, 0, 2));
}

TEST_CASE("AttributeSpace enumerates classes in mixed-radix order, last attribute fastest") {
  AttributeSpace s = AttributeSpace::binary(3);
  CHECK(s.classCount() == 8);
  CHECK(s.profileAt(0) == Profile{0, 0, 0});
  CHECK(s.profileAt(1) == Profile{0, 0, 1});
  CHECK(s.profileAt(2) == Profile{0, 1, 0});
  CHECK(s.profileAt(7) == Profile{1, 1, 1});
  for (std::size_t a = 0; a < 8; ++a) CHECK(s.indexOf(s.profileAt(a)) == a);

  AttributeSpace mixed({2, 3});
  CHECK(mixed.classCount() == 6);
  CHECK(mixed.profileAt(4) == Profile{1, 1});
  CHECK_FALSE(mixed.isBinary());
  CHECK(s.isBinary());

  CHECK_THROWS(AttributeSpace({1, 2}));    // d_k >= 2
  CHECK_THROWS(AttributeSpace(std::vector<int>(21, 2))); // M over 2^20
}

TEST_CASE("ResponseSpec pattern counts with cap") {
  ResponseSpec spec({2, 3, 2});
  CHECK(spec.patternCount({0, 1, 2}) == 12);
  CHECK(spec.patternCount({1}) == 3);
  CHECK_THROWS(ResponseSpec({2, 1}));

  ResponseSpec big(std::vector<int>(40, 2));
  CHECK_THROWS(big.patternCount({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13,
                                 14, 15, 16, 17, 18, 19, 20}));
}

TEST_CASE("ResponseProbTable validates cells") {
  ResponseProbTable t(1, 2);
  t.setProbs(0, 0, {0.3, 0.7});
  t.setProbs(0, 1, {0.5, 0.5});
  t.validate();
  CHECK(t.probs(0, 0)[1] == doctest::Approx(0.7));
  CHECK(t.categories(0) == 2);

  ResponseProbTable bad(1, 1);
  bad.setProbs(0, 0, {0.5, 0.6});
  CHECK_THROWS(bad.validate());
}

TEST_CASE("ResponseProbTable restriction keeps the given columns in order") {
  ResponseProbTable t(1, 3);
  t.setProbs(0, 0, {0.9, 0.1});
  t.setProbs(0, 1, {0.5, 0.5});
  t.setProbs(0, 2, {0.2, 0.8});
  auto r = t.restrictedTo({2, 0});
  CHECK(r.classes() == 2);
  CHECK(r.probs(0, 0)[1] == doctest::Approx(0.8));
  CHECK(r.probs(0, 1)[1] == doctest::Approx(0.1));
}

TEST_CASE("MixtureWeights checks normalization and reports support") {
  MixtureWeights pi({0.5, 0.0, 0.5});
  CHECK(pi.size() == 3);
  CHECK(pi[0] == doctest::Approx(0.5));
  CHECK(pi.support() == std::vector<std::size_t>{0, 2});
  CHECK_THROWS(MixtureWeights({0.5, 0.4}));   // sum != 1
  CHECK_THROWS(MixtureWeights({1.5, -0.5}));  // negative weight
}

TEST_CASE("canonicalPartition sorts blocks and elements") {
  Partition p = {{3, 1}, {2, 0}};
  CHECK(canonicalPartition(p) == Partition{{0, 2}, {1, 3}});
}
