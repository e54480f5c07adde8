#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <dcm/designs.hpp>
#include <dcm/identify.hpp>
#include <dcm/simulate.hpp>

using namespace dcm;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/dcm_test_" + name) {}
  ~TempFile() {
    std::remove(path.c_str());
    std::remove((path + ".labels").c_str());
  }
};

} // namespace

TEST_CASE("point mass on a deterministic item yields constant responses") {
  ResponseProbTable t(1, 2);
  t.setProbs(0, 0, {0.0, 1.0});
  t.setProbs(0, 1, {1.0, 0.0});
  auto ds = simulate(t, MixtureWeights({1.0, 0.0}), 50, 7u);
  REQUIRE(ds.size() == 50);
  for (const auto& row : ds.rows) CHECK(row[0] == 2);
  REQUIRE(ds.trueLabels.has_value());
  for (int l : *ds.trueLabels) CHECK(l == 1);
}

TEST_CASE("same seed gives bit-identical datasets") {
  auto d = designs::designByName("nida3");
  auto table = d.fullTable();
  auto a = simulate(table, d.pi, 200, 42u);
  auto b = simulate(table, d.pi, 200, 42u);
  CHECK(a.rows == b.rows);
  CHECK(*a.trueLabels == *b.trueLabels);
  auto c = simulate(table, d.pi, 200, 43u);
  CHECK(a.rows != c.rows);
}

TEST_CASE("empirical class frequencies concentrate around the weights") {
  auto d = designs::designByName("nida3");
  auto table = d.fullTable();
  const std::size_t n = 2000;
  int okSeeds = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    auto ds = simulate(table, d.pi, n, static_cast<std::uint64_t>(9000 + s));
    std::vector<int> counts(d.pi.size(), 0);
    for (int l : *ds.trueLabels) ++counts[l - 1];
    bool ok = true;
    for (std::size_t a = 0; a < d.pi.size(); ++a) {
      const double pa = d.pi[a];
      const double dev = std::abs(counts[a] / static_cast<double>(n) - pa);
      if (dev > 3.0 * std::sqrt(pa * (1.0 - pa) / n)) ok = false;
    }
    okSeeds += ok;
  }
  // each class trips its 3-sigma bound with prob ~0.3%, eight classes with
  // positive weight => well above 95 of 100 seeds should pass all bounds
  CHECK(okSeeds >= 95);
}

TEST_CASE("item marginals converge to the mixture marginals") {
  auto d = designs::designByName("ncrum3");
  auto table = d.supportTable();
  auto pi = d.supportPi();
  const std::size_t n = 100000;
  auto ds = simulate(table, pi, n, 1234u);
  for (std::size_t j = 0; j < table.items(); ++j) {
    double truth = 0.0;
    for (std::size_t a = 0; a < table.classes(); ++a)
      truth += pi[a] * table.probs(j, a)[1];
    std::size_t hits = 0;
    for (const auto& row : ds.rows) hits += row[j] == 2;
    CHECK(std::abs(hits / static_cast<double>(n) - truth) < 0.01);
  }
}

TEST_CASE("items are conditionally independent within a true class") {
  auto d = designs::designByName("nida3");
  auto table = d.fullTable();
  const std::size_t n = 100000;
  auto ds = simulate(table, d.pi, n, 99u);
  // class with the largest weight: profile (1,0,0) -> enumeration index 4
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < n; ++i)
    if ((*ds.trueLabels)[i] == 5) members.push_back(i);
  REQUIRE(members.size() > 10000);
  for (std::size_t j1 = 0; j1 < 13; j1 += 5)
    for (std::size_t j2 = j1 + 1; j2 < 13; j2 += 3) {
      double m1 = 0, m2 = 0, m12 = 0, v1 = 0, v2 = 0;
      for (std::size_t i : members) {
        const double x = ds.rows[i][j1] - 1, y = ds.rows[i][j2] - 1;
        m1 += x; m2 += y; m12 += x * y;
      }
      m1 /= members.size(); m2 /= members.size(); m12 /= members.size();
      for (std::size_t i : members) {
        const double x = ds.rows[i][j1] - 1, y = ds.rows[i][j2] - 1;
        v1 += (x - m1) * (x - m1);
        v2 += (y - m2) * (y - m2);
      }
      v1 /= members.size(); v2 /= members.size();
      const double r = (m12 - m1 * m2) / std::sqrt(v1 * v2);
      CHECK(std::abs(r) < 0.05);
    }
}

TEST_CASE("dataset round-trips through the CSV format with labels") {
  auto d = designs::designByName("lcdm3");
  auto ds = simulate(d.fullTable(), d.pi, 100, 5u);
  TempFile f("roundtrip.csv");
  writeDataset(ds, f.path);
  auto back = loadDataset(f.path);
  CHECK(back.rows == ds.rows);
  REQUIRE(back.trueLabels.has_value());
  CHECK(*back.trueLabels == *ds.trueLabels);
}

TEST_CASE("ragged and out-of-range rows are parse errors naming the line") {
  TempFile f("bad.csv");
  {
    std::ofstream out(f.path);
    out << "item1,item2\n1,2\n1\n";
  }
  CHECK_THROWS_WITH_AS(loadDataset(f.path),
                       doctest::Contains(":3:"), std::runtime_error);
  {
    std::ofstream out(f.path);
    out << "item1,item2\n1,0\n";
  }
  CHECK_THROWS_AS(loadDataset(f.path), std::runtime_error);
  CHECK_THROWS_AS(loadDataset("/tmp/dcm_test_does_not_exist.csv"),
                  std::runtime_error);
}

TEST_CASE("invalid weights are rejected before sampling") {
  ResponseProbTable t(1, 2);
  t.setProbs(0, 0, {0.5, 0.5});
  t.setProbs(0, 1, {0.5, 0.5});
  CHECK_THROWS(MixtureWeights({0.7, 0.7}));
  CHECK_THROWS(simulate(t, MixtureWeights({1.0}), 10, 1u)); // size mismatch
}
