#include "dcm/simulate.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dcm {

Dataset simulate(const ResponseProbTable& table, const MixtureWeights& pi,
                 std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("simulate: n < 1");
  if (pi.size() != table.classes())
    throw std::invalid_argument("simulate: weight/class count mismatch");

  const std::size_t J = table.items();
  Dataset ds;
  ds.rows.reserve(n);
  ds.trueLabels = std::vector<int>();
  ds.trueLabels->reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = rng.categorical(pi.weights());
    std::vector<int> row(J);
    for (std::size_t j = 0; j < J; ++j)
      row[j] = static_cast<int>(rng.categorical(table.probs(j, a))) + 1;
    ds.rows.push_back(std::move(row));
    ds.trueLabels->push_back(static_cast<int>(a) + 1);
  }
  return ds;
}

Dataset simulate(const ResponseProbTable& table, const MixtureWeights& pi,
                 std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return simulate(table, pi, n, rng);
}

void writeDataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::size_t J = ds.items();
  for (std::size_t j = 0; j < J; ++j) out << (j ? "," : "") << "item" << j + 1;
  out << "\n";
  for (const auto& row : ds.rows) {
    for (std::size_t j = 0; j < J; ++j) out << (j ? "," : "") << row[j];
    out << "\n";
  }
  if (ds.trueLabels) {
    std::ofstream lab(path + ".labels");
    if (!lab) throw std::runtime_error("cannot write " + path + ".labels");
    lab << "class\n";
    for (int a : *ds.trueLabels) lab << a << "\n";
  }
}

Dataset loadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  Dataset ds;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty file");
  std::size_t J = 1;
  for (char c : line) J += c == ',';
  std::size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::vector<int> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stoi(field));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineNo) +
                                 ": not an integer: '" + field + "'");
      }
      if (row.back() < 1)
        throw std::runtime_error(path + ":" + std::to_string(lineNo) +
                                 ": response value " +
                                 std::to_string(row.back()) +
                                 " below category range 1..k_j");
    }
    if (row.size() != J)
      throw std::runtime_error(path + ":" + std::to_string(lineNo) +
                               ": expected " + std::to_string(J) +
                               " fields, got " + std::to_string(row.size()));
    ds.rows.push_back(std::move(row));
  }
  std::ifstream lab(path + ".labels");
  if (lab) {
    std::string header;
    std::getline(lab, header);
    std::vector<int> labels;
    while (std::getline(lab, line))
      if (!line.empty()) labels.push_back(std::stoi(line));
    if (labels.size() != ds.rows.size())
      throw std::runtime_error(path + ".labels: expected " +
                               std::to_string(ds.rows.size()) + " labels, got " +
                               std::to_string(labels.size()));
    ds.trueLabels = std::move(labels);
  }
  return ds;
}

} // namespace dcm
