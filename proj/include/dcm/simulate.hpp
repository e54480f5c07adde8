#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcm/rng.hpp"
#include "dcm/types.hpp"

namespace dcm {

/// Rectangular response data: n rows of J categorical values in 1..k_j.
/// Simulated data keeps the true class labels (1-based) for evaluation;
/// labels are written to a sidecar file, never the main CSV.
struct Dataset {
  std::vector<std::vector<int>> rows;
  std::optional<std::vector<int>> trueLabels;

  std::size_t size() const { return rows.size(); }
  std::size_t items() const { return rows.empty() ? 0 : rows[0].size(); }
};

/// Draws n rows: class from pi, then each response from the class's cell.
Dataset simulate(const ResponseProbTable& table, const MixtureWeights& pi,
                 std::size_t n, Rng& rng);
Dataset simulate(const ResponseProbTable& table, const MixtureWeights& pi,
                 std::size_t n, std::uint64_t seed);

/// Header-bearing CSV of integer responses; labels go to path + ".labels".
void writeDataset(const Dataset& ds, const std::string& path);
Dataset loadDataset(const std::string& path);

} // namespace dcm
