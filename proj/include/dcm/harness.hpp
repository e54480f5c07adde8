#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcm/designs.hpp"
#include "dcm/sampler.hpp"

namespace dcm {

/// Replication-study protocol: simulate, fit, truncate, align, evaluate over
/// R independent seeds.
struct StudyConfig {
  std::string design;       // generating design name
  std::size_t n = 2000;
  int replicates = 20;
  std::uint64_t masterSeed = 1;
  int workers = 0;          // 0 = hardware concurrency (DCM_WORKERS overrides)
  SamplerConfig sampler;
  bool backSolve = true;
  bool partialInfo = true;
  std::string outputDir = ".";

  void validate() const;
};

StudyConfig loadStudyConfig(const std::string& path);

/// One named scalar parameter aggregated over replicates.
struct ParamSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double mse = 0.0;
  bool operator==(const ParamSummary&) const = default;
};

struct StudyReport {
  std::string design;
  std::string family;
  std::size_t n = 0;
  int replicates = 0;
  int excluded = 0;         // sampler faults, dropped from the aggregates
  int backSolveSkipped = 0; // replicates whose class count blocked back-solving

  std::vector<int> retainedCounts;     // per replicate
  std::vector<double> discardedMax;    // per replicate, max discarded weight

  std::vector<double> piTruth, piMean, piMse;          // per true class
  std::vector<std::vector<double>> pTruth, pMean, pMse; // [item][true class], P(Y=2)
  std::vector<std::vector<int>> pCount;                // replicates backing each cell

  double clusterAccuracyMean = 0.0;
  double thresholdAccuracyMean = 0.0;
  std::vector<ParamSummary> params;

  double wallSeconds = 0.0; // informational only, kept out of serialization

  bool operator==(const StudyReport& other) const;
};

/// Deterministic given the configuration; replicate results are reduced in
/// index order no matter the scheduling.
StudyReport runStudy(const StudyConfig& cfg);

/// format is "text" or "structured" (JSON). Returns the written path.
std::string emitReport(const StudyReport& report, const std::string& dir,
                       const std::string& format);

StudyReport readReport(const std::string& path); // structured format only

/// Truth flattened to named scalars, ordering fixed per family; masks absent
/// from log-linear items read as zero coefficients.
std::vector<ParamSummary> flattenTrueParams(const ModelParams& params,
                                            const QMatrix& q);

} // namespace dcm
