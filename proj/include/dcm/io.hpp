#pragma once

#include <string>

#include "dcm/models.hpp"
#include "dcm/sampler.hpp"
#include "dcm/types.hpp"

namespace dcm {

// Model parameters as a family-tagged JSON document.
void saveModelParams(const ModelParams& params, const std::string& path);
ModelParams loadModelParams(const std::string& path);

// Q-matrix as CSV of 0/1 entries, one item per row, no header.
void saveQMatrix(const QMatrix& q, const std::string& path);
QMatrix loadQMatrix(const std::string& path);

// Mixture weights as whitespace-separated numbers.
void saveWeights(const std::vector<double>& pi, const std::string& path);
std::vector<double> loadWeights(const std::string& path);

// Posterior draws in long CSV form, one value per row, metadata in leading
// comment lines.
void saveDraws(const PosteriorDraws& draws, const std::string& path);
PosteriorDraws loadDraws(const std::string& path);

SamplerConfig loadSamplerConfig(const std::string& path);

} // namespace dcm
