#pragma once

#include <string>

#include "dcm/models.hpp"
#include "dcm/types.hpp"

namespace dcm::designs {

/// A complete generating design: model, loading structure, latent space, and
/// class weights. classProfiles lists the supported profiles in reporting
/// order (the order used for truth tables and study reports); for designs
/// whose weights exclude some profiles it covers the support only.
struct Design {
  std::string name;
  Family family;
  QMatrix q;
  ModelParams params;
  AttributeSpace space;
  ResponseSpec spec;
  MixtureWeights pi; // over all classes in enumeration order
  std::vector<Profile> classProfiles;

  ResponseProbTable fullTable() const;

  /// Truth restricted to the supported classes, columns in classProfiles
  /// order. Weights are renormalized over the support (a no-op when the
  /// support is the whole space).
  ResponseProbTable supportTable() const;
  MixtureWeights supportPi() const;
  std::vector<std::size_t> supportIndices() const;
};

/// 13-item, 3-attribute noisy-input conjunctive design; all 8 profiles
/// weighted positive.
Design nidaThreeAttribute();

/// 15-item, 3-attribute reduced noncompensatory RUM design; 5 of 8 profiles
/// weighted positive.
Design ncrumThreeAttribute();

/// 16-item, 3-attribute log-linear design with a full-order interaction on
/// the last item; uniform weights over all 8 profiles.
Design lcdmThreeAttribute();

Design designByName(const std::string& name);

} // namespace dcm::designs
