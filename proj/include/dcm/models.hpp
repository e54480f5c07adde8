#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "dcm/types.hpp"

namespace dcm {

// Parametric families. The five structural families are binary-response;
// multi-category items go through Saturated. Per-item grids hold values only
// where the Q-matrix loads (unused cells are ignored).

struct DinaParams {
  std::vector<double> slip, guess; // per item, each in (0,1)
};

struct DinoParams {
  std::vector<double> slip, guess;
};

/// Noisy-input conjunctive model. The slip/guess grids are indexed (item,
/// attribute) so designs may vary the per-skill parameters across items; a
/// model with purely attribute-level parameters repeats the same column.
struct NidaParams {
  std::vector<std::vector<double>> slip, guess; // J x K, used where q_jk = 1
};

struct NcRumParams {
  std::vector<double> phi;                   // per item, in (0,1)
  std::vector<std::vector<double>> penalty;  // r_jk in (0,1), where q_jk = 1
};

struct CrumParams {
  std::vector<double> intercept;             // beta_0 per item
  std::vector<std::vector<double>> slope;    // beta_k, where q_jk = 1
};

/// Log-linear model with all-order interactions among loaded attributes.
/// Each term is keyed by a bitmask over attributes; unlisted terms are zero.
struct LcdmItem {
  double intercept = 0.0;                          // additive intercept eta_j
  std::vector<std::pair<std::uint32_t, double>> terms; // (attribute mask, lambda)
};

struct LcdmParams {
  std::vector<LcdmItem> items;
};

struct SaturatedParams {
  ResponseProbTable table;
};

using ModelParams = std::variant<DinaParams, DinoParams, NidaParams,
                                 NcRumParams, CrumParams, LcdmParams,
                                 SaturatedParams>;

enum class Family { Dina, Dino, Nida, NcRum, Crum, Lcdm, Saturated };

Family familyOf(const ModelParams& params);
const char* familyName(Family f);
Family familyFromName(const std::string& name);

/// Conjunctive ideal response: 1 iff the profile has every attribute the
/// item requires. Binary attributes only.
int idealResponseDina(const Profile& profile, const std::vector<int>& qrow);

/// Disjunctive ideal response: 1 iff at least one required attribute is
/// present. Binary attributes only.
int idealResponseDino(const Profile& profile, const std::vector<int>& qrow);

/// Response distribution of item j at a profile: (1-p, p) for the binary
/// structural families, the stored cell for Saturated.
std::vector<double> responseProb(const ModelParams& params, const QMatrix& q,
                                 std::size_t j, const Profile& profile,
                                 const AttributeSpace& space);

/// Materializes p_{j,alpha} for every item and every class of the space.
ResponseProbTable buildProbTable(const ModelParams& params, const QMatrix& q,
                                 const AttributeSpace& space,
                                 const ResponseSpec& spec);

/// Groups classes with identical response distributions on item j. Exact
/// comparison; intended for model-generated tables.
Partition truePartialInfo(const ResponseProbTable& table, std::size_t j);

} // namespace dcm
