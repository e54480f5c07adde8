#include "dcm/models.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace dcm {

namespace {

void requireBinarySpace(const AttributeSpace& space) {
  if (!space.isBinary())
    throw std::invalid_argument(
        "model family requires binary attributes; use the saturated family");
}

void requireOpenUnit(double v, const char* what, std::size_t j) {
  if (!(v > 0.0 && v < 1.0))
    throw std::domain_error(std::string(what) + " outside (0,1) at item " +
                            std::to_string(j + 1));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

Family familyOf(const ModelParams& params) {
  return static_cast<Family>(params.index());
}

const char* familyName(Family f) {
  switch (f) {
    case Family::Dina: return "dina";
    case Family::Dino: return "dino";
    case Family::Nida: return "nida";
    case Family::NcRum: return "ncrum";
    case Family::Crum: return "crum";
    case Family::Lcdm: return "lcdm";
    case Family::Saturated: return "saturated";
  }
  return "?";
}

Family familyFromName(const std::string& name) {
  static const std::map<std::string, Family> table = {
      {"dina", Family::Dina},   {"dino", Family::Dino},
      {"nida", Family::Nida},   {"ncrum", Family::NcRum},
      {"crum", Family::Crum},   {"lcdm", Family::Lcdm},
      {"saturated", Family::Saturated}};
  auto it = table.find(name);
  if (it == table.end())
    throw std::invalid_argument("unknown model family: " + name);
  return it->second;
}

int idealResponseDina(const Profile& profile, const std::vector<int>& qrow) {
  if (profile.size() != qrow.size())
    throw std::invalid_argument("ideal response: length mismatch");
  for (std::size_t k = 0; k < qrow.size(); ++k) {
    if (profile[k] < 0 || profile[k] > 1)
      throw std::invalid_argument("ideal response requires binary attributes");
    if (profile[k] < qrow[k]) return 0;
  }
  return 1;
}

int idealResponseDino(const Profile& profile, const std::vector<int>& qrow) {
  if (profile.size() != qrow.size())
    throw std::invalid_argument("ideal response: length mismatch");
  // 1 - prod (1-alpha_k)^{q_jk}, empty product = 1
  for (std::size_t k = 0; k < qrow.size(); ++k) {
    if (profile[k] < 0 || profile[k] > 1)
      throw std::invalid_argument("ideal response requires binary attributes");
    if (qrow[k] == 1 && profile[k] == 1) return 1;
  }
  return 0;
}

namespace {

double positiveProb(const ModelParams& params, const QMatrix& q, std::size_t j,
                    const Profile& a, const AttributeSpace& space) {
  const auto& qrow = q.row(j);
  switch (familyOf(params)) {
    case Family::Dina: {
      requireBinarySpace(space);
      const auto& m = std::get<DinaParams>(params);
      requireOpenUnit(m.slip[j], "slip", j);
      requireOpenUnit(m.guess[j], "guess", j);
      return idealResponseDina(a, qrow) ? 1.0 - m.slip[j] : m.guess[j];
    }
    case Family::Dino: {
      requireBinarySpace(space);
      const auto& m = std::get<DinoParams>(params);
      requireOpenUnit(m.slip[j], "slip", j);
      requireOpenUnit(m.guess[j], "guess", j);
      return idealResponseDino(a, qrow) ? 1.0 - m.slip[j] : m.guess[j];
    }
    case Family::Nida: {
      requireBinarySpace(space);
      const auto& m = std::get<NidaParams>(params);
      double p = 1.0;
      for (std::size_t k = 0; k < qrow.size(); ++k) {
        if (qrow[k] == 0) continue;
        requireOpenUnit(m.slip[j][k], "slip", j);
        requireOpenUnit(m.guess[j][k], "guess", j);
        p *= a[k] == 1 ? 1.0 - m.slip[j][k] : m.guess[j][k];
      }
      return p;
    }
    case Family::NcRum: {
      requireBinarySpace(space);
      const auto& m = std::get<NcRumParams>(params);
      requireOpenUnit(m.phi[j], "phi", j);
      double p = m.phi[j];
      for (std::size_t k = 0; k < qrow.size(); ++k) {
        if (qrow[k] == 0) continue;
        requireOpenUnit(m.penalty[j][k], "penalty r", j);
        if (a[k] == 0) p *= m.penalty[j][k];
      }
      return p;
    }
    case Family::Crum: {
      requireBinarySpace(space);
      const auto& m = std::get<CrumParams>(params);
      double x = m.intercept[j];
      for (std::size_t k = 0; k < qrow.size(); ++k)
        if (qrow[k] == 1 && a[k] == 1) x += m.slope[j][k];
      return logistic(x);
    }
    case Family::Lcdm: {
      requireBinarySpace(space);
      const auto& item = std::get<LcdmParams>(params).items[j];
      double x = item.intercept;
      for (const auto& [mask, lambda] : item.terms) {
        bool active = true;
        for (std::size_t k = 0; k < qrow.size(); ++k) {
          const bool inTerm = (mask >> k) & 1u;
          if (inTerm && (qrow[k] == 0 || a[k] == 0)) {
            active = false;
            break;
          }
        }
        if (active) x += lambda;
      }
      return logistic(x);
    }
    default:
      throw std::logic_error("positiveProb: saturated family");
  }
}

} // namespace

std::vector<double> responseProb(const ModelParams& params, const QMatrix& q,
                                 std::size_t j, const Profile& profile,
                                 const AttributeSpace& space) {
  if (familyOf(params) == Family::Saturated) {
    const auto& t = std::get<SaturatedParams>(params).table;
    return t.probs(j, space.indexOf(profile));
  }
  const double p = positiveProb(params, q, j, profile, space);
  return {1.0 - p, p};
}

ResponseProbTable buildProbTable(const ModelParams& params, const QMatrix& q,
                                 const AttributeSpace& space,
                                 const ResponseSpec& spec) {
  const std::size_t J = q.items();
  const std::size_t M = space.classCount();
  if (spec.items() != J)
    throw std::invalid_argument("buildProbTable: response spec length mismatch");
  ResponseProbTable table(J, M);
  if (familyOf(params) == Family::Saturated) {
    const auto& src = std::get<SaturatedParams>(params).table;
    if (src.items() != J || src.classes() != M)
      throw std::invalid_argument("buildProbTable: saturated table shape mismatch");
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t a = 0; a < M; ++a)
        table.setProbs(j, a, src.probs(j, a));
    table.validate();
    return table;
  }
  for (std::size_t j = 0; j < J; ++j) {
    if (spec.categories(j) != 2)
      throw std::invalid_argument(
          "parametric families support binary responses only");
    for (std::size_t a = 0; a < M; ++a)
      table.setProbs(j, a, responseProb(params, q, j, space.profileAt(a), space));
  }
  table.validate();
  return table;
}

Partition truePartialInfo(const ResponseProbTable& table, std::size_t j) {
  Partition blocks;
  const std::size_t M = table.classes();
  std::vector<bool> placed(M, false);
  for (std::size_t a = 0; a < M; ++a) {
    if (placed[a]) continue;
    std::vector<int> block{static_cast<int>(a)};
    placed[a] = true;
    for (std::size_t b = a + 1; b < M; ++b) {
      if (!placed[b] && table.probs(j, a) == table.probs(j, b)) {
        block.push_back(static_cast<int>(b));
        placed[b] = true;
      }
    }
    blocks.push_back(std::move(block));
  }
  return canonicalPartition(std::move(blocks));
}

} // namespace dcm
