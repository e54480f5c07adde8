#include "dcm/designs.hpp"

#include <stdexcept>

namespace dcm::designs {

namespace {

MixtureWeights weightsFor(const AttributeSpace& space,
                          const std::vector<Profile>& profiles,
                          const std::vector<double>& values) {
  std::vector<double> w(space.classCount(), 0.0);
  for (std::size_t i = 0; i < profiles.size(); ++i)
    w[space.indexOf(profiles[i])] = values[i];
  return MixtureWeights(std::move(w));
}

} // namespace

ResponseProbTable Design::fullTable() const {
  return buildProbTable(params, q, space, spec);
}

std::vector<std::size_t> Design::supportIndices() const {
  std::vector<std::size_t> idx;
  idx.reserve(classProfiles.size());
  for (const auto& p : classProfiles) idx.push_back(space.indexOf(p));
  return idx;
}

ResponseProbTable Design::supportTable() const {
  return fullTable().restrictedTo(supportIndices());
}

MixtureWeights Design::supportPi() const {
  std::vector<double> w;
  double total = 0.0;
  for (const auto& p : classProfiles) total += pi[space.indexOf(p)];
  for (const auto& p : classProfiles) w.push_back(pi[space.indexOf(p)] / total);
  return MixtureWeights(std::move(w));
}

Design nidaThreeAttribute() {
  QMatrix q({{1, 0, 0}, {1, 0, 0}, {1, 0, 0},
             {0, 1, 0}, {0, 1, 0}, {0, 1, 0},
             {0, 0, 1}, {0, 0, 1}, {0, 0, 1},
             {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}});
  const std::size_t J = q.items();
  NidaParams params;
  params.slip.assign(J, std::vector<double>(3, 0.1));
  params.guess.assign(J, std::vector<double>(3, 0.0));
  for (std::size_t j = 0; j < 3; ++j) params.guess[j][0] = 0.1;
  for (std::size_t j = 3; j < 6; ++j) params.guess[j][1] = 0.2;
  for (std::size_t j = 6; j < 9; ++j) params.guess[j][2] = 0.3;
  for (std::size_t j = 9; j < 13; ++j) params.guess[j] = {0.5, 0.5, 0.5};

  AttributeSpace space = AttributeSpace::binary(3);
  std::vector<Profile> profiles{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0},
                                {1, 0, 1}, {0, 1, 1}, {1, 1, 1}, {0, 0, 0}};
  std::vector<double> w{0.15, 0.15, 0.15, 0.1, 0.1, 0.1, 0.15, 0.1};
  return Design{"nida3",
                Family::Nida,
                q,
                params,
                space,
                ResponseSpec::binary(J),
                weightsFor(space, profiles, w),
                profiles};
}

Design ncrumThreeAttribute() {
  QMatrix q({{1, 0, 0}, {1, 0, 0}, {1, 0, 0},
             {0, 1, 0}, {0, 1, 0}, {0, 1, 0},
             {0, 0, 1}, {0, 0, 1}, {0, 0, 1},
             {1, 1, 0}, {1, 1, 0},
             {1, 0, 1}, {1, 0, 1},
             {0, 1, 1}, {0, 1, 1}});
  const std::size_t J = q.items();
  NcRumParams params;
  params.phi.assign(J, 0.9);
  params.penalty.assign(J, std::vector<double>(3, 0.0));
  for (std::size_t j = 0; j < 3; ++j) params.penalty[j][0] = 0.2;
  for (std::size_t j = 3; j < 6; ++j) params.penalty[j][1] = 0.3;
  for (std::size_t j = 6; j < 9; ++j) params.penalty[j][2] = 0.4;
  for (std::size_t j = 9; j < 11; ++j) params.penalty[j] = {0.5, 0.7, 0.0};
  for (std::size_t j = 11; j < 13; ++j) params.penalty[j] = {0.6, 0.0, 0.4};
  for (std::size_t j = 13; j < 15; ++j) params.penalty[j] = {0.0, 0.5, 0.5};

  AttributeSpace space = AttributeSpace::binary(3);
  std::vector<Profile> profiles{
      {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 1, 1}};
  std::vector<double> w{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 3};
  return Design{"ncrum3",
                Family::NcRum,
                q,
                params,
                space,
                ResponseSpec::binary(J),
                weightsFor(space, profiles, w),
                profiles};
}

Design lcdmThreeAttribute() {
  QMatrix q({{1, 0, 0}, {1, 0, 0}, {1, 0, 0},
             {0, 1, 0}, {0, 1, 0}, {0, 1, 0},
             {0, 0, 1}, {0, 0, 1}, {0, 0, 1},
             {1, 1, 0}, {1, 1, 0},
             {1, 0, 1}, {1, 0, 1},
             {0, 1, 1}, {0, 1, 1},
             {1, 1, 1}});
  LcdmParams params;
  auto mainEffect = [](std::uint32_t k, double lambda) {
    LcdmItem item;
    item.intercept = -2.0;
    item.terms = {{1u << k, lambda}};
    return item;
  };
  auto twoWay = [](std::uint32_t k1, std::uint32_t k2) {
    LcdmItem item;
    item.intercept = -2.0;
    item.terms = {{1u << k1, 2.0}, {1u << k2, 2.0}, {(1u << k1) | (1u << k2), 0.0}};
    return item;
  };
  for (int r = 0; r < 3; ++r) params.items.push_back(mainEffect(0, 4.0));
  for (int r = 0; r < 3; ++r) params.items.push_back(mainEffect(1, 4.0));
  for (int r = 0; r < 3; ++r) params.items.push_back(mainEffect(2, 4.0));
  for (int r = 0; r < 2; ++r) params.items.push_back(twoWay(0, 1));
  for (int r = 0; r < 2; ++r) params.items.push_back(twoWay(0, 2));
  for (int r = 0; r < 2; ++r) params.items.push_back(twoWay(1, 2));
  LcdmItem full;
  full.intercept = -2.0;
  full.terms = {{0b001, 1.0}, {0b010, 1.0}, {0b100, 1.0},
                {0b011, 0.0}, {0b101, 0.0}, {0b110, 0.0}, {0b111, 1.0}};
  params.items.push_back(full);

  AttributeSpace space = AttributeSpace::binary(3);
  std::vector<Profile> profiles{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0},
                                {1, 0, 1}, {0, 1, 1}, {1, 1, 1}, {0, 0, 0}};
  std::vector<double> w(8, 0.125);
  return Design{"lcdm3",
                Family::Lcdm,
                q,
                params,
                space,
                ResponseSpec::binary(q.items()),
                weightsFor(space, profiles, w),
                profiles};
}

Design designByName(const std::string& name) {
  if (name == "nida3") return nidaThreeAttribute();
  if (name == "ncrum3") return ncrumThreeAttribute();
  if (name == "lcdm3") return lcdmThreeAttribute();
  throw std::invalid_argument("unknown design: " + name +
                              " (expected nida3, ncrum3, or lcdm3)");
}

} // namespace dcm::designs
