#include "dcm/io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

using nlohmann::json;

namespace dcm {

namespace {

std::ofstream openOut(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream openIn(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

json tableToJson(const ResponseProbTable& t) {
  json cells = json::array();
  for (std::size_t j = 0; j < t.items(); ++j) {
    json row = json::array();
    for (std::size_t a = 0; a < t.classes(); ++a) row.push_back(t.probs(j, a));
    cells.push_back(std::move(row));
  }
  return cells;
}

ResponseProbTable tableFromJson(const json& cells) {
  const std::size_t J = cells.size();
  const std::size_t M = J ? cells.at(0).size() : 0;
  ResponseProbTable t(J, M);
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t a = 0; a < M; ++a)
      t.setProbs(j, a, cells.at(j).at(a).get<std::vector<double>>());
  return t;
}

} // namespace

void saveModelParams(const ModelParams& params, const std::string& path) {
  json doc;
  doc["family"] = familyName(familyOf(params));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DinaParams> ||
                      std::is_same_v<T, DinoParams>) {
          doc["slip"] = p.slip;
          doc["guess"] = p.guess;
        } else if constexpr (std::is_same_v<T, NidaParams>) {
          doc["slip"] = p.slip;
          doc["guess"] = p.guess;
        } else if constexpr (std::is_same_v<T, NcRumParams>) {
          doc["phi"] = p.phi;
          doc["penalty"] = p.penalty;
        } else if constexpr (std::is_same_v<T, CrumParams>) {
          doc["intercept"] = p.intercept;
          doc["slope"] = p.slope;
        } else if constexpr (std::is_same_v<T, LcdmParams>) {
          json items = json::array();
          for (const auto& it : p.items) {
            json terms = json::array();
            for (const auto& [mask, lambda] : it.terms)
              terms.push_back({{"mask", mask}, {"lambda", lambda}});
            items.push_back({{"intercept", it.intercept}, {"terms", terms}});
          }
          doc["items"] = std::move(items);
        } else {
          doc["table"] = tableToJson(p.table);
        }
      },
      params);
  openOut(path) << doc.dump(2) << "\n";
}

ModelParams loadModelParams(const std::string& path) {
  json doc;
  openIn(path) >> doc;
  const Family f = familyFromName(doc.at("family").get<std::string>());
  switch (f) {
    case Family::Dina:
      return DinaParams{doc.at("slip").get<std::vector<double>>(),
                        doc.at("guess").get<std::vector<double>>()};
    case Family::Dino:
      return DinoParams{doc.at("slip").get<std::vector<double>>(),
                        doc.at("guess").get<std::vector<double>>()};
    case Family::Nida:
      return NidaParams{
          doc.at("slip").get<std::vector<std::vector<double>>>(),
          doc.at("guess").get<std::vector<std::vector<double>>>()};
    case Family::NcRum:
      return NcRumParams{
          doc.at("phi").get<std::vector<double>>(),
          doc.at("penalty").get<std::vector<std::vector<double>>>()};
    case Family::Crum:
      return CrumParams{
          doc.at("intercept").get<std::vector<double>>(),
          doc.at("slope").get<std::vector<std::vector<double>>>()};
    case Family::Lcdm: {
      LcdmParams p;
      for (const auto& it : doc.at("items")) {
        LcdmItem item;
        item.intercept = it.at("intercept").get<double>();
        for (const auto& t : it.at("terms"))
          item.terms.emplace_back(t.at("mask").get<std::uint32_t>(),
                                  t.at("lambda").get<double>());
        p.items.push_back(std::move(item));
      }
      return p;
    }
    case Family::Saturated:
      return SaturatedParams{tableFromJson(doc.at("table"))};
  }
  throw std::logic_error("loadModelParams: unreachable");
}

void saveQMatrix(const QMatrix& q, const std::string& path) {
  auto out = openOut(path);
  for (std::size_t j = 0; j < q.items(); ++j) {
    for (std::size_t k = 0; k < q.attributes(); ++k)
      out << (k ? "," : "") << q(j, k);
    out << "\n";
  }
}

QMatrix loadQMatrix(const std::string& path) {
  auto in = openIn(path);
  std::vector<std::vector<int>> rows;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::vector<int> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stoi(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ": bad entry at line " +
                                 std::to_string(lineNo));
      }
    }
    rows.push_back(std::move(row));
  }
  return QMatrix(rows);
}

void saveWeights(const std::vector<double>& pi, const std::string& path) {
  auto out = openOut(path);
  out.precision(17);
  for (double w : pi) out << w << "\n";
}

std::vector<double> loadWeights(const std::string& path) {
  auto in = openIn(path);
  std::vector<double> pi;
  double w;
  while (in >> w) pi.push_back(w);
  if (!in.eof()) throw std::runtime_error(path + ": non-numeric weight");
  return pi;
}

void saveDraws(const PosteriorDraws& draws, const std::string& path) {
  auto out = openOut(path);
  out.precision(17);
  out << "# n=" << draws.n << " items=" << draws.items << " categories=";
  for (std::size_t j = 0; j < draws.categories.size(); ++j)
    out << (j ? ";" : "") << draws.categories[j];
  out << "\n";
  out << "iteration,class,field,item,category,value\n";
  for (const auto& d : draws.draws) {
    for (std::size_t a = 0; a < d.pi.size(); ++a) {
      out << d.iteration << "," << a << ",pi,,," << d.pi[a] << "\n";
      for (std::size_t j = 0; j < d.probs[a].size(); ++j)
        for (std::size_t y = 0; y < d.probs[a][j].size(); ++y)
          out << d.iteration << "," << a << ",p," << j << "," << y << ","
              << d.probs[a][j][y] << "\n";
    }
  }
}

PosteriorDraws loadDraws(const std::string& path) {
  auto in = openIn(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# n=", 0) != 0)
    throw std::runtime_error(path + ": missing draws metadata line");
  PosteriorDraws out;
  {
    std::stringstream ss(line.substr(2));
    std::string tok;
    while (ss >> tok) {
      if (tok.rfind("n=", 0) == 0) out.n = std::stoul(tok.substr(2));
      else if (tok.rfind("items=", 0) == 0) out.items = std::stoul(tok.substr(6));
      else if (tok.rfind("categories=", 0) == 0) {
        std::stringstream cs(tok.substr(11));
        std::string c;
        while (std::getline(cs, c, ';')) out.categories.push_back(std::stoi(c));
      }
    }
  }
  std::getline(in, line); // column header
  int lineNo = 2;
  Draw* cur = nullptr;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string iterS, classS, field, itemS, catS, valueS;
    if (!std::getline(ss, iterS, ',') || !std::getline(ss, classS, ',') ||
        !std::getline(ss, field, ',') || !std::getline(ss, itemS, ',') ||
        !std::getline(ss, catS, ',') || !std::getline(ss, valueS))
      throw std::runtime_error(path + ": malformed row at line " +
                               std::to_string(lineNo));
    const int iter = std::stoi(iterS);
    const std::size_t cls = std::stoul(classS);
    const double value = std::stod(valueS);
    if (!cur || cur->iteration != iter) {
      out.draws.emplace_back();
      cur = &out.draws.back();
      cur->iteration = iter;
    }
    if (cls >= cur->pi.size()) {
      cur->pi.resize(cls + 1, 0.0);
      cur->probs.resize(cls + 1,
                        std::vector<std::vector<double>>(out.items));
      for (std::size_t j = 0; j < out.items; ++j)
        cur->probs[cls][j].assign(out.categories[j], 0.0);
    }
    if (field == "pi") {
      cur->pi[cls] = value;
    } else if (field == "p") {
      cur->probs[cls][std::stoul(itemS)][std::stoul(catS)] = value;
    } else {
      throw std::runtime_error(path + ": unknown field at line " +
                               std::to_string(lineNo));
    }
  }
  return out;
}

SamplerConfig loadSamplerConfig(const std::string& path) {
  json doc;
  openIn(path) >> doc;
  SamplerConfig cfg;
  cfg.iterations = doc.value("iterations", cfg.iterations);
  cfg.burnIn = doc.value("burnIn", cfg.burnIn);
  cfg.thinning = doc.value("thinning", cfg.thinning);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.stickCap = doc.value("stickCap", cfg.stickCap);
  cfg.betaHyperprior = doc.value("betaHyperprior", cfg.betaHyperprior);
  cfg.fixedBeta = doc.value("fixedBeta", cfg.fixedBeta);
  cfg.validate();
  return cfg;
}

} // namespace dcm
