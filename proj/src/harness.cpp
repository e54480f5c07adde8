#include "dcm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dcm/inference.hpp"
#include "dcm/simulate.hpp"

using nlohmann::json;

namespace dcm {

void StudyConfig::validate() const {
  if (replicates < 1) throw std::invalid_argument("StudyConfig: replicates < 1");
  if (n < 1) throw std::invalid_argument("StudyConfig: n < 1");
  if (design.empty()) throw std::invalid_argument("StudyConfig: no design");
  sampler.validate();
}

StudyConfig loadStudyConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json doc;
  in >> doc;
  StudyConfig cfg;
  cfg.design = doc.at("design").get<std::string>();
  cfg.n = doc.value("n", cfg.n);
  cfg.replicates = doc.value("replicates", cfg.replicates);
  cfg.masterSeed = doc.value("masterSeed", doc.value("seed", cfg.masterSeed));
  cfg.workers = doc.value("workers", cfg.workers);
  cfg.backSolve = doc.value("backSolve", cfg.backSolve);
  cfg.partialInfo = doc.value("partialInfo", cfg.partialInfo);
  cfg.outputDir = doc.value("outputDir", cfg.outputDir);
  if (doc.contains("sampler")) {
    const json& s = doc["sampler"];
    cfg.sampler.iterations = s.value("iterations", cfg.sampler.iterations);
    cfg.sampler.burnIn = s.value("burnIn", cfg.sampler.burnIn);
    cfg.sampler.thinning = s.value("thinning", cfg.sampler.thinning);
    cfg.sampler.stickCap = s.value("stickCap", cfg.sampler.stickCap);
    cfg.sampler.betaHyperprior =
        s.value("betaHyperprior", cfg.sampler.betaHyperprior);
    cfg.sampler.fixedBeta = s.value("fixedBeta", cfg.sampler.fixedBeta);
  }
  cfg.validate();
  return cfg;
}

namespace {

std::string maskLabel(std::uint32_t mask) {
  std::string s;
  for (std::uint32_t k = 0; k < 32; ++k)
    if ((mask >> k) & 1u) s += std::to_string(k + 1);
  return s;
}

std::vector<std::uint32_t> loadedMasks(const QMatrix& q, std::size_t j) {
  std::uint32_t loaded = 0;
  for (std::size_t k = 0; k < q.attributes(); ++k)
    if (q(j, k) == 1) loaded |= 1u << k;
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = loaded; m > 0; m = (m - 1) & loaded)
    masks.push_back(m);
  std::sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
    const int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  return masks;
}

} // namespace

std::vector<ParamSummary> flattenTrueParams(const ModelParams& params,
                                            const QMatrix& q) {
  std::vector<ParamSummary> out;
  auto add = [&](std::string name, double v) {
    out.push_back({std::move(name), v, 0.0, 0.0});
  };
  const Family f = familyOf(params);
  const std::size_t J = q.items();
  switch (f) {
    case Family::Dina:
    case Family::Dino: {
      const auto& slip = f == Family::Dina ? std::get<DinaParams>(params).slip
                                           : std::get<DinoParams>(params).slip;
      const auto& guess = f == Family::Dina
                              ? std::get<DinaParams>(params).guess
                              : std::get<DinoParams>(params).guess;
      for (std::size_t j = 0; j < J; ++j) {
        add("item" + std::to_string(j + 1) + ".s", slip[j]);
        add("item" + std::to_string(j + 1) + ".g", guess[j]);
      }
      break;
    }
    case Family::Nida: {
      const auto& p = std::get<NidaParams>(params);
      for (std::size_t j = 0; j < J; ++j)
        for (std::size_t k = 0; k < q.attributes(); ++k)
          if (q(j, k) == 1) {
            add("item" + std::to_string(j + 1) + ".s" + std::to_string(k + 1),
                p.slip[j][k]);
            add("item" + std::to_string(j + 1) + ".g" + std::to_string(k + 1),
                p.guess[j][k]);
          }
      break;
    }
    case Family::NcRum: {
      const auto& p = std::get<NcRumParams>(params);
      for (std::size_t j = 0; j < J; ++j) {
        add("item" + std::to_string(j + 1) + ".phi", p.phi[j]);
        for (std::size_t k = 0; k < q.attributes(); ++k)
          if (q(j, k) == 1)
            add("item" + std::to_string(j + 1) + ".r" + std::to_string(k + 1),
                p.penalty[j][k]);
      }
      break;
    }
    case Family::Crum: {
      const auto& p = std::get<CrumParams>(params);
      for (std::size_t j = 0; j < J; ++j) {
        add("item" + std::to_string(j + 1) + ".b0", p.intercept[j]);
        for (std::size_t k = 0; k < q.attributes(); ++k)
          if (q(j, k) == 1)
            add("item" + std::to_string(j + 1) + ".b" + std::to_string(k + 1),
                p.slope[j][k]);
      }
      break;
    }
    case Family::Lcdm: {
      const auto& p = std::get<LcdmParams>(params);
      for (std::size_t j = 0; j < J; ++j) {
        add("item" + std::to_string(j + 1) + ".eta", p.items[j].intercept);
        for (std::uint32_t mask : loadedMasks(q, j)) {
          double v = 0.0;
          for (const auto& [m, lambda] : p.items[j].terms)
            if (m == mask) v = lambda;
          add("item" + std::to_string(j + 1) + ".lambda" + maskLabel(mask), v);
        }
      }
      break;
    }
    case Family::Saturated:
      break;
  }
  return out;
}

namespace {

struct RepOut {
  bool fault = false;
  std::string faultMsg;
  int retained = 0;
  double maxDiscarded = 0.0;
  std::vector<char> matched;            // per true class
  std::vector<double> pi;               // aligned pi-hat
  std::vector<std::vector<double>> p;   // [item][true class], P(Y = 2)
  double clusterAcc = 0.0, thresholdAcc = 0.0;
  bool haveParams = false;
  std::vector<double> params;
};

RepOut runReplicate(const StudyConfig& cfg, const designs::Design& design,
                    const ResponseProbTable& truthTable,
                    const MixtureWeights& truthPi,
                    const std::vector<Partition>& trueParts, int r) {
  RepOut out;
  const std::size_t trueM = design.classProfiles.size();
  const std::size_t J = truthTable.items();
  out.matched.assign(trueM, 0);
  out.pi.assign(trueM, 0.0);
  out.p.assign(J, std::vector<double>(trueM, 0.0));

  Rng simRng = Rng::stream(cfg.masterSeed, {1, static_cast<std::uint64_t>(r)});
  Dataset data = simulate(truthTable, truthPi, cfg.n, simRng);

  std::vector<int> categories(J);
  for (std::size_t j = 0; j < J; ++j) categories[j] = design.spec.categories(j);

  SamplerConfig sc = cfg.sampler;
  sc.seed = Rng::stream(cfg.masterSeed, {2, static_cast<std::uint64_t>(r)}).next();

  PosteriorDraws draws;
  try {
    draws = runChain(data, categories, sc);
  } catch (const SamplerFault& f) {
    out.fault = true;
    out.faultMsg = f.what();
    return out;
  }

  const PointEstimate est = posteriorMean(draws);
  const TruncationResult tr = truncateClasses(est, cfg.n);
  out.retained = static_cast<int>(tr.retained.classes());
  for (double w : tr.discarded) out.maxDiscarded = std::max(out.maxDiscarded, w);

  PointEstimate eval = tr.retained;
  if (eval.classes() > trueM) {
    // keep the heaviest trueM classes so alignment stays injective
    std::vector<std::size_t> order(eval.classes());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return eval.pi[a] > eval.pi[b];
    });
    order.resize(trueM);
    std::sort(order.begin(), order.end());
    PointEstimate top;
    top.n = eval.n;
    for (std::size_t a : order) {
      top.pi.push_back(eval.pi[a]);
      top.probs.push_back(eval.probs[a]);
    }
    eval = std::move(top);
  }

  const LabelAlignment alignment = alignLabels(eval, truthTable);
  for (std::size_t a = 0; a < eval.classes(); ++a) {
    const int t = alignment.toTrue[a];
    out.matched[t] = 1;
    out.pi[t] = eval.pi[a];
    for (std::size_t j = 0; j < J; ++j) out.p[j][t] = eval.probs[a][j][1];
  }

  if (cfg.partialInfo) {
    std::vector<Partition> cluster(J), thr(J);
    for (std::size_t j = 0; j < J; ++j) {
      cluster[j] = clusterPartialInfo(eval, j);
      thr[j] = mergePartialInfoThreshold(eval, j, cfg.n);
    }
    out.clusterAcc = partialInfoAccuracy(cluster, trueParts, alignment, trueM);
    out.thresholdAcc = partialInfoAccuracy(thr, trueParts, alignment, trueM);
  }

  if (cfg.backSolve && eval.classes() == trueM) {
    std::vector<Profile> profiles(trueM);
    for (std::size_t a = 0; a < trueM; ++a)
      profiles[a] = design.classProfiles[alignment.toTrue[a]];
    try {
      const BackSolveResult res =
          backSolveParams(eval, design.q, design.family, profiles);
      const auto flat = flattenTrueParams(res.params, design.q);
      out.params.reserve(flat.size());
      for (const auto& e : flat) out.params.push_back(e.truth);
      out.haveParams = true;
    } catch (const std::runtime_error&) {
      out.haveParams = false; // singular design in this replicate
    }
  }
  return out;
}

} // namespace

StudyReport runStudy(const StudyConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  const designs::Design design = designs::designByName(cfg.design);
  const ResponseProbTable truthTable = design.supportTable();
  const MixtureWeights truthPi = design.supportPi();
  const std::size_t trueM = design.classProfiles.size();
  const std::size_t J = truthTable.items();

  std::vector<Partition> trueParts(J);
  for (std::size_t j = 0; j < J; ++j)
    trueParts[j] = truePartialInfo(truthTable, j);

  int workers = cfg.workers;
  if (const char* env = std::getenv("DCM_WORKERS"); env && *env)
    workers = std::atoi(env);
  if (workers <= 0)
    workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, cfg.replicates);

  std::vector<RepOut> results(cfg.replicates);
  std::atomic<int> nextIdx{0};
  auto work = [&]() {
    for (;;) {
      const int r = nextIdx.fetch_add(1);
      if (r >= cfg.replicates) return;
      results[r] =
          runReplicate(cfg, design, truthTable, truthPi, trueParts, r + 1);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  StudyReport rep;
  rep.design = design.name;
  rep.family = familyName(design.family);
  rep.n = cfg.n;
  rep.replicates = cfg.replicates;
  rep.piTruth.resize(trueM);
  for (std::size_t a = 0; a < trueM; ++a) rep.piTruth[a] = truthPi[a];
  rep.pTruth.assign(J, std::vector<double>(trueM));
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t a = 0; a < trueM; ++a)
      rep.pTruth[j][a] = truthTable.probs(j, a)[1];

  rep.piMean.assign(trueM, 0.0);
  rep.piMse.assign(trueM, 0.0);
  rep.pMean.assign(J, std::vector<double>(trueM, 0.0));
  rep.pMse.assign(J, std::vector<double>(trueM, 0.0));
  rep.pCount.assign(J, std::vector<int>(trueM, 0));
  std::vector<int> piCount(trueM, 0);
  std::vector<double> truthFlat;
  {
    const auto flat = flattenTrueParams(design.params, design.q);
    for (const auto& e : flat) {
      rep.params.push_back(e);
      truthFlat.push_back(e.truth);
    }
  }
  std::vector<int> paramCount(truthFlat.size(), 0);

  double clusterSum = 0.0, thresholdSum = 0.0;
  int used = 0;
  for (const RepOut& r : results) {
    if (r.fault) {
      ++rep.excluded;
      continue;
    }
    ++used;
    rep.retainedCounts.push_back(r.retained);
    rep.discardedMax.push_back(r.maxDiscarded);
    for (std::size_t a = 0; a < trueM; ++a) {
      if (!r.matched[a]) continue;
      ++piCount[a];
      rep.piMean[a] += r.pi[a];
      rep.piMse[a] += (r.pi[a] - rep.piTruth[a]) * (r.pi[a] - rep.piTruth[a]);
      for (std::size_t j = 0; j < J; ++j) {
        ++rep.pCount[j][a];
        rep.pMean[j][a] += r.p[j][a];
        rep.pMse[j][a] +=
            (r.p[j][a] - rep.pTruth[j][a]) * (r.p[j][a] - rep.pTruth[j][a]);
      }
    }
    clusterSum += r.clusterAcc;
    thresholdSum += r.thresholdAcc;
    if (cfg.backSolve) {
      if (r.haveParams) {
        for (std::size_t i = 0; i < truthFlat.size(); ++i) {
          ++paramCount[i];
          rep.params[i].mean += r.params[i];
          rep.params[i].mse +=
              (r.params[i] - truthFlat[i]) * (r.params[i] - truthFlat[i]);
        }
      } else {
        ++rep.backSolveSkipped;
      }
    }
  }
  for (std::size_t a = 0; a < trueM; ++a) {
    if (piCount[a] > 0) {
      rep.piMean[a] /= piCount[a];
      rep.piMse[a] /= piCount[a];
    }
    for (std::size_t j = 0; j < J; ++j)
      if (rep.pCount[j][a] > 0) {
        rep.pMean[j][a] /= rep.pCount[j][a];
        rep.pMse[j][a] /= rep.pCount[j][a];
      }
  }
  for (std::size_t i = 0; i < truthFlat.size(); ++i)
    if (paramCount[i] > 0) {
      rep.params[i].mean /= paramCount[i];
      rep.params[i].mse /= paramCount[i];
    }
  if (used > 0) {
    rep.clusterAccuracyMean = clusterSum / used;
    rep.thresholdAccuracyMean = thresholdSum / used;
  }
  rep.wallSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return rep;
}

bool StudyReport::operator==(const StudyReport& o) const {
  // wallSeconds is run metadata, not a result
  return design == o.design && family == o.family && n == o.n &&
         replicates == o.replicates && excluded == o.excluded &&
         backSolveSkipped == o.backSolveSkipped &&
         retainedCounts == o.retainedCounts && discardedMax == o.discardedMax &&
         piTruth == o.piTruth && piMean == o.piMean && piMse == o.piMse &&
         pTruth == o.pTruth && pMean == o.pMean && pMse == o.pMse &&
         pCount == o.pCount && clusterAccuracyMean == o.clusterAccuracyMean &&
         thresholdAccuracyMean == o.thresholdAccuracyMean && params == o.params;
}

namespace {

json reportToJson(const StudyReport& r) {
  json doc;
  doc["design"] = r.design;
  doc["family"] = r.family;
  doc["n"] = r.n;
  doc["replicates"] = r.replicates;
  doc["excluded"] = r.excluded;
  doc["backSolveSkipped"] = r.backSolveSkipped;
  doc["retainedCounts"] = r.retainedCounts;
  doc["discardedMax"] = r.discardedMax;
  doc["piTruth"] = r.piTruth;
  doc["piMean"] = r.piMean;
  doc["piMse"] = r.piMse;
  doc["pTruth"] = r.pTruth;
  doc["pMean"] = r.pMean;
  doc["pMse"] = r.pMse;
  doc["pCount"] = r.pCount;
  doc["clusterAccuracyMean"] = r.clusterAccuracyMean;
  doc["thresholdAccuracyMean"] = r.thresholdAccuracyMean;
  json params = json::array();
  for (const auto& p : r.params)
    params.push_back({{"name", p.name},
                      {"truth", p.truth},
                      {"mean", p.mean},
                      {"mse", p.mse}});
  doc["params"] = std::move(params);
  return doc;
}

} // namespace

std::string emitReport(const StudyReport& report, const std::string& dir,
                       const std::string& format) {
  std::filesystem::create_directories(dir);
  if (format == "structured") {
    const std::string path = dir + "/report.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << reportToJson(report).dump(2) << "\n";
    return path;
  }
  if (format != "text")
    throw std::invalid_argument("emitReport: unknown format '" + format + "'");

  const std::string path = dir + "/report.txt";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(4);
  out << std::fixed;
  out << "design " << report.design << " (" << report.family << "), n=" << report.n
      << ", replicates=" << report.replicates << ", excluded=" << report.excluded
      << "\n\n";
  out << "retained class counts:";
  for (int c : report.retainedCounts) out << " " << c;
  out << "\nmax discarded weight:";
  {
    double m = 0.0;
    for (double d : report.discardedMax) m = std::max(m, d);
    out << " " << m;
  }
  out << "\n\nclass weights (truth / mean / mse)\n";
  for (std::size_t a = 0; a < report.piTruth.size(); ++a)
    out << "  C" << a + 1 << "  " << report.piTruth[a] << "  "
        << report.piMean[a] << "  " << report.piMse[a] << "\n";
  out << "\nP(Y=2) per item x class (mean, truth in brackets)\n";
  for (std::size_t j = 0; j < report.pTruth.size(); ++j) {
    out << "  item " << j + 1 << ":";
    for (std::size_t a = 0; a < report.pTruth[j].size(); ++a)
      out << "  " << report.pMean[j][a] << " [" << report.pTruth[j][a] << "]";
    out << "\n";
  }
  out << "\npartial information accuracy: clustering "
      << report.clusterAccuracyMean << ", threshold merge "
      << report.thresholdAccuracyMean << "\n";
  if (!report.params.empty()) {
    out << "\nstructural parameters (truth / mean / mse)\n";
    for (const auto& p : report.params)
      out << "  " << p.name << "  " << p.truth << "  " << p.mean << "  "
          << p.mse << "\n";
  }
  return path;
}

StudyReport readReport(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json doc;
  in >> doc;
  StudyReport r;
  r.design = doc.at("design").get<std::string>();
  r.family = doc.at("family").get<std::string>();
  r.n = doc.at("n").get<std::size_t>();
  r.replicates = doc.at("replicates").get<int>();
  r.excluded = doc.at("excluded").get<int>();
  r.backSolveSkipped = doc.at("backSolveSkipped").get<int>();
  r.retainedCounts = doc.at("retainedCounts").get<std::vector<int>>();
  r.discardedMax = doc.at("discardedMax").get<std::vector<double>>();
  r.piTruth = doc.at("piTruth").get<std::vector<double>>();
  r.piMean = doc.at("piMean").get<std::vector<double>>();
  r.piMse = doc.at("piMse").get<std::vector<double>>();
  r.pTruth = doc.at("pTruth").get<std::vector<std::vector<double>>>();
  r.pMean = doc.at("pMean").get<std::vector<std::vector<double>>>();
  r.pMse = doc.at("pMse").get<std::vector<std::vector<double>>>();
  r.pCount = doc.at("pCount").get<std::vector<std::vector<int>>>();
  r.clusterAccuracyMean = doc.at("clusterAccuracyMean").get<double>();
  r.thresholdAccuracyMean = doc.at("thresholdAccuracyMean").get<double>();
  for (const auto& p : doc.at("params"))
    r.params.push_back({p.at("name").get<std::string>(),
                        p.at("truth").get<double>(), p.at("mean").get<double>(),
                        p.at("mse").get<double>()});
  return r;
}

} // namespace dcm
