// Command-line front end: simulation, identifiability checks, fitting,
// partition estimation, Q reconstruction, and replication studies.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "dcm/designs.hpp"
#include "dcm/harness.hpp"
#include "dcm/identify.hpp"
#include "dcm/inference.hpp"
#include "dcm/io.hpp"
#include "dcm/sampler.hpp"
#include "dcm/simulate.hpp"

using nlohmann::json;

namespace {

struct ModelInputs {
  dcm::ModelParams params;
  dcm::QMatrix q{1, 1};
  dcm::MixtureWeights pi{std::vector<double>{1.0}};
  dcm::AttributeSpace space{std::vector<int>{2}};
  dcm::ResponseSpec spec{std::vector<int>{2}};
};

ModelInputs loadInputs(const std::string& designName, const std::string& modelPath,
                       const std::string& qPath, const std::string& piPath) {
  if (!designName.empty()) {
    auto d = dcm::designs::designByName(designName);
    return {d.params, d.q, d.pi, d.space, d.spec};
  }
  if (modelPath.empty() || qPath.empty() || piPath.empty())
    throw CLI::ValidationError(
        "either --design or all of --model/--q/--pi are required");
  dcm::ModelParams params = dcm::loadModelParams(modelPath);
  dcm::QMatrix q = dcm::loadQMatrix(qPath);
  dcm::MixtureWeights pi(dcm::loadWeights(piPath));
  dcm::AttributeSpace space = dcm::AttributeSpace::binary(q.attributes());
  dcm::ResponseSpec spec = dcm::ResponseSpec::binary(q.items());
  if (pi.size() != space.classCount())
    throw std::invalid_argument("weight count does not match class count");
  return {std::move(params), std::move(q), std::move(pi), std::move(space),
          std::move(spec)};
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent class diagnostic model toolkit"};
  app.require_subcommand(1);

  std::string designName, modelPath, qPath, piPath, outPath, dataPath;
  std::string configPath, drawsPath, partitionsPath, codingPath = "auto";
  std::string reportDir, format = "text", theorem = "auto";
  std::size_t n = 2000;
  std::uint64_t seed = 1;

  auto addModelOpts = [&](CLI::App* c) {
    c->add_option("--design", designName, "built-in design name");
    c->add_option("--model", modelPath, "model parameter JSON");
    c->add_option("--q", qPath, "Q-matrix CSV");
    c->add_option("--pi", piPath, "class weight file");
  };

  auto* sim = app.add_subcommand("simulate", "draw a dataset from a model");
  addModelOpts(sim);
  sim->add_option("--n", n, "sample size")->required();
  sim->add_option("--seed", seed, "rng seed");
  sim->add_option("--out", outPath, "output CSV")->required();

  auto* check = app.add_subcommand("check-id", "identifiability checks");
  addModelOpts(check);
  check->add_option("--theorem", theorem,
                    "one of 1,2,3,4,cor1,auto (auto searches a partition)");
  check->add_flag("--support-only", "restrict to positively weighted classes");

  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler");
  fit->add_option("--data", dataPath, "dataset CSV")->required();
  fit->add_option("--config", configPath, "sampler config JSON");
  fit->add_option("--seed", seed, "rng seed (overrides config)");
  fit->add_option("--out", drawsPath, "draws CSV")->required();

  auto* cluster = app.add_subcommand(
      "cluster", "point estimate, truncation, and per-item partitions");
  cluster->add_option("--draws", drawsPath, "draws CSV")->required();
  cluster->add_option("--n", n, "sample size behind the draws")->required();
  cluster->add_option("--out", outPath, "report path (default stdout)");

  auto* recq = app.add_subcommand("reconstruct-q",
                                  "Q-matrix from per-item partitions");
  recq->add_option("--partitions", partitionsPath,
                   "JSON: list of per-item partitions (0-based blocks)")
      ->required();
  recq->add_option("--coding", codingPath,
                   "JSON list of class profiles, or 'auto'");
  recq->add_option("--attributes", n, "attribute count")->required();

  auto* repl = app.add_subcommand("replicate", "run a replication study");
  repl->add_option("--config", configPath, "study config JSON")->required();

  auto* rep = app.add_subcommand("report", "re-emit a structured report");
  rep->add_option("--in", reportDir, "directory holding report.json")->required();
  rep->add_option("--format", format, "text|structured");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      auto in = loadInputs(designName, modelPath, qPath, piPath);
      auto table = dcm::buildProbTable(in.params, in.q, in.space, in.spec);
      auto ds = dcm::simulate(table, in.pi, n, seed);
      dcm::writeDataset(ds, outPath);
      std::cout << "wrote " << ds.size() << " rows to " << outPath << "\n";
    } else if (check->parsed()) {
      auto in = loadInputs(designName, modelPath, qPath, piPath);
      auto table = dcm::buildProbTable(in.params, in.q, in.space, in.spec);
      dcm::MixtureWeights pi = in.pi;
      if (check->count("--support-only")) {
        const auto sup = pi.support();
        table = table.restrictedTo(sup);
        std::vector<double> w;
        double total = 0.0;
        for (auto a : sup) total += pi[a];
        for (auto a : sup) w.push_back(pi[a] / total);
        pi = dcm::MixtureWeights(w);
      }
      std::vector<dcm::IdentifiabilityVerdict> verdicts;
      if (theorem == "cor1") {
        verdicts.push_back(dcm::checkCorollary1(in.q));
      } else if (theorem == "4") {
        verdicts.push_back(dcm::checkTheorem4(table, pi, in.q, in.space));
      } else if (theorem == "auto") {
        verdicts.push_back(dcm::searchPartition(table, pi).second);
      } else {
        auto [part, v3] = dcm::searchPartition(table, pi);
        if (theorem == "1") verdicts.push_back(dcm::checkTheorem1(table, pi, part));
        else if (theorem == "2") verdicts.push_back(dcm::checkTheorem2(table, pi, part));
        else if (theorem == "3") verdicts.push_back(v3);
        else throw CLI::ValidationError("unknown --theorem value " + theorem);
      }
      bool allPass = true;
      for (const auto& v : verdicts) {
        std::cout << v.summary() << "\n";
        allPass = allPass && v.pass;
      }
      return allPass ? 0 : 2;
    } else if (fit->parsed()) {
      auto data = dcm::loadDataset(dataPath);
      dcm::SamplerConfig cfg;
      if (!configPath.empty()) cfg = dcm::loadSamplerConfig(configPath);
      if (fit->count("--seed")) cfg.seed = seed;
      std::vector<int> categories(data.items(), 0);
      for (const auto& row : data.rows)
        for (std::size_t j = 0; j < row.size(); ++j)
          categories[j] = std::max(categories[j], row[j]);
      for (int& c : categories) c = std::max(c, 2);
      auto draws = dcm::runChain(data, categories, cfg, /*progress=*/true);
      dcm::saveDraws(draws, drawsPath);
      std::cout << "wrote " << draws.draws.size() << " draws to " << drawsPath
                << "\n";
    } else if (cluster->parsed()) {
      auto draws = dcm::loadDraws(drawsPath);
      auto est = dcm::posteriorMean(draws);
      auto tr = dcm::truncateClasses(est, n);
      std::ostringstream os;
      os << "retained " << tr.retained.classes() << " classes (threshold "
         << tr.threshold << ")\npi-hat:";
      for (double w : tr.retained.pi) os << " " << w;
      os << "\n";
      for (std::size_t j = 0; j < draws.items; ++j) {
        os << "item " << j + 1 << " blocks:";
        for (const auto& block : dcm::clusterPartialInfo(tr.retained, j)) {
          os << " {";
          for (std::size_t i = 0; i < block.size(); ++i)
            os << (i ? "," : "") << block[i] + 1;
          os << "}";
        }
        os << "\n";
      }
      if (outPath.empty()) {
        std::cout << os.str();
      } else {
        std::ofstream out(outPath);
        out << os.str();
        std::cout << "wrote " << outPath << "\n";
      }
    } else if (recq->parsed()) {
      std::ifstream in(partitionsPath);
      if (!in) throw std::runtime_error("cannot read " + partitionsPath);
      json doc;
      in >> doc;
      std::vector<dcm::Partition> partitions;
      for (const auto& item : doc)
        partitions.push_back(item.get<dcm::Partition>());
      dcm::AttributeSpace space = dcm::AttributeSpace::binary(n);
      std::size_t classes = 0;
      for (const auto& p : partitions)
        for (const auto& b : p)
          for (int a : b) classes = std::max(classes, static_cast<std::size_t>(a) + 1);
      std::vector<dcm::Profile> coding;
      if (codingPath == "auto") {
        coding = dcm::searchCoding(partitions, space, classes);
      } else {
        std::ifstream cin2(codingPath);
        if (!cin2) throw std::runtime_error("cannot read " + codingPath);
        json cdoc;
        cin2 >> cdoc;
        for (const auto& p : cdoc) coding.push_back(p.get<dcm::Profile>());
      }
      auto rec = dcm::reconstructQ(partitions, space, coding);
      std::cout << "coding:";
      for (const auto& p : coding) {
        std::cout << " (";
        for (std::size_t k = 0; k < p.size(); ++k)
          std::cout << (k ? "," : "") << p[k];
        std::cout << ")";
      }
      std::cout << "\nQ rows:\n";
      for (const auto& row : rec.rows) {
        for (std::size_t k = 0; k < row.size(); ++k)
          std::cout << (k ? "," : "") << row[k];
        std::cout << "\n";
      }
      for (int j : rec.uninformativeItems)
        std::cout << "item " << j + 1 << " uninformative\n";
      for (int j : rec.inconsistentItems)
        std::cout << "item " << j + 1 << " inconsistent with the coding\n";
    } else if (repl->parsed()) {
      auto cfg = dcm::loadStudyConfig(configPath);
      if (const char* env = std::getenv("DCM_OUTPUT_DIR"); env && *env)
        cfg.outputDir = env;
      auto report = dcm::runStudy(cfg);
      std::cout << "study finished in " << report.wallSeconds << " s, excluded "
                << report.excluded << " replicate(s)\n";
      std::cout << "wrote " << dcm::emitReport(report, cfg.outputDir, "structured")
                << "\n";
      std::cout << "wrote " << dcm::emitReport(report, cfg.outputDir, "text")
                << "\n";
    } else if (rep->parsed()) {
      auto report = dcm::readReport(reportDir + "/report.json");
      if (format == "text") {
        std::cout << "wrote " << dcm::emitReport(report, reportDir, "text") << "\n";
      } else if (format == "structured") {
        std::cout << "wrote " << dcm::emitReport(report, reportDir, "structured")
                  << "\n";
      } else {
        throw CLI::ValidationError("unknown --format value " + format);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
