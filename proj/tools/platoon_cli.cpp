#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "platoon/scenario.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

platoon::Matrix matrixFromJson(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw platoon::ValidationError(name + ": expected an array of rows");
  }
  platoon::Matrix m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j[0].size()) {
      throw platoon::ValidationError(name + ": rows must have equal length");
    }
    for (std::size_t c = 0; c < j[i].size(); ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

ordered_json matrixToJson(const platoon::Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

int runStabilityCheck(const std::string& configPath, const std::string& matricesPath,
                      const std::string& phaseId, double upperBoundOverride, int budget) {
  platoon::LmiProblem problem;
  if (!matricesPath.empty()) {
    std::ifstream in(matricesPath);
    if (!in) throw platoon::ValidationError("cannot open matrix file '" + matricesPath + "'");
    json doc = json::parse(in);
    problem.state = matrixFromJson(doc.at("state"), "state");
    problem.delay = matrixFromJson(doc.at("delay"), "delay");
    problem.delayBound = doc.at("upper_bound").get<double>();
    problem.derivativeBound = doc.at("derivative_bound").get<double>();
  } else {
    const auto config = platoon::loadConfig(configPath);
    if (!config.attackEnabled) {
      throw platoon::ValidationError("config has no attack section; nothing to certify");
    }
    std::string id = phaseId;
    if (id.empty()) id = config.roles.retrievalOpen;
    if (id.empty()) id = config.roles.attacked;
    problem = platoon::stabilityProblemForPhase(config, id);
  }
  if (upperBoundOverride > 0.0) problem.delayBound = upperBoundOverride;

  platoon::SearchOptions options;
  options.budget = budget;
  const auto result = platoon::searchCertificate(problem, options);

  ordered_json report;
  report["dimension"] = problem.state.rows();
  report["upper_bound"] = problem.delayBound;
  report["derivative_bound"] = problem.derivativeBound;
  report["certificate_found"] = result.feasible;
  report["evaluations"] = result.evaluations;
  if (result.feasible) {
    report["margin"] = result.certificate.margin;
    report["derivative_weight"] = matrixToJson(result.certificate.derivWeight);
    report["delay_weight"] = matrixToJson(result.certificate.delayWeight);
    report["state_weight"] = matrixToJson(result.certificate.stateWeight);
  } else {
    report["best_margin"] = result.bestMargin;
    report["note"] = result.note;
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic platoon consensus simulator with delay-attack detection,\n"
               "leader re-election under a dwell-time switching law, and a delay-dependent\n"
               "stability certificate search."};
  app.require_subcommand(1);

  std::string configPath, outDir, tracePath, matricesPath, phaseId;
  double upperBound = 0.0;
  int budget = 64;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and export its trace");
  simulate->add_option("--config", configPath, "scenario config (JSON)")->required();
  simulate->add_option("--out", outDir, "output directory")->required();

  auto* validate = app.add_subcommand("validate-config", "Parse and cross-validate a config");
  validate->add_option("config", configPath, "scenario config (JSON)")->required();

  auto* stability = app.add_subcommand(
      "stability-check", "Search a delay-dependent stability certificate");
  stability->add_option("--config", configPath, "scenario config (JSON)");
  stability->add_option("--matrices", matricesPath,
                        "explicit problem file with state/delay matrices and bounds");
  stability->add_option("--phase", phaseId, "phase id to certify (default: retrieval_open role)");
  stability->add_option("--upper-bound", upperBound, "override the delay upper bound");
  stability->add_option("--budget", budget, "candidate starts for the search");

  auto* plot = app.add_subcommand("plot", "Re-render SVG charts from an exported trace.csv");
  plot->add_option("--trace", tracePath, "trace.csv path")->required();
  plot->add_option("--out", outDir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const auto config = platoon::loadConfig(configPath);
      const auto trace = platoon::run(config);
      platoon::exportTrace(trace, outDir);
      std::cout << "wrote trace for " << trace.records.size() << " samples to " << outDir
                << "\n";
      return 0;
    }
    if (validate->parsed()) {
      platoon::loadConfig(configPath);
      std::cout << "config ok\n";
      return 0;
    }
    if (stability->parsed()) {
      if (configPath.empty() == matricesPath.empty()) {
        std::cerr << "stability-check needs exactly one of --config or --matrices\n";
        return 1;
      }
      return runStabilityCheck(configPath, matricesPath, phaseId, upperBound, budget);
    }
    if (plot->parsed()) {
      platoon::renderChartsFromCsv(tracePath, outDir);
      std::cout << "wrote charts to " << outDir << "\n";
      return 0;
    }
  } catch (const platoon::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const platoon::ContractViolation& e) {
    std::cerr << "runtime contract violation: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
