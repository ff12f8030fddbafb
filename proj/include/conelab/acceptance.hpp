#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "conelab/io.hpp"

namespace conelab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  double budget = 0.0;  // seconds, 0 = none
  Json detail = Json::object();
};

struct AcceptanceOptions {
  std::uint64_t seed = 0;
  bool quick = false;     // criterion 11 replays a reduced subset
  std::vector<int> only;  // empty = all
};

CriterionResult run_criterion(int id, const AcceptanceOptions& opt);
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);

// one line per criterion: "[PASS] 3 parametrix identities with perturbation (1.2 s) ..."
std::string summary_line(const CriterionResult& r);
// deterministic report (no timings)
Json results_json(const std::vector<CriterionResult>& rs);

}  // namespace conelab
