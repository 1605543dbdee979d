#pragma once

// Ready-to-run benchmark problems with their published reference costs and
// the run settings used to reproduce them.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ocpkit/problem.hpp"
#include "ocpkit/refinement.hpp"

namespace ocpkit {

struct BenchmarkCase {
  std::string name;
  std::shared_ptr<const ProblemDefinition> problem;
  Mesh initial_mesh;
  AdaptiveOptions options;
  double reference_cost = 0.0;
  double reproduction_tolerance = 0.0;
  bool gating = true;  // reference cost checked by the acceptance suite
};

BenchmarkCase hyper_sensitive();
BenchmarkCase rlv_entry();
BenchmarkCase space_station();
BenchmarkCase free_flying_robot();
BenchmarkCase launch_ascent();

/// Case lookup by CLI name; empty optional for unknown names.
std::vector<std::string> benchmark_names();
BenchmarkCase make_benchmark(const std::string& name);

}  // namespace ocpkit
