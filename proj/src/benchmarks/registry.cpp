#include <stdexcept>

#include "ocpkit/benchmarks.hpp"

namespace ocpkit {

std::vector<std::string> benchmark_names() {
  return {"hyper-sensitive", "rlv-entry", "space-station", "free-flying-robot", "launch-ascent"};
}

BenchmarkCase make_benchmark(const std::string& name) {
  if (name == "hyper-sensitive") return hyper_sensitive();
  if (name == "rlv-entry") return rlv_entry();
  if (name == "space-station") return space_station();
  if (name == "free-flying-robot") return free_flying_robot();
  if (name == "launch-ascent") return launch_ascent();
  throw std::invalid_argument("unknown problem: " + name);
}

}  // namespace ocpkit
