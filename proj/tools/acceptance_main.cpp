#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "vlab/acceptance.hpp"

#ifndef VLAB_CLI_PATH
#error "VLAB_CLI_PATH must name the CLI executable"
#endif

// Runs criteria 1-9 in process, then criterion 10 through the CLI. Optional
// arguments restrict the run to the listed criterion ids.
int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int k = 1; k < argc; ++k) ids.push_back(std::atoi(argv[k]));
  if (ids.empty()) {
    for (const auto& c : vlab::acceptance_criteria()) ids.push_back(c.id);
    ids.push_back(10);
  }
  std::size_t passed = 0;
  for (int id : ids) {
    const auto r = id == 10 ? vlab::run_end_to_end(VLAB_CLI_PATH) : vlab::run_criterion(id);
    std::printf("%s\n", vlab::format_result(r).c_str());
    std::fflush(stdout);
    if (r.pass) ++passed;
  }
  std::printf("acceptance: %zu/%zu criteria passed\n", passed, ids.size());
  return passed == ids.size() ? 0 : 1;
}
