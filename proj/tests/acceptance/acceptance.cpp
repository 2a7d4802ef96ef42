// Acceptance gate: one PASS/FAIL line per criterion, verbose check detail.
// Usage: acceptance [id ...]   (no ids runs all of them)
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "aflguard/verification.hpp"

int main(int argc, char** argv) {
  using namespace aflguard::verify;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
  if (ids.empty()) ids = criterion_ids();

  Context ctx;
  std::vector<CriterionResult> results;
  for (int id : ids) {
    try {
      results.push_back(criterion(id, ctx));
    } catch (const std::exception& e) {
      results.push_back({id, "criterion " + std::to_string(id), false, {{"threw", false, e.what()}}});
    }
  }
  return report(results, std::cout, true) == 0 ? 0 : 1;
}
