#include "rdsym/report.hpp"

#include "rdsym/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace rdsym {

void Report::absorb(const Report& child) {
  max_abs_residual = std::max(max_abs_residual, child.max_abs_residual);
  max_scaled_residual = std::max(max_scaled_residual, child.max_scaled_residual);
  samples += child.samples;
  redraws += child.redraws;
  pass = pass && child.pass;
  children.push_back(child);
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("RDSYM_SEED"); env && *env) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 0);
    if (*end != '\0') throw Error(std::string("malformed RDSYM_SEED '") + env + "'");
    return v;
  }
  return 20240611ULL;
}

}  // namespace rdsym
