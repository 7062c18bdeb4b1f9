// Runs every acceptance criterion and prints one pass/fail line per check as
// it completes. Exits nonzero if any check fails.

#include <cstdio>

#include "mbstab/verification.hpp"

int main() {
  bool all = true;
  mbstab::run_acceptance([&](const mbstab::CheckResult& c) {
    std::printf("[%s] %-40s %7.1fs  %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                c.seconds, c.detail.c_str());
    std::fflush(stdout);
    all = all && c.pass;
  });
  std::printf("%s\n", all ? "ALL CHECKS PASSED" : "CHECKS FAILED");
  return all ? 0 : 1;
}
