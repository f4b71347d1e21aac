// Full-scale acceptance gate: runs the complete verification battery on both
// built-in reference instances at production tolerances (the CheckOptions
// defaults) and prints one PASS/FAIL line per check.  Exits nonzero if any
// check fails.

#include <cstdio>

#include "renorm/acceptance.hpp"
#include "renorm/config.hpp"

int main() {
  using namespace renorm;
  bool ok = true;
  double total = 0.0;
  for (const InstanceConfig& cfg : {reference_instance_a(), reference_instance_b()}) {
    const BatteryResult battery = run_instance_checks(cfg);
    for (const CheckResult& c : battery.checks) {
      std::printf("[%s] %s %s (%.2fs) %s\n", c.pass ? "PASS" : "FAIL",
                  c.instance.c_str(), c.id.c_str(), c.seconds, c.detail.c_str());
      std::fflush(stdout);
      total += c.seconds;
      ok = ok && c.pass;
    }
  }
  std::printf("%s: full battery in %.1fs\n", ok ? "ACCEPTED" : "REJECTED", total);
  return ok ? 0 : 1;
}
