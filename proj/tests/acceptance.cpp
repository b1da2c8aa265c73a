// Runs the acceptance experiments and prints one PASS/FAIL line per
// criterion, followed by the detailed tables. Exits non-zero if any fails.

#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>

#include "mfh/verify.hpp"

int main() {
  const auto exps = mfh::acceptance_experiments();
  std::ostringstream details;
  int failed = 0;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    const auto& e = exps[i];
    std::ostringstream line;
    line << "criterion " << i + 1 << " " << e.name << ": ";
    try {
      const auto rep = mfh::run_experiment(e);
      line << (rep.pass ? "PASS" : "FAIL");
      const auto head = rep.statistics.find(e.headline);
      if (head != rep.statistics.end()) line << "  " << e.headline << " = " << head->second;
      int bad = 0;
      for (const auto& r : rep.results) bad += !r.pass;
      if (bad) line << "  (" << bad << " of " << rep.results.size() << " checks failed)";
      details << rep.table();
      failed += !rep.pass;
    } catch (const std::exception& ex) {
      line << "FAIL  error: " << ex.what();
      ++failed;
    }
    std::cout << line.str() << std::endl;
  }
  std::cout << "\n" << details.str();
  std::cout << "\n" << exps.size() - failed << " of " << exps.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
