#include "hrg/ensemble.hpp"

#include <cstdlib>
#include <string>

namespace hrg {

int default_threads() {
  if (const char* env = std::getenv("HRG_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
      // fall through to the hardware default
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void EnsembleSummary::merge(const EnsembleSummary& other) {
  for (const auto& [name, stats] : other.observables) observables[name].merge(stats);
  realizations += other.realizations;
  failures += other.failures;
}

}  // namespace hrg
