// Scores three applicants under both reference HR systems and asks the
// fairness-aware wrapper whether each output has an unfair counterpart.

#include <iomanip>
#include <iostream>

#include "hyperclean/hyperclean.hpp"

using namespace hyperclean;

int main() {
  const auto contract = reference_fairness_contract();
  const std::pair<const char*, InputVec> applicants[] = {
      {"john", hr::john()}, {"synthia", hr::synthia()}, {"synclair", hr::synclair()}};

  for (const auto variant : {hr::Variant::fair, hr::Variant::skewed}) {
    const ScoringTable table = hr::reference_system(variant);
    const ScoringFn system = [&table](std::span<const double> x) { return table(x); };
    std::cout << "system " << table.name() << '\n';
    for (const auto& [name, x] : applicants) {
      const auto v = fairness_aware(system, contract, x, monitor_config(1),
                                    perturb_one(InputBox::of(table), MonitorDefaults::step_bound));
      std::cout << "  " << std::left << std::setw(9) << name << std::fixed << std::setprecision(4)
                << " score " << v.system_output << "  fairness " << normalized_text(v.normalized_score);
      if (v.flagged()) {
        std::cout << "  counterpart skill " << v.counterpart[4] << " scores " << v.counterpart_output;
      }
      std::cout << '\n';
    }
  }

  const ScoringTable fair = hr::reference_system(hr::Variant::fair);
  const ScoringFn system = [&fair](std::span<const double> x) { return fair(x); };
  const auto lip = lipschitz_check(system, hr::input_distance(), DistanceFn::scalar(), 6.7,
                                   axis_slices(hr::john(), InputBox::of(fair), 0.01));
  std::cout << "largest output/input distance ratio around john: " << lip.max_ratio << '\n';
}
