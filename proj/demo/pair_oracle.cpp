// Loads the bundled (input; output) traces and reports which cleanness
// clause the extra trace breaks.

#include <iostream>

#include "hyperclean/hyperclean.hpp"

using namespace hyperclean;

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : std::filesystem::path(HYPERCLEAN_DATA_DIR) / "pair";
  const auto contract = load_contract(dir / "robust.json");
  const auto ctx = to_robust_context(contract, dir);

  std::vector<std::string> names;
  std::vector<Trace> system;
  for (auto& [name, trace] : load_trace_dir(dir)) {
    names.push_back(name);
    system.push_back(std::move(trace));
  }

  std::cout << "lower clause: " << (hyper_eval_bool(build_psi(CleannessKind::l_rob, ctx), system) ? "holds" : "violated")
            << "\nupper clause: " << (hyper_eval_bool(build_psi(CleannessKind::u_rob, ctx), system) ? "holds" : "violated")
            << '\n';
  const auto verdict = oracle_robustly_clean(system, ctx);
  for (const auto& v : {verdict.lower, verdict.upper}) {
    if (!v) continue;
    std::cout << to_string(v->clause) << ": standard " << names[v->standard] << ", subject " << names[v->subject];
    if (v->candidate) std::cout << ", closest candidate " << names[*v->candidate];
    std::cout << ", time " << v->time << '\n';
  }
}
