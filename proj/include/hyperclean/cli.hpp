#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hyperclean/cleanness.hpp"
#include "hyperclean/contract_io.hpp"
#include "hyperclean/emissions.hpp"
#include "hyperclean/fairness.hpp"
#include "hyperclean/falsify.hpp"
#include "hyperclean/hr_systems.hpp"
#include "hyperclean/oversight_http.hpp"
#include "hyperclean/trace_io.hpp"

#ifndef HYPERCLEAN_VERSION
#define HYPERCLEAN_VERSION "dev"
#endif

namespace hyperclean::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode { ok = 0, falsified = 1, usage = 2, data = 3 };

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool quiet = false;
};

/// Reproducibility record written next to every report.
struct RunManifest {
  std::vector<std::string> command_line;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  std::string cwd;

  json to_json() const {
    return {{"command_line", command_line},
            {"config", config},
            {"seed", seed},
            {"versions",
             {{"hyperclean", HYPERCLEAN_VERSION},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"cli11", CLI11_VERSION}}},
            {"outputs", outputs},
            {"cwd", cwd}};
  }
};

namespace detail {

inline fs::path out_path(const Globals& g, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : fs::path(g.out_dir) / p;
}

inline std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

inline void write_manifest(const fs::path& report, RunManifest m) {
  m.cwd = fs::current_path().string();
  auto os = open_out(fs::path(report.string() + ".manifest.json"));
  os << m.to_json().dump(2) << '\n';
}

/// `x,y,...` rows with a header; an `id` or `case_id` first column names rows.
inline std::vector<std::pair<std::string, InputVec>> load_inputs_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open inputs file " + path.string());
  std::vector<std::pair<std::string, InputVec>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t columns = 0;
  bool has_id = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (hyperclean::detail::trim(line).empty()) continue;
    auto cells = hyperclean::detail::split(line, ',');
    if (columns == 0) {
      columns = cells.size();
      has_id = cells[0] == "id" || cells[0] == "case_id";
      if (has_id && columns < 2) throw data_error("inputs need at least one value column", lineno);
      continue;
    }
    if (cells.size() != columns) throw data_error("wrong number of columns", lineno);
    std::string id = has_id ? cells[0] : "row" + std::to_string(rows.size() + 1);
    InputVec x;
    for (std::size_t k = has_id ? 1 : 0; k < cells.size(); ++k)
      x.push_back(hyperclean::detail::parse_real(cells[k], lineno));
    rows.emplace_back(std::move(id), std::move(x));
  }
  if (rows.empty()) throw data_error("inputs file holds no rows: " + path.string());
  return rows;
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline FalsifierConfig falsifier(std::uint64_t seed, double beta, std::size_t iters) {
  FalsifierConfig cfg;
  cfg.rng_seed = seed;
  cfg.beta = beta;
  cfg.max_iterations = iters;
  cfg.validate();
  return cfg;
}

}  // namespace detail

struct FalsifyOpts {
  std::string contract, traces, out = "falsify.csv";
  std::size_t max_iter = 3000, restarts = 1;
  double beta = 1.0;
  bool concurrent = false;
};

inline int cmd_falsify(const FalsifyOpts& o, const Globals& g, const RunManifest& base,
                       std::ostream& out) {
  const fs::path cpath(o.contract);
  const ContractFile cf = load_contract(cpath);
  const auto named = load_trace_dir(o.traces);
  if (named.empty()) throw data_error("no traces in " + o.traces);
  std::vector<Trace> system;
  for (const auto& [name, w] : named) system.push_back(w);

  Formula phi;
  std::vector<Trace> std_traces;
  if (cf.kind == ContractKind::robust) {
    const auto ctx = to_robust_context(cf, cpath.parent_path());
    phi = build_phi_u_rob(ctx);
    std_traces = ctx.std;
  } else if (cf.kind == ContractKind::func) {
    const auto ctx = to_func_context(cf, cpath.parent_path());
    phi = build_phi_u_fun(ctx);
    std_traces = ctx.std;
  } else {
    throw contract_error("falsify needs a robust or func contract");
  }
  std::vector<ComposedTrace> composed;
  for (const Trace& w : system) composed.push_back(compose(w, std_traces));

  const Robustness<std::size_t> R = [&](const std::size_t& k) { return eval_quant(phi, composed[k]); };
  const ProposalScheme<std::size_t> ps = [&](const std::size_t&, Rng& rng) {
    return rng.index(system.size());
  };
  const auto cfg = detail::falsifier(g.seed, o.beta, o.max_iter);
  const auto res = falsify_restarts(R, std::size_t{0}, ps, cfg, o.restarts, o.concurrent);

  const fs::path report = detail::out_path(g, o.out);
  {
    auto os = detail::open_out(report);
    write_history_csv(os, res);
  }
  RunManifest m = base;
  m.seed = g.seed;
  m.config = {{"command", "falsify"},     {"contract", o.contract},
              {"traces", o.traces},       {"kind", to_string(cf.kind)},
              {"beta", o.beta},           {"max_iterations", o.max_iter},
              {"restarts", o.restarts},   {"winning_seed", res.seed}};
  m.outputs = {report.string()};
  detail::write_manifest(report, m);
  if (!g.quiet)
    out << "min robustness " << format_extended(res.min_robustness) << " at "
        << named[res.argmin].first << " after " << res.iterations_used << " iterations; "
        << (res.falsified ? "falsified" : "not falsified") << "\nreport " << report.string()
        << '\n';
  return res.falsified ? falsified : ok;
}

struct EmissionsOpts {
  std::string trips, cycle, out, plot = "plot.csv";
  double kappa_in = 15, kappa_out = 88, beta = 1.0, step = 5.0, tol_v = 2.0, tol_a = 2.0;
  std::size_t max_iter = 3000, window = 10;
};

inline int cmd_emissions_predict(const EmissionsOpts& o, const Globals& g, const RunManifest& base,
                                 std::ostream& out) {
  const NoxPredictor p(load_trips_dir(o.trips).samples, o.tol_v, o.tol_a);
  const auto cycle = load_cycle(o.cycle);
  const auto e = cycle_emissions(p, cycle);
  if (!g.quiet)
    out << "NOx " << format_extended(e.mg_per_km) << " mg/km over "
        << format_extended(e.distance_km) << " km\n";
  if (!o.out.empty()) {
    const fs::path report = detail::out_path(g, o.out);
    {
      auto os = detail::open_out(report);
      os << "cycle,total_mg,distance_km,mg_per_km\n"
         << fs::path(o.cycle).filename().string() << ',' << format_extended(e.total_mg) << ','
         << format_extended(e.distance_km) << ',' << format_extended(e.mg_per_km) << '\n';
    }
    RunManifest m = base;
    m.seed = g.seed;
    m.config = {{"command", "emissions predict"}, {"trips", o.trips}, {"cycle", o.cycle},
                {"tolerance_v", o.tol_v},         {"tolerance_a", o.tol_a}};
    m.outputs = {report.string()};
    detail::write_manifest(report, m);
  }
  return ok;
}

inline int cmd_emissions_falsify(const EmissionsOpts& o, const Globals& g, const RunManifest& base,
                                 std::ostream& out) {
  const NoxPredictor p(load_trips_dir(o.trips).samples, o.tol_v, o.tol_a);
  const auto ctx = make_emission_context(p, load_cycle(o.cycle), o.kappa_in, o.kappa_out);
  EmissionSearchConfig sc;
  sc.falsifier = detail::falsifier(g.seed, o.beta, o.max_iter);
  sc.window = o.window;
  sc.step_bound = o.step;
  const auto res = falsify_emissions(ctx, p, sc);

  const fs::path report = detail::out_path(g, o.out.empty() ? "emissions.csv" : o.out);
  const fs::path plot = detail::out_path(g, o.plot);
  {
    auto os = detail::open_out(report);
    write_history_csv(os, res.outcome);
  }
  {
    auto os = detail::open_out(plot);
    write_plot_csv(os, ctx.standard_cycle, res.outcome.argmin);
  }
  RunManifest m = base;
  m.seed = g.seed;
  m.config = {{"command", "emissions falsify"},
              {"trips", o.trips},
              {"cycle", o.cycle},
              {"kappa_in", o.kappa_in},
              {"kappa_out", o.kappa_out},
              {"beta", o.beta},
              {"max_iterations", o.max_iter},
              {"window", o.window},
              {"step_bound", o.step},
              {"standard_mg_per_km", ctx.std_output}};
  m.outputs = {report.string(), plot.string()};
  detail::write_manifest(report, m);
  if (!g.quiet)
    out << "standard " << format_extended(ctx.std_output) << " mg/km; min robustness "
        << format_extended(res.outcome.min_robustness) << " after "
        << res.outcome.iterations_used << " iterations (" << res.probed << " cycles probed, "
        << res.membership_violations << " outside the tube, " << res.no_data << " without data); "
        << (res.outcome.falsified ? "falsified" : "not falsified") << "\nreport "
        << report.string() << "\nplot " << plot.string() << '\n';
  return res.outcome.falsified ? falsified : ok;
}

struct FairnessOpts {
  std::string system, contract, inputs, out = "fairness.csv";
  std::size_t max_iter = MonitorDefaults::iterations;
  double beta = MonitorDefaults::beta, step = MonitorDefaults::step_bound;
};

inline int cmd_fairness_monitor(const FairnessOpts& o, const Globals& g, const RunManifest& base,
                                std::ostream& out) {
  const ScoringTable sys = load_system(o.system);
  const FairnessContract c = to_fairness_contract(load_contract(o.contract));
  const auto rows = detail::load_inputs_csv(o.inputs);
  const ScoringFn P = [&sys](std::span<const double> x) { return sys(x); };
  const auto ps = perturb_one(InputBox::of(sys), o.step);

  const fs::path report = detail::out_path(g, o.out);
  bool any_flag = false;
  {
    auto os = detail::open_out(report);
    os << "case_id,score,normalized,counterpart_json\n";
    for (const auto& [id, x] : rows) {
      if (x.size() != sys.dimension())
        throw data_error("case " + id + ": expected " + std::to_string(sys.dimension()) + " values");
      const auto v = fairness_aware(P, c, x, detail::falsifier(case_seed(id, g.seed), o.beta, o.max_iter), ps);
      any_flag = any_flag || v.flagged();
      const json cp = {{"input", v.counterpart}, {"output", v.counterpart_output}};
      os << id << ',' << format_extended(v.score) << ',' << format_extended(v.normalized_score) << ','
         << detail::csv_quote(cp.dump()) << '\n';
      if (!g.quiet)
        out << id << ": output " << format_extended(v.system_output) << ", normalized "
            << normalized_text(v.normalized_score) << (v.flagged() ? "  FLAGGED" : "") << '\n';
    }
  }
  RunManifest m = base;
  m.seed = g.seed;
  m.config = {{"command", "fairness monitor"}, {"system", o.system}, {"contract", o.contract},
              {"inputs", o.inputs},            {"beta", o.beta},     {"max_iterations", o.max_iter},
              {"step_bound", o.step},          {"seed_policy", "splitmix(fnv1a(id) xor seed)"}};
  m.outputs = {report.string()};
  detail::write_manifest(report, m);
  if (!g.quiet) out << "report " << report.string() << '\n';
  return any_flag ? falsified : ok;
}

struct OracleOpts {
  std::string contract, traces, out;
};

inline int cmd_oracle(const OracleOpts& o, const Globals& g, const RunManifest& base,
                      std::ostream& out) {
  const fs::path cpath(o.contract);
  const ContractFile cf = load_contract(cpath);
  const auto named = load_trace_dir(o.traces);
  std::vector<Trace> system;
  for (const auto& [name, w] : named) system.push_back(w);
  OracleVerdict v;
  if (cf.kind == ContractKind::robust)
    v = oracle_robustly_clean(system, to_robust_context(cf, cpath.parent_path()));
  else if (cf.kind == ContractKind::func)
    v = oracle_func_clean(system, to_func_context(cf, cpath.parent_path()));
  else
    throw contract_error("oracle needs a robust or func contract");

  std::ostringstream table;
  table << "clause,verdict,standard,subject,candidate,time\n";
  for (const auto& [clause, viol] : {std::pair{"lower", v.lower}, std::pair{"upper", v.upper}}) {
    table << clause << ',' << (viol ? "violated" : "holds");
    if (viol)
      table << ',' << named[viol->standard].first << ',' << named[viol->subject].first << ','
            << (viol->candidate ? named[*viol->candidate].first : "") << ',' << viol->time;
    else
      table << ",,,,";
    table << '\n';
  }
  if (!g.quiet) out << table.str();
  if (!o.out.empty()) {
    const fs::path report = detail::out_path(g, o.out);
    {
      auto os = detail::open_out(report);
      os << table.str();
    }
    RunManifest m = base;
    m.seed = g.seed;
    m.config = {{"command", "oracle"}, {"contract", o.contract}, {"traces", o.traces}};
    m.outputs = {report.string()};
    detail::write_manifest(report, m);
  }
  return v.clean() ? ok : falsified;
}

struct ServeOpts {
  std::string system, contract, store, host = "127.0.0.1";
  int port = 8080;
  std::size_t workers = 2, max_iter = MonitorDefaults::iterations;
  double beta = MonitorDefaults::beta, step = MonitorDefaults::step_bound;
};

inline int cmd_serve(const ServeOpts& o, const Globals& g, std::ostream& out) {
  OversightConfig cfg;
  cfg.system = load_system(o.system);
  cfg.contract = to_fairness_contract(load_contract(o.contract));
  cfg.store = o.store;
  cfg.base_seed = g.seed;
  cfg.workers = o.workers;
  cfg.iterations = o.max_iter;
  cfg.beta = o.beta;
  cfg.step_bound = o.step;
  OversightService svc(cfg);
  OversightHttp http(svc);
  if (!g.quiet)
    out << "serving " << svc.case_count() << " cases from " << o.store << " on " << o.host << ':'
        << o.port << std::endl;
  http.run(o.host, o.port);
  return ok;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

inline int cmd_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  std::ifstream in(manifest_path);
  if (!in) throw data_error("cannot open manifest " + manifest_path);
  const json m = json::parse(in);
  const auto argv = m.at("command_line").get<std::vector<std::string>>();
  const fs::path saved = fs::current_path();
  fs::current_path(m.at("cwd").get<std::string>());
  int code = 0;
  try {
    code = run(argv, out, err);
  } catch (...) {
    fs::current_path(saved);
    throw;
  }
  fs::current_path(saved);
  return code;
}

/// Parses and dispatches; args[0] is the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cleanness and fairness analysis toolkit", "hyperclean"};
  app.set_version_flag("--version", HYPERCLEAN_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Base RNG seed");
  app.add_option("--out-dir", g.out_dir, "Directory for reports");
  app.add_flag("--quiet", g.quiet, "Suppress the summary on stdout");

  FalsifyOpts fo;
  auto* falsify_cmd = app.add_subcommand("falsify", "Search a trace set for a cleanness violation");
  falsify_cmd->add_option("--contract", fo.contract, "Robust or func contract file")->required();
  falsify_cmd->add_option("--traces", fo.traces, "Directory of system traces")->required();
  falsify_cmd->add_option("--max-iter", fo.max_iter, "Iteration budget")->capture_default_str();
  falsify_cmd->add_option("--beta", fo.beta, "Metropolis beta")->capture_default_str();
  falsify_cmd->add_option("--restarts", fo.restarts, "Seeded restarts")->capture_default_str();
  falsify_cmd->add_flag("--concurrent", fo.concurrent, "Run restarts in parallel");
  falsify_cmd->add_option("--out", fo.out, "Report CSV")->capture_default_str();

  EmissionsOpts eo;
  auto* em = app.add_subcommand("emissions", "NOx prediction and cycle falsification");
  em->require_subcommand(1);
  auto* predict_cmd = em->add_subcommand("predict", "Predict mg/km for a cycle");
  auto* efals_cmd = em->add_subcommand("falsify", "Search cycles near the standard cycle");
  for (auto* c : {predict_cmd, efals_cmd}) {
    c->add_option("--trips", eo.trips, "Trip CSV file or directory")->required();
    c->add_option("--cycle", eo.cycle, "Cycle file, one speed per line")->required();
    c->add_option("--tol-v", eo.tol_v, "Speed tolerance (km/h)")->capture_default_str();
    c->add_option("--tol-a", eo.tol_a, "Acceleration tolerance (m/s^2)")->capture_default_str();
    c->add_option("--out", eo.out, "Report CSV");
  }
  efals_cmd->add_option("--kappa-in", eo.kappa_in, "Input tube width")->capture_default_str();
  efals_cmd->add_option("--kappa-out", eo.kappa_out, "Output threshold")->capture_default_str();
  efals_cmd->add_option("--max-iter", eo.max_iter, "Iteration budget")->capture_default_str();
  efals_cmd->add_option("--beta", eo.beta, "Metropolis beta")->capture_default_str();
  efals_cmd->add_option("--window", eo.window, "Perturbed window length")->capture_default_str();
  efals_cmd->add_option("--step", eo.step, "Window offset bound (km/h)")->capture_default_str();
  efals_cmd->add_option("--plot", eo.plot, "Plot CSV")->capture_default_str();

  FairnessOpts fa;
  auto* fair = app.add_subcommand("fairness", "Individual fairness monitoring");
  fair->require_subcommand(1);
  auto* mon_cmd = fair->add_subcommand("monitor", "Monitor each input row");
  mon_cmd->add_option("--system", fa.system, "Builtin (P, P') or table JSON file")->required();
  mon_cmd->add_option("--contract", fa.contract, "Fairness contract file")->required();
  mon_cmd->add_option("--inputs", fa.inputs, "Input CSV, one row per case")->required();
  mon_cmd->add_option("--max-iter", fa.max_iter, "Proposals per case")->capture_default_str();
  mon_cmd->add_option("--beta", fa.beta, "Metropolis beta")->capture_default_str();
  mon_cmd->add_option("--step", fa.step, "Proposal step bound")->capture_default_str();
  mon_cmd->add_option("--out", fa.out, "Report CSV")->capture_default_str();

  OracleOpts oo;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive cleanness check of a trace set");
  oracle_cmd->add_option("--contract", oo.contract, "Robust or func contract file")->required();
  oracle_cmd->add_option("--traces", oo.traces, "Directory of system traces")->required();
  oracle_cmd->add_option("--out", oo.out, "Report CSV");

  ServeOpts so;
  auto* serve_cmd = app.add_subcommand("serve", "Run the oversight HTTP service");
  serve_cmd->add_option("--system", so.system, "Builtin (P, P') or table JSON file")->required();
  serve_cmd->add_option("--contract", so.contract, "Fairness contract file")->required();
  serve_cmd->add_option("--store", so.store, "Append-only case store")->required();
  serve_cmd->add_option("--port", so.port, "TCP port")->capture_default_str();
  serve_cmd->add_option("--host", so.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--workers", so.workers, "Analysis threads")->capture_default_str();
  serve_cmd->add_option("--max-iter", so.max_iter, "Proposals per case")->capture_default_str();
  serve_cmd->add_option("--beta", so.beta, "Metropolis beta")->capture_default_str();
  serve_cmd->add_option("--step", so.step, "Proposal step bound")->capture_default_str();

  std::string manifest;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("manifest", manifest, "Manifest JSON")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  RunManifest base;
  base.command_line = args;
  try {
    if (*falsify_cmd) return cmd_falsify(fo, g, base, out);
    if (*predict_cmd) return cmd_emissions_predict(eo, g, base, out);
    if (*efals_cmd) return cmd_emissions_falsify(eo, g, base, out);
    if (*mon_cmd) return cmd_fairness_monitor(fa, g, base, out);
    if (*oracle_cmd) return cmd_oracle(oo, g, base, out);
    if (*serve_cmd) return cmd_serve(so, g, out);
    if (*replay_cmd) return cmd_replay(manifest, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return data;
  }
  return usage;
}

}  // namespace hyperclean::cli
