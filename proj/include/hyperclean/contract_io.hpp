#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hyperclean/cleanness.hpp"
#include "hyperclean/extended_real.hpp"
#include "hyperclean/fairness.hpp"
#include "hyperclean/piecewise.hpp"
#include "hyperclean/trace_io.hpp"
#include "hyperclean/traces.hpp"

namespace hyperclean {

enum class ContractKind { robust, func, fairness };

inline const char* to_string(ContractKind k) {
  switch (k) {
    case ContractKind::robust: return "robust";
    case ContractKind::func: return "func";
    case ContractKind::fairness: return "fairness";
  }
  return "?";
}

/// Contract file contents. Standard traces are kept as file references,
/// relative to the contract file's directory.
struct ContractFile {
  ContractKind kind = ContractKind::robust;
  DistanceFn d_in = DistanceFn::mixed_in();
  DistanceFn d_out = DistanceFn::mixed_out();
  double kappa_in = 0;
  double kappa_out = 0;
  std::optional<PiecewiseFn> f;
  double epsilon = 0.001;
  std::vector<std::string> std_files;
  bool contract_form = false;

  bool operator==(const ContractFile&) const = default;
};

namespace detail {

using nlohmann::json;

inline json extended_to_json(double x) {
  if (std::isinf(x)) return format_extended(x);
  return x;
}

inline double extended_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    try {
      return parse_extended(j.get<std::string>());
    } catch (const std::invalid_argument&) {
    }
  }
  throw contract_error("field '" + field + "' must be a number or \"inf\"");
}

inline json distance_to_json(const DistanceFn& d) {
  json j = {{"name", to_string(d.kind())}};
  if (d.kind() == DistanceKind::euclid_normalized) j["dimension"] = d.dimension();
  if (d.kind() == DistanceKind::custom_table) {
    json rows = json::array();
    for (const auto& e : d.entries()) rows.push_back({e.a, e.b, extended_to_json(e.distance)});
    j["entries"] = rows;
  }
  return j;
}

inline DistanceFn distance_from_json(const json& j, const std::string& field) {
  std::string name;
  if (j.is_string()) {
    name = j.get<std::string>();
  } else if (j.is_object() && j.contains("name") && j["name"].is_string()) {
    name = j["name"].get<std::string>();
  } else {
    throw contract_error("field '" + field + "' must name a distance");
  }
  DistanceKind kind;
  try {
    kind = distance_kind_from_string(name);
  } catch (const std::invalid_argument& e) {
    throw contract_error(field + ": " + e.what());
  }
  try {
    switch (kind) {
      case DistanceKind::abs_diff_mixed_in: return DistanceFn::mixed_in();
      case DistanceKind::abs_diff_mixed_out: return DistanceFn::mixed_out();
      case DistanceKind::abs_diff_scalar: return DistanceFn::scalar();
      case DistanceKind::euclid_normalized: {
        if (!j.is_object() || !j.contains("dimension") || !j["dimension"].is_number_unsigned())
          throw contract_error(field + ": euclid-normalized needs a positive 'dimension'");
        return DistanceFn::euclid_normalized(j["dimension"].get<std::size_t>());
      }
      case DistanceKind::custom_table: {
        if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
          throw contract_error(field + ": custom-table needs 'entries'");
        std::vector<TableEntry> rows;
        for (const auto& r : j["entries"]) {
          if (!r.is_array() || r.size() != 3 || !r[0].is_number() || !r[1].is_number())
            throw contract_error(field + ": table rows are [a, b, distance]");
          rows.push_back({r[0].get<double>(), r[1].get<double>(),
                          extended_from_json(r[2], field + ".entries")});
        }
        return DistanceFn::table(std::move(rows));
      }
    }
  } catch (const contract_error&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw contract_error(field + ": " + e.what());
  }
  throw contract_error(field + ": unsupported distance");
}

inline json segments_to_json(const PiecewiseFn& f) {
  json rows = json::array();
  for (const auto& s : f.segments())
    rows.push_back({s.lo, extended_to_json(s.hi), s.slope, extended_to_json(s.intercept)});
  return rows;
}

inline PiecewiseFn segments_from_json(const json& j) {
  if (!j.is_array()) throw contract_error("field 'f' must be a list of [lo, hi, slope, intercept]");
  std::vector<Segment> segs;
  for (const auto& r : j) {
    if (!r.is_array() || r.size() != 4)
      throw contract_error("f rows must be [lo, hi, slope, intercept]");
    segs.push_back({extended_from_json(r[0], "f.lo"), extended_from_json(r[1], "f.hi"),
                    extended_from_json(r[2], "f.slope"), extended_from_json(r[3], "f.intercept")});
  }
  try {
    return PiecewiseFn(std::move(segs));
  } catch (const std::invalid_argument& e) {
    throw contract_error(std::string("f: ") + e.what());
  }
}

inline double non_negative(const json& j, const char* field) {
  if (!j.contains(field)) throw contract_error(std::string("missing field '") + field + "'");
  const double v = extended_from_json(j[field], field);
  if (!(v >= 0)) throw contract_error(std::string("field '") + field + "' must be >= 0");
  return v;
}

}  // namespace detail

inline nlohmann::json contract_to_json(const ContractFile& c) {
  using nlohmann::json;
  json j = {{"kind", to_string(c.kind)},
            {"d_in", detail::distance_to_json(c.d_in)},
            {"d_out", detail::distance_to_json(c.d_out)}};
  if (c.kind == ContractKind::robust) {
    j["kappa_in"] = detail::extended_to_json(c.kappa_in);
    j["kappa_out"] = detail::extended_to_json(c.kappa_out);
  } else if (c.f) {
    j["f"] = detail::segments_to_json(*c.f);
  }
  if (c.kind != ContractKind::fairness) {
    j["epsilon"] = c.epsilon;
    j["std"] = c.std_files;
    j["contract_form"] = c.contract_form;
  }
  return j;
}

inline ContractFile contract_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw contract_error("contract must be an object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw contract_error("missing field 'kind'");
  ContractFile c;
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "robust") {
    c.kind = ContractKind::robust;
  } else if (kind == "func") {
    c.kind = ContractKind::func;
  } else if (kind == "fairness") {
    c.kind = ContractKind::fairness;
  } else {
    throw contract_error("unknown contract kind '" + kind + "'");
  }
  if (!j.contains("d_in") || !j.contains("d_out")) throw contract_error("missing d_in or d_out");
  c.d_in = detail::distance_from_json(j["d_in"], "d_in");
  c.d_out = detail::distance_from_json(j["d_out"], "d_out");

  if (c.kind == ContractKind::robust) {
    c.kappa_in = detail::non_negative(j, "kappa_in");
    c.kappa_out = detail::non_negative(j, "kappa_out");
  } else {
    if (!j.contains("f")) throw contract_error("missing field 'f'");
    c.f = detail::segments_from_json(j["f"]);
  }

  if (c.kind == ContractKind::fairness) {
    if (j.contains("std")) throw contract_error("fairness contracts carry no standard inputs");
    return c;
  }
  if (j.contains("epsilon")) {
    c.epsilon = detail::extended_from_json(j["epsilon"], "epsilon");
    if (!(c.epsilon > 0) || std::isinf(c.epsilon))
      throw contract_error("epsilon must be positive and finite");
  }
  if (!j.contains("std") || !j["std"].is_array() || j["std"].empty())
    throw contract_error("field 'std' must list at least one trace file");
  for (const auto& s : j["std"]) {
    if (!s.is_string()) throw contract_error("std entries must be file names");
    c.std_files.push_back(s.get<std::string>());
  }
  if (j.contains("contract_form")) {
    if (!j["contract_form"].is_boolean()) throw contract_error("contract_form must be a boolean");
    c.contract_form = j["contract_form"].get<bool>();
  }
  return c;
}

inline ContractFile parse_contract(std::istream& is) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw contract_error(std::string("malformed contract: ") + e.what());
  }
  return contract_from_json(j);
}

inline ContractFile load_contract(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw contract_error("cannot open contract " + path.string());
  try {
    return parse_contract(in);
  } catch (const contract_error& e) {
    throw contract_error(path.string() + ": " + e.what());
  }
}

inline std::string dump_contract(const ContractFile& c) { return contract_to_json(c).dump(2) + "\n"; }

inline void save_contract(const std::filesystem::path& path, const ContractFile& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dump_contract(c);
}

inline std::vector<Trace> load_std_traces(const ContractFile& c, const std::filesystem::path& base) {
  std::vector<Trace> traces;
  for (const auto& f : c.std_files) traces.push_back(load_trace_csv(base / f));
  return traces;
}

inline RobustContext to_robust_context(const ContractFile& c, const std::filesystem::path& base) {
  if (c.kind != ContractKind::robust) throw contract_error("not a robust contract");
  RobustContext ctx;
  ctx.std = load_std_traces(c, base);
  ctx.d_in = c.d_in;
  ctx.d_out = c.d_out;
  ctx.kappa_in = c.kappa_in;
  ctx.kappa_out = c.kappa_out;
  ctx.eq = {c.d_in, c.epsilon};
  ctx.contract_form = c.contract_form;
  return ctx;
}

inline FuncContext to_func_context(const ContractFile& c, const std::filesystem::path& base) {
  if (c.kind != ContractKind::func) throw contract_error("not a func contract");
  FuncContext ctx;
  ctx.std = load_std_traces(c, base);
  ctx.d_in = c.d_in;
  ctx.d_out = c.d_out;
  ctx.f = *c.f;
  ctx.eq = {c.d_in, c.epsilon};
  ctx.contract_form = c.contract_form;
  return ctx;
}

inline FairnessContract to_fairness_contract(const ContractFile& c) {
  if (c.kind != ContractKind::fairness) throw contract_error("not a fairness contract");
  return {c.d_in, c.d_out, *c.f};
}

inline ContractFile from_fairness_contract(const FairnessContract& fc) {
  ContractFile c;
  c.kind = ContractKind::fairness;
  c.d_in = fc.d_in;
  c.d_out = fc.d_out;
  c.f = fc.f;
  return c;
}

}  // namespace hyperclean
