#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperclean/extended_real.hpp"
#include "hyperclean/traces.hpp"

namespace hyperclean {

/// Malformed input file. Carries the 1-based line number when known.
class data_error : public std::runtime_error {
 public:
  data_error(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_real(const std::string& s, std::size_t line) {
  try {
    const double v = parse_extended(s);
    if (!std::isfinite(v)) throw data_error("non-finite value '" + s + "'", line);
    return v;
  } catch (const std::invalid_argument&) {
    throw data_error("malformed number '" + s + "'", line);
  }
}

}  // namespace detail

/// Parses the `t,kind,value` trace format. `kind` is one of in, out,
/// quiescent or pair; pair values are written `input;output`.
inline Trace parse_trace_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<Value> values;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (!header_seen) {
      header_seen = true;
      if (cells.size() == 3 && cells[0] == "t" && cells[1] == "kind" && cells[2] == "value")
        continue;
      throw data_error("expected header 't,kind,value'", lineno);
    }
    if (cells.size() != 3) throw data_error("expected 3 columns", lineno);
    std::size_t t = 0;
    try {
      std::size_t used = 0;
      t = std::stoul(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("t");
    } catch (const std::exception&) {
      throw data_error("malformed time index '" + cells[0] + "'", lineno);
    }
    if (t != values.size())
      throw data_error("time index " + std::to_string(t) + " out of sequence", lineno);
    const std::string& kind = cells[1];
    if (kind == "in") {
      values.push_back(MixedIn{detail::parse_real(cells[2], lineno)});
    } else if (kind == "out") {
      values.push_back(MixedOut{detail::parse_real(cells[2], lineno)});
    } else if (kind == "quiescent") {
      if (!cells[2].empty()) throw data_error("quiescent rows carry no value", lineno);
      values.push_back(Quiescence{});
    } else if (kind == "pair") {
      const auto parts = detail::split(cells[2], ';');
      if (parts.size() != 2) throw data_error("pair value must be 'input;output'", lineno);
      values.push_back(PairIO{detail::parse_real(parts[0], lineno),
                              detail::parse_real(parts[1], lineno)});
    } else {
      throw data_error("unknown kind '" + kind + "'", lineno);
    }
  }
  if (values.empty()) throw data_error("trace file holds no samples");
  try {
    return Trace(std::move(values));
  } catch (const domain_error& e) {
    throw data_error(e.what());
  }
}

inline Trace load_trace_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open trace file " + path.string());
  try {
    return parse_trace_csv(is);
  } catch (const data_error& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

inline void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << "t,kind,value\n";
  for (std::size_t t = 0; t < trace.horizon(); ++t) {
    const Value& v = trace[t];
    os << t << ',';
    if (const auto* i = std::get_if<MixedIn>(&v)) os << "in," << format_extended(i->value);
    else if (const auto* o = std::get_if<MixedOut>(&v)) os << "out," << format_extended(o->value);
    else if (std::holds_alternative<Quiescence>(v)) os << "quiescent,";
    else if (const auto* p = std::get_if<PairIO>(&v))
      os << "pair," << format_extended(p->input) << ';' << format_extended(p->output);
    else throw domain_error("trace CSV cannot store masks or real vectors");
    os << '\n';
  }
}

inline void save_trace_csv(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream os(path);
  if (!os) throw data_error("cannot write trace file " + path.string());
  write_trace_csv(os, trace);
}

/// Loads every `*.csv` in a directory, in lexicographic filename order.
inline std::vector<std::pair<std::string, Trace>> load_trace_dir(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw data_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, Trace>> out;
  for (const auto& f : files) out.emplace_back(f.filename().string(), load_trace_csv(f));
  return out;
}

}  // namespace hyperclean
