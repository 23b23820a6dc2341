#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace hyperclean {

/// Extended reals are plain doubles with +/-infinity as sentinels. NaN never
/// escapes the helpers below.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_pos_inf(double x) { return x == kInf; }
inline bool is_neg_inf(double x) { return x == -kInf; }

/// `value - bound` for threshold predicates of the form `value - bound <= 0`.
/// An infinite bound absorbs everything: the constraint always holds, so the
/// result is -inf even when `value` is itself +inf.
inline double minus_bound(double value, double bound) {
  if (is_pos_inf(bound)) return -kInf;
  return value - bound;
}

/// Difference of two robustness values for Metropolis acceptance. Equal
/// infinities count as "no change".
inline double robustness_delta(double proposed, double current) {
  if (std::isinf(proposed) && proposed == current) return 0.0;
  return proposed - current;
}

/// Text form used by every file format in the project ("inf", "-inf" or the
/// shortest round-trip decimal).
inline std::string format_extended(double x) {
  if (is_pos_inf(x)) return "inf";
  if (is_neg_inf(x)) return "-inf";
  if (x == 0) return "0";
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline double parse_extended(const std::string& text) {
  if (text == "inf" || text == "+inf" || text == "Infinity") return kInf;
  if (text == "-inf" || text == "-Infinity") return -kInf;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  if (used != text.size() || std::isnan(v))
    throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

}  // namespace hyperclean
