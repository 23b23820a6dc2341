#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "hyperclean/extended_real.hpp"

namespace hyperclean {

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

struct RealVec {
  std::vector<double> components;
  bool operator==(const RealVec&) const = default;
};

/// An (input; output) pair as used by reactive-style traces.
struct PairIO {
  double input = 0;
  double output = 0;
  bool operator==(const PairIO&) const = default;
};

struct MixedIn {
  double value = 0;
  bool operator==(const MixedIn&) const = default;
};

struct MixedOut {
  double value = 0;
  bool operator==(const MixedOut&) const = default;
};

/// Absence of output (delta).
struct Quiescence {
  bool operator==(const Quiescence&) const = default;
};

/// Input-projection mask: an output happened at this step.
struct MaskIn {
  bool operator==(const MaskIn&) const = default;
};

/// Output-projection mask: an input happened at this step.
struct MaskOut {
  bool operator==(const MaskOut&) const = default;
};

using Value =
    std::variant<RealVec, PairIO, MixedIn, MixedOut, Quiescence, MaskIn, MaskOut>;

class domain_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Which value domain a whole trace lives in.
enum class TraceKind {
  real_vec,        // RealVec only
  pair_io,         // PairIO only
  mixed_io,        // MixedIn / MixedOut / Quiescence
  in_projection,   // MixedIn / MaskIn
  out_projection,  // MixedOut / Quiescence / MaskOut
};

inline const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::real_vec: return "real-vec";
    case TraceKind::pair_io: return "pair";
    case TraceKind::mixed_io: return "mixed-io";
    case TraceKind::in_projection: return "in-projection";
    case TraceKind::out_projection: return "out-projection";
  }
  return "?";
}

namespace detail {

// Bitmask of the kinds a single value is compatible with.
inline unsigned compatible_kinds(const Value& v) {
  constexpr unsigned rv = 1u << static_cast<int>(TraceKind::real_vec);
  constexpr unsigned pr = 1u << static_cast<int>(TraceKind::pair_io);
  constexpr unsigned mx = 1u << static_cast<int>(TraceKind::mixed_io);
  constexpr unsigned ip = 1u << static_cast<int>(TraceKind::in_projection);
  constexpr unsigned op = 1u << static_cast<int>(TraceKind::out_projection);
  switch (v.index()) {
    case 0: return rv;
    case 1: return pr;
    case 2: return mx | ip;       // MixedIn
    case 3: return mx | op;       // MixedOut
    case 4: return mx | op;       // Quiescence
    case 5: return ip;            // MaskIn
    case 6: return op;            // MaskOut
  }
  return 0;
}

}  // namespace detail

inline bool is_input(const Value& v) { return std::holds_alternative<MixedIn>(v); }
inline bool is_output_symbol(const Value& v) {
  return std::holds_alternative<MixedOut>(v) || std::holds_alternative<Quiescence>(v);
}

/// Input part of a single symbol: inputs pass through, outputs become MaskIn,
/// pairs contribute their input component.
inline Value input_part(const Value& v) {
  if (const auto* p = std::get_if<PairIO>(&v)) return MixedIn{p->input};
  if (std::holds_alternative<MixedIn>(v) || std::holds_alternative<MaskIn>(v)) return v;
  if (is_output_symbol(v)) return MaskIn{};
  throw domain_error("input projection undefined for this value kind");
}

inline Value output_part(const Value& v) {
  if (const auto* p = std::get_if<PairIO>(&v)) return MixedOut{p->output};
  if (is_output_symbol(v) || std::holds_alternative<MaskOut>(v)) return v;
  if (std::holds_alternative<MixedIn>(v)) return MaskOut{};
  throw domain_error("output projection undefined for this value kind");
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// Finite discrete-time trace; index = time step, horizon = length >= 1.
class Trace {
 public:
  Trace() = default;

  explicit Trace(std::vector<Value> values) : values_(std::move(values)) {
    if (values_.empty()) throw domain_error("trace horizon must be at least 1");
    unsigned mask = ~0u;
    std::size_t rv_dim = 0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const Value& v = values_[k];
      if (const auto* r = std::get_if<RealVec>(&v)) {
        if (r->components.empty())
          throw domain_error("empty real vector at step " + std::to_string(k));
        for (double c : r->components)
          if (!std::isfinite(c))
            throw domain_error("non-finite component at step " + std::to_string(k));
        if (k == 0) rv_dim = r->components.size();
        else if (r->components.size() != rv_dim)
          throw domain_error("real vector dimension changes at step " + std::to_string(k));
      }
      mask &= detail::compatible_kinds(v);
      if (mask == 0)
        throw domain_error("mixed value domains within one trace (step " +
                           std::to_string(k) + ")");
    }
    // Prefer the raw kinds over projection kinds when both fit (e.g. an
    // all-input trace is a mixed-IO trace and also an input projection).
    for (TraceKind k : {TraceKind::real_vec, TraceKind::pair_io, TraceKind::mixed_io,
                        TraceKind::in_projection, TraceKind::out_projection}) {
      if (mask & (1u << static_cast<int>(k))) {
        kind_ = k;
        break;
      }
    }
  }

  std::size_t horizon() const { return values_.size(); }
  TraceKind kind() const { return kind_; }
  const std::vector<Value>& values() const { return values_; }
  const Value& operator[](std::size_t t) const { return values_[t]; }
  const Value& at(std::size_t t) const {
    if (t >= values_.size())
      throw std::out_of_range("time index " + std::to_string(t) + " beyond horizon " +
                              std::to_string(values_.size()));
    return values_[t];
  }

  /// Exact trace equality (value by value).
  bool operator==(const Trace& o) const { return values_ == o.values_; }

 private:
  std::vector<Value> values_;
  TraceKind kind_ = TraceKind::mixed_io;
};

/// Shorthands for writing mixed-IO traces in code and tests.
inline Value in(double v) { return MixedIn{v}; }
inline Value out(double v) { return MixedOut{v}; }
inline Value quiet() { return Quiescence{}; }
inline Value pair(double i, double o) { return PairIO{i, o}; }

inline Trace project_inputs(const Trace& trace) {
  if (trace.kind() == TraceKind::real_vec || trace.kind() == TraceKind::out_projection)
    throw domain_error(std::string("cannot project a ") + to_string(trace.kind()) +
                       " trace on inputs");
  std::vector<Value> vs;
  vs.reserve(trace.horizon());
  for (const Value& v : trace.values()) vs.push_back(input_part(v));
  return Trace(std::move(vs));
}

inline Trace project_outputs(const Trace& trace) {
  if (trace.kind() == TraceKind::real_vec || trace.kind() == TraceKind::in_projection)
    throw domain_error(std::string("cannot project a ") + to_string(trace.kind()) +
                       " trace on outputs");
  std::vector<Value> vs;
  vs.reserve(trace.horizon());
  for (const Value& v : trace.values()) vs.push_back(output_part(v));
  return Trace(std::move(vs));
}

/// True iff the input projections of both traces agree at every step.
inline bool same_inputs(const Trace& a, const Trace& b) {
  if (a.horizon() != b.horizon()) return false;
  for (std::size_t k = 0; k < a.horizon(); ++k)
    if (input_part(a[k]) != input_part(b[k])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

enum class DistanceKind {
  abs_diff_mixed_in,
  abs_diff_mixed_out,
  euclid_normalized,
  abs_diff_scalar,
  custom_table,
};

inline const char* to_string(DistanceKind k) {
  switch (k) {
    case DistanceKind::abs_diff_mixed_in: return "abs-diff-mixed-in";
    case DistanceKind::abs_diff_mixed_out: return "abs-diff-mixed-out";
    case DistanceKind::euclid_normalized: return "euclid-normalized";
    case DistanceKind::abs_diff_scalar: return "abs-diff-scalar";
    case DistanceKind::custom_table: return "custom-table";
  }
  return "?";
}

inline DistanceKind distance_kind_from_string(const std::string& s) {
  for (DistanceKind k :
       {DistanceKind::abs_diff_mixed_in, DistanceKind::abs_diff_mixed_out,
        DistanceKind::euclid_normalized, DistanceKind::abs_diff_scalar,
        DistanceKind::custom_table})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown distance '" + s + "'");
}

/// One symmetric entry of a custom distance table.
struct TableEntry {
  double a = 0;
  double b = 0;
  double distance = 0;
  bool operator==(const TableEntry&) const = default;
};

/// A built-in distance measure with its parameters. Symmetric, zero on the
/// diagonal, values in [0, inf].
class DistanceFn {
 public:
  DistanceFn() = default;

  static DistanceFn mixed_in() { return DistanceFn(DistanceKind::abs_diff_mixed_in); }
  static DistanceFn mixed_out() { return DistanceFn(DistanceKind::abs_diff_mixed_out); }
  static DistanceFn scalar() { return DistanceFn(DistanceKind::abs_diff_scalar); }
  static DistanceFn euclid_normalized(std::size_t dimension) {
    if (dimension == 0) throw std::invalid_argument("euclid-normalized needs dimension >= 1");
    DistanceFn d(DistanceKind::euclid_normalized);
    d.dimension_ = dimension;
    return d;
  }
  static DistanceFn table(std::vector<TableEntry> entries) {
    for (const auto& e : entries)
      if (!(e.distance >= 0)) throw std::invalid_argument("table distances must be >= 0");
    DistanceFn d(DistanceKind::custom_table);
    d.entries_ = std::move(entries);
    return d;
  }

  DistanceKind kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }
  const std::vector<TableEntry>& entries() const { return entries_; }

  bool operator==(const DistanceFn&) const = default;

  double operator()(const Value& a, const Value& b) const {
    switch (kind_) {
      case DistanceKind::abs_diff_mixed_in: return mixed_in_distance(a, b);
      case DistanceKind::abs_diff_mixed_out: return mixed_out_distance(a, b);
      case DistanceKind::euclid_normalized: {
        const auto* x = std::get_if<RealVec>(&a);
        const auto* y = std::get_if<RealVec>(&b);
        if (!x || !y) throw domain_error("euclid-normalized expects real vectors");
        return vectors(x->components, y->components);
      }
      case DistanceKind::abs_diff_scalar:
        return std::abs(scalar_of(a) - scalar_of(b));
      case DistanceKind::custom_table: return lookup(scalar_of(a), scalar_of(b));
    }
    return kInf;
  }

  /// Distance between plain input vectors (fairness inputs / outputs).
  double vectors(std::span<const double> a, std::span<const double> b) const {
    switch (kind_) {
      case DistanceKind::euclid_normalized: {
        if (a.size() != dimension_ || b.size() != dimension_)
          throw domain_error("euclid-normalized: expected dimension " +
                             std::to_string(dimension_));
        double sum = 0;
        for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(sum / static_cast<double>(dimension_));
      }
      case DistanceKind::abs_diff_scalar:
        if (a.size() != 1 || b.size() != 1) throw domain_error("abs-diff-scalar expects scalars");
        return std::abs(a[0] - b[0]);
      case DistanceKind::custom_table:
        if (a.size() != 1 || b.size() != 1) throw domain_error("custom-table expects scalars");
        return lookup(a[0], b[0]);
      default:
        throw domain_error(std::string(to_string(kind_)) + " is not defined on vectors");
    }
  }

  double scalars(double a, double b) const {
    const double x[1] = {a};
    const double y[1] = {b};
    return vectors(x, y);
  }

  /// |a-b| for two inputs, 0 for two masks, inf otherwise.
  static double mixed_in_distance(const Value& a, const Value& b) {
    check_in_domain(a);
    check_in_domain(b);
    const auto* x = std::get_if<MixedIn>(&a);
    const auto* y = std::get_if<MixedIn>(&b);
    if (x && y) return std::abs(x->value - y->value);
    if (!x && !y) return 0.0;
    return kInf;
  }

  /// |a-b| for two proper outputs, 0 for matching masks or quiescence, inf
  /// otherwise.
  static double mixed_out_distance(const Value& a, const Value& b) {
    check_out_domain(a);
    check_out_domain(b);
    const auto* x = std::get_if<MixedOut>(&a);
    const auto* y = std::get_if<MixedOut>(&b);
    if (x && y) return std::abs(x->value - y->value);
    if (std::holds_alternative<MaskOut>(a) && std::holds_alternative<MaskOut>(b)) return 0.0;
    if (std::holds_alternative<Quiescence>(a) && std::holds_alternative<Quiescence>(b))
      return 0.0;
    return kInf;
  }

 private:
  explicit DistanceFn(DistanceKind k) : kind_(k) {}

  static void check_in_domain(const Value& v) {
    if (!std::holds_alternative<MixedIn>(v) && !std::holds_alternative<MaskIn>(v))
      throw domain_error("input distance applied to a non-input symbol");
  }
  static void check_out_domain(const Value& v) {
    if (!std::holds_alternative<MixedOut>(v) && !std::holds_alternative<MaskOut>(v) &&
        !std::holds_alternative<Quiescence>(v))
      throw domain_error("output distance applied to a non-output symbol");
  }

  static double scalar_of(const Value& v) {
    if (const auto* r = std::get_if<RealVec>(&v)) {
      if (r->components.size() == 1) return r->components[0];
    } else if (const auto* i = std::get_if<MixedIn>(&v)) {
      return i->value;
    } else if (const auto* o = std::get_if<MixedOut>(&v)) {
      return o->value;
    }
    throw domain_error("scalar distance applied to a non-scalar value");
  }

  double lookup(double a, double b) const {
    if (a == b) return 0.0;
    for (const auto& e : entries_)
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return e.distance;
    return kInf;
  }

  DistanceKind kind_ = DistanceKind::abs_diff_scalar;
  std::size_t dimension_ = 0;
  std::vector<TableEntry> entries_;
};

inline double mixed_in_distance(const Value& a, const Value& b) {
  return DistanceFn::mixed_in_distance(a, b);
}
inline double mixed_out_distance(const Value& a, const Value& b) {
  return DistanceFn::mixed_out_distance(a, b);
}

/// Input-equality measure: 0 iff equal, d_in + epsilon for two distinct
/// proper inputs, inf otherwise.
struct EqConfig {
  DistanceFn base = DistanceFn::mixed_in();
  double epsilon = 0.001;

  bool operator==(const EqConfig&) const = default;
};

inline double eq_measure(const Value& a, const Value& b, const EqConfig& cfg) {
  if (!(cfg.epsilon > 0)) throw std::invalid_argument("eq epsilon must be positive");
  if (a == b) return 0.0;
  const bool proper = (is_input(a) && is_input(b)) ||
                      (std::holds_alternative<RealVec>(a) && std::holds_alternative<RealVec>(b));
  if (proper) return cfg.base(a, b) + cfg.epsilon;
  return kInf;
}

}  // namespace hyperclean
