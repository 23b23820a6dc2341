#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hyperclean/extended_real.hpp"
#include "hyperclean/traces.hpp"

namespace hyperclean {

/// Traces bound to the variables a formula refers to, by variable index.
using TraceBinding = std::span<const Trace* const>;

/// Real-valued function of the bound traces at time t. The predicate it
/// defines is `fn > 0`.
using ThresholdFn = std::function<double(TraceBinding, std::size_t)>;

enum class Op { top, threshold, negation, conjunction, until };

class Formula;

namespace detail {
struct Node;
}

class Formula {
 public:
  Formula() = default;

  static Formula top();
  /// Predicate `fn > 0`. `uses` lists the variable indices fn reads; it is
  /// only used for closedness checks.
  static Formula threshold(std::string label, ThresholdFn fn, std::vector<std::size_t> uses = {0});
  static Formula negate(Formula f);
  static Formula conj(Formula a, Formula b);
  static Formula until(Formula a, Formula b);

  Op op() const;
  const std::string& label() const;
  const ThresholdFn& fn() const;
  const std::vector<std::size_t>& uses() const;
  const Formula& lhs() const;
  const Formula& rhs() const;
  bool empty() const { return node_ == nullptr; }

  /// Parenthesised text of the expanded tree.
  std::string render() const;

  /// Largest variable index referenced plus one.
  std::size_t arity() const;

 private:
  explicit Formula(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
  const detail::Node& node() const;

  std::shared_ptr<const detail::Node> node_;
};

namespace detail {
struct Node {
  Op op = Op::top;
  std::string label;
  ThresholdFn fn;
  std::vector<std::size_t> uses;
  Formula lhs;
  Formula rhs;
};
}  // namespace detail

inline const detail::Node& Formula::node() const {
  if (!node_) throw std::logic_error("empty formula");
  return *node_;
}

inline Formula Formula::top() {
  auto n = std::make_shared<detail::Node>();
  n->op = Op::top;
  return Formula(std::move(n));
}

inline Formula Formula::threshold(std::string label, ThresholdFn fn,
                                  std::vector<std::size_t> uses) {
  if (!fn) throw std::invalid_argument("threshold needs a function");
  auto n = std::make_shared<detail::Node>();
  n->op = Op::threshold;
  n->label = std::move(label);
  n->fn = std::move(fn);
  n->uses = std::move(uses);
  return Formula(std::move(n));
}

inline Formula Formula::negate(Formula f) {
  auto n = std::make_shared<detail::Node>();
  n->op = Op::negation;
  n->lhs = std::move(f);
  return Formula(std::move(n));
}

inline Formula Formula::conj(Formula a, Formula b) {
  auto n = std::make_shared<detail::Node>();
  n->op = Op::conjunction;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return Formula(std::move(n));
}

inline Formula Formula::until(Formula a, Formula b) {
  auto n = std::make_shared<detail::Node>();
  n->op = Op::until;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return Formula(std::move(n));
}

inline Op Formula::op() const { return node().op; }
inline const std::string& Formula::label() const { return node().label; }
inline const ThresholdFn& Formula::fn() const { return node().fn; }
inline const std::vector<std::size_t>& Formula::uses() const { return node().uses; }
inline const Formula& Formula::lhs() const { return node().lhs; }
inline const Formula& Formula::rhs() const { return node().rhs; }

inline std::string Formula::render() const {
  const detail::Node& n = node();
  switch (n.op) {
    case Op::top: return "T";
    case Op::threshold: return "(" + n.label + " > 0)";
    case Op::negation: return "!" + n.lhs.render();
    case Op::conjunction: return "(" + n.lhs.render() + " & " + n.rhs.render() + ")";
    case Op::until: return "(" + n.lhs.render() + " U " + n.rhs.render() + ")";
  }
  return "?";
}

inline std::size_t Formula::arity() const {
  const detail::Node& n = node();
  switch (n.op) {
    case Op::top: return 0;
    case Op::threshold: {
      std::size_t m = 0;
      for (std::size_t u : n.uses) m = std::max(m, u + 1);
      return m;
    }
    case Op::negation: return n.lhs.arity();
    case Op::conjunction:
    case Op::until: return std::max(n.lhs.arity(), n.rhs.arity());
  }
  return 0;
}

// Derived operators, expanded into the core syntax.

inline Formula top() { return Formula::top(); }
inline Formula bottom() { return Formula::negate(Formula::top()); }
inline Formula threshold(std::string label, ThresholdFn fn, std::vector<std::size_t> uses = {0}) {
  return Formula::threshold(std::move(label), std::move(fn), std::move(uses));
}
/// Predicate `fn <= 0`, written as the negation of `fn > 0`.
inline Formula at_most_zero(std::string label, ThresholdFn fn,
                            std::vector<std::size_t> uses = {0}) {
  return Formula::negate(Formula::threshold(std::move(label), std::move(fn), std::move(uses)));
}
inline Formula operator!(Formula f) { return Formula::negate(std::move(f)); }
inline Formula operator&&(Formula a, Formula b) { return Formula::conj(std::move(a), std::move(b)); }
inline Formula operator||(Formula a, Formula b) { return !(!std::move(a) && !std::move(b)); }
inline Formula implies(Formula a, Formula b) { return !std::move(a) || std::move(b); }
inline Formula until(Formula a, Formula b) { return Formula::until(std::move(a), std::move(b)); }
inline Formula eventually(Formula f) { return until(top(), std::move(f)); }
inline Formula globally(Formula f) { return !eventually(!std::move(f)); }
inline Formula weak_until(Formula a, Formula b) {
  Formula g = globally(a);
  return until(std::move(a), std::move(b)) || std::move(g);
}

/// Conjunction / disjunction of a non-empty list, left-folded.
inline Formula all_of(std::vector<Formula> fs) {
  if (fs.empty()) return top();
  Formula acc = fs.front();
  for (std::size_t i = 1; i < fs.size(); ++i) acc = acc && fs[i];
  return acc;
}
inline Formula any_of(std::vector<Formula> fs) {
  if (fs.empty()) return bottom();
  Formula acc = fs.front();
  for (std::size_t i = 1; i < fs.size(); ++i) acc = acc || fs[i];
  return acc;
}

// ---------------------------------------------------------------------------
// Evaluation over one binding (a single STL trace or a full hyper assignment)
// ---------------------------------------------------------------------------

struct EvalResult {
  bool boolean = false;
  double robustness = 0;
};

namespace detail {

inline std::size_t common_horizon(TraceBinding binding) {
  if (binding.empty()) throw std::invalid_argument("no trace bound");
  std::size_t h = 0;
  for (const Trace* w : binding) {
    if (!w) throw std::invalid_argument("unbound trace variable");
    if (h == 0) h = w->horizon();
    else if (w->horizon() != h) throw domain_error("bound traces differ in horizon");
  }
  return h;
}

// Robustness at every time step, computed bottom-up.
inline std::vector<double> rho_table(const Formula& f, TraceBinding b, std::size_t horizon) {
  std::vector<double> r(horizon);
  switch (f.op()) {
    case Op::top:
      std::fill(r.begin(), r.end(), kInf);
      break;
    case Op::threshold:
      for (std::size_t t = 0; t < horizon; ++t) {
        r[t] = f.fn()(b, t);
        if (std::isnan(r[t])) throw std::domain_error("threshold '" + f.label() + "' returned NaN");
      }
      break;
    case Op::negation: {
      r = rho_table(f.lhs(), b, horizon);
      for (double& x : r) x = -x;
      break;
    }
    case Op::conjunction: {
      r = rho_table(f.lhs(), b, horizon);
      const auto s = rho_table(f.rhs(), b, horizon);
      for (std::size_t t = 0; t < horizon; ++t) r[t] = std::min(r[t], s[t]);
      break;
    }
    case Op::until: {
      const auto phi = rho_table(f.lhs(), b, horizon);
      const auto psi = rho_table(f.rhs(), b, horizon);
      double next = -kInf;  // no witness beyond the horizon
      for (std::size_t t = horizon; t-- > 0;) {
        next = std::max(psi[t], std::min(phi[t], next));
        r[t] = next;
      }
      break;
    }
  }
  return r;
}

inline std::vector<char> bool_table(const Formula& f, TraceBinding b, std::size_t horizon) {
  std::vector<char> r(horizon);
  switch (f.op()) {
    case Op::top:
      std::fill(r.begin(), r.end(), 1);
      break;
    case Op::threshold:
      for (std::size_t t = 0; t < horizon; ++t) r[t] = f.fn()(b, t) > 0;
      break;
    case Op::negation: {
      r = bool_table(f.lhs(), b, horizon);
      for (char& x : r) x = !x;
      break;
    }
    case Op::conjunction: {
      r = bool_table(f.lhs(), b, horizon);
      const auto s = bool_table(f.rhs(), b, horizon);
      for (std::size_t t = 0; t < horizon; ++t) r[t] = r[t] && s[t];
      break;
    }
    case Op::until: {
      const auto phi = bool_table(f.lhs(), b, horizon);
      const auto psi = bool_table(f.rhs(), b, horizon);
      char next = 0;
      for (std::size_t t = horizon; t-- > 0;) {
        next = psi[t] || (phi[t] && next);
        r[t] = next;
      }
      break;
    }
  }
  return r;
}

inline void check_time(std::size_t t, std::size_t horizon) {
  if (t >= horizon)
    throw std::out_of_range("time index " + std::to_string(t) + " beyond horizon " +
                            std::to_string(horizon));
}

}  // namespace detail

/// Boolean semantics over the traces bound to variables 0..n-1.
inline bool eval_bool(const Formula& f, TraceBinding binding, std::size_t t = 0) {
  const std::size_t h = detail::common_horizon(binding);
  detail::check_time(t, h);
  if (f.arity() > binding.size()) throw std::invalid_argument("formula uses an unbound variable");
  return detail::bool_table(f, binding, h)[t] != 0;
}

/// Quantitative semantics (robustness) over the bound traces.
inline double eval_quant(const Formula& f, TraceBinding binding, std::size_t t = 0) {
  const std::size_t h = detail::common_horizon(binding);
  detail::check_time(t, h);
  if (f.arity() > binding.size()) throw std::invalid_argument("formula uses an unbound variable");
  return detail::rho_table(f, binding, h)[t];
}

inline bool eval_bool(const Formula& f, const Trace& w, std::size_t t = 0) {
  const Trace* b[1] = {&w};
  return eval_bool(f, TraceBinding(b), t);
}

inline double eval_quant(const Formula& f, const Trace& w, std::size_t t = 0) {
  const Trace* b[1] = {&w};
  return eval_quant(f, TraceBinding(b), t);
}

inline EvalResult evaluate(const Formula& f, const Trace& w, std::size_t t = 0) {
  return {eval_bool(f, w, t), eval_quant(f, w, t)};
}

/// User-facing verdict text; a robustness of exactly zero decides nothing.
inline const char* verdict_text(double robustness) {
  if (robustness > 0) return "satisfied";
  if (robustness < 0) return "violated";
  return "inconclusive";
}

// ---------------------------------------------------------------------------
// HyperSTL
// ---------------------------------------------------------------------------

enum class Quantifier { forall, exists };

struct QuantifiedVar {
  Quantifier quantifier;
  std::string name;
};

/// Prenex hyper formula. Variable indices in the body's thresholds: the
/// first `free_count` indices are bound by the caller's assignment, the rest
/// follow the prefix order.
class HyperFormula {
 public:
  HyperFormula(std::vector<QuantifiedVar> prefix, Formula body, std::size_t free_count = 0)
      : prefix_(std::move(prefix)), body_(std::move(body)), free_count_(free_count) {
    if (body_.arity() > free_count_ + prefix_.size())
      throw std::invalid_argument("hyper formula is not closed: a threshold uses an unbound variable");
  }

  const std::vector<QuantifiedVar>& prefix() const { return prefix_; }
  const Formula& body() const { return body_; }
  std::size_t free_count() const { return free_count_; }

  std::string render() const {
    std::string s;
    for (const auto& q : prefix_)
      s += (q.quantifier == Quantifier::forall ? "forall " : "exists ") + q.name + ". ";
    return s + body_.render();
  }

 private:
  std::vector<QuantifiedVar> prefix_;
  Formula body_;
  std::size_t free_count_;
};

namespace detail {

template <typename T, typename Leaf, typename Combine>
T hyper_rec(const HyperFormula& psi, std::span<const Trace> system,
            std::vector<const Trace*>& assignment, std::size_t level, const Leaf& leaf,
            const Combine& combine, T forall_unit, T exists_unit) {
  if (level == psi.prefix().size()) return leaf(assignment);
  const bool forall = psi.prefix()[level].quantifier == Quantifier::forall;
  T acc = forall ? forall_unit : exists_unit;
  for (const Trace& w : system) {
    assignment.push_back(&w);
    const T v = hyper_rec<T>(psi, system, assignment, level + 1, leaf, combine, forall_unit,
                             exists_unit);
    assignment.pop_back();
    acc = combine(forall, acc, v);
    // Short-circuit once the quantifier's absorbing value is reached.
    if (acc == (forall ? exists_unit : forall_unit)) break;
  }
  return acc;
}

}  // namespace detail

/// Boolean HyperSTL semantics over a finite trace set. Quantifiers range
/// over `system`; `free` binds the formula's free variables.
inline bool hyper_eval_bool(const HyperFormula& psi, std::span<const Trace> system,
                            std::span<const Trace* const> free = {}, std::size_t t = 0) {
  if (free.size() != psi.free_count())
    throw std::invalid_argument("assignment does not match the free variables");
  std::vector<const Trace*> assignment(free.begin(), free.end());
  const auto leaf = [&](const std::vector<const Trace*>& a) {
    return eval_bool(psi.body(), TraceBinding(a), t);
  };
  const auto combine = [](bool forall, bool acc, bool v) { return forall ? acc && v : acc || v; };
  return detail::hyper_rec<bool>(psi, system, assignment, 0, leaf, combine, true, false);
}

/// Quantitative HyperSTL semantics: inf over S for forall, sup for exists.
inline double hyper_eval_quant(const HyperFormula& psi, std::span<const Trace> system,
                               std::span<const Trace* const> free = {}, std::size_t t = 0) {
  if (free.size() != psi.free_count())
    throw std::invalid_argument("assignment does not match the free variables");
  std::vector<const Trace*> assignment(free.begin(), free.end());
  const auto leaf = [&](const std::vector<const Trace*>& a) {
    return eval_quant(psi.body(), TraceBinding(a), t);
  };
  const auto combine = [](bool forall, double acc, double v) {
    return forall ? std::min(acc, v) : std::max(acc, v);
  };
  return detail::hyper_rec<double>(psi, system, assignment, 0, leaf, combine, kInf, -kInf);
}

}  // namespace hyperclean
