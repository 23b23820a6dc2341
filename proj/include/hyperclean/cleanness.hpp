#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperclean/extended_real.hpp"
#include "hyperclean/logic.hpp"
#include "hyperclean/piecewise.hpp"
#include "hyperclean/traces.hpp"

namespace hyperclean {

/// A contract or context is not applicable to the given system.
class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Robust cleanness context <Std, dIn, dOut, kappa_in, kappa_out>.
struct RobustContext {
  std::vector<Trace> std;
  DistanceFn d_in = DistanceFn::mixed_in();
  DistanceFn d_out = DistanceFn::mixed_out();
  double kappa_in = 0;
  double kappa_out = 0;
  EqConfig eq;
  /// Drop the "pi'_1 is standard" conjunct of the upper formula (contract form).
  bool contract_form = false;
};

/// Func-cleanness context <Std, dIn, dOut, f>.
struct FuncContext {
  std::vector<Trace> std;
  DistanceFn d_in = DistanceFn::mixed_in();
  DistanceFn d_out = DistanceFn::mixed_out();
  PiecewiseFn f = PiecewiseFn::constant(0);
  EqConfig eq;
  bool contract_form = false;
};

enum class CleannessKind { l_rob, u_rob, l_fun, u_fun };

inline const char* to_string(CleannessKind k) {
  switch (k) {
    case CleannessKind::l_rob: return "l-rob";
    case CleannessKind::u_rob: return "u-rob";
    case CleannessKind::l_fun: return "l-fun";
    case CleannessKind::u_fun: return "u-fun";
  }
  return "?";
}

namespace detail {

template <typename Ctx>
void validate_context(const Ctx& ctx) {
  if (ctx.std.empty()) throw contract_error("standard behaviour must not be empty");
  const Trace& first = ctx.std.front();
  for (const Trace& s : ctx.std) {
    if (s.horizon() != first.horizon())
      throw contract_error("standard traces differ in horizon");
    if (s.kind() != first.kind()) throw contract_error("standard traces differ in value domain");
  }
  if (!(ctx.eq.epsilon > 0)) throw contract_error("eq epsilon must be positive");
}

inline void validate_kappas(const RobustContext& ctx) {
  if (!(ctx.kappa_in >= 0) || !(ctx.kappa_out >= 0))
    throw contract_error("kappa values must be non-negative");
}

inline double d_in_at(const DistanceFn& d, const Trace& a, const Trace& b, std::size_t k) {
  return d(input_part(a[k]), input_part(b[k]));
}
inline double d_out_at(const DistanceFn& d, const Trace& a, const Trace& b, std::size_t k) {
  return d(output_part(a[k]), output_part(b[k]));
}

inline bool contains(const std::vector<Trace>& set, const Trace& w) {
  for (const Trace& s : set)
    if (s == w) return true;
  return false;
}

// Building blocks over variable indices. Each threshold captures what it
// needs by value so formulas outlive the context they were built from.

inline Formula std_member(std::shared_ptr<const std::vector<Trace>> std, std::size_t var,
                          const std::string& name) {
  return threshold(
      "Std(" + name + ")",
      [std, var](TraceBinding b, std::size_t) { return contains(*std, *b[var]) ? kInf : -kInf; },
      {var});
}

inline Formula inputs_equal(const EqConfig& eq, std::size_t a, std::size_t b,
                            const std::string& na, const std::string& nb) {
  return globally(at_most_zero(
      "eq(in " + na + ", in " + nb + ")",
      [eq, a, b](TraceBinding w, std::size_t t) {
        return eq_measure(input_part((*w[a])[t]), input_part((*w[b])[t]), eq);
      },
      {a, b}));
}

// (dOut(out x, out y) - kappa_out <= 0) W (dIn(in x, in z) - kappa_in > 0)
inline Formula robust_step(const RobustContext& ctx, std::size_t out_a, std::size_t out_b,
                           std::size_t in_a, std::size_t in_b, const std::string& nout_a,
                           const std::string& nout_b, const std::string& nin_a,
                           const std::string& nin_b) {
  const DistanceFn d_out = ctx.d_out;
  const DistanceFn d_in = ctx.d_in;
  const double ko = ctx.kappa_out;
  const double ki = ctx.kappa_in;
  Formula out_ok = at_most_zero(
      "dOut(out " + nout_a + ", out " + nout_b + ") - " + format_extended(ko),
      [d_out, ko, out_a, out_b](TraceBinding w, std::size_t t) {
        return minus_bound(d_out_at(d_out, *w[out_a], *w[out_b], t), ko);
      },
      {out_a, out_b});
  Formula in_far = threshold(
      "dIn(in " + nin_a + ", in " + nin_b + ") - " + format_extended(ki),
      [d_in, ki, in_a, in_b](TraceBinding w, std::size_t t) {
        return minus_bound(d_in_at(d_in, *w[in_a], *w[in_b], t), ki);
      },
      {in_a, in_b});
  return weak_until(std::move(out_ok), std::move(in_far));
}

// G(dOut(out x, out y) - f(dIn(in x, in z)) <= 0)
inline Formula func_step(const FuncContext& ctx, std::size_t out_a, std::size_t out_b,
                         std::size_t in_a, std::size_t in_b, const std::string& nout_a,
                         const std::string& nout_b, const std::string& nin_a,
                         const std::string& nin_b) {
  const DistanceFn d_out = ctx.d_out;
  const DistanceFn d_in = ctx.d_in;
  const PiecewiseFn f = ctx.f;
  return globally(at_most_zero(
      "dOut(out " + nout_a + ", out " + nout_b + ") - f(dIn(in " + nin_a + ", in " + nin_b + "))",
      [d_out, d_in, f, out_a, out_b, in_a, in_b](TraceBinding w, std::size_t t) {
        return minus_bound(d_out_at(d_out, *w[out_a], *w[out_b], t),
                           f(d_in_at(d_in, *w[in_a], *w[in_b], t)));
      },
      {out_a, out_b, in_a, in_b}));
}

template <typename Ctx, typename Step>
HyperFormula build_lower(const Ctx& ctx, const Step& step) {
  auto std = std::make_shared<const std::vector<Trace>>(ctx.std);
  // variables: 0 = pi1, 1 = pi2, 2 = pi'2
  Formula body = implies(std_member(std, 0, "pi1"),
                         inputs_equal(ctx.eq, 1, 2, "pi2", "pi'2") &&
                             step(ctx, 0, 2, 0, 2, "pi1", "pi'2", "pi1", "pi'2"));
  return HyperFormula({{Quantifier::forall, "pi1"},
                       {Quantifier::forall, "pi2"},
                       {Quantifier::exists, "pi'2"}},
                      std::move(body));
}

template <typename Ctx, typename Step>
HyperFormula build_upper(const Ctx& ctx, const Step& step) {
  auto std = std::make_shared<const std::vector<Trace>>(ctx.std);
  // variables: 0 = pi1, 1 = pi2, 2 = pi'1
  Formula rest = inputs_equal(ctx.eq, 0, 2, "pi1", "pi'1") &&
                 step(ctx, 2, 1, 2, 1, "pi'1", "pi2", "pi'1", "pi2");
  if (!ctx.contract_form) rest = std_member(std, 2, "pi'1") && std::move(rest);
  Formula body = implies(std_member(std, 0, "pi1"), std::move(rest));
  return HyperFormula({{Quantifier::forall, "pi1"},
                       {Quantifier::forall, "pi2"},
                       {Quantifier::exists, "pi'1"}},
                      std::move(body));
}

}  // namespace detail

/// HyperSTL characterisation of robust cleanness (kind l-rob or u-rob).
inline HyperFormula build_psi(CleannessKind kind, const RobustContext& ctx) {
  detail::validate_context(ctx);
  detail::validate_kappas(ctx);
  const auto step = [](const RobustContext& c, auto... args) { return detail::robust_step(c, args...); };
  switch (kind) {
    case CleannessKind::l_rob: return detail::build_lower(ctx, step);
    case CleannessKind::u_rob: return detail::build_upper(ctx, step);
    default: throw std::invalid_argument("robust context needs kind l-rob or u-rob");
  }
}

/// HyperSTL characterisation of func-cleanness (kind l-fun or u-fun).
inline HyperFormula build_psi(CleannessKind kind, const FuncContext& ctx) {
  detail::validate_context(ctx);
  const auto step = [](const FuncContext& c, auto... args) { return detail::func_step(c, args...); };
  switch (kind) {
    case CleannessKind::l_fun: return detail::build_lower(ctx, step);
    case CleannessKind::u_fun: return detail::build_upper(ctx, step);
    default: throw std::invalid_argument("func context needs kind l-fun or u-fun");
  }
}

// ---------------------------------------------------------------------------
// Self-composition
// ---------------------------------------------------------------------------

/// (w, w1, ..., wc): a subject trace followed by the standard traces.
struct ComposedTrace {
  Trace subject;
  std::vector<Trace> standards;

  /// Variable binding for the composed formula: 0 = subject, b = standard b.
  std::vector<const Trace*> binding() const {
    std::vector<const Trace*> b{&subject};
    for (const Trace& s : standards) b.push_back(&s);
    return b;
  }
};

inline ComposedTrace compose(const Trace& subject, const std::vector<Trace>& std) {
  for (const Trace& s : std)
    if (s.horizon() != subject.horizon())
      throw contract_error("composed traces must share one horizon");
  return ComposedTrace{subject, std};
}

inline std::vector<ComposedTrace> self_compose(std::span<const Trace> system,
                                               const std::vector<Trace>& std) {
  std::vector<ComposedTrace> out;
  out.reserve(system.size());
  for (const Trace& w : system) out.push_back(compose(w, std));
  return out;
}

namespace detail {

template <typename Ctx, typename Step>
Formula build_phi_upper(const Ctx& ctx, const Step& step) {
  validate_context(ctx);
  const std::size_t c = ctx.std.size();
  std::vector<Formula> outer;
  for (std::size_t a = 1; a <= c; ++a) {
    std::vector<Formula> inner;
    for (std::size_t b = 1; b <= c; ++b) {
      const std::string na = "w" + std::to_string(a);
      const std::string nb = "w" + std::to_string(b);
      inner.push_back(inputs_equal(ctx.eq, a, b, na, nb) &&
                      step(ctx, b, 0, b, 0, nb, "w", nb, "w"));
    }
    outer.push_back(any_of(std::move(inner)));
  }
  return all_of(std::move(outer));
}

}  // namespace detail

/// STL formula over composed traces equivalent to the upper robust clause.
inline Formula build_phi_u_rob(const RobustContext& ctx) {
  detail::validate_kappas(ctx);
  return detail::build_phi_upper(
      ctx, [](const RobustContext& c, auto... args) { return detail::robust_step(c, args...); });
}

/// STL formula over composed traces equivalent to the upper func clause.
inline Formula build_phi_u_fun(const FuncContext& ctx) {
  return detail::build_phi_upper(
      ctx, [](const FuncContext& c, auto... args) { return detail::func_step(c, args...); });
}

inline bool eval_bool(const Formula& phi, const ComposedTrace& w, std::size_t t = 0) {
  const auto b = w.binding();
  return eval_bool(phi, TraceBinding(b), t);
}

inline double eval_quant(const Formula& phi, const ComposedTrace& w, std::size_t t = 0) {
  const auto b = w.binding();
  return eval_quant(phi, TraceBinding(b), t);
}

/// Robustness of a composed formula over a whole system: the minimum over
/// its composed traces.
inline double eval_quant(const Formula& phi, const std::vector<ComposedTrace>& system) {
  double r = kInf;
  for (const auto& w : system) r = std::min(r, eval_quant(phi, w));
  return r;
}

inline bool eval_bool(const Formula& phi, const std::vector<ComposedTrace>& system) {
  for (const auto& w : system)
    if (!eval_bool(phi, w)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Direct oracles
// ---------------------------------------------------------------------------

enum class Clause { lower, upper };

inline const char* to_string(Clause c) { return c == Clause::lower ? "l" : "u"; }

/// First violating (standard, subject) pair of one clause. Indices point
/// into the system. `candidate` is the admissible counterpart that held out
/// longest (absent when none has matching inputs) and `time` is where it
/// failed.
struct Violation {
  Clause clause = Clause::lower;
  std::size_t standard = 0;
  std::size_t subject = 0;
  std::optional<std::size_t> candidate;
  std::size_t time = 0;
};

struct OracleVerdict {
  std::optional<Violation> lower;
  std::optional<Violation> upper;

  bool clean() const { return !lower && !upper; }
  const std::optional<Violation>& first() const { return lower ? lower : upper; }
};

namespace detail {

inline std::vector<std::size_t> std_indices(std::span<const Trace> system,
                                            const std::vector<Trace>& std) {
  std::vector<std::size_t> idx;
  for (const Trace& s : std) {
    std::size_t i = 0;
    while (i < system.size() && !(system[i] == s)) ++i;
    if (i == system.size()) throw contract_error("standard trace is not part of the system");
    idx.push_back(i);
  }
  for (const Trace& w : system)
    if (w.horizon() != std.front().horizon())
      throw contract_error("system traces must share the standard horizon");
  return idx;
}

// Time at which `bound_ok(k)` first fails, or nullopt if it holds throughout.
template <typename Pred>
std::optional<std::size_t> first_failure(std::size_t horizon, const Pred& ok) {
  for (std::size_t k = 0; k < horizon; ++k)
    if (!ok(k)) return k;
  return std::nullopt;
}

// Generic clause check. For each (sigma in Std, sigma' in S) in order, look
// for a counterpart among `pool(sigma, sigma')` satisfying `holds_until`.
template <typename Pool, typename Check>
std::optional<Violation> check_clause(Clause clause, std::span<const Trace> system,
                                      const std::vector<std::size_t>& std_idx,
                                      const Pool& pool, const Check& check) {
  for (std::size_t s : std_idx) {
    for (std::size_t sp = 0; sp < system.size(); ++sp) {
      std::optional<std::size_t> best;
      std::size_t best_time = 0;
      bool satisfied = false;
      for (std::size_t cand : pool(s, sp)) {
        const auto fail = check(s, sp, cand);
        if (!fail) {
          satisfied = true;
          break;
        }
        if (!best || *fail > best_time) {
          best = cand;
          best_time = *fail;
        }
      }
      if (!satisfied) return Violation{clause, s, sp, best, best_time};
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Checks both clauses of robust cleanness by enumeration.
inline OracleVerdict oracle_robustly_clean(std::span<const Trace> system,
                                           const RobustContext& ctx) {
  detail::validate_context(ctx);
  detail::validate_kappas(ctx);
  const auto std_idx = detail::std_indices(system, ctx.std);
  const std::size_t h = ctx.std.front().horizon();

  // Length of the prefix on which sigma and sigma' stay within kappa_in.
  const auto premise_len = [&](std::size_t s, std::size_t sp) {
    std::size_t k = 0;
    while (k < h && detail::d_in_at(ctx.d_in, system[s], system[sp], k) <= ctx.kappa_in) ++k;
    return k;
  };

  const auto lower_pool = [&](std::size_t, std::size_t sp) {
    std::vector<std::size_t> p;
    for (std::size_t i = 0; i < system.size(); ++i)
      if (same_inputs(system[i], system[sp])) p.push_back(i);
    return p;
  };
  const auto lower_check = [&](std::size_t s, std::size_t sp, std::size_t c) {
    const std::size_t n = premise_len(s, sp);
    return detail::first_failure(n, [&](std::size_t k) {
      return detail::d_out_at(ctx.d_out, system[s], system[c], k) <= ctx.kappa_out;
    });
  };
  const auto upper_pool = [&](std::size_t s, std::size_t) {
    std::vector<std::size_t> p;
    for (std::size_t i : std_idx)
      if (same_inputs(system[i], system[s]) && std::find(p.begin(), p.end(), i) == p.end())
        p.push_back(i);
    return p;
  };
  const auto upper_check = [&](std::size_t s, std::size_t sp, std::size_t c) {
    const std::size_t n = premise_len(s, sp);
    return detail::first_failure(n, [&](std::size_t k) {
      return detail::d_out_at(ctx.d_out, system[sp], system[c], k) <= ctx.kappa_out;
    });
  };
  return {detail::check_clause(Clause::lower, system, std_idx, lower_pool, lower_check),
          detail::check_clause(Clause::upper, system, std_idx, upper_pool, upper_check)};
}

/// Checks both clauses of func-cleanness by enumeration.
inline OracleVerdict oracle_func_clean(std::span<const Trace> system, const FuncContext& ctx) {
  detail::validate_context(ctx);
  const auto std_idx = detail::std_indices(system, ctx.std);
  const std::size_t h = ctx.std.front().horizon();

  const auto lower_pool = [&](std::size_t, std::size_t sp) {
    std::vector<std::size_t> p;
    for (std::size_t i = 0; i < system.size(); ++i)
      if (same_inputs(system[i], system[sp])) p.push_back(i);
    return p;
  };
  const auto lower_check = [&](std::size_t s, std::size_t sp, std::size_t c) {
    return detail::first_failure(h, [&](std::size_t k) {
      return detail::d_out_at(ctx.d_out, system[s], system[c], k) <=
             ctx.f(detail::d_in_at(ctx.d_in, system[s], system[sp], k));
    });
  };
  const auto upper_pool = [&](std::size_t s, std::size_t) {
    std::vector<std::size_t> p;
    for (std::size_t i : std_idx)
      if (same_inputs(system[i], system[s]) && std::find(p.begin(), p.end(), i) == p.end())
        p.push_back(i);
    return p;
  };
  const auto upper_check = [&](std::size_t s, std::size_t sp, std::size_t c) {
    return detail::first_failure(h, [&](std::size_t k) {
      return detail::d_out_at(ctx.d_out, system[sp], system[c], k) <=
             ctx.f(detail::d_in_at(ctx.d_in, system[s], system[sp], k));
    });
  };
  return {detail::check_clause(Clause::lower, system, std_idx, lower_pool, lower_check),
          detail::check_clause(Clause::upper, system, std_idx, upper_pool, upper_check)};
}

/// Verdict of the deterministic func-cleanness check.
struct DetVerdict {
  bool clean = true;
  /// First violating (standard input index, grid index), if any.
  std::optional<std::pair<std::size_t, std::size_t>> witness;
  /// Smallest slack f(dIn) - dOut seen over all checked pairs.
  double min_slack = kInf;
};

/// Deterministic func-cleanness over a finite input grid: for every standard
/// input i and grid input i', dOut(P(i), P(i')) <= f(dIn(i, i')).
template <typename System>
DetVerdict oracle_func_clean_det(const System& P, std::span<const std::vector<double>> std_inputs,
                                 std::span<const std::vector<double>> grid, const DistanceFn& d_in,
                                 const DistanceFn& d_out, const PiecewiseFn& f) {
  DetVerdict v;
  std::vector<double> grid_out;
  grid_out.reserve(grid.size());
  for (const auto& g : grid) grid_out.push_back(P(std::span<const double>(g)));
  for (std::size_t s = 0; s < std_inputs.size(); ++s) {
    const double ps = P(std::span<const double>(std_inputs[s]));
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double bound = f(d_in.vectors(std_inputs[s], grid[g]));
      const double dist = d_out.scalars(ps, grid_out[g]);
      const double slack = is_pos_inf(bound) ? kInf : bound - dist;
      v.min_slack = std::min(v.min_slack, slack);
      if (dist > bound && v.clean) {
        v.clean = false;
        v.witness = std::make_pair(s, g);
      }
    }
  }
  return v;
}

}  // namespace hyperclean
