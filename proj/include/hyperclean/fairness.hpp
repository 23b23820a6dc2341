#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperclean/extended_real.hpp"
#include "hyperclean/falsify.hpp"
#include "hyperclean/hr_systems.hpp"
#include "hyperclean/piecewise.hpp"
#include "hyperclean/rng.hpp"
#include "hyperclean/traces.hpp"

namespace hyperclean {

using InputVec = std::vector<double>;
using ScoringFn = std::function<double(std::span<const double>)>;

struct FairnessContract {
  DistanceFn d_in = DistanceFn::euclid_normalized(1);
  DistanceFn d_out = DistanceFn::scalar();
  PiecewiseFn f = PiecewiseFn::constant(0);
};

/// 0.001 + 8d on [0, 0.01], 0.001 + 4d up to 0.1, 0.001 + 2d beyond.
inline PiecewiseFn reference_fairness_bound() {
  return PiecewiseFn({{0, 0.01, 8, 0.001}, {0.01, 0.1, 4, 0.001}, {0.1, 1, 2, 0.001}});
}

inline FairnessContract reference_fairness_contract() {
  return {hr::input_distance(), DistanceFn::scalar(), reference_fairness_bound()};
}

/// P failed on an input; the input is kept in `offending()`.
class monitoring_error : public std::runtime_error {
 public:
  monitoring_error(const std::string& what, InputVec offending)
      : std::runtime_error(what), offending_(std::move(offending)) {}
  const InputVec& offending() const { return offending_; }

 private:
  InputVec offending_;
};

namespace detail {

inline double run_system(const ScoringFn& P, const InputVec& i) {
  double y = 0;
  try {
    y = P(std::span<const double>(i));
  } catch (const std::exception& e) {
    throw monitoring_error(std::string("system evaluation failed: ") + e.what(), i);
  }
  if (std::isnan(y)) throw monitoring_error("system returned NaN", i);
  return y;
}

inline double score_from_outputs(const FairnessContract& c, const InputVec& a, double pa,
                                 const InputVec& b, double pb) {
  const double bound = c.f(c.d_in.vectors(a, b));
  return is_pos_inf(bound) ? kInf : bound - c.d_out.scalars(pa, pb);
}

}  // namespace detail

/// F(i_r, i_s) = f(dIn(i_r, i_s)) - dOut(P(i_r), P(i_s)).
inline double fairness_score(const ScoringFn& P, const FairnessContract& c, const InputVec& i_r,
                             const InputVec& i_s) {
  return detail::score_from_outputs(c, i_r, detail::run_system(P, i_r), i_s,
                                    detail::run_system(P, i_s));
}

struct FairnessScoreTriple {
  double score = kInf;
  InputVec actual;
  InputVec synthetic;
  /// Position of `actual` in the monitored set.
  std::size_t actual_index = 0;
};

/// Minimum of F(i, i_s) over i in I; ties keep the first element of I.
inline FairnessScoreTriple rob_min(const FairnessContract& c, std::span<const InputVec> I,
                                   std::span<const double> outputs,
                                   const InputVec& i_s, double p_s) {
  if (I.empty()) throw std::invalid_argument("monitored input set is empty");
  FairnessScoreTriple best;
  for (std::size_t k = 0; k < I.size(); ++k) {
    const double F = detail::score_from_outputs(c, I[k], outputs[k], i_s, p_s);
    if (k == 0 || F < best.score) best = {F, I[k], i_s, k};
  }
  return best;
}

inline FairnessScoreTriple rob_min(const ScoringFn& P, const FairnessContract& c,
                                   std::span<const InputVec> I, const InputVec& i_s) {
  std::vector<double> outputs;
  for (const auto& i : I) outputs.push_back(detail::run_system(P, i));
  return rob_min(c, I, outputs, i_s, detail::run_system(P, i_s));
}

/// Proposal PS(i_s, P(i_s)).
using FairnessProposal = std::function<InputVec(const InputVec&, double, Rng&)>;

/// Per-component closed ranges.
struct InputBox {
  InputVec lo;
  InputVec hi;

  static InputBox of(const ScoringTable& t) {
    InputBox b;
    for (std::size_t k = 0; k < t.dimension(); ++k) {
      b.lo.push_back(t.lower(k));
      b.hi.push_back(t.upper(k));
    }
    return b;
  }
  static InputBox unit(std::size_t dim) { return {InputVec(dim, 0.0), InputVec(dim, 1.0)}; }
  std::size_t dimension() const { return lo.size(); }
};

/// Moves one uniformly chosen component by a uniform step in
/// [-step_bound, step_bound] and clamps it to the box. Ignores P(i_s).
inline FairnessProposal perturb_one(InputBox box, double step_bound) {
  if (!(step_bound > 0)) throw std::invalid_argument("step bound must be positive");
  if (box.lo.size() != box.hi.size() || box.lo.empty())
    throw std::invalid_argument("input box bounds mismatch");
  return [box = std::move(box), step_bound](const InputVec& i_s, double, Rng& rng) {
    InputVec next = i_s;
    const std::size_t k = rng.index(next.size());
    next[k] = std::clamp(next[k] + rng.uniform(-step_bound, step_bound), box.lo[k], box.hi[k]);
    return next;
  };
}

/// Fixed inputs to draw from (with replacement); useful for exhaustive grids.
inline FairnessProposal from_support(std::vector<InputVec> support) {
  if (support.empty()) throw std::invalid_argument("proposal support is empty");
  return [support = std::move(support)](const InputVec&, double, Rng& rng) {
    return support[rng.index(support.size())];
  };
}

struct MonitorProbe {
  InputVec synthetic;
  double output = 0;
  double score = kInf;
  std::size_t actual_index = 0;
  bool accepted = false;
};

struct MonitorRun {
  FairnessScoreTriple minimum;
  /// The initial synthetic input followed by one entry per proposal.
  std::vector<MonitorProbe> log;
  std::uint64_t seed = 0;
};

/// Metropolis search for the minimal fairness score triple over I x In.
/// Runs exactly cfg.max_iterations proposals.
inline MonitorRun fairness_monitor_run(const ScoringFn& P, const FairnessContract& c,
                                       std::span<const InputVec> I, const FalsifierConfig& cfg,
                                       const FairnessProposal& PS) {
  cfg.validate();
  if (I.empty()) throw std::invalid_argument("monitored input set is empty");
  Rng rng(cfg.rng_seed);
  std::vector<double> outputs;
  outputs.reserve(I.size());
  for (const auto& i : I) outputs.push_back(detail::run_system(P, i));

  MonitorRun run;
  run.seed = cfg.rng_seed;
  InputVec i_s = I[0];
  double p_s = outputs[0];
  FairnessScoreTriple cur = rob_min(c, I, outputs, i_s, p_s);
  run.minimum = cur;
  run.log.push_back({i_s, p_s, cur.score, cur.actual_index, true});

  double beta = cfg.beta;
  std::size_t since_improvement = 0;
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    InputVec cand;
    try {
      cand = PS(i_s, p_s, rng);
    } catch (const monitoring_error&) {
      throw;
    } catch (const std::exception& e) {
      throw monitoring_error(std::string("proposal scheme failed: ") + e.what(), i_s);
    }
    const double p_c = detail::run_system(P, cand);
    FairnessScoreTriple next = rob_min(c, I, outputs, cand, p_c);
    if (next.score < run.minimum.score) {
      run.minimum = next;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    const double alpha = std::exp(-beta * robustness_delta(next.score, cur.score));
    const bool accept = rng.uniform_open_closed() <= alpha;
    run.log.push_back({cand, p_c, next.score, next.actual_index, accept});
    if (accept) {
      i_s = std::move(cand);
      p_s = p_c;
      cur = std::move(next);
    }
    if (cfg.adaptation && since_improvement >= cfg.adaptation->window) {
      beta *= cfg.adaptation->factor;
      since_improvement = 0;
    }
  }
  return run;
}

inline FairnessScoreTriple fairness_monitor(const ScoringFn& P, const FairnessContract& c,
                                            std::span<const InputVec> I, const FalsifierConfig& cfg,
                                            const FairnessProposal& PS) {
  return fairness_monitor_run(P, c, I, cfg, PS).minimum;
}

/// Defaults for monitoring one case: 10,000 proposals, beta scaled to the
/// magnitude of typical scores (~0.1), and a step bound of 0.05.
struct MonitorDefaults {
  static constexpr std::size_t iterations = 10000;
  static constexpr double beta = 100.0;
  static constexpr double step_bound = 0.05;
};

inline FalsifierConfig monitor_config(std::uint64_t seed) {
  FalsifierConfig cfg;
  cfg.beta = MonitorDefaults::beta;
  cfg.max_iterations = MonitorDefaults::iterations;
  cfg.rng_seed = seed;
  return cfg;
}

struct FairnessVerdict {
  double system_output = 0;
  /// F_min / f(dIn); -inf when f(dIn) = 0 and F_min < 0.
  double normalized_score = 0;
  InputVec counterpart;
  double counterpart_output = 0;
  double score = 0;
  /// f(dIn(i_r, i_s)) and dOut(P(i_r), P(i_s)) for the witnessed pair.
  double bound = 0;
  double output_distance = 0;

  bool flagged() const { return normalized_score < 0; }
};

/// Normalizes F by f(dIn). 0/0 is 0, negative/0 is -inf, inf/inf is 1.
inline double normalize_score(double F, double bound) {
  if (is_pos_inf(bound)) return 1.0;
  if (bound == 0) return F < 0 ? -kInf : 0.0;
  return F / bound;
}

inline std::string normalized_text(double n) {
  return is_neg_inf(n) ? "maximally unfair" : format_extended(n);
}

inline FairnessVerdict fairness_aware(const ScoringFn& P, const FairnessContract& c,
                                      const InputVec& i_r, const FalsifierConfig& cfg,
                                      const FairnessProposal& PS) {
  const std::vector<InputVec> I{i_r};
  const FairnessScoreTriple m = fairness_monitor(P, c, I, cfg, PS);
  FairnessVerdict v;
  v.system_output = detail::run_system(P, i_r);
  v.counterpart = m.synthetic;
  v.counterpart_output = detail::run_system(P, m.synthetic);
  v.score = m.score;
  v.bound = c.f(c.d_in.vectors(i_r, m.synthetic));
  v.output_distance = c.d_out.scalars(v.system_output, v.counterpart_output);
  v.normalized_score = normalize_score(m.score, v.bound);
  return v;
}

struct LipschitzVerdict {
  bool clean = true;
  /// Largest dOut/dIn over pairs with distinct outputs (inf if dIn = 0).
  double max_ratio = 0;
  std::optional<std::pair<std::size_t, std::size_t>> argmax;
};

/// Exhaustive pairwise check of dOut(P(a), P(b)) <= L * dIn(a, b).
inline LipschitzVerdict lipschitz_check(const ScoringFn& P, const DistanceFn& d_in,
                                        const DistanceFn& d_out, double L,
                                        std::span<const InputVec> grid) {
  if (!(L > 0)) throw std::invalid_argument("Lipschitz constant must be positive");
  std::vector<double> out;
  out.reserve(grid.size());
  for (const auto& g : grid) out.push_back(detail::run_system(P, g));
  LipschitzVerdict v;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    for (std::size_t b = a + 1; b < grid.size(); ++b) {
      const double dout = d_out.scalars(out[a], out[b]);
      if (dout == 0) continue;
      const double din = d_in.vectors(grid[a], grid[b]);
      const double ratio = din == 0 ? kInf : dout / din;
      if (ratio > v.max_ratio) {
        v.max_ratio = ratio;
        v.argmax = std::make_pair(a, b);
      }
      if (dout > L * din) v.clean = false;
    }
  }
  return v;
}

/// Points that differ from `center` in at most one component, each component
/// stepping through [lo, hi] with the given step. The center comes first.
inline std::vector<InputVec> axis_slices(const InputVec& center, const InputBox& box,
                                         double step) {
  if (!(step > 0)) throw std::invalid_argument("grid step must be positive");
  std::vector<InputVec> grid{center};
  for (std::size_t k = 0; k < center.size(); ++k) {
    const auto n = static_cast<std::size_t>(std::floor((box.hi[k] - box.lo[k]) / step + 1e-9));
    for (std::size_t j = 0; j <= n; ++j) {
      InputVec p = center;
      p[k] = std::min(box.hi[k], box.lo[k] + static_cast<double>(j) * step);
      if (p != center) grid.push_back(std::move(p));
    }
  }
  return grid;
}

}  // namespace hyperclean
