#pragma once

#include <any>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperclean/extended_real.hpp"
#include "hyperclean/rng.hpp"
#include "hyperclean/traces.hpp"

namespace hyperclean {

/// Multiply beta by `factor` after `window` iterations without a new minimum.
struct Adaptation {
  std::size_t window = 100;
  double factor = 2.0;
};

struct FalsifierConfig {
  double beta = 1.0;
  std::size_t max_iterations = 3000;
  std::uint64_t rng_seed = 0;
  std::optional<Adaptation> adaptation;

  void validate() const {
    if (!(beta > 0) || std::isinf(beta)) throw std::invalid_argument("beta must be positive and finite");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
    if (adaptation && (adaptation->window < 1 || !(adaptation->factor > 0)))
      throw std::invalid_argument("adaptation needs window >= 1 and factor > 0");
  }
};

/// The robustness function or proposal scheme failed on a candidate. The
/// candidate is kept in `offending()`.
class search_error : public std::runtime_error {
 public:
  search_error(const std::string& what, std::any offending)
      : std::runtime_error(what), offending_(std::move(offending)) {}
  const std::any& offending() const { return offending_; }

 private:
  std::any offending_;
};

template <typename T>
struct FalsificationOutcome {
  double min_robustness = kInf;
  T argmin{};
  /// Number of proposals evaluated (0 when the initial candidate is already negative).
  std::size_t iterations_used = 0;
  bool falsified = false;
  /// Robustness of the initial candidate followed by one entry per proposal.
  std::vector<double> robustness_history;
  /// Whether each history entry became the current state (the initial one always does).
  std::vector<char> accepted;
  std::uint64_t seed = 0;
};

template <typename T>
using Robustness = std::function<double(const T&)>;

template <typename T>
using ProposalScheme = std::function<T(const T&, Rng&)>;

/// Monte-Carlo falsification with Metropolis acceptance
/// alpha = exp(-beta * (R(w') - R(w))). Stops once the current state is
/// negative or the iteration budget is spent, and returns the smallest
/// robustness observed over every evaluated candidate.
template <typename T>
FalsificationOutcome<T> falsify(const Robustness<T>& R, const T& initial,
                                const ProposalScheme<T>& propose, const FalsifierConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  const auto eval = [&](const T& w) {
    double r = 0;
    try {
      r = R(w);
    } catch (const std::exception& e) {
      throw search_error(std::string("robustness evaluation failed: ") + e.what(), w);
    }
    if (std::isnan(r)) throw search_error("robustness evaluation returned NaN", w);
    return r;
  };

  FalsificationOutcome<T> out;
  out.seed = cfg.rng_seed;
  T current = initial;
  double rho = eval(current);
  out.min_robustness = rho;
  out.argmin = current;
  out.robustness_history.push_back(rho);
  out.accepted.push_back(1);

  double beta = cfg.beta;
  std::size_t since_improvement = 0;
  std::size_t it = 0;
  while (rho >= 0 && it < cfg.max_iterations) {
    T candidate;
    try {
      candidate = propose(current, rng);
    } catch (const search_error&) {
      throw;
    } catch (const std::exception& e) {
      throw search_error(std::string("proposal scheme failed: ") + e.what(), current);
    }
    const double r = eval(candidate);
    ++it;
    out.robustness_history.push_back(r);
    if (r < out.min_robustness) {
      out.min_robustness = r;
      out.argmin = candidate;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    const double alpha = std::exp(-beta * robustness_delta(r, rho));
    const bool accept = rng.uniform_open_closed() <= alpha;
    out.accepted.push_back(accept ? 1 : 0);
    if (accept) {
      current = std::move(candidate);
      rho = r;
    }
    if (cfg.adaptation && since_improvement >= cfg.adaptation->window) {
      beta *= cfg.adaptation->factor;
      since_improvement = 0;
    }
  }
  out.iterations_used = it;
  out.falsified = out.min_robustness < 0;
  return out;
}

/// Seed of restart k: the base seed itself for k = 0, derived otherwise.
inline std::uint64_t restart_seed(std::uint64_t base, std::size_t k) {
  return k == 0 ? base : mix_seed(base ^ mix_seed(k));
}

/// Independent restarts with derived seeds, run concurrently when
/// `concurrent` is set (R and the proposal scheme must then be thread-safe).
/// The result with the smallest minimum wins; ties go to the earlier seed.
template <typename T>
FalsificationOutcome<T> falsify_restarts(const Robustness<T>& R, const T& initial,
                                         const ProposalScheme<T>& propose,
                                         const FalsifierConfig& cfg, std::size_t restarts,
                                         bool concurrent = false) {
  if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
  std::vector<FalsificationOutcome<T>> runs;
  const auto run = [&](std::size_t k) {
    FalsifierConfig c = cfg;
    c.rng_seed = restart_seed(cfg.rng_seed, k);
    return falsify(R, initial, propose, c);
  };
  if (concurrent && restarts > 1) {
    std::vector<std::future<FalsificationOutcome<T>>> futures;
    for (std::size_t k = 0; k < restarts; ++k) futures.push_back(std::async(std::launch::async, run, k));
    for (auto& f : futures) runs.push_back(f.get());
  } else {
    for (std::size_t k = 0; k < restarts; ++k) runs.push_back(run(k));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < runs.size(); ++k)
    if (runs[k].min_robustness < runs[best].min_robustness) best = k;
  return runs[best];
}

/// `iteration,robustness,accepted` report rows.
template <typename T>
void write_history_csv(std::ostream& os, const FalsificationOutcome<T>& out) {
  os << "iteration,robustness,accepted\n";
  for (std::size_t i = 0; i < out.robustness_history.size(); ++i)
    os << i << ',' << format_extended(out.robustness_history[i]) << ','
       << static_cast<int>(out.accepted[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Restricted input space
// ---------------------------------------------------------------------------

/// Traces whose inputs stay within kappa_in of some standard trace at every
/// step (boundary inclusive).
struct RestrictedInputSpace {
  std::vector<Trace> std;
  double kappa_in = 0;
  DistanceFn d_in = DistanceFn::mixed_in();
  std::size_t horizon = 0;

  /// Index of the first standard trace whose tube contains w.
  std::optional<std::size_t> tube_of(const Trace& w) const {
    if (w.horizon() != horizon)
      throw domain_error("trace horizon " + std::to_string(w.horizon()) +
                         " differs from the space horizon " + std::to_string(horizon));
    for (std::size_t s = 0; s < std.size(); ++s) {
      bool inside = true;
      for (std::size_t k = 0; k < horizon && inside; ++k)
        inside = d_in(input_part(w[k]), input_part(std[s][k])) <= kappa_in;
      if (inside) return s;
    }
    return std::nullopt;
  }

  bool contains(const Trace& w) const { return tube_of(w).has_value(); }
};

inline bool membership(const Trace& w, const RestrictedInputSpace& space) {
  return space.contains(w);
}

/// Mixed-IO trace of a speed profile (one input per sample), optionally
/// followed by a single output symbol.
inline Trace profile_trace(std::span<const double> speeds, std::optional<double> output = {}) {
  std::vector<Value> vs;
  vs.reserve(speeds.size() + 1);
  for (double v : speeds) vs.push_back(MixedIn{v});
  if (output) vs.push_back(MixedOut{*output});
  return Trace(std::move(vs));
}

/// Input values of a trace in time order (masks skipped).
inline std::vector<double> input_values(const Trace& w) {
  std::vector<double> xs;
  for (const Value& v : w.values()) {
    const Value iv = input_part(v);
    if (const auto* i = std::get_if<MixedIn>(&iv)) xs.push_back(i->value);
  }
  return xs;
}

/// Shifts a uniformly chosen contiguous window of `window` samples by one
/// offset drawn uniformly from [-step_bound, step_bound], then clamps every
/// sample into [std - kappa_in, std + kappa_in] intersected with [0, inf),
/// where std is the first standard trace whose tube holds the profile.
inline std::vector<double> propose_profile(const std::vector<double>& w,
                                           const RestrictedInputSpace& space, std::size_t window,
                                           double step_bound, Rng& rng,
                                           std::optional<double> output = {}) {
  if (!(step_bound >= 0)) throw std::invalid_argument("step bound must be >= 0");
  if (w.empty()) throw std::invalid_argument("empty profile");
  const auto tube = space.tube_of(profile_trace(w, output));
  if (!tube) throw domain_error("profile lies outside the restricted input space");
  const std::vector<double> center = input_values(space.std[*tube]);
  const std::size_t len = std::min(std::max<std::size_t>(window, 1), w.size());
  const std::size_t start = rng.index(w.size() - len + 1);
  const double offset = rng.uniform(-step_bound, step_bound);
  std::vector<double> next = w;
  for (std::size_t k = start; k < start + len; ++k) {
    const double lo = std::max(0.0, center[k] - space.kappa_in);
    const double hi = center[k] + space.kappa_in;
    double x = std::clamp(next[k] + offset, lo, hi);
    // center + kappa can round so that |x - center| > kappa; step back inside.
    while (std::abs(x - center[k]) > space.kappa_in) x = std::nextafter(x, center[k]);
    next[k] = x;
  }
  return next;
}

// ---------------------------------------------------------------------------
// Integrated testing loop
// ---------------------------------------------------------------------------

enum class RoundOutcome { agreement, disagreement, model_only, no_counterexample };

inline const char* to_string(RoundOutcome o) {
  switch (o) {
    case RoundOutcome::agreement: return "agreement";
    case RoundOutcome::disagreement: return "disagreement";
    case RoundOutcome::model_only: return "model-only";
    case RoundOutcome::no_counterexample: return "no-counterexample";
  }
  return "?";
}

struct SurrogateRound {
  std::size_t round = 0;
  double model_min_robustness = kInf;
  bool model_falsified = false;
  std::optional<double> validator_robustness;
  RoundOutcome outcome = RoundOutcome::no_counterexample;
};

template <typename In>
struct SurrogateReport {
  std::vector<SurrogateRound> rounds;
  /// Counterexample confirmed by the validator, if any.
  std::optional<In> confirmed;
};

/// Hooks for falsifying against a learned model and checking candidates on
/// a validator (e.g. the real system).
template <typename In, typename Out>
struct SurrogateSetup {
  std::function<Out(const In&)> model;
  /// Receives validated observations that contradicted the model.
  std::function<void(const In&, const Out&)> learn;
  /// Absent when only the model is available.
  std::function<Out(const In&)> validator;
  std::function<double(const In&, const Out&)> robustness;
  In initial;
  ProposalScheme<In> propose;
  std::size_t max_rounds = 5;
};

template <typename In, typename Out>
SurrogateReport<In> surrogate_loop(const SurrogateSetup<In, Out>& setup,
                                   const FalsifierConfig& cfg) {
  if (!setup.model || !setup.robustness || !setup.propose)
    throw std::invalid_argument("surrogate loop needs model, robustness and proposal");
  SurrogateReport<In> report;
  for (std::size_t round = 0; round < setup.max_rounds; ++round) {
    FalsifierConfig c = cfg;
    c.rng_seed = restart_seed(cfg.rng_seed, round);
    const Robustness<In> R = [&](const In& x) { return setup.robustness(x, setup.model(x)); };
    const auto outcome = falsify<In>(R, setup.initial, setup.propose, c);
    SurrogateRound r;
    r.round = round;
    r.model_min_robustness = outcome.min_robustness;
    r.model_falsified = outcome.falsified;
    if (!outcome.falsified) {
      r.outcome = RoundOutcome::no_counterexample;
      report.rounds.push_back(r);
      break;
    }
    if (!setup.validator) {
      r.outcome = RoundOutcome::model_only;
      report.rounds.push_back(r);
      break;
    }
    const Out observed = setup.validator(outcome.argmin);
    r.validator_robustness = setup.robustness(outcome.argmin, observed);
    if (*r.validator_robustness < 0) {
      r.outcome = RoundOutcome::agreement;
      report.confirmed = outcome.argmin;
      report.rounds.push_back(r);
      break;
    }
    r.outcome = RoundOutcome::disagreement;
    report.rounds.push_back(r);
    if (setup.learn) setup.learn(outcome.argmin, observed);
  }
  return report;
}

}  // namespace hyperclean
