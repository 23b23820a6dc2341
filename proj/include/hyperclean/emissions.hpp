#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hyperclean/extended_real.hpp"
#include "hyperclean/falsify.hpp"
#include "hyperclean/logic.hpp"
#include "hyperclean/trace_io.hpp"
#include "hyperclean/traces.hpp"

namespace hyperclean {

/// One 1 Hz sample of a recorded trip.
struct TripSample {
  double speed_kmh = 0;
  double accel_ms2 = 0;
  double nox_mg = 0;
  bool operator==(const TripSample&) const = default;
};

struct TripRecording {
  std::vector<TripSample> samples;
};

/// No recorded sample lies within tolerance of a query.
class no_data_error : public std::runtime_error {
 public:
  explicit no_data_error(const std::string& what, std::vector<std::size_t> gaps = {})
      : std::runtime_error(what), gaps_(std::move(gaps)) {}
  /// Cycle indices without data (empty for single queries).
  const std::vector<std::size_t>& gaps() const { return gaps_; }

 private:
  std::vector<std::size_t> gaps_;
};

/// Emission rate undefined because the cycle covers no distance.
class undefined_rate_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A candidate cycle left the restricted input space.
class restriction_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Acceleration in m/s^2 from consecutive 1 Hz speeds in km/h; the first
/// sample has acceleration 0.
inline std::vector<double> accelerations(std::span<const double> speeds) {
  std::vector<double> a(speeds.size(), 0.0);
  for (std::size_t t = 1; t < speeds.size(); ++t) a[t] = (speeds[t] - speeds[t - 1]) / 3.6;
  return a;
}

/// Reads `t_s,speed_kmh,accel_ms2,nox_mg` (accel optional, any column order).
inline TripRecording parse_trips(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  int col_speed = -1, col_accel = -1, col_nox = -1;
  std::size_t columns = 0;
  TripRecording trip;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (columns == 0) {
      columns = cells.size();
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "speed_kmh") col_speed = static_cast<int>(i);
        else if (cells[i] == "accel_ms2") col_accel = static_cast<int>(i);
        else if (cells[i] == "nox_mg") col_nox = static_cast<int>(i);
      }
      if (col_speed < 0 || col_nox < 0)
        throw data_error("trip header needs speed_kmh and nox_mg columns", lineno);
      continue;
    }
    if (cells.size() != columns) throw data_error("wrong number of columns", lineno);
    TripSample s;
    s.speed_kmh = detail::parse_real(cells[col_speed], lineno);
    s.nox_mg = detail::parse_real(cells[col_nox], lineno);
    if (col_accel >= 0) s.accel_ms2 = detail::parse_real(cells[col_accel], lineno);
    if (s.speed_kmh < 0) throw data_error("negative speed", lineno);
    trip.samples.push_back(s);
  }
  if (trip.samples.empty()) throw data_error("trip file holds no samples");
  if (col_accel < 0) {
    std::vector<double> v;
    for (const auto& s : trip.samples) v.push_back(s.speed_kmh);
    const auto a = accelerations(v);
    for (std::size_t t = 0; t < a.size(); ++t) trip.samples[t].accel_ms2 = a[t];
  }
  return trip;
}

inline TripRecording load_trips(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open trip file " + path.string());
  try {
    return parse_trips(is);
  } catch (const data_error& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

/// All `*.csv` trips in a directory (or a single file), concatenated.
inline TripRecording load_trips_dir(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) return load_trips(path);
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(path))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw data_error("no trip files in " + path.string());
  TripRecording all;
  for (const auto& f : files) {
    auto t = load_trips(f);
    all.samples.insert(all.samples.end(), t.samples.begin(), t.samples.end());
  }
  return all;
}

/// One speed (km/h) per line.
inline std::vector<double> parse_cycle(std::istream& is) {
  std::vector<double> v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line == "speed_kmh") continue;
    const double s = detail::parse_real(line, lineno);
    if (s < 0) throw data_error("negative speed", lineno);
    v.push_back(s);
  }
  if (v.empty()) throw data_error("cycle file holds no samples");
  return v;
}

inline std::vector<double> load_cycle(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open cycle file " + path.string());
  try {
    return parse_cycle(is);
  } catch (const data_error& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

/// NOx rate estimate: mean NOx over recorded samples whose speed and
/// acceleration both lie within the tolerances of the query (inclusive).
class NoxPredictor {
 public:
  explicit NoxPredictor(std::vector<TripSample> data, double tolerance_v = 2.0,
                        double tolerance_a = 2.0)
      : data_(std::move(data)), tol_v_(tolerance_v), tol_a_(tolerance_a) {
    if (!(tol_v_ >= 0) || !(tol_a_ >= 0)) throw std::invalid_argument("tolerances must be >= 0");
    std::stable_sort(data_.begin(), data_.end(), [](const TripSample& a, const TripSample& b) {
      return a.speed_kmh < b.speed_kmh;
    });
  }

  /// Mean NOx (mg per 1 Hz sample); nullopt when nothing matches.
  std::optional<double> try_predict(double v, double a) const {
    auto it = std::lower_bound(data_.begin(), data_.end(), v - tol_v_,
                               [](const TripSample& s, double x) { return s.speed_kmh < x; });
    double sum = 0;
    std::size_t n = 0;
    for (; it != data_.end() && it->speed_kmh <= v + tol_v_; ++it) {
      if (std::abs(it->accel_ms2 - a) <= tol_a_ && std::abs(it->speed_kmh - v) <= tol_v_) {
        sum += it->nox_mg;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }

  double predict(double v, double a) const {
    if (auto r = try_predict(v, a)) return *r;
    throw no_data_error("no recorded sample near speed " + format_extended(v) +
                        " km/h, acceleration " + format_extended(a) + " m/s^2");
  }

  const std::vector<TripSample>& data() const { return data_; }
  double tolerance_v() const { return tol_v_; }
  double tolerance_a() const { return tol_a_; }

 private:
  std::vector<TripSample> data_;
  double tol_v_;
  double tol_a_;
};

struct CycleEmissions {
  double total_mg = 0;
  double distance_km = 0;
  double mg_per_km = 0;
};

/// Sum of per-second predictions divided by the distance covered.
inline CycleEmissions cycle_emissions(const NoxPredictor& p, std::span<const double> cycle) {
  if (cycle.empty()) throw std::invalid_argument("empty cycle");
  const auto accel = accelerations(cycle);
  CycleEmissions e;
  std::vector<std::size_t> gaps;
  for (std::size_t t = 0; t < cycle.size(); ++t) {
    e.distance_km += cycle[t] / 3600.0;
    if (auto r = p.try_predict(cycle[t], accel[t])) e.total_mg += *r;
    else gaps.push_back(t);
  }
  if (!gaps.empty())
    throw no_data_error("no data for " + std::to_string(gaps.size()) + " cycle samples (first at t=" +
                            std::to_string(gaps.front()) + ")",
                        gaps);
  if (!(e.distance_km > 0)) throw undefined_rate_error("cycle covers no distance");
  e.mg_per_km = e.total_mg / e.distance_km;
  return e;
}

/// Standard cycle, its measured output and the contract thresholds.
struct EmissionContext {
  std::vector<double> standard_cycle;
  double std_output = 0;
  double kappa_in = 15;
  double kappa_out = 88;

  void validate() const {
    if (standard_cycle.empty()) throw std::invalid_argument("standard cycle is empty");
    if (!(kappa_in > 0) || !(kappa_out > 0)) throw std::invalid_argument("kappas must be positive");
  }

  /// The standard trace: the cycle's inputs followed by its output.
  Trace standard_trace() const { return profile_trace(standard_cycle, std_output); }

  RestrictedInputSpace space() const {
    return RestrictedInputSpace{{standard_trace()}, kappa_in, DistanceFn::mixed_in(),
                                standard_cycle.size() + 1};
  }
};

/// Context whose standard output is measured by the predictor on the cycle.
inline EmissionContext make_emission_context(const NoxPredictor& p, std::vector<double> cycle,
                                             double kappa_in, double kappa_out) {
  EmissionContext ctx;
  ctx.std_output = cycle_emissions(p, cycle).mg_per_km;
  ctx.standard_cycle = std::move(cycle);
  ctx.kappa_in = kappa_in;
  ctx.kappa_out = kappa_out;
  ctx.validate();
  return ctx;
}

/// G(dOut(out std, out w) - kappa_out <= 0) with variable 0 = standard
/// trace and 1 = candidate.
inline Formula emission_formula(double kappa_out) {
  return globally(at_most_zero(
      "dOut(out std, out w) - " + format_extended(kappa_out),
      [kappa_out](TraceBinding b, std::size_t t) {
        return minus_bound(mixed_out_distance(output_part((*b[0])[t]), output_part((*b[1])[t])),
                           kappa_out);
      },
      {0, 1}));
}

/// Robustness of a candidate cycle against the standard trace, evaluated
/// through the formula engine on the trace `cycle . o`.
inline double nedc_robustness(const EmissionContext& ctx, const NoxPredictor& p,
                              std::span<const double> cycle) {
  ctx.validate();
  if (cycle.size() != ctx.standard_cycle.size())
    throw restriction_error("cycle length differs from the standard cycle");
  const auto space = ctx.space();
  Trace candidate_inputs = profile_trace(cycle, 0.0);
  if (!space.contains(candidate_inputs))
    throw restriction_error("cycle leaves the kappa_in tube around the standard cycle");
  const double o = cycle_emissions(p, cycle).mg_per_km;
  const Trace standard = ctx.standard_trace();
  const Trace candidate = profile_trace(cycle, o);
  const Trace* binding[] = {&standard, &candidate};
  return eval_quant(emission_formula(ctx.kappa_out), TraceBinding(binding));
}

struct EmissionSearchConfig {
  FalsifierConfig falsifier{};
  std::size_t window = 10;
  double step_bound = 5.0;
};

struct EmissionSearchResult {
  FalsificationOutcome<std::vector<double>> outcome;
  std::size_t probed = 0;
  std::size_t membership_violations = 0;
  std::size_t no_data = 0;
};

/// Falsification over the restricted cycle space. Candidates the predictor
/// has no data for score +inf.
inline EmissionSearchResult falsify_emissions(const EmissionContext& ctx, const NoxPredictor& p,
                                              const EmissionSearchConfig& cfg) {
  ctx.validate();
  const auto space = ctx.space();
  EmissionSearchResult res;
  const Robustness<std::vector<double>> R = [&](const std::vector<double>& cycle) {
    ++res.probed;
    if (!space.contains(profile_trace(cycle, 0.0))) ++res.membership_violations;
    try {
      return nedc_robustness(ctx, p, cycle);
    } catch (const no_data_error&) {
      ++res.no_data;
      return kInf;
    }
  };
  const ProposalScheme<std::vector<double>> ps = [&](const std::vector<double>& w, Rng& rng) {
    return propose_profile(w, space, cfg.window, cfg.step_bound, rng, 0.0);
  };
  res.outcome = falsify(R, ctx.standard_cycle, ps, cfg.falsifier);
  return res;
}

/// `t_s,std_speed,candidate_speed` rows for plotting.
inline void write_plot_csv(std::ostream& os, std::span<const double> standard,
                           std::span<const double> candidate) {
  os << "t_s,std_speed,candidate_speed\n";
  for (std::size_t t = 0; t < standard.size(); ++t)
    os << t << ',' << format_extended(standard[t]) << ','
       << format_extended(t < candidate.size() ? candidate[t] : 0.0) << '\n';
}

}  // namespace hyperclean
