#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hyperclean/rng.hpp"
#include "hyperclean/traces.hpp"

namespace hyperclean {

struct Anchor {
  double x = 0;
  double y = 0;
  bool operator==(const Anchor&) const = default;
};

/// Piecewise-linear curve through anchors with strictly increasing x.
class SubscoreCurve {
 public:
  SubscoreCurve() = default;
  explicit SubscoreCurve(std::vector<Anchor> anchors) : anchors_(std::move(anchors)) {
    if (anchors_.size() < 2) throw std::invalid_argument("subscore curve needs two anchors");
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
      if (!std::isfinite(anchors_[i].x) || !std::isfinite(anchors_[i].y))
        throw std::invalid_argument("subscore anchors must be finite");
      if (i > 0 && !(anchors_[i - 1].x < anchors_[i].x))
        throw std::invalid_argument("subscore anchors must have increasing x");
    }
  }

  double lo() const { return anchors_.front().x; }
  double hi() const { return anchors_.back().x; }
  const std::vector<Anchor>& anchors() const { return anchors_; }

  double operator()(double x) const {
    if (!(x >= lo() && x <= hi()))
      throw domain_error("mark " + std::to_string(x) + " outside [" + std::to_string(lo()) + ", " +
                         std::to_string(hi()) + "]");
    const auto it = std::upper_bound(anchors_.begin(), anchors_.end(), x,
                                     [](double v, const Anchor& a) { return v < a.x; });
    if (it == anchors_.end()) return anchors_.back().y;
    const Anchor& b = *it;
    const Anchor& a = *(it - 1);
    return a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
  }

  bool operator==(const SubscoreCurve&) const = default;

 private:
  std::vector<Anchor> anchors_;
};

/// Additive scoring system: P(i) = sum_k curve_k(i_k).
class ScoringTable {
 public:
  ScoringTable() = default;
  ScoringTable(std::string name, std::vector<SubscoreCurve> curves)
      : name_(std::move(name)), curves_(std::move(curves)) {
    if (curves_.empty()) throw std::invalid_argument("scoring table needs a component");
  }

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return curves_.size(); }
  const std::vector<SubscoreCurve>& curves() const { return curves_; }
  double lower(std::size_t k) const { return curves_.at(k).lo(); }
  double upper(std::size_t k) const { return curves_.at(k).hi(); }

  double operator()(std::span<const double> marks) const {
    if (marks.size() != curves_.size())
      throw domain_error("expected " + std::to_string(curves_.size()) + " marks, got " +
                         std::to_string(marks.size()));
    double sum = 0;
    for (std::size_t k = 0; k < marks.size(); ++k) sum += curves_[k](marks[k]);
    return sum;
  }
  double operator()(const std::vector<double>& marks) const {
    return (*this)(std::span<const double>(marks));
  }

  bool operator==(const ScoringTable&) const = default;

 private:
  std::string name_;
  std::vector<SubscoreCurve> curves_;
};

namespace hr {

inline SubscoreCurve regular_curve() {
  return SubscoreCurve({{0, 0.05}, {0.5, 0.12}, {0.8, 0.16}, {1, 0.15}});
}

/// Skill curve with a small jump just below 0.2.
inline SubscoreCurve skill_curve() {
  return SubscoreCurve({{0, 0}, {0.19, 0.02}, {0.2, 0.05}, {1, 0.1}});
}

/// Skill curve with a large jump between 0.13 and 0.135.
inline SubscoreCurve skewed_skill_curve() {
  return SubscoreCurve({{0, 0}, {0.13, 0.01}, {0.135, 0.18}, {0.2, 0.19}, {1, 0.2}});
}

enum class Variant { fair, skewed };

/// Marks are (education, experience, publications, interview, skill).
inline ScoringTable reference_system(Variant v) {
  const auto r = regular_curve();
  return ScoringTable(v == Variant::fair ? "P" : "P'",
                      {r, r, r, r, v == Variant::fair ? skill_curve() : skewed_skill_curve()});
}

inline std::vector<double> john() { return {0.5, 0.5, 0.5, 0.5, 0.2}; }
inline std::vector<double> synthia() { return {0.5, 0.5, 0.5, 0.5, 0.19}; }
inline std::vector<double> synclair() { return {0.5, 0.5, 0.5, 0.5, 0.13}; }

inline DistanceFn input_distance() { return DistanceFn::euclid_normalized(5); }

}  // namespace hr

/// Builtin names: "P", "P'" (also "hr-p", "hr-p-prime").
inline bool is_builtin_system(const std::string& name) {
  return name == "P" || name == "P'" || name == "hr-p" || name == "hr-p-prime";
}

inline ScoringTable builtin_system(const std::string& name) {
  if (name == "P" || name == "hr-p") return hr::reference_system(hr::Variant::fair);
  if (name == "P'" || name == "hr-p-prime") return hr::reference_system(hr::Variant::skewed);
  throw std::invalid_argument("unknown builtin system '" + name + "'");
}

inline nlohmann::json to_json(const ScoringTable& t) {
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& c : t.curves()) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& a : c.anchors()) pts.push_back({a.x, a.y});
    curves.push_back(pts);
  }
  return {{"name", t.name()}, {"subscores", curves}};
}

inline ScoringTable scoring_table_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("subscores") || !j["subscores"].is_array())
    throw std::invalid_argument("scoring table needs a 'subscores' array");
  std::vector<SubscoreCurve> curves;
  for (const auto& c : j["subscores"]) {
    std::vector<Anchor> anchors;
    if (!c.is_array()) throw std::invalid_argument("subscore must be an array of [x, y] pairs");
    for (const auto& p : c) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw std::invalid_argument("anchor must be [x, y]");
      anchors.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    curves.emplace_back(std::move(anchors));
  }
  return ScoringTable(j.value("name", std::string("table")), std::move(curves));
}

/// A builtin name or a path to a JSON table file.
inline ScoringTable load_system(const std::string& spec) {
  if (is_builtin_system(spec)) return builtin_system(spec);
  std::ifstream in(spec);
  if (!in) throw std::runtime_error("cannot open system file " + spec);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(spec + ": " + e.what());
  }
  return scoring_table_from_json(j);
}

/// Random table on [0,1]^dim whose curves have `knots` interior anchors;
/// occasional steep jumps make unfair systems likely.
inline ScoringTable random_table(Rng& rng, std::size_t dim, std::size_t knots = 3) {
  std::vector<SubscoreCurve> curves;
  for (std::size_t k = 0; k < dim; ++k) {
    std::vector<double> xs{0.0, 1.0};
    while (xs.size() < knots + 2) {
      const double x = std::round(rng.uniform(0.02, 0.98) * 100) / 100;
      if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
    }
    std::sort(xs.begin(), xs.end());
    std::vector<Anchor> anchors;
    double y = rng.uniform(0, 0.05);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i > 0) y += rng.uniform(0, 1) < 0.3 ? rng.uniform(0.05, 0.2) : rng.uniform(-0.02, 0.03);
      anchors.push_back({xs[i], y});
    }
    curves.emplace_back(std::move(anchors));
  }
  return ScoringTable("random", std::move(curves));
}

}  // namespace hyperclean
