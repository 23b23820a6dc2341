#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hyperclean/extended_real.hpp"

namespace hyperclean {

/// One `[lo, hi, slope, intercept]` row: value = intercept + slope * x.
struct Segment {
  double lo = 0;
  double hi = kInf;
  double slope = 0;
  double intercept = 0;
  bool operator==(const Segment&) const = default;
};

/// Piecewise-linear function on [0, inf]. The first segment is closed at its
/// lower end, every later one is half-open (lo, hi]. Arguments beyond the
/// last breakpoint use the last segment.
class PiecewiseFn {
 public:
  PiecewiseFn() = default;

  explicit PiecewiseFn(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw std::invalid_argument("piecewise function needs a segment");
    if (segments_.front().lo != 0)
      throw std::invalid_argument("first segment must start at 0");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const Segment& s = segments_[i];
      if (!(s.lo < s.hi)) throw std::invalid_argument("segment bounds must increase");
      if (i > 0 && segments_[i - 1].hi != s.lo)
        throw std::invalid_argument("segments must be contiguous");
      if (!(s.slope >= 0) || std::isinf(s.slope))
        throw std::invalid_argument("segment slopes must be finite and non-negative");
      if (std::isnan(s.intercept) || is_neg_inf(s.intercept))
        throw std::invalid_argument("segment intercept must be > -inf");
      if (raw(s, s.lo) < 0)
        throw std::invalid_argument("piecewise function must be non-negative");
    }
  }

  /// Constant function c.
  static PiecewiseFn constant(double c) { return PiecewiseFn({Segment{0, kInf, 0, c}}); }

  double operator()(double x) const {
    if (!(x >= 0)) throw std::invalid_argument("piecewise function argument must be >= 0");
    for (const Segment& s : segments_)
      if (x <= s.hi) return raw(s, x);
    return raw(segments_.back(), x);
  }

  const std::vector<Segment>& segments() const { return segments_; }
  bool operator==(const PiecewiseFn&) const = default;

 private:
  static double raw(const Segment& s, double x) {
    if (is_pos_inf(s.intercept)) return kInf;
    if (s.slope == 0) return s.intercept;
    return s.intercept + s.slope * x;  // inf * positive slope stays inf
  }

  std::vector<Segment> segments_;
};

}  // namespace hyperclean
