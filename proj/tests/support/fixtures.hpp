#pragma once

// Worked examples shared by unit and acceptance tests.

#include <vector>

#include "hyperclean/cleanness.hpp"
#include "hyperclean/traces.hpp"

namespace fixtures {

using namespace hyperclean;

// Mixed-IO example: two standard traces and a subject, horizon 6.
inline Trace mixed_w1() { return Trace({in(1), in(2), in(3), out(7), in(0), quiet()}); }
inline Trace mixed_w2() { return Trace({in(0), in(1), in(2), in(3), out(6), quiet()}); }
inline Trace mixed_w() { return Trace({in(0), in(1), in(2), out(6), in(0), quiet()}); }

inline RobustContext mixed_context() {
  RobustContext ctx;
  ctx.std = {mixed_w1(), mixed_w2()};
  ctx.d_in = DistanceFn::mixed_in();
  ctx.d_out = DistanceFn::mixed_out();
  ctx.kappa_in = 1;
  ctx.kappa_out = 6;
  return ctx;
}

// (input; output) example over horizon 8.
inline Trace pairs(const std::vector<double>& ins, const std::vector<double>& outs) {
  std::vector<Value> vs;
  for (std::size_t k = 0; k < ins.size(); ++k) vs.push_back(pair(ins[k], outs[k]));
  return Trace(std::move(vs));
}

inline const std::vector<double>& naturals() {
  static const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8};
  return v;
}
inline const std::vector<double>& scaled() {
  static const std::vector<double> v{1.3, 2.6, 3.9, 5.2, 6.5, 7.8, 9.1, 10.4};
  return v;
}
inline const std::vector<double>& zeros() {
  static const std::vector<double> v(8, 0.0);
  return v;
}

inline Trace w0() { return pairs(naturals(), zeros()); }
inline Trace w1() { return pairs(naturals(), naturals()); }
inline Trace wA() { return pairs(scaled(), zeros()); }
inline Trace wB() { return pairs(scaled(), scaled()); }
inline Trace w_bad() {
  return pairs({1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5},
               {1.5, 3.2, 4.9, 6.6, 8.3, 10.0, 11.7, 13.4});
}

inline RobustContext pair_context() {
  RobustContext ctx;
  ctx.std = {w0(), w1()};
  ctx.d_in = DistanceFn::mixed_in();
  ctx.d_out = DistanceFn::mixed_out();
  ctx.kappa_in = 1;
  ctx.kappa_out = 2;
  return ctx;
}

inline std::vector<Trace> pair_system() { return {w0(), w1(), wA(), wB()}; }

}  // namespace fixtures
