#pragma once

// Manufactured field with a closed-form continuity residual.

#include <algorithm>
#include <cmath>

#include "ec/fields.hpp"
#include "ec/weakform.hpp"
#include "oracles.hpp"

namespace oracle {

inline double gfun(double x, double y) {
  return 0.4 * std::exp(-12.0 * ((x - 0.1) * (x - 0.1) + y * y));
}
inline double afun(double x, double y) { return 0.5 * std::sin(2.0 * x + 0.3) * std::cos(y); }
inline double afun_x(double x, double y) { return std::cos(2.0 * x + 0.3) * std::cos(y); }

// rho = rho_inf + t g, m = m_inf + t a e_1. Integrating by parts, the
// continuity residual equals -int int (g + t da/dx) phi. The momentum term
// keeps a genuine h^2 error: midpoint sums of smooth compactly supported
// integrands alone converge faster than any fixed order.
inline ec::GridField manufactured(const ec::Grid& g, const ec::FarField& far) {
  return ec::sample(
      [&](double t, double x, double y) {
        ec::State s = far.state();
        s.rho += t * gfun(x, y);
        s.mom[0] += t * afun(x, y);
        return s;
      },
      g, far, ec::ThermoParams());
}

inline double manufactured_exact(const ec::Bump& b) {
  return -integrate3(
      [&](double t, double x, double y) {
        return (gfun(x, y) + t * afun_x(x, y)) * b.value(t, x, y);
      },
      {std::max(0.0, b.tc - b.rt), b.tc + b.rt}, {b.xc - b.rx, b.xc + b.rx},
      {b.yc - b.ry, b.yc + b.ry});
}

}  // namespace oracle
