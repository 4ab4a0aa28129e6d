#pragma once

#include <cmath>
#include <functional>

#include "aclsim/aclsim.hpp"

namespace testing_support {

inline aclsim::BeamConfig decoupled_config() {
  auto p = aclsim::default_config().materials();
  p.gamma = 0.0;
  p.G2 = 0.0;
  return aclsim::default_config().with_materials(p);
}

/// Composite Gauss rule on [a, b], independent of the library quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b, int panels = 400) {
  static const double x5[] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  static const double w5[] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double c = a + (k + 0.5) * h;
    for (int i = 0; i < 5; ++i) s += w5[i] * f(c + 0.5 * h * x5[i]);
  }
  return 0.5 * h * s;
}

}  // namespace testing_support
