#pragma once

// Flows of radial fields h(r) d/dr and planar autonomous systems, on top
// of Boost.Odeint's Dormand-Prince 5(4) stepper.

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "contactlab/expr.hpp"

namespace contactlab::ode {

namespace odeint = boost::numeric::odeint;

inline constexpr double kAbsTol = 1e-14;
inline constexpr double kRelTol = 1e-12;

/// Time-T flow of h(r) d/dr together with its derivative.
///
/// The state is integrated as a displacement D = R - r0 and j = J - 1,
/// so tiny displacements near the edge of supp h are not lost against r0.
class RadialFlow {
 public:
  struct Result {
    double R = 0.0;  // image radius
    double J = 1.0;  // dR/dr0
    double D = 0.0;  // R - r0
    double j = 0.0;  // J - 1
  };

  /// `h` is an expression in the variable "r".
  explicit RadialFlow(const expr::Expr& h) {
    const std::array<expr::Expr, 2> outs{h, expr::diff(h, "r")};
    prog_ = expr::Program(outs, {"r"});
  }

  [[nodiscard]] Result operator()(double r0, double time = 1.0) const {
    using State = std::array<double, 2>;
    State x{0.0, 0.0};
    auto rhs = [&](const State& s, State& dx, double) {
      const std::array<double, 1> r{r0 + s[0]};
      std::array<double, 2> v{};
      prog_.run(r, {}, v);
      dx[0] = v[0];
      dx[1] = v[1] * (1.0 + s[1]);
    };
    if (time != 0.0) {
      const double dt0 = time > 0 ? 1e-3 : -1e-3;
      odeint::integrate_adaptive(odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(kAbsTol, kRelTol), rhs,
                                 x, 0.0, time, dt0);
    }
    return Result{r0 + x[0], 1.0 + x[1], x[0], x[1]};
  }

 private:
  expr::Program prog_;
};

/// Trajectory samples of a planar autonomous system.
struct Trajectory {
  std::vector<double> tau;
  std::vector<std::array<double, 2>> state;
  bool stopped = false;     // the stop predicate fired
  double stop_time = 0.0;   // located by bisection on the dense output
};

/// Integrates x' = F(x) from x0 over [0, T], sampling every `sample_dt`.
/// If `stop(x) >= 0` is reached the crossing time is located to ~1e-13
/// and integration ends there.
inline Trajectory integrate_planar(const std::function<void(const std::array<double, 2>&, std::array<double, 2>&)>& F,
                                   std::array<double, 2> x0, double T, double sample_dt,
                                   const std::function<double(const std::array<double, 2>&)>& stop = {}) {
  using State = std::array<double, 2>;
  auto stepper = odeint::make_dense_output(kAbsTol, kRelTol, odeint::runge_kutta_dopri5<State>());
  auto rhs = [&](const State& s, State& d, double) { F(s, d); };
  Trajectory out;
  out.tau.push_back(0.0);
  out.state.push_back(x0);
  stepper.initialize(x0, 0.0, 1e-3);
  double next = sample_dt;
  while (stepper.current_time() < T) {
    stepper.do_step(rhs);
    const double t1 = std::min(stepper.current_time(), T);
    if (stop && stop(stepper.current_state()) >= 0.0) {
      double lo = stepper.previous_time();
      double hi = stepper.current_time();
      State s{};
      for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
        const double mid = 0.5 * (lo + hi);
        stepper.calc_state(mid, s);
        (stop(s) >= 0.0 ? hi : lo) = mid;
      }
      while (next < hi) {
        stepper.calc_state(next, s);
        out.tau.push_back(next);
        out.state.push_back(s);
        next += sample_dt;
      }
      stepper.calc_state(hi, s);
      out.tau.push_back(hi);
      out.state.push_back(s);
      out.stopped = true;
      out.stop_time = hi;
      return out;
    }
    while (next <= t1 + 1e-12 * T) {
      State s{};
      stepper.calc_state(std::min(next, t1), s);
      out.tau.push_back(std::min(next, t1));
      out.state.push_back(s);
      next += sample_dt;
    }
  }
  if (out.tau.back() < T) {
    State s{};
    stepper.calc_state(T, s);
    out.tau.push_back(T);
    out.state.push_back(s);
  }
  return out;
}

}  // namespace contactlab::ode
