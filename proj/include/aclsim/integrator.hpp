#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aclsim/errors.hpp"
#include "aclsim/model.hpp"

namespace aclsim {

struct TimeGrid {
  double t_final;
  double dt;

  TimeGrid(double t_final_, double dt_) : t_final(t_final_), dt(dt_) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("dt must be > 0");
    if (!(t_final >= dt)) throw Error("t_final must be >= dt");
  }
  long n_steps() const {
    // guard against t_final/dt landing one ulp above an integer
    const double r = t_final / dt;
    const double rr = std::round(r);
    return static_cast<long>(std::abs(r - rr) <= 1e-9 * rr ? rr : std::ceil(r));
  }
};

struct Trajectory {
  std::vector<double> times;       // t_0 .. t_n
  std::vector<double> energy;      // E(t_k), every step
  std::vector<double> residual;    // power-balance residual of step k -> k+1 (n entries)
  std::vector<double> input_work;  // accumulated dt * p_mid . f_mid, aligned with times
  std::vector<double> snapshot_times;
  std::vector<StateVector> snapshots;

  double max_energy() const {
    double m = 0.0;
    for (double e : energy) m = std::max(m, e);
    return m;
  }
  double max_residual() const {
    double m = 0.0;
    for (double r : residual) m = std::max(m, r);
    return m;
  }
};

/// Implicit midpoint rule for M q'' + D q' + A q = f(t):
///
///     (M + dt/2 D + dt^2/4 A) p_mid = M p_n - dt/2 A q_n + dt/2 f(t + dt/2)
///     q_{n+1} = q_n + dt p_mid,  p_{n+1} = 2 p_mid - p_n
///
/// For skew D and f = 0 the energy (p^T M p + q^T A q)/2 is conserved exactly,
/// and E_{n+1} - E_n = dt p_mid^T f_mid in general. The step matrix is factorized
/// once per (system, dt). A negative dt steps backward in time.
class MidpointStepper {
 public:
  MidpointStepper(const FemSystem& sys, double dt) : sys_(&sys), dt_(dt) {
    if (dt == 0.0 || !std::isfinite(dt)) throw SolverFailure(-1, "dt must be finite and nonzero");
    const Eigen::MatrixXd k = sys.mass + (0.5 * dt) * sys.gyro + (0.25 * dt * dt) * sys.stiffness;
    // symmetric diagonal equilibration: the magnetic block is many orders of magnitude
    // smaller than the mechanical ones
    scale_ = k.diagonal().cwiseAbs().cwiseSqrt().cwiseInverse();
    for (Eigen::Index i = 0; i < scale_.size(); ++i)
      if (!std::isfinite(scale_[i])) scale_[i] = 1.0;
    lu_.compute(scale_.asDiagonal() * k * scale_.asDiagonal());
    const double rc = lu_.rcond();
    if (!(rc > 1e-15)) throw SolverFailure(-1, "midpoint step matrix is singular or ill-conditioned (rcond = " +
                                                   std::to_string(rc) + ")");
  }

  double dt() const noexcept { return dt_; }
  const FemSystem& system() const noexcept { return *sys_; }

  /// Advance one step; f_mid is the load vector at t + dt/2. Also returns p_mid through the out-parameter.
  StateVector step(const StateVector& s, const Eigen::VectorXd& f_mid, Eigen::VectorXd* p_mid_out = nullptr) const {
    const auto& sys = *sys_;
    Eigen::VectorXd rhs = sys.mass * s.p - (0.5 * dt_) * (sys.stiffness * s.q) + (0.5 * dt_) * f_mid;
    Eigen::VectorXd p_mid = scale_.cwiseProduct(lu_.solve(scale_.cwiseProduct(rhs)));
    if (!p_mid.allFinite()) throw SolverFailure(-1, "non-finite midpoint velocity");
    StateVector next{s.q + dt_ * p_mid, 2.0 * p_mid - s.p};
    if (p_mid_out) *p_mid_out = std::move(p_mid);
    return next;
  }

  StateVector step(const StateVector& s, double t, const ActuationSignals& signals,
                   Eigen::VectorXd* p_mid_out = nullptr, Eigen::VectorXd* f_mid_out = nullptr) const {
    Eigen::VectorXd f = input_vector(*sys_, signals, t + 0.5 * dt_);
    auto next = step(s, f, p_mid_out);
    if (f_mid_out) *f_mid_out = std::move(f);
    return next;
  }

 private:
  const FemSystem* sys_;
  double dt_;
  Eigen::VectorXd scale_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// One step with a fresh factorization.
inline StateVector step_midpoint(const FemSystem& sys, const StateVector& s, double t, double dt,
                                 const ActuationSignals& signals) {
  if (s.q.size() != sys.size() || s.p.size() != sys.size()) throw DimensionMismatch("state does not match layout");
  if (!s.q.allFinite() || !s.p.allFinite()) throw SolverFailure(-1, "non-finite state");
  return MidpointStepper(sys, dt).step(s, t, signals);
}

/// Called with (step index k, t_k, state at t_k) for the initial state and after every step.
using StepObserver = std::function<void(long, double, const StateVector&)>;

/// Integrate over the grid, recording energy and the power-balance residual
///
///     r_k = |E_{k+1} - E_k - dt p_mid . f_mid|
///
/// every step; full states are stored every snapshot_stride steps (0 disables).
inline Trajectory simulate(const FemSystem& sys, const ActuationSignals& signals, const TimeGrid& grid,
                           const StateVector& initial, long snapshot_stride = 0, const StepObserver& observer = {}) {
  if (initial.q.size() != sys.size() || initial.p.size() != sys.size())
    throw DimensionMismatch("initial state does not match layout");
  const long n = grid.n_steps();
  const MidpointStepper stepper(sys, grid.dt);

  Trajectory tr;
  tr.times.reserve(n + 1);
  tr.energy.reserve(n + 1);
  tr.residual.reserve(n);
  tr.input_work.reserve(n + 1);

  StateVector s = initial;
  double e = energy(sys, s);
  tr.times.push_back(0.0);
  tr.energy.push_back(e);
  tr.input_work.push_back(0.0);
  if (snapshot_stride > 0) {
    tr.snapshot_times.push_back(0.0);
    tr.snapshots.push_back(s);
  }
  if (observer) observer(0, 0.0, s);

  Eigen::VectorXd p_mid, f_mid;
  for (long k = 0; k < n; ++k) {
    const double t = k * grid.dt;
    try {
      s = stepper.step(s, t, signals, &p_mid, &f_mid);
    } catch (const SolverFailure& err) {
      throw SolverFailure(k, err.what());
    }
    const double t_next = (k + 1) * grid.dt;
    const double e_next = energy(sys, s);
    const double work = grid.dt * p_mid.dot(f_mid);
    tr.times.push_back(t_next);
    tr.energy.push_back(e_next);
    tr.residual.push_back(std::abs(e_next - e - work));
    tr.input_work.push_back(tr.input_work.back() + work);
    e = e_next;
    if (snapshot_stride > 0 && (k + 1) % snapshot_stride == 0) {
      tr.snapshot_times.push_back(t_next);
      tr.snapshots.push_back(s);
    }
    if (observer) observer(k + 1, t_next, s);
  }
  return tr;
}

}  // namespace aclsim
