#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "aclsim/integrator.hpp"
#include "aclsim/model.hpp"
#include "aclsim/spectral.hpp"

namespace aclsim {

/// Worker cap for fan-out studies: ACLSIM_THREADS if set and positive, otherwise the
/// hardware concurrency.
inline unsigned thread_cap() {
  if (const char* env = std::getenv("ACLSIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Run fn(0..n-1) on at most `workers` threads. Each task writes only its own result
/// slot, so the output does not depend on scheduling. The first exception is rethrown.
template <typename Result>
std::vector<Result> parallel_map(int n, const std::function<Result(int)>& fn, unsigned workers = thread_cap()) {
  std::vector<Result> results(n);
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }
  std::mutex mu;
  int next = 0;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      int i;
      {
        std::lock_guard lock(mu);
        if (next >= n || error) return;
        i = next++;
      }
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < std::min<unsigned>(workers, n); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

/// Lowest frequency of a D = 0 system by inverse iteration on A^{-1} M with a
/// Rayleigh-quotient estimate (shift-invert around 0).
inline double fundamental_frequency(const FemSystem& sys, int max_iter = 500, double tol = 1e-15) {
  if (sys.gyro.cwiseAbs().maxCoeff() > 0.0) return modal_frequencies(sys, 1).frequencies.front();
  Eigen::LLT<Eigen::MatrixXd> llt(sys.stiffness);
  if (llt.info() != Eigen::Success) throw EigSolverFailure("stiffness matrix is not positive definite");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(sys.size());
  double lam = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = llt.solve(sys.mass * x);
    y /= std::sqrt(y.dot(sys.mass * y));
    const double next = y.dot(sys.stiffness * y);
    x = std::move(y);
    if (it > 2 && std::abs(next - lam) <= tol * next) {
      lam = next;
      break;
    }
    lam = next;
  }
  return std::sqrt(lam);
}

struct SpatialRow {
  int n_elements;
  double omega1;
  double error;  // |omega1 - reference|
  double order;  // observed order against the previous row (NaN for the first)
};

/// Mesh refinement study of the fundamental frequency against a fine-mesh reference.
inline std::vector<SpatialRow> spatial_study(const BeamConfig& config, EmAssumption em, const std::vector<int>& ns,
                                             int reference_n) {
  std::vector<int> all = ns;
  all.push_back(reference_n);
  const auto omegas = parallel_map<double>(static_cast<int>(all.size()), [&](int i) {
    const auto sys = assemble(config, fem::Mesh1D::uniform(config.length(), all[i]), em, ActuationMode::Charge);
    return fundamental_frequency(sys);
  });
  const double ref = omegas.back();
  std::vector<SpatialRow> rows;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    SpatialRow r{ns[i], omegas[i], std::abs(omegas[i] - ref), std::numeric_limits<double>::quiet_NaN()};
    if (i > 0) r.order = observed_order(rows.back().error, r.error, static_cast<double>(ns[i]) / ns[i - 1]);
    rows.push_back(r);
  }
  return rows;
}

struct TemporalRow {
  double dt;
  double probe;  // probe value at t_final
  double error;  // against the reference step
  double order;
};

using StateProbe = std::function<double(const FemSystem&, const StateVector&)>;

/// Time-step refinement study of a probe value at t_final against a fine-step reference run.
inline std::vector<TemporalRow> temporal_study(const FemSystem& sys, const ActuationSignals& signals, double t_final,
                                               const std::vector<double>& dts, double dt_reference,
                                               const StateProbe& probe) {
  std::vector<double> all = dts;
  all.push_back(dt_reference);
  const auto values = parallel_map<double>(static_cast<int>(all.size()), [&](int i) {
    const TimeGrid grid(t_final, all[i]);
    StateVector last;
    simulate(sys, signals, grid, StateVector::zero(sys.size()), 0,
             [&](long, double, const StateVector& s) { last = s; });
    return probe(sys, last);
  });
  const double ref = values.back();
  std::vector<TemporalRow> rows;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    TemporalRow r{dts[i], values[i], std::abs(values[i] - ref), std::numeric_limits<double>::quiet_NaN()};
    if (i > 0) r.order = observed_order(rows.back().error, r.error, dts[i - 1] / dts[i]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace aclsim
