#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "aclsim/integrator.hpp"
#include "aclsim/model.hpp"
#include "aclsim/pxi.hpp"
#include "aclsim/spectral.hpp"

namespace aclsim {

struct CheckResult {
  std::string name;
  bool passed;
  double value;      // worst observed quantity
  double threshold;  // pass iff value <= threshold
  std::string detail;
};

struct VerifyOptions {
  bool quick = false;                   // meshes with n <= 16 only, shorter runs
  bool inject_gyro_sign_error = false;  // mutation hook: D assembled symmetric instead of skew
  unsigned long seed = 20240611;
};

namespace detail {

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline CheckResult make_check(std::string name, double value, double threshold, std::string detail = {}) {
  const bool ok = std::isfinite(value) && value <= threshold;
  return {std::move(name), ok, value, threshold, std::move(detail)};
}

/// max |D + D^T| / max(1, max |D|)
inline double skewness_defect(const Eigen::MatrixXd& d) {
  return (d + d.transpose()).cwiseAbs().maxCoeff() / std::max(1.0, d.cwiseAbs().maxCoeff());
}

/// Random state scaled block-wise so that every block carries comparable energy.
inline StateVector random_state(const FemSystem& sys, std::mt19937_64& rng) {
  StateVector s{random_vector(rng, sys.size()), random_vector(rng, sys.size())};
  for (const auto& r : sys.layout.blocks()) {
    const double a = sys.stiffness.diagonal().segment(r.offset, r.size).mean();
    const double m = sys.mass.diagonal().segment(r.offset, r.size).mean();
    s.q.segment(r.offset, r.size) /= std::sqrt(a);
    s.p.segment(r.offset, r.size) /= std::sqrt(m);
  }
  return s;
}

inline double sine(double amplitude, double freq_hz, double t) {
  return amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * t);
}

}  // namespace detail

/// Structural invariants of the discrete model: skewness, definiteness, resolvent
/// spectrum, energy conservation, power balance, gauge, reversibility, variant consistency.
inline std::vector<CheckResult> run_invariant_suite(const BeamConfig& config, const VerifyOptions& opt = {}) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(opt.seed);
  AssemblyOptions aopt;
  aopt.inject_gyro_sign_error = opt.inject_gyro_sign_error;
  const double L = config.length();

  const std::vector<int> meshes = opt.quick ? std::vector<int>{4, 8, 16} : std::vector<int>{4, 8, 16, 32};
  struct Variant {
    EmAssumption em;
    ActuationMode mode;
  };
  const Variant variants[] = {{EmAssumption::Electrostatic, ActuationMode::Charge},
                              {EmAssumption::QuasiStatic, ActuationMode::Charge},
                              {EmAssumption::QuasiStatic, ActuationMode::Current},
                              {EmAssumption::FullyDynamic, ActuationMode::Charge},
                              {EmAssumption::FullyDynamic, ActuationMode::Current}};

  // structure of every assembled system
  double skew = 0.0, asym = 0.0, neg_eig = 0.0;
  bool mass_spd = true;
  double variant_diff = 0.0;
  for (int n : meshes) {
    const auto mesh = fem::Mesh1D::uniform(L, n);
    std::vector<FemSystem> systems;
    for (const auto& v : variants) systems.push_back(assemble(config, mesh, v.em, v.mode, aopt));
    for (const auto& sys : systems) {
      skew = std::max(skew, detail::skewness_defect(sys.gyro));
      Eigen::LLT<Eigen::MatrixXd> llt(sys.mass);
      mass_spd = mass_spd && llt.info() == Eigen::Success;
      const double anorm = sys.stiffness.cwiseAbs().maxCoeff();
      asym = std::max(asym, (sys.stiffness - sys.stiffness.transpose()).cwiseAbs().maxCoeff() / anorm);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.stiffness, Eigen::EigenvaluesOnly);
      const double norm2 = es.eigenvalues().cwiseAbs().maxCoeff();
      neg_eig = std::max(neg_eig, -es.eigenvalues().minCoeff() / norm2);
    }
    // (v1, v3, w) blocks must coincide bitwise
    const int nm = systems[0].size();
    for (const auto& sys : systems) {
      variant_diff = std::max(variant_diff, (sys.mass.topLeftCorner(nm, nm) - systems[0].mass).cwiseAbs().maxCoeff());
      variant_diff =
          std::max(variant_diff, (sys.stiffness.topLeftCorner(nm, nm) - systems[0].stiffness).cwiseAbs().maxCoeff());
    }
  }
  out.push_back(detail::make_check("gyroscopic skewness", skew, 1e-12, "max|D + D^T| / max(1, max|D|)"));
  out.push_back(detail::make_check("mass SPD", mass_spd ? 0.0 : 1.0, 0.0, "Cholesky of M"));
  out.push_back(detail::make_check("stiffness symmetric", asym, 0.0, "max|A - A^T| / max|A|"));
  out.push_back(detail::make_check("stiffness PSD", neg_eig, 1e-10, "-min eig(A) / ||A||"));
  out.push_back(detail::make_check("variant consistency", variant_diff, 0.0, "mechanical blocks across models"));

  // resolvent operator
  {
    const int n = opt.quick ? 16 : 32;
    const auto mesh = fem::Mesh1D::uniform(L, n);
    double spec_defect = 0.0, self_adj = 0.0, j_pos = 0.0, const_err = 0.0;
    for (double xi : {config.xi(), L * L / 10.0}) {
      const PxiOperator pxi(mesh, xi);
      const Eigen::MatrixXd m(pxi.mass());
      const Eigen::MatrixXd k(pxi.operator_matrix());
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(m, k, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
      spec_defect = std::max(spec_defect, (lo > 0.0 ? 0.0 : 1.0) + std::abs(hi - 1.0));
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(pxi.space().n_free());
      const_err = std::max(const_err, (pxi.apply(ones) - ones).cwiseAbs().maxCoeff());
      const double mnorm = m.cwiseAbs().rowwise().sum().maxCoeff();
      for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd f = detail::random_vector(rng, ones.size());
        const Eigen::VectorXd g = detail::random_vector(rng, ones.size());
        self_adj = std::max(self_adj, std::abs(f.dot(m * pxi.apply(g)) - g.dot(m * pxi.apply(f))) /
                                          (f.norm() * g.norm() * mnorm));
        if (xi > 0.0) j_pos = std::max(j_pos, f.dot(m * pxi.apply_j(f)));
      }
    }
    out.push_back(detail::make_check("P spectrum in (0,1], max = 1", spec_defect, 1e-12));
    out.push_back(detail::make_check("P fixes constants", const_err, 1e-12));
    out.push_back(detail::make_check("P self-adjoint", self_adj, 1e-12));
    out.push_back(detail::make_check("J non-positive", j_pos, 0.0, "max f^T M J f"));
  }

  // time integration of the fully dynamic model
  {
    const int n = opt.quick ? 16 : 32;
    const long steps = opt.quick ? 200 : 1000;
    const double dt = 1e-3;
    const auto mesh = fem::Mesh1D::uniform(L, n);
    const auto sys = assemble(config, mesh, EmAssumption::FullyDynamic, ActuationMode::Charge, aopt);
    const auto s0 = detail::random_state(sys, rng);
    const auto tr = simulate(sys, {}, TimeGrid(steps * dt, dt), s0);
    const double drift = std::abs(tr.energy.back() - tr.energy.front()) / tr.energy.front();
    out.push_back(detail::make_check("energy conservation", drift, 1e-10, "relative drift, F = 0"));

    double res = 0.0;
    for (auto mode : {ActuationMode::Charge, ActuationMode::Current}) {
      const auto driven = assemble(config, mesh, EmAssumption::FullyDynamic, mode, aopt);
      ActuationSignals sig;
      if (mode == ActuationMode::Charge) sig.sigma_s = [](double t) { return detail::sine(1e-3, 50.0, t); };
      else sig.i_s = [](double t) { return detail::sine(1.0, 50.0, t); };
      sig.g = [](double t) { return detail::sine(1.0, 20.0, t); };
      const auto dtr = simulate(driven, sig, TimeGrid(steps * dt, dt), StateVector::zero(driven.size()));
      res = std::max(res, dtr.max_residual() / (1.0 + dtr.max_energy()));
    }
    out.push_back(detail::make_check("power balance", res, 1e-10, "max residual / (1 + max E)"));

    const MidpointStepper fwd(sys, dt), bwd(sys, -dt);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.size());
    const auto s1 = bwd.step(fwd.step(s0, zero), zero);
    const double rev = std::sqrt((s1.q - s0.q).squaredNorm() + (s1.p - s0.p).squaredNorm()) /
                       std::sqrt(s0.q.squaredNorm() + s0.p.squaredNorm());
    out.push_back(detail::make_check("time reversibility", rev, 1e-10));

    const auto mag = reconstruct_magnetic(sys, s0.q);
    double scale = 0.0;
    for (double x : mesh.nodes()) scale = std::max(scale, std::abs(config.xi() * sys.theta_space->evaluate(mag.theta, x, 1)));
    out.push_back(detail::make_check("gauge eta = xi theta_x", mag.gauge_residual / std::max(scale, 1e-300), 1e-12));
  }

  // generator spectrum
  {
    const int n = opt.quick ? 8 : 16;
    const auto sys = assemble(config, fem::Mesh1D::uniform(L, n), EmAssumption::FullyDynamic, ActuationMode::Charge, aopt);
    const auto modes = modal_frequencies(sys, 1);
    out.push_back(detail::make_check("generator spectrum imaginary", modes.max_real_part / modes.max_abs_eigenvalue, 1e-8,
                                     "max|Re| / max|lambda|"));
  }

  // quasi-static recovery
  {
    const int n = opt.quick ? 16 : 32;
    const auto sys = assemble(config, fem::Mesh1D::uniform(L, n), EmAssumption::QuasiStatic, ActuationMode::Current, aopt);
    const Eigen::VectorXd v3dot = detail::random_vector(rng, sys.v3_space.n_free());
    const auto f = recover_quasistatic_em(sys, v3dot, 1.0);
    out.push_back(detail::make_check("quasi-static recovery residual", std::max(f.theta_residual, f.eta_residual), 1e-10));
  }
  return out;
}

}  // namespace aclsim
