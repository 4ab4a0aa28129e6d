#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "aclsim/errors.hpp"
#include "aclsim/model.hpp"

namespace aclsim {

struct ModalResult {
  std::vector<double> frequencies;  // rad/s, ascending
  /// Real M-orthonormal shapes (columns) when D = 0. Empty for the gyroscopic model,
  /// whose modes are complex; see complex_shapes.
  Eigen::MatrixXd mode_shapes;
  Eigen::MatrixXcd complex_shapes;     // position part of the first-order eigenvectors (D != 0)
  std::vector<double> theta_fraction;  // share of modal energy carried by theta (D != 0)
  EmAssumption em = EmAssumption::Electrostatic;
  int n_elements = 0;
  double max_real_part = 0.0;   // max |Re lambda| over all generator eigenvalues
  double max_abs_eigenvalue = 0.0;
};

namespace detail {

inline ModalResult symmetric_modes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& m, int k) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw EigSolverFailure("generalized symmetric eigensolver failed");
  ModalResult out;
  out.frequencies.resize(k);
  out.mode_shapes = es.eigenvectors().leftCols(k);
  for (int i = 0; i < k; ++i) {
    const double lam = es.eigenvalues()[i];
    out.frequencies[i] = std::sqrt(std::max(lam, 0.0));
  }
  out.max_abs_eigenvalue = std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
  return out;
}

}  // namespace detail

/// Lowest k angular frequencies.
///
/// D = 0: A x = omega^2 M x (dense symmetric-definite solve).
/// D != 0: eigenvalues of the first-order generator [[0, I], [-M^-1 A, -M^-1 D]] after a
/// diagonal similarity scaling; frequencies are the positive imaginary parts and
/// max |Re lambda| is recorded.
inline ModalResult modal_frequencies(const FemSystem& sys, int k) {
  const int n = sys.size();
  if (k < 1 || k > n) throw Error("mode count k must be in [1, " + std::to_string(n) + "]");
  const bool gyroscopic = sys.gyro.cwiseAbs().maxCoeff() > 0.0;
  if (!gyroscopic) {
    auto out = detail::symmetric_modes(sys.stiffness, sys.mass, k);
    out.em = sys.em;
    out.n_elements = sys.mesh.n_elements();
    return out;
  }

  Eigen::LLT<Eigen::MatrixXd> mllt(sys.mass);
  if (mllt.info() != Eigen::Success) throw EigSolverFailure("mass matrix is not positive definite");
  const Eigen::VectorXd sq = sys.stiffness.diagonal().cwiseAbs().cwiseSqrt();
  const Eigen::VectorXd sp = sys.mass.diagonal().cwiseSqrt();
  const Eigen::MatrixXd minv_a = mllt.solve(sys.stiffness);
  const Eigen::MatrixXd minv_d = mllt.solve(sys.gyro);

  // scaled state (sq .* q, sp .* p)
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  g.topRightCorner(n, n) = (sq.cwiseQuotient(sp)).asDiagonal();
  g.bottomLeftCorner(n, n) = -(sp.asDiagonal() * minv_a * sq.cwiseInverse().asDiagonal());
  g.bottomRightCorner(n, n) = -(sp.asDiagonal() * minv_d * sp.cwiseInverse().asDiagonal());

  Eigen::EigenSolver<Eigen::MatrixXd> es(g, true);
  if (es.info() != Eigen::Success) throw EigSolverFailure("first-order eigensolver failed");
  const Eigen::VectorXcd lam = es.eigenvalues();

  ModalResult out;
  out.em = sys.em;
  out.n_elements = sys.mesh.n_elements();
  std::vector<int> idx;
  for (int i = 0; i < 2 * n; ++i) {
    out.max_real_part = std::max(out.max_real_part, std::abs(lam[i].real()));
    out.max_abs_eigenvalue = std::max(out.max_abs_eigenvalue, std::abs(lam[i]));
    if (lam[i].imag() > 0.0) idx.push_back(i);
  }
  if (static_cast<int>(idx.size()) < k) throw EigSolverFailure("fewer oscillatory modes than requested");
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return lam[a].imag() < lam[b].imag(); });

  const bool has_theta = sys.layout.has(Block::Theta);
  const auto theta = has_theta ? sys.layout.range(Block::Theta) : BlockRange{Block::Theta, 0, 0};
  out.complex_shapes.resize(n, k);
  for (int j = 0; j < k; ++j) {
    const int i = idx[j];
    out.frequencies.push_back(lam[i].imag());
    const Eigen::VectorXcd z = es.eigenvectors().col(i);
    const Eigen::VectorXcd q = z.head(n).cwiseQuotient(sq.cast<std::complex<double>>());
    const Eigen::VectorXcd p = z.tail(n).cwiseQuotient(sp.cast<std::complex<double>>());
    out.complex_shapes.col(j) = q;
    auto part = [&](int off, int len) {
      if (len == 0) return 0.0;
      const auto qa = q.segment(off, len);
      const auto pa = p.segment(off, len);
      const auto a = sys.stiffness.block(off, off, len, len).cast<std::complex<double>>();
      const auto m = sys.mass.block(off, off, len, len).cast<std::complex<double>>();
      return std::real(qa.dot(a * qa) + pa.dot(m * pa));
    };
    const double total = part(0, n);
    const double th = part(theta.offset, theta.size);
    out.theta_fraction.push_back(total > 0.0 ? th / total : 0.0);
  }
  return out;
}

/// Frequencies of one block alone (the sub-matrices of that block, other blocks frozen at 0).
inline ModalResult block_modal_frequencies(const FemSystem& sys, Block b, int k) {
  const auto& r = sys.layout.range(b);
  if (k < 1 || k > r.size) throw Error("mode count k must be in [1, " + std::to_string(r.size) + "]");
  auto out = detail::symmetric_modes(sys.stiffness.block(r.offset, r.offset, r.size, r.size),
                                     sys.mass.block(r.offset, r.offset, r.size, r.size), k);
  out.em = sys.em;
  out.n_elements = sys.mesh.n_elements();
  return out;
}

/// Mode-by-mode frequencies of the three electromagnetic models under charge actuation.
/// The fully dynamic column lists its mechanical-dominant modes (theta energy share < 1/2).
struct VariantTable {
  std::vector<double> electrostatic;
  std::vector<double> quasistatic;
  std::vector<double> fullydynamic;
  std::vector<double> fullydynamic_magnetic;  // theta-dominant modes among the computed ones
};

inline VariantTable compare_variants(const BeamConfig& config, const fem::Mesh1D& mesh, int k) {
  VariantTable t;
  const auto es = assemble(config, mesh, EmAssumption::Electrostatic, ActuationMode::Charge);
  const auto qs = assemble(config, mesh, EmAssumption::QuasiStatic, ActuationMode::Charge);
  const auto fd = assemble(config, mesh, EmAssumption::FullyDynamic, ActuationMode::Charge);
  t.electrostatic = modal_frequencies(es, k).frequencies;
  t.quasistatic = modal_frequencies(qs, k).frequencies;
  const auto all = modal_frequencies(fd, fd.size());
  for (std::size_t i = 0; i < all.frequencies.size(); ++i) {
    if (all.theta_fraction[i] < 0.5) {
      if (static_cast<int>(t.fullydynamic.size()) < k) t.fullydynamic.push_back(all.frequencies[i]);
    } else {
      t.fullydynamic_magnetic.push_back(all.frequencies[i]);
    }
  }
  return t;
}

/// Observed convergence order from errors on two meshes/steps related by `ratio`.
inline double observed_order(double error_coarse, double error_fine, double ratio = 2.0) {
  return std::log(std::abs(error_coarse) / std::abs(error_fine)) / std::log(ratio);
}

}  // namespace aclsim
