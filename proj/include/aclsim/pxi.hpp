#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "aclsim/config.hpp"
#include "aclsim/errors.hpp"
#include "aclsim/fem/assembly.hpp"
#include "aclsim/fem/space.hpp"
#include "aclsim/types.hpp"

namespace aclsim {

/// Discrete resolvent P = (I - xi d^2/dx^2)^{-1} with homogeneous Neumann ends,
/// realized on an unconstrained P2 helper space:
///
///     (Mass + xi * GradGrad) u = Mass f.
///
/// P is self-adjoint in the mass inner product with spectrum in (0, 1]; constants
/// are fixed points. The Cholesky factors are computed once at construction.
class PxiOperator {
 public:
  PxiOperator(const fem::Mesh1D& mesh, double xi)
      : space_(mesh, fem::Family::LagrangeP2, {}, "pxi-helper"),
        xi_(xi),
        mass_(fem::assemble_mass(space_, 1.0).matrix),
        grad_(fem::assemble_grad_grad(space_, 1.0).matrix) {
    if (!(xi >= 0.0) || !std::isfinite(xi)) throw Error("xi must be finite and >= 0");
    operator_ = mass_ + xi_ * grad_;
    op_solver_.compute(operator_);
    if (op_solver_.info() != Eigen::Success) throw SingularSystem("Mass + xi GradGrad is not positive definite");
    mass_solver_.compute(mass_);
    if (mass_solver_.info() != Eigen::Success) throw SingularSystem("helper mass matrix is not positive definite");
  }

  const fem::FemSpace& space() const noexcept { return space_; }
  double xi() const noexcept { return xi_; }
  const fem::SparseMatrix& mass() const noexcept { return mass_; }
  const fem::SparseMatrix& grad_grad() const noexcept { return grad_; }
  /// Mass + xi * GradGrad.
  const fem::SparseMatrix& operator_matrix() const noexcept { return operator_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& f) const {
    check(f);
    if (xi_ == 0.0) return f;
    return solve(mass_ * f);
  }

  /// J = (P - I) / xi; non-positive in the mass inner product.
  Eigen::VectorXd apply_j(const Eigen::VectorXd& f) const {
    if (xi_ == 0.0) throw XiZero("J = (P - I)/xi is undefined for xi = 0");
    return (apply(f) - f) / xi_;
  }

  /// (Mass + xi GradGrad)^{-1} rhs.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd u = op_solver_.solve(rhs);
    if (op_solver_.info() != Eigen::Success || !u.allFinite()) throw SingularSystem("resolvent solve failed");
    return u;
  }

  /// G(i, j) = (psi_i, d/dx phi_j) with psi the helper basis, phi the basis of src.
  fem::SparseMatrix derivative_pairing(const fem::FemSpace& src) const {
    return fem::assemble_form(space_, src, 0, 1, 1.0).matrix;
  }

  /// L2 projection of d/dx (src field) onto the helper space.
  Eigen::VectorXd project_derivative(const fem::FemSpace& src, const Eigen::VectorXd& coeffs) const {
    return mass_solver_.solve(derivative_pairing(src) * coeffs);
  }

  /// P applied to the projected derivative of a src field; equals apply(project_derivative(..)).
  Eigen::VectorXd apply_to_derivative(const fem::FemSpace& src, const Eigen::VectorXd& coeffs) const {
    if (xi_ == 0.0) return project_derivative(src, coeffs);
    return solve(derivative_pairing(src) * coeffs);
  }

  /// S = G^T (Mass + xi GradGrad)^{-1} G, so that u^T S v = (P u_x, v_x) for src fields u, v.
  /// Dense: P is nonlocal.
  Eigen::MatrixXd resolvent_form(const fem::FemSpace& src) const {
    const Eigen::MatrixXd g(derivative_pairing(src));
    Eigen::MatrixXd x = op_solver_.solve(g);
    Eigen::MatrixXd s = g.transpose() * x;
    return 0.5 * (s + s.transpose());
  }

 private:
  void check(const Eigen::VectorXd& f) const {
    if (f.size() != space_.n_free()) throw DimensionMismatch("vector does not match the helper space");
    if (!f.allFinite()) throw Error("non-finite input to P");
  }

  fem::FemSpace space_;
  double xi_;
  fem::SparseMatrix mass_;
  fem::SparseMatrix grad_;
  fem::SparseMatrix operator_;
  Eigen::SimplicialLLT<fem::SparseMatrix> op_solver_;
  Eigen::SimplicialLLT<fem::SparseMatrix> mass_solver_;
};

/// First moment of the electric potential, eliminated from the stretch field of layer 3:
///
///     phi1 = (gamma/eps3) P v3_x                        (current drive)
///     phi1 = (gamma/eps3) P v3_x + sigma_s/(eps3 h3)    (charge drive)
///
/// The free additive constant of the charge case is fixed to 0.
inline Eigen::VectorXd solve_phi1(const PxiOperator& pxi, const BeamConfig& config, const fem::FemSpace& v3_space,
                                  const Eigen::VectorXd& v3, double sigma_s, ActuationMode mode) {
  const auto& p = config.materials();
  Eigen::VectorXd phi1 = (p.gamma / p.eps3) * pxi.apply_to_derivative(v3_space, v3);
  if (mode == ActuationMode::Charge)
    phi1.array() += sigma_s / (p.eps3 * config.geometry().h3);
  return phi1;
}

}  // namespace aclsim
