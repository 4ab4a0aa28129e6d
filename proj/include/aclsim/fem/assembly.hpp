#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "aclsim/errors.hpp"
#include "aclsim/fem/quadrature.hpp"
#include "aclsim/fem/space.hpp"

namespace aclsim::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Matrix over the free DOFs of a (row, column) space pair.
/// Rows index test functions, columns index trial functions.
struct AssembledMatrix {
  SparseMatrix matrix;
  std::string row_space;
  std::string col_space;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
};

/// coeff * integral of d^a(test_i) * d^b(trial_j) over [0, L].
/// Quadrature is exact for the polynomial integrand of the two families.
inline AssembledMatrix assemble_form(const FemSpace& test, const FemSpace& trial, int test_deriv, int trial_deriv,
                                     double coeff) {
  if (!test.same_mesh(trial)) throw MeshMismatch("spaces '" + test.name() + "' and '" + trial.name() + "' live on different meshes");
  const auto& mesh = test.mesh();
  const auto rule = gauss_legendre(points_for_degree(test.degree() + trial.degree()));
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.n_elements()) * test.n_local() * trial.n_local());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double h = mesh.size(e);
    const auto rdofs = test.element_dofs(e);
    const auto cdofs = trial.element_dofs(e);
    double local[4][4] = {};
    for (int q = 0; q < rule.size(); ++q) {
      const auto u = test.shape(rule.points[q], h, test_deriv);
      const auto v = trial.shape(rule.points[q], h, trial_deriv);
      const double w = rule.weights[q] * h * coeff;
      for (int a = 0; a < test.n_local(); ++a)
        for (int b = 0; b < trial.n_local(); ++b) local[a][b] += w * u[a] * v[b];
    }
    for (int a = 0; a < test.n_local(); ++a) {
      const int i = test.free_index(rdofs[a]);
      if (i < 0) continue;
      for (int b = 0; b < trial.n_local(); ++b) {
        const int j = trial.free_index(cdofs[b]);
        if (j < 0) continue;
        triplets.emplace_back(i, j, local[a][b]);
      }
    }
  }
  AssembledMatrix out{SparseMatrix(test.n_free(), trial.n_free()), test.name(), trial.name()};
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

/// coeff * (phi_i, phi_j).
inline AssembledMatrix assemble_mass(const FemSpace& space, double coeff) {
  return assemble_form(space, space, 0, 0, coeff);
}

/// coeff * (phi_i', phi_j').
inline AssembledMatrix assemble_grad_grad(const FemSpace& space, double coeff) {
  return assemble_form(space, space, 1, 1, coeff);
}

/// coeff * (phi_i'', phi_j''); C1 spaces only.
inline AssembledMatrix assemble_bend_bend(const FemSpace& space, double coeff) {
  if (space.family() != Family::HermiteC1)
    throw WrongFamily("bending form needs a C1 space, got " + std::string(to_string(space.family())));
  return assemble_form(space, space, 2, 2, coeff);
}

/// Named bilinear forms b(u, v) with u the trial function (column space)
/// and v the test function (row space).
enum class MixedForm { DuV, UDv, DuDv, UV };

inline AssembledMatrix assemble_mixed(const FemSpace& row, const FemSpace& col, MixedForm form, double coeff) {
  switch (form) {
    case MixedForm::DuV: return assemble_form(row, col, 0, 1, coeff);
    case MixedForm::UDv: return assemble_form(row, col, 1, 0, coeff);
    case MixedForm::DuDv: return assemble_form(row, col, 1, 1, coeff);
    case MixedForm::UV: return assemble_form(row, col, 0, 0, coeff);
  }
  throw Error("unknown mixed form");
}

/// r with r^T q = d^order(field q)(endpoint).
inline Eigen::VectorXd boundary_functional(const FemSpace& space, Endpoint endpoint, int derivative_order) {
  if (derivative_order == 1 && space.family() != Family::HermiteC1)
    throw WrongFamily("slope extraction needs a C1 space");
  if (derivative_order != 0 && derivative_order != 1) throw Error("derivative_order must be 0 or 1");
  Eigen::VectorXd r = Eigen::VectorXd::Zero(space.n_free());
  const auto& mesh = space.mesh();
  const int e = endpoint == Endpoint::Left ? 0 : mesh.n_elements() - 1;
  const double s = endpoint == Endpoint::Left ? 0.0 : 1.0;
  const auto phi = space.shape(s, mesh.size(e), derivative_order);
  const auto dofs = space.element_dofs(e);
  for (int a = 0; a < space.n_local(); ++a) {
    const int f = space.free_index(dofs[a]);
    if (f >= 0) r[f] += phi[a];
  }
  return r;
}

/// integral of f(x) * d^deriv(phi_i) over [0, L]. A 6-point rule per element is used
/// so that smooth non-polynomial loads are integrated to high order.
inline Eigen::VectorXd load_vector(const FemSpace& space, const std::function<double(double)>& f, int deriv = 0,
                                   int n_points = 6) {
  const auto& mesh = space.mesh();
  const auto rule = gauss_legendre(n_points);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(space.n_free());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double h = mesh.size(e);
    const auto dofs = space.element_dofs(e);
    for (int q = 0; q < rule.size(); ++q) {
      const double x = mesh.left(e) + h * rule.points[q];
      const double fx = f(x) * rule.weights[q] * h;
      const auto phi = space.shape(rule.points[q], h, deriv);
      for (int a = 0; a < space.n_local(); ++a) {
        const int i = space.free_index(dofs[a]);
        if (i >= 0) r[i] += fx * phi[a];
      }
    }
  }
  return r;
}

/// One "row col value" line per stored entry (0-based indices, 17 significant digits).
template <typename Matrix>
void write_triplets(std::ostream& os, const Matrix& a, double drop_below = 0.0) {
  char buf[96];
  if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<Matrix>, Matrix>) {
    for (int k = 0; k < a.outerSize(); ++k)
      for (typename Matrix::InnerIterator it(a, k); it; ++it) {
        if (std::abs(it.value()) <= drop_below) continue;
        std::snprintf(buf, sizeof buf, "%ld %ld %.16e\n", static_cast<long>(it.row()), static_cast<long>(it.col()),
                      it.value());
        os << buf;
      }
  } else {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const double v = a(i, j);
        if (v == 0.0 || std::abs(v) <= drop_below) continue;
        std::snprintf(buf, sizeof buf, "%ld %ld %.16e\n", static_cast<long>(i), static_cast<long>(j), v);
        os << buf;
      }
  }
}

}  // namespace aclsim::fem
