#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aclsim/errors.hpp"

namespace aclsim::fem {

/// Strictly increasing node set on [0, L].
class Mesh1D {
 public:
  explicit Mesh1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw Error("mesh needs at least one element");
    if (nodes_.front() != 0.0) throw Error("mesh must start at x = 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (!(nodes_[i] > nodes_[i - 1])) throw Error("mesh nodes must be strictly increasing");
  }

  static Mesh1D uniform(double length, int n_elements) {
    if (n_elements < 1) throw Error("mesh needs at least one element");
    if (!(length > 0.0)) throw Error("mesh length must be > 0");
    std::vector<double> x(n_elements + 1);
    for (int i = 0; i <= n_elements; ++i) x[i] = length * i / n_elements;
    x.back() = length;
    return Mesh1D(std::move(x));
  }

  int n_elements() const noexcept { return static_cast<int>(nodes_.size()) - 1; }
  int n_nodes() const noexcept { return static_cast<int>(nodes_.size()); }
  double length() const noexcept { return nodes_.back(); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  double left(int e) const { return nodes_[e]; }
  double size(int e) const { return nodes_[e + 1] - nodes_[e]; }

  /// Element containing x (the right endpoint belongs to the last element).
  int locate(double x) const {
    if (!(x >= 0.0 && x <= length())) throw OutOfDomain("x = " + std::to_string(x) + " outside [0, L]");
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    int e = static_cast<int>(it - nodes_.begin()) - 1;
    return std::clamp(e, 0, n_elements() - 1);
  }

  bool operator==(const Mesh1D&) const = default;

 private:
  std::vector<double> nodes_;
};

enum class Family { LagrangeP1, LagrangeP2, HermiteC1 };
enum class DofKind { Value, Slope };
enum class Endpoint { Left, Right };

struct Constraint {
  DofKind kind;
  Endpoint end;
  bool operator==(const Constraint&) const = default;
};

inline const char* to_string(Family f) {
  switch (f) {
    case Family::LagrangeP1: return "P1";
    case Family::LagrangeP2: return "P2";
    case Family::HermiteC1: return "Hermite";
  }
  return "?";
}

/// Local basis values (and physical derivatives) of one element at one point.
/// At most 4 local functions for the supported families.
using LocalValues = std::array<double, 4>;

/// Scalar finite-element space over a mesh with essential (homogeneous) constraints.
///
/// Global numbering:
///   P1      node i -> i
///   P2      node i -> 2i, midpoint of element e -> 2e + 1
///   Hermite node i -> value 2i, slope 2i + 1
/// Constrained DOFs are dropped from the free numbering; coefficient vectors
/// handed to and returned by the library are always over free DOFs.
class FemSpace {
 public:
  FemSpace(Mesh1D mesh, Family family, std::vector<Constraint> constraints = {}, std::string name = {})
      : mesh_(std::move(mesh)), family_(family), constraints_(std::move(constraints)), name_(std::move(name)) {
    for (const auto& c : constraints_)
      if (c.kind == DofKind::Slope && family_ != Family::HermiteC1)
        throw WrongFamily("slope constraints need a C1 (Hermite) space");
    const int n = n_total();
    free_of_full_.assign(n, 0);
    for (const auto& c : constraints_) free_of_full_[constrained_dof(c)] = -1;
    full_of_free_.clear();
    for (int i = 0; i < n; ++i) {
      if (free_of_full_[i] < 0) continue;
      free_of_full_[i] = static_cast<int>(full_of_free_.size());
      full_of_free_.push_back(i);
    }
  }

  const Mesh1D& mesh() const noexcept { return mesh_; }
  Family family() const noexcept { return family_; }
  const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
  const std::string& name() const noexcept { return name_; }

  int n_total() const {
    const int ne = mesh_.n_elements();
    switch (family_) {
      case Family::LagrangeP1: return ne + 1;
      case Family::LagrangeP2: return 2 * ne + 1;
      case Family::HermiteC1: return 2 * (ne + 1);
    }
    return 0;
  }
  int n_free() const noexcept { return static_cast<int>(full_of_free_.size()); }
  int n_local() const noexcept { return family_ == Family::LagrangeP1 ? 2 : family_ == Family::LagrangeP2 ? 3 : 4; }
  int degree() const noexcept { return family_ == Family::LagrangeP1 ? 1 : family_ == Family::LagrangeP2 ? 2 : 3; }

  /// Free index of a global DOF, -1 if constrained.
  int free_index(int full) const { return free_of_full_[full]; }
  int full_index(int free) const { return full_of_free_[free]; }

  int constrained_dof(const Constraint& c) const {
    const int last = mesh_.n_nodes() - 1;
    const int node = c.end == Endpoint::Left ? 0 : last;
    switch (family_) {
      case Family::LagrangeP1: return node;
      case Family::LagrangeP2: return 2 * node;
      case Family::HermiteC1: return 2 * node + (c.kind == DofKind::Slope ? 1 : 0);
    }
    return -1;
  }

  /// Global DOFs of element e in local order.
  std::array<int, 4> element_dofs(int e) const {
    switch (family_) {
      case Family::LagrangeP1: return {e, e + 1, -1, -1};
      case Family::LagrangeP2: return {2 * e, 2 * e + 1, 2 * e + 2, -1};
      case Family::HermiteC1: return {2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3};
    }
    return {-1, -1, -1, -1};
  }

  /// Local basis (derivative order 0..2, physical coordinates) at reference point s in [0, 1]
  /// of an element of size h.
  LocalValues shape(double s, double h, int deriv) const {
    LocalValues v{0.0, 0.0, 0.0, 0.0};
    switch (family_) {
      case Family::LagrangeP1:
        if (deriv == 0) v = {1.0 - s, s, 0.0, 0.0};
        else if (deriv == 1) v = {-1.0 / h, 1.0 / h, 0.0, 0.0};
        break;
      case Family::LagrangeP2:
        if (deriv == 0) v = {2.0 * (s - 0.5) * (s - 1.0), -4.0 * s * (s - 1.0), 2.0 * s * (s - 0.5), 0.0};
        else if (deriv == 1) v = {(4.0 * s - 3.0) / h, (4.0 - 8.0 * s) / h, (4.0 * s - 1.0) / h, 0.0};
        else if (deriv == 2) v = {4.0 / (h * h), -8.0 / (h * h), 4.0 / (h * h), 0.0};
        break;
      case Family::HermiteC1: {
        const double s2 = s * s, s3 = s2 * s;
        if (deriv == 0) {
          v = {1.0 - 3.0 * s2 + 2.0 * s3, h * (s - 2.0 * s2 + s3), 3.0 * s2 - 2.0 * s3, h * (s3 - s2)};
        } else if (deriv == 1) {
          v = {(-6.0 * s + 6.0 * s2) / h, 1.0 - 4.0 * s + 3.0 * s2, (6.0 * s - 6.0 * s2) / h, 3.0 * s2 - 2.0 * s};
        } else if (deriv == 2) {
          v = {(-6.0 + 12.0 * s) / (h * h), (-4.0 + 6.0 * s) / h, (6.0 - 12.0 * s) / (h * h), (6.0 * s - 2.0) / h};
        } else if (deriv == 3) {
          v = {12.0 / (h * h * h), 6.0 / (h * h), -12.0 / (h * h * h), 6.0 / (h * h)};
        }
        break;
      }
    }
    return v;
  }

  /// Evaluate the field (or a derivative) described by free coefficients at x.
  double evaluate(const Eigen::VectorXd& coeffs, double x, int deriv = 0) const {
    if (coeffs.size() != n_free()) throw DimensionMismatch("coefficient vector does not match space '" + name_ + "'");
    const int e = mesh_.locate(x);
    const double h = mesh_.size(e);
    const double s = std::clamp((x - mesh_.left(e)) / h, 0.0, 1.0);
    const auto phi = shape(s, h, deriv);
    const auto dofs = element_dofs(e);
    double value = 0.0;
    for (int a = 0; a < n_local(); ++a) {
      const int f = free_index(dofs[a]);
      if (f >= 0) value += coeffs[f] * phi[a];
    }
    return value;
  }

  /// Nodal interpolant over the free DOFs (constrained DOFs are dropped).
  /// Hermite spaces need the derivative as well.
  Eigen::VectorXd interpolate(const std::function<double(double)>& f,
                              const std::function<double(double)>& df = {}) const {
    if (family_ == Family::HermiteC1 && !df) throw WrongFamily("Hermite interpolation needs the derivative");
    Eigen::VectorXd full(n_total());
    const auto& x = mesh_.nodes();
    switch (family_) {
      case Family::LagrangeP1:
        for (int i = 0; i < mesh_.n_nodes(); ++i) full[i] = f(x[i]);
        break;
      case Family::LagrangeP2:
        for (int i = 0; i < mesh_.n_nodes(); ++i) full[2 * i] = f(x[i]);
        for (int e = 0; e < mesh_.n_elements(); ++e) full[2 * e + 1] = f(0.5 * (x[e] + x[e + 1]));
        break;
      case Family::HermiteC1:
        for (int i = 0; i < mesh_.n_nodes(); ++i) {
          full[2 * i] = f(x[i]);
          full[2 * i + 1] = df(x[i]);
        }
        break;
    }
    return restrict_to_free(full);
  }

  Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(n_free());
    for (int i = 0; i < n_free(); ++i) out[i] = full[full_of_free_[i]];
    return out;
  }

  /// Full coefficient vector with zeros at constrained DOFs.
  Eigen::VectorXd expand_to_full(const Eigen::VectorXd& free) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_total());
    for (int i = 0; i < n_free(); ++i) out[full_of_free_[i]] = free[i];
    return out;
  }

  bool same_mesh(const FemSpace& other) const { return mesh_ == other.mesh_; }

 private:
  Mesh1D mesh_;
  Family family_;
  std::vector<Constraint> constraints_;
  std::string name_;
  std::vector<int> free_of_full_;
  std::vector<int> full_of_free_;
};

}  // namespace aclsim::fem
