#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aclsim/config.hpp"
#include "aclsim/errors.hpp"
#include "aclsim/fem/assembly.hpp"
#include "aclsim/fem/space.hpp"
#include "aclsim/pxi.hpp"
#include "aclsim/types.hpp"

namespace aclsim {

/// Position-space unknowns. The magnetic field eta is not a block: it is
/// eliminated through the gauge eta = xi * theta_x.
enum class Block { V1, V3, W, Theta };

inline const char* to_string(Block b) {
  switch (b) {
    case Block::V1: return "v1";
    case Block::V3: return "v3";
    case Block::W: return "w";
    case Block::Theta: return "theta";
  }
  return "?";
}

struct BlockRange {
  Block block;
  int offset;
  int size;
};

class DofLayout {
 public:
  DofLayout() = default;
  void append(Block b, int size) {
    blocks_.push_back({b, total_, size});
    total_ += size;
  }
  bool has(Block b) const {
    return std::any_of(blocks_.begin(), blocks_.end(), [b](const BlockRange& r) { return r.block == b; });
  }
  const BlockRange& range(Block b) const {
    for (const auto& r : blocks_)
      if (r.block == b) return r;
    throw Error(std::string("layout has no block ") + to_string(b));
  }
  int total() const noexcept { return total_; }
  const std::vector<BlockRange>& blocks() const noexcept { return blocks_; }

 private:
  std::vector<BlockRange> blocks_;
  int total_ = 0;
};

/// Load vectors of the named input ports (length N each, zero outside their block).
struct InputMaps {
  Eigen::VectorXd g1;       // axial force on layer 1 at x = L
  Eigen::VectorXd sigma_s;  // surface charge density
  Eigen::VectorXd g;        // transverse shear force at x = L
  Eigen::VectorXd moment;   // bending moment at x = L
  Eigen::VectorXd i_s;      // surface current density (fully dynamic only)
};

/// Time signals driving the ports. An empty function means "identically zero".
struct ActuationSignals {
  std::function<double(double)> sigma_s;
  std::function<double(double)> i_s;
  std::function<double(double)> g1;
  std::function<double(double)> g;
  std::function<double(double)> moment;
  std::function<double(double, double)> f1;  // (t, x)
  std::function<double(double, double)> f3;
  std::function<double(double, double)> f;

  static double at(const std::function<double(double)>& s, double t) { return s ? s(t) : 0.0; }

  ActuationSignals scaled(double factor) const {
    ActuationSignals out;
    auto sc = [factor](const std::function<double(double)>& s) -> std::function<double(double)> {
      if (!s) return {};
      return [s, factor](double t) { return factor * s(t); };
    };
    auto sc2 = [factor](const std::function<double(double, double)>& s) -> std::function<double(double, double)> {
      if (!s) return {};
      return [s, factor](double t, double x) { return factor * s(t, x); };
    };
    out.sigma_s = sc(sigma_s);
    out.i_s = sc(i_s);
    out.g1 = sc(g1);
    out.g = sc(g);
    out.moment = sc(moment);
    out.f1 = sc2(f1);
    out.f3 = sc2(f3);
    out.f = sc2(f);
    return out;
  }
};

/// Positions q and velocities p over the DofLayout.
struct StateVector {
  Eigen::VectorXd q;
  Eigen::VectorXd p;

  static StateVector zero(int n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)}; }
};

/// Assembly variations for studies and for the verification suite (the sign error lets
/// the suite show that its checks can fail).
struct AssemblyOptions {
  bool inject_gyro_sign_error = false;
  /// Use this xi instead of the one derived from the permittivities (parameter studies,
  /// including the xi = 0 limit that no admissible config reaches).
  std::optional<double> xi_override;
};

/// Semi-discrete system  M q'' + D q' + A q = B F(t).
///
/// Blocks (v1, v3: P2 clamped at 0; w: Hermite clamped value+slope at 0;
/// theta: Hermite with values pinned at both ends, fully dynamic only).
struct FemSystem {
  BeamConfig config;
  fem::Mesh1D mesh;
  EmAssumption em;
  ActuationMode mode;
  DofLayout layout;
  fem::FemSpace v1_space;
  fem::FemSpace v3_space;
  fem::FemSpace w_space;
  std::optional<fem::FemSpace> theta_space;
  std::shared_ptr<const PxiOperator> pxi;
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd gyro;
  InputMaps inputs;

  int size() const noexcept { return layout.total(); }
  const fem::FemSpace& space(Block b) const {
    switch (b) {
      case Block::V1: return v1_space;
      case Block::V3: return v3_space;
      case Block::W: return w_space;
      case Block::Theta:
        if (!theta_space) throw WrongVariant("theta is not a dynamic field of the " + std::string(to_string(em)) + " model");
        return *theta_space;
    }
    throw Error("unknown block");
  }
  Eigen::VectorXd block(const Eigen::VectorXd& x, Block b) const {
    const auto& r = layout.range(b);
    return x.segment(r.offset, r.size);
  }
};

namespace detail {

inline void add_block(Eigen::MatrixXd& target, const DofLayout& layout, Block row, Block col, const Eigen::MatrixXd& m) {
  const auto& r = layout.range(row);
  const auto& c = layout.range(col);
  target.block(r.offset, c.offset, r.size, c.size) += m;
}

inline void put_vector(Eigen::VectorXd& target, const DofLayout& layout, Block b, const Eigen::VectorXd& v) {
  const auto& r = layout.range(b);
  target.segment(r.offset, r.size) = v;
}

}  // namespace detail

/// Assemble the semi-discrete model for one electromagnetic assumption and actuation mode.
inline FemSystem assemble(const BeamConfig& config, const fem::Mesh1D& mesh, EmAssumption em, ActuationMode mode,
                          const AssemblyOptions& options = {}) {
  using fem::Constraint;
  using fem::DofKind;
  using fem::Endpoint;
  using fem::Family;

  if (em == EmAssumption::Electrostatic && mode == ActuationMode::Current)
    throw UnsupportedCombination(
        "electrostatic model with current actuation is not supported: the surface current has no port in the "
        "electrostatic model (it would have to enter through a circuit equation)");
  if (mesh.n_elements() < 2) throw Error("the model needs at least 2 elements");
  if (std::abs(mesh.length() - config.length()) > 1e-12 * config.length())
    throw MeshMismatch("mesh length does not match the beam length");

  const auto& g = config.geometry();
  const auto& p = config.materials();
  const auto& d = config.derived();
  const double xi = options.xi_override.value_or(d.xi);

  std::vector<Constraint> w_constraints{{DofKind::Value, Endpoint::Left}, {DofKind::Slope, Endpoint::Left}};
  if (config.strict_h2l()) w_constraints.push_back({DofKind::Slope, Endpoint::Right});

  FemSystem sys{config,
                mesh,
                em,
                mode,
                DofLayout{},
                fem::FemSpace(mesh, Family::LagrangeP2, {{DofKind::Value, Endpoint::Left}}, "v1"),
                fem::FemSpace(mesh, Family::LagrangeP2, {{DofKind::Value, Endpoint::Left}}, "v3"),
                fem::FemSpace(mesh, Family::HermiteC1, w_constraints, "w"),
                std::nullopt,
                std::make_shared<const PxiOperator>(mesh, xi),
                {},
                {},
                {},
                {}};
  const bool dynamic_em = em == EmAssumption::FullyDynamic;
  if (dynamic_em)
    sys.theta_space.emplace(mesh, Family::HermiteC1,
                            std::vector<Constraint>{{DofKind::Value, Endpoint::Left}, {DofKind::Value, Endpoint::Right}},
                            "theta");

  auto& layout = sys.layout;
  layout.append(Block::V1, sys.v1_space.n_free());
  layout.append(Block::V3, sys.v3_space.n_free());
  layout.append(Block::W, sys.w_space.n_free());
  if (dynamic_em) layout.append(Block::Theta, sys.theta_space->n_free());
  const int n = layout.total();

  const auto& v1 = sys.v1_space;
  const auto& v3 = sys.v3_space;
  const auto& w = sys.w_space;

  Eigen::MatrixXd& M = sys.mass;
  Eigen::MatrixXd& A = sys.stiffness;
  Eigen::MatrixXd& D = sys.gyro;
  M = Eigen::MatrixXd::Zero(n, n);
  A = Eigen::MatrixXd::Zero(n, n);
  D = Eigen::MatrixXd::Zero(n, n);

  // kinetic energy
  detail::add_block(M, layout, Block::V1, Block::V1, fem::assemble_mass(v1, p.rho1 * g.h1).dense());
  detail::add_block(M, layout, Block::V3, Block::V3, fem::assemble_mass(v3, p.rho3 * g.h3).dense());
  detail::add_block(M, layout, Block::W, Block::W,
                    fem::assemble_mass(w, d.m).dense() + fem::assemble_grad_grad(w, d.K1).dense());

  // stretching, induced-potential stiffening, bending
  detail::add_block(A, layout, Block::V1, Block::V1, fem::assemble_grad_grad(v1, p.alpha1 * g.h1).dense());
  detail::add_block(A, layout, Block::V3, Block::V3,
                    fem::assemble_grad_grad(v3, p.alpha3 * g.h3).dense() +
                        (p.gamma * p.gamma * g.h3 / p.eps3) * sys.pxi->resolvent_form(v3));
  detail::add_block(A, layout, Block::W, Block::W, fem::assemble_bend_bend(w, d.K2).dense());

  // core shear: (G2/h2) |-v1 + v3 + H w_x|^2
  const double cs = p.G2 / g.h2;
  if (cs != 0.0) {
    const Eigen::MatrixXd m11 = fem::assemble_mass(v1, cs).dense();
    const Eigen::MatrixXd m33 = fem::assemble_mass(v3, cs).dense();
    const Eigen::MatrixXd m13 = fem::assemble_form(v1, v3, 0, 0, cs).dense();
    const Eigen::MatrixXd c1w = fem::assemble_form(v1, w, 0, 1, cs * d.H).dense();
    const Eigen::MatrixXd c3w = fem::assemble_form(v3, w, 0, 1, cs * d.H).dense();
    detail::add_block(A, layout, Block::V1, Block::V1, m11);
    detail::add_block(A, layout, Block::V3, Block::V3, m33);
    detail::add_block(A, layout, Block::W, Block::W, fem::assemble_grad_grad(w, cs * d.H * d.H).dense());
    detail::add_block(A, layout, Block::V1, Block::V3, -m13);
    detail::add_block(A, layout, Block::V3, Block::V1, -m13.transpose());
    detail::add_block(A, layout, Block::V1, Block::W, -c1w);
    detail::add_block(A, layout, Block::W, Block::V1, -c1w.transpose());
    detail::add_block(A, layout, Block::V3, Block::W, c3w);
    detail::add_block(A, layout, Block::W, Block::V3, c3w.transpose());
  }

  if (dynamic_em) {
    const auto& th = *sys.theta_space;
    const double e3h3 = p.eps3 * g.h3;
    // xi eps3 h3 |theta'|^2 + eps3 h3 |eta'|^2 with eta = xi theta_x
    detail::add_block(M, layout, Block::Theta, Block::Theta,
                      fem::assemble_mass(th, xi * e3h3).dense() + fem::assemble_grad_grad(th, e3h3 * xi * xi).dense());
    // mu h3 |theta - eta_x|^2 = mu h3 |theta - xi theta_xx|^2
    const double mh = p.mu * g.h3;
    const Eigen::MatrixXd cross = fem::assemble_form(th, th, 0, 2, 1.0).dense();
    detail::add_block(A, layout, Block::Theta, Block::Theta,
                      fem::assemble_mass(th, mh).dense() - (mh * xi) * (cross + cross.transpose()) +
                          fem::assemble_bend_bend(th, mh * xi * xi).dense());
    // gyroscopic coupling gamma h3 (eta', v3_x) - gamma h3 (v3_x', eta)
    const Eigen::MatrixXd r = fem::assemble_form(v3, th, 1, 1, p.gamma * xi * g.h3).dense();
    detail::add_block(D, layout, Block::V3, Block::Theta, r);
    detail::add_block(D, layout, Block::Theta, Block::V3,
                      options.inject_gyro_sign_error ? Eigen::MatrixXd(r.transpose()) : Eigen::MatrixXd(-r.transpose()));
  }

  M = 0.5 * (M + M.transpose()).eval();
  A = 0.5 * (A + A.transpose()).eval();

  // input ports
  auto zero = [n] { return Eigen::VectorXd::Zero(n); };
  sys.inputs = {zero(), zero(), zero(), zero(), zero()};
  detail::put_vector(sys.inputs.g1, layout, Block::V1, fem::boundary_functional(v1, Endpoint::Right, 0));
  detail::put_vector(sys.inputs.sigma_s, layout, Block::V3,
                     (-p.gamma / p.eps3) * fem::boundary_functional(v3, Endpoint::Right, 0));
  detail::put_vector(sys.inputs.g, layout, Block::W, fem::boundary_functional(w, Endpoint::Right, 0));
  detail::put_vector(sys.inputs.moment, layout, Block::W, -d.K2 * fem::boundary_functional(w, Endpoint::Right, 1));
  if (dynamic_em)
    detail::put_vector(sys.inputs.i_s, layout, Block::Theta,
                       fem::load_vector(*sys.theta_space, [](double) { return 1.0; }));
  return sys;
}

/// Signal values at time t mapped to the load vector. Checks that the inactive
/// electrical input vanishes.
inline Eigen::VectorXd input_vector(const FemSystem& sys, const ActuationSignals& s, double t) {
  const double sigma = ActuationSignals::at(s.sigma_s, t);
  const double current = ActuationSignals::at(s.i_s, t);
  if (sys.mode == ActuationMode::Charge && current != 0.0)
    throw ModeViolation("surface current is nonzero at t = " + std::to_string(t) + " under charge actuation");
  if (sys.mode == ActuationMode::Current && sigma != 0.0)
    throw ModeViolation("surface charge is nonzero at t = " + std::to_string(t) + " under current actuation");

  Eigen::VectorXd f = ActuationSignals::at(s.g1, t) * sys.inputs.g1 + sigma * sys.inputs.sigma_s +
                      ActuationSignals::at(s.g, t) * sys.inputs.g + ActuationSignals::at(s.moment, t) * sys.inputs.moment +
                      current * sys.inputs.i_s;
  auto distributed = [&](const std::function<double(double, double)>& load, Block b) {
    if (!load) return;
    const auto& r = sys.layout.range(b);
    f.segment(r.offset, r.size) += fem::load_vector(sys.space(b), [&](double x) { return load(t, x); });
  };
  distributed(s.f1, Block::V1);
  distributed(s.f3, Block::V3);
  distributed(s.f, Block::W);
  return f;
}

/// E = (p^T M p + q^T A q) / 2.
inline double energy(const FemSystem& sys, const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
  if (q.size() != sys.size() || p.size() != sys.size())
    throw DimensionMismatch("state of size " + std::to_string(q.size()) + "/" + std::to_string(p.size()) +
                            " does not match system size " + std::to_string(sys.size()));
  return 0.5 * (p.dot(sys.mass * p) + q.dot(sys.stiffness * q));
}

inline double energy(const FemSystem& sys, const StateVector& s) { return energy(sys, s.q, s.p); }

/// Core shear phi2 = (-v1 + v3 + H w_x) / h2 sampled at xs.
inline std::vector<double> shear_phi2(const FemSystem& sys, const Eigen::VectorXd& q, std::span<const double> xs) {
  if (q.size() != sys.size()) throw DimensionMismatch("state does not match layout");
  const auto qv1 = sys.block(q, Block::V1);
  const auto qv3 = sys.block(q, Block::V3);
  const auto qw = sys.block(q, Block::W);
  const double H = sys.config.derived().H;
  const double h2 = sys.config.geometry().h2;
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    if (!(x >= 0.0 && x <= sys.config.length())) throw OutOfDomain("x = " + std::to_string(x) + " outside [0, L]");
    out.push_back((-sys.v1_space.evaluate(qv1, x) + sys.v3_space.evaluate(qv3, x) + H * sys.w_space.evaluate(qw, x, 1)) /
                  h2);
  }
  return out;
}

/// Magnetic fields of the fully dynamic model rebuilt from the theta block.
/// eta = xi theta_x is stored as a P2 field on the helper space: theta_x of a C1 cubic is a
/// continuous piecewise quadratic, so the representation is exact.
struct MagneticFields {
  Eigen::VectorXd theta;  // theta block (Hermite, free DOFs)
  Eigen::VectorXd eta;    // helper-space (P2) coefficients
  double gauge_residual;  // max |eta - xi theta_x| over nodes, midpoints and quarter points
};

inline MagneticFields reconstruct_magnetic(const FemSystem& sys, const Eigen::VectorXd& q) {
  if (sys.em != EmAssumption::FullyDynamic) throw WrongVariant("magnetic reconstruction needs the fully dynamic model");
  if (q.size() != sys.size()) throw DimensionMismatch("state does not match layout");
  const auto& th = *sys.theta_space;
  const auto& helper = sys.pxi->space();
  const double xi = sys.pxi->xi();
  MagneticFields out{sys.block(q, Block::Theta), Eigen::VectorXd(helper.n_free()), 0.0};
  const auto& mesh = sys.mesh;
  for (int i = 0; i < mesh.n_nodes(); ++i) out.eta[2 * i] = xi * th.evaluate(out.theta, mesh.nodes()[i], 1);
  for (int e = 0; e < mesh.n_elements(); ++e)
    out.eta[2 * e + 1] = xi * th.evaluate(out.theta, mesh.left(e) + 0.5 * mesh.size(e), 1);

  double scale = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e)
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double x = mesh.left(e) + s * mesh.size(e);
      const double ref = xi * th.evaluate(out.theta, x, 1);
      scale = std::max(scale, std::abs(ref));
      out.gauge_residual = std::max(out.gauge_residual, std::abs(helper.evaluate(out.eta, x) - ref));
    }
  return out;
}

/// Magnetic fields of the quasi-static model. They do not feed back into the
/// mechanics, so they are recovered from v3' and i_s by two SPD solves:
///
///     mu h3 (theta - xi theta_xx) = i_s - gamma xi h3 (P v3'_x)_x,  theta(0) = theta(L) = 0
///     mu h3 (eta - xi eta_xx)     = -gamma xi h3 (P - I) v3'_x,     eta_x(0) = eta_x(L) = 0
struct QuasiStaticFields {
  fem::FemSpace theta_space;
  fem::FemSpace eta_space;
  Eigen::VectorXd theta;
  Eigen::VectorXd eta;
  double theta_residual;  // relative residual of the discrete elliptic systems
  double eta_residual;
};

inline QuasiStaticFields recover_quasistatic_em(const FemSystem& sys, const Eigen::VectorXd& v3_velocity,
                                                double i_s) {
  using fem::DofKind;
  using fem::Endpoint;
  if (sys.em != EmAssumption::QuasiStatic) throw WrongVariant("quasi-static recovery needs the quasi-static model");
  if (v3_velocity.size() != sys.v3_space.n_free()) throw DimensionMismatch("v3 velocity does not match the v3 space");
  const auto& p = sys.config.materials();
  const double h3 = sys.config.geometry().h3;
  const double xi = sys.pxi->xi();
  const double mh = p.mu * h3;
  const auto& pxi = *sys.pxi;

  QuasiStaticFields out{fem::FemSpace(sys.mesh, fem::Family::LagrangeP2,
                                      {{DofKind::Value, Endpoint::Left}, {DofKind::Value, Endpoint::Right}}, "theta-qs"),
                        pxi.space(),
                        {},
                        {},
                        0.0,
                        0.0};

  const Eigen::VectorXd u0 = pxi.project_derivative(sys.v3_space, v3_velocity);  // v3'_x
  const Eigen::VectorXd pu = pxi.apply(u0);

  auto relative_residual = [](const fem::SparseMatrix& k, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    const double denom = Eigen::MatrixXd(k).cwiseAbs().rowwise().sum().maxCoeff() * x.norm() + b.norm();
    return denom == 0.0 ? 0.0 : (k * x - b).norm() / denom;
  };

  {
    const auto& ts = out.theta_space;
    fem::SparseMatrix k = fem::assemble_mass(ts, mh).matrix + fem::assemble_grad_grad(ts, mh * xi).matrix;
    const fem::SparseMatrix pair = fem::assemble_form(ts, pxi.space(), 1, 0, 1.0).matrix;  // (u, theta~_x)
    Eigen::VectorXd b = fem::load_vector(ts, [i_s](double) { return i_s; }) + (p.gamma * xi * h3) * (pair * pu);
    Eigen::SimplicialLLT<fem::SparseMatrix> llt(k);
    if (llt.info() != Eigen::Success) throw SingularSystem("theta recovery operator is not SPD");
    out.theta = llt.solve(b);
    out.theta_residual = relative_residual(k, out.theta, b);
  }
  {
    fem::SparseMatrix k = mh * pxi.operator_matrix();
    Eigen::VectorXd b = -(p.gamma * xi * h3) * (pxi.mass() * (pu - u0));
    Eigen::SimplicialLLT<fem::SparseMatrix> llt(k);
    if (llt.info() != Eigen::Success) throw SingularSystem("eta recovery operator is not SPD");
    out.eta = llt.solve(b);
    out.eta_residual = relative_residual(k, out.eta, b);
  }
  return out;
}

/// Write M, A, D as coordinate triplets plus a manifest describing the block layout.
inline void export_system(const FemSystem& sys, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto dump = [&](const char* name, const Eigen::MatrixXd& m) {
    std::ofstream os(dir / name);
    fem::write_triplets(os, m);
  };
  dump("mass.txt", sys.mass);
  dump("stiffness.txt", sys.stiffness);
  dump("gyro.txt", sys.gyro);
  {
    std::ofstream os(dir / "inputs.txt");
    char buf[128];
    const std::pair<const char*, const Eigen::VectorXd*> ports[] = {{"g1", &sys.inputs.g1},
                                                                     {"sigma_s", &sys.inputs.sigma_s},
                                                                     {"g", &sys.inputs.g},
                                                                     {"moment", &sys.inputs.moment},
                                                                     {"i_s", &sys.inputs.i_s}};
    for (const auto& [name, v] : ports)
      for (Eigen::Index i = 0; i < v->size(); ++i)
        if ((*v)[i] != 0.0) {
          std::snprintf(buf, sizeof buf, "%s %ld %.16e\n", name, static_cast<long>(i), (*v)[i]);
          os << buf;
        }
  }
  std::ofstream os(dir / "manifest.txt");
  os << "em = " << to_string(sys.em) << "\n";
  os << "mode = " << to_string(sys.mode) << "\n";
  os << "n_elements = " << sys.mesh.n_elements() << "\n";
  os << "size = " << sys.size() << "\n";
  for (const auto& r : sys.layout.blocks())
    os << "block." << to_string(r.block) << " = " << r.offset << " " << r.size << "\n";
}

}  // namespace aclsim
