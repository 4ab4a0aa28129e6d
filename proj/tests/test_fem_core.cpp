#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "aclsim/fem/assembly.hpp"
#include "aclsim/fem/quadrature.hpp"
#include "aclsim/fem/space.hpp"
#include "support.hpp"

using namespace aclsim;
using namespace aclsim::fem;
using std::numbers::pi;

namespace {

FemSpace p2(int n, double L = 1.0, std::vector<Constraint> c = {}) {
  return FemSpace(Mesh1D::uniform(L, n), Family::LagrangeP2, std::move(c));
}
FemSpace hermite(int n, double L = 1.0, std::vector<Constraint> c = {}) {
  return FemSpace(Mesh1D::uniform(L, n), Family::HermiteC1, std::move(c));
}

}  // namespace

TEST(Quadrature, ExactForDegree2nMinus1) {
  for (int n = 1; n <= 8; ++n) {
    const auto r = gauss_legendre(n);
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.points[i], d);
      EXPECT_NEAR(s, 1.0 / (d + 1), 1e-15) << "n = " << n << ", degree " << d;
    }
  }
  EXPECT_EQ(points_for_degree(4), 3);
  EXPECT_EQ(points_for_degree(5), 3);
}

TEST(Mesh, LocateAndDomain) {
  const auto m = Mesh1D::uniform(2.0, 4);
  EXPECT_EQ(m.locate(0.0), 0);
  EXPECT_EQ(m.locate(0.6), 1);
  EXPECT_EQ(m.locate(2.0), 3);
  EXPECT_THROW(m.locate(2.1), OutOfDomain);
  EXPECT_THROW(m.locate(-1e-3), OutOfDomain);
}

TEST(FemCore, SingleElementP1Matrices) {
  // the classical linear element matrices of length h
  const double h = 0.5;
  const FemSpace s(Mesh1D({0.0, h}), Family::LagrangeP1);
  const auto m = assemble_mass(s, 1.0).dense();
  const auto k = assemble_grad_grad(s, 1.0).dense();
  EXPECT_NEAR(m(0, 0), h / 3, 1e-15);
  EXPECT_NEAR(m(0, 1), h / 6, 1e-15);
  EXPECT_NEAR(k(0, 0), 1 / h, 1e-15);
  EXPECT_NEAR(k(0, 1), -1 / h, 1e-15);
}

TEST(FemCore, HermiteBendingElement) {
  // Euler-Bernoulli element: (EI/h^3) [12 6h -12 6h; 6h 4h^2 -6h 2h^2; ...]
  const double h = 0.25;
  const FemSpace s(Mesh1D({0.0, h}), Family::HermiteC1);
  const auto k = assemble_bend_bend(s, 1.0).dense();
  const double c = 1.0 / (h * h * h);
  const double ref[4][4] = {{12, 6 * h, -12, 6 * h},
                            {6 * h, 4 * h * h, -6 * h, 2 * h * h},
                            {-12, -6 * h, 12, -6 * h},
                            {6 * h, 2 * h * h, -6 * h, 4 * h * h}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(k(i, j), c * ref[i][j], 1e-9 * c) << i << "," << j;
  // consistent mass: h/420 [156 22h 54 -13h; ...]
  const auto m = assemble_mass(s, 1.0).dense();
  EXPECT_NEAR(m(0, 0), 156 * h / 420, 1e-15);
  EXPECT_NEAR(m(0, 1), 22 * h * h / 420, 1e-15);
  EXPECT_NEAR(m(0, 2), 54 * h / 420, 1e-15);
  EXPECT_NEAR(m(0, 3), -13 * h * h / 420, 1e-15);
}

TEST(FemCore, PartitionOfUnity) {
  for (auto fam : {Family::LagrangeP1, Family::LagrangeP2}) {
    const FemSpace s(Mesh1D::uniform(1.0, 5), fam);
    const auto m = assemble_mass(s, 1.0).dense();
    EXPECT_NEAR(m.sum(), 1.0, 1e-14);
    const auto k = assemble_grad_grad(s, 1.0).dense();
    EXPECT_NEAR(k.rowwise().sum().cwiseAbs().maxCoeff(), 0.0, 1e-11);
  }
  const auto h = hermite(5);
  const Eigen::VectorXd ones = h.interpolate([](double) { return 1.0; }, [](double) { return 0.0; });
  EXPECT_NEAR(ones.dot(assemble_mass(h, 1.0).dense() * ones), 1.0, 1e-14);
  EXPECT_NEAR((assemble_bend_bend(h, 1.0).dense() * ones).norm(), 0.0, 1e-9);
}

TEST(FemCore, MatricesSymmetricAndMassSpd) {
  const auto s = p2(7, 1.3, {{DofKind::Value, Endpoint::Left}});
  const auto m = assemble_mass(s, 2.0).dense();
  const auto k = assemble_grad_grad(s, 3.0).dense();
  EXPECT_EQ((m - m.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((k - k.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(m).info(), Eigen::Success);
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(k).info(), Eigen::Success);  // clamped: K is SPD
}

TEST(FemCore, EnergyOfInterpolantConvergesAtOrderTwo) {
  // integral of (u')^2 for u = sin(pi x) is pi^2 / 2
  auto err = [](int n) {
    const auto s = p2(n);
    const Eigen::VectorXd u = s.interpolate([](double x) { return std::sin(pi * x); });
    return std::abs(u.dot(assemble_grad_grad(s, 1.0).dense() * u) - pi * pi / 2);
  };
  double prev = err(4);
  for (int n : {8, 16, 32}) {
    const double e = err(n);
    EXPECT_GE(std::log2(prev / e), 2.0 - 0.1) << "n = " << n;
    prev = e;
  }
}

TEST(FemCore, HermiteInterpolantReproducesCubics) {
  const auto s = hermite(3, 2.0);
  auto f = [](double x) { return 1 - 2 * x + 0.5 * x * x * x; };
  auto df = [](double x) { return -2 + 1.5 * x * x; };
  const auto u = s.interpolate(f, df);
  for (double x : {0.0, 0.3, 0.77, 1.5, 2.0}) {
    EXPECT_NEAR(s.evaluate(u, x), f(x), 1e-13);
    EXPECT_NEAR(s.evaluate(u, x, 1), df(x), 1e-13);
    EXPECT_NEAR(s.evaluate(u, x, 2), 3 * x, 1e-12);
  }
  // bending energy of the cubic: integral of (3x)^2 over [0, 2]
  EXPECT_NEAR(u.dot(assemble_bend_bend(s, 1.0).dense() * u), 24.0, 1e-11);
}

TEST(FemCore, MixedFormTransposeIdentity) {
  const auto a = p2(6, 1.0, {{DofKind::Value, Endpoint::Left}});
  const auto b = hermite(6, 1.0, {{DofKind::Value, Endpoint::Left}, {DofKind::Slope, Endpoint::Left}});
  const auto duv = assemble_mixed(a, b, MixedForm::DuV, 1.7).dense();
  const auto udv = assemble_mixed(b, a, MixedForm::UDv, 1.7).dense();
  EXPECT_EQ(duv.rows(), a.n_free());
  EXPECT_EQ(duv.cols(), b.n_free());
  EXPECT_NEAR((duv - udv.transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-13);
}

TEST(FemCore, MixedFormAgainstIndependentQuadrature) {
  // (u_x, v) with u = x^2 in P2 and v the Hermite interpolant of sin(x)
  const auto a = p2(16);
  const auto b = hermite(16);
  const Eigen::VectorXd u = a.interpolate([](double x) { return x * x; });
  const Eigen::VectorXd v = b.interpolate([](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
  const auto g = assemble_form(b, a, 0, 1, 1.0).dense();  // rows: test (b)
  const double ref = testing_support::integrate([&](double x) { return 2 * x * b.evaluate(v, x); }, 0.0, 1.0);
  EXPECT_NEAR(v.dot(g * u), ref, 1e-14);
  EXPECT_NEAR(ref, 2 * (std::sin(1.0) - std::cos(1.0)), 1e-7);
}

TEST(FemCore, BoundaryFunctionals) {
  const auto s = hermite(5, 1.0, {{DofKind::Value, Endpoint::Left}, {DofKind::Slope, Endpoint::Left}});
  const Eigen::VectorXd u = s.interpolate([](double x) { return x * x * x; }, [](double x) { return 3 * x * x; });
  EXPECT_NEAR(boundary_functional(s, Endpoint::Right, 0).dot(u), 1.0, 1e-15);
  EXPECT_NEAR(boundary_functional(s, Endpoint::Right, 1).dot(u), 3.0, 1e-14);
  EXPECT_EQ(boundary_functional(s, Endpoint::Left, 0).norm(), 0.0);
  EXPECT_THROW(boundary_functional(p2(3), Endpoint::Right, 1), WrongFamily);
}

TEST(FemCore, LoadVectorMatchesIndependentQuadrature) {
  const auto s = p2(8);
  const Eigen::VectorXd u = s.interpolate([](double x) { return x * (1 - x); });
  const auto r = load_vector(s, [](double x) { return std::exp(x); });
  // integral of x(1-x) e^x on [0, 1] = 3 - e
  EXPECT_NEAR(r.dot(u), 3.0 - std::exp(1.0), 1e-12);
}

TEST(FemCore, ErrorPaths) {
  EXPECT_THROW(assemble_bend_bend(p2(3), 1.0), WrongFamily);
  EXPECT_THROW(assemble_form(p2(3), p2(4), 0, 0, 1.0), MeshMismatch);
  EXPECT_THROW(FemSpace(Mesh1D::uniform(1, 2), Family::LagrangeP2, {{DofKind::Slope, Endpoint::Left}}), WrongFamily);
  EXPECT_THROW(p2(2).evaluate(Eigen::VectorXd::Zero(3), 0.5), DimensionMismatch);
}

TEST(FemCore, ConstraintsRemoveDofs) {
  const auto s = hermite(4, 1.0, {{DofKind::Value, Endpoint::Left}, {DofKind::Slope, Endpoint::Left}});
  EXPECT_EQ(s.n_total(), 10);
  EXPECT_EQ(s.n_free(), 8);
  EXPECT_EQ(s.free_index(0), -1);
  EXPECT_EQ(s.full_index(0), 2);
  const Eigen::VectorXd f = Eigen::VectorXd::LinSpaced(8, 1, 8);
  EXPECT_EQ(s.restrict_to_free(s.expand_to_full(f)), f);
}

TEST(FemCore, TripletWriter) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(1, 0) = 0.5;
  std::ostringstream os;
  write_triplets(os, a);
  EXPECT_EQ(os.str(), "1 0 5.0000000000000000e-01\n");
}
