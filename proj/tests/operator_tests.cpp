#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "sbq/dynamics.hpp"
#include "sbq/linalg.hpp"
#include "sbq/operators.hpp"

using namespace sbq;
using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

// brute-force operators on the full 2^n product space, bit i set = site i
// up along z (sigma_z = +1)
MatrixXd full_hamiltonian(int n, double alpha, double j, double h,
                          double eps) {
  const int dim = 1 << n;
  MatrixXd m = MatrixXd::Zero(dim, dim);
  const double kac = kac_factor(n, alpha);
  for (int b = 0; b < dim; ++b) {
    double diag = 0.0;
    for (int i = 0; i < n; ++i) diag += (b >> i & 1) ? h : -h;
    m(b, b) += diag;
    for (int i = 0; i < n; ++i) {
      for (int k = i + 1; k < n; ++k) {
        const double v = j / kac * std::pow(ring_distance(i, k, n), -alpha);
        m(b ^ (1 << i) ^ (1 << k), b) += -v;
      }
      if (eps != 0.0) m(b ^ (1 << i), b) += 0.5 * eps;
    }
  }
  return m;
}

MatrixXd full_magnetization(int n) {
  const int dim = 1 << n;
  MatrixXd m = MatrixXd::Zero(dim, dim);
  for (int b = 0; b < dim; ++b)
    for (int i = 0; i < n; ++i) m(b ^ (1 << i), b) += 1.0;
  return m;
}

MatrixXd full_parity(int n) {
  const int dim = 1 << n;
  VectorXd d(dim);
  for (int b = 0; b < dim; ++b)
    d[b] = (n - __builtin_popcount(static_cast<unsigned>(b))) % 2 == 0 ? 1.0
                                                                       : -1.0;
  return d.asDiagonal();
}

// symmetrization isometry as a dense matrix (columns = expanded basis rows)
MatrixXd isometry(const ReducedBasis& basis) {
  MatrixXd u = MatrixXd::Zero(1 << basis.n_sites(), basis.dimension());
  for (int row = 0; row < basis.dimension(); ++row) {
    VectorXcd e = VectorXcd::Zero(basis.dimension());
    e[row] = 1.0;
    u.col(row) = expand_to_full({e, basis.tag()}, basis).amplitudes.real();
  }
  return u;
}

double max_abs_diff(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("kac normalization by hand") {
  const int n = 5;
  const double alpha = 1.1;
  // sum over ordered pairs: every site sees distances 1, 2, 2, 1
  const double expected =
      n * (2.0 * std::pow(1.0, -alpha) + 2.0 * std::pow(2.0, -alpha)) / (n - 1);
  CHECK(kac_factor(n, alpha) == doctest::Approx(expected).epsilon(1e-14));
  // alpha = 0: every pair contributes 1, so the factor is n(n-1)/(n-1) = n
  CHECK(kac_factor(6, 0.0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(ring_distance(0, 5, 6) == doctest::Approx(1.0));
  CHECK(ring_distance(2, 2, 6) == doctest::Approx(0.0));
}

TEST_CASE("reduced operators match the full-space construction") {
  for (int n : {4, 7}) {
    const ReducedBasis basis = ReducedBasis::enumerate_sector(n);
    const MatrixXd u = isometry(basis);
    for (double h : {0.0, 0.7}) {
      const MatrixXd oracle =
          u.transpose() * full_hamiltonian(n, 1.1, 2.0, h, 0.0) * u;
      ModelParameters mp;
      mp.n_sites = n;
      mp.alpha = 1.1;
      mp.j = 2.0;
      mp.h = h;
      CHECK(max_abs_diff(build_tfim(basis, mp).to_dense_real(), oracle) <
            1e-12);
    }
    CHECK(max_abs_diff(build_magnetization(basis).to_dense_real(),
                       u.transpose() * full_magnetization(n) * u) < 1e-12);
    CHECK(max_abs_diff(build_parity(basis).to_dense_real(),
                       u.transpose() * full_parity(n) * u) < 1e-12);
    ModelParameters mp;
    mp.n_sites = n;
    mp.alpha = 1.1;
    mp.j = 2.0;
    mp.h = 0.3;
    mp.epsilon = 0.05;
    CHECK(max_abs_diff(build_perturbed(basis, mp).to_dense_real(),
                       u.transpose() * full_hamiltonian(n, 1.1, 2.0, 0.3, 0.05) *
                           u) < 1e-12);
  }
}

TEST_CASE("perturbation adds half-epsilon times the order parameter") {
  const ReducedBasis basis = ReducedBasis::enumerate_sector(8);
  ModelParameters mp;
  mp.n_sites = 8;
  mp.alpha = 1.1;
  mp.j = 2.0;
  mp.h = 0.1;
  mp.epsilon = 1e-3;
  const MatrixXd lhs = build_perturbed(basis, mp).to_dense_real();
  const MatrixXd rhs =
      build_tfim(basis, mp).to_dense_real() +
      0.5 * mp.epsilon * build_magnetization(basis).to_dense_real();
  CHECK(max_abs_diff(lhs, rhs) < 1e-14);
}

TEST_CASE("sparse and dense storage agree") {
  const ReducedBasis basis = ReducedBasis::enumerate_sector(9);
  ModelParameters mp;
  mp.n_sites = 9;
  mp.alpha = 1.1;
  mp.j = 2.0;
  mp.h = 0.4;
  const HermitianOperator dense = build_tfim(basis, mp, 1 << 20);
  const HermitianOperator sparse = build_tfim(basis, mp, 1);
  REQUIRE(dense.is_dense_real());
  REQUIRE(sparse.is_sparse());
  CHECK(max_abs_diff(dense.to_dense_real(), sparse.to_dense_real()) < 1e-14);
  CHECK(dense.frobenius_norm() ==
        doctest::Approx(sparse.frobenius_norm()).epsilon(1e-13));
  VectorXcd v = VectorXcd::Random(basis.dimension());
  v.normalize();
  CHECK((dense.apply(v) - sparse.apply(v)).norm() < 1e-13);
  CHECK(dense.expectation(v) ==
        doctest::Approx(sparse.expectation(v)).epsilon(1e-12));
  const linalg::SymEigResult eig = linalg::sym_eig(dense.to_dense_real(), false);
  CHECK(dense.spectral_bound() >=
        std::max(std::abs(eig.values[0]), std::abs(eig.values[eig.values.size() - 1])) -
            1e-12);
}

TEST_CASE("non-hermitian input is rejected") {
  MatrixXd bad(2, 2);
  bad << 0.0, 1.0, 2.0, 0.0;
  CHECK_THROWS_AS(HermitianOperator(bad, "tag", "bad"),
                  std::invalid_argument);
  MatrixXcd badc(2, 2);
  badc << 1.0, cplx(0.0, 1.0), cplx(0.0, 1.0), 1.0;
  CHECK_THROWS_AS(HermitianOperator(badc, "tag", "bad"),
                  std::invalid_argument);
}

TEST_CASE("spectral sign on a diagonal oracle") {
  VectorXd d(4);
  d << -2.0, 0.0, 3.0, 1e-15;
  const HermitianOperator a(MatrixXd(d.asDiagonal()), "tag", "a");
  const MatrixXd s = sign_star(a).to_dense_real();
  VectorXd expected(4);
  expected << -1.0, 0.0, 1.0, 0.0;  // 1e-15 is below the zero tolerance
  CHECK(max_abs_diff(s, MatrixXd(expected.asDiagonal())) < 1e-13);
}

TEST_CASE("spectral sign of the order parameter") {
  const int n = 7;  // odd size: M has no zero eigenvalue
  const ReducedBasis basis = ReducedBasis::enumerate_sector(n);
  const HermitianOperator m_op = build_magnetization(basis);
  const HermitianOperator c_op = sign_star(m_op);
  const MatrixXd c = c_op.to_dense_real();
  const MatrixXd m = m_op.to_dense_real();
  const int dim = basis.dimension();
  CHECK(max_abs_diff(c * c, MatrixXd::Identity(dim, dim)) < 1e-12);
  // C M = |M| is symmetric positive definite
  const MatrixXd cm = c * m;
  CHECK(max_abs_diff(cm, cm.transpose()) < 1e-12);
  CHECK(linalg::sym_eig(0.5 * (cm + cm.transpose()), false).values[0] > 0.9);
  // the precomputed-spectrum entry point is the same operator
  const EigenSystem es = EigenSystem::diagonalize(m_op);
  const MatrixXd c2 = sign_star_from_spectrum(es.eigenvalues(),
                                              es.blocks()[0].vectors_real,
                                              basis.tag())
                          .to_dense_real();
  CHECK(max_abs_diff(c, c2) < 1e-12);
}

TEST_CASE("commutator charge against its definition") {
  const ReducedBasis basis = ReducedBasis::enumerate_sector(6);
  const HermitianOperator c_op = sign_star(build_magnetization(basis));
  const HermitianOperator pi_op = build_parity(basis);
  const HermitianOperator k_op = build_K(c_op, pi_op);
  const MatrixXcd c = c_op.to_dense_complex();
  const MatrixXcd pi = pi_op.to_dense_complex();
  const MatrixXcd expected = cplx(0.0, 0.5) * (c * pi - pi * c);
  CHECK((k_op.to_dense_complex() - expected).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(linalg::hermiticity_defect(k_op.to_dense_complex()) < 1e-13);
}

TEST_CASE("parity flips the order parameter") {
  const ReducedBasis basis = ReducedBasis::enumerate_sector(8);
  const MatrixXd m = build_magnetization(basis).to_dense_real();
  const MatrixXd pi = build_parity(basis).to_dense_real();
  const int dim = basis.dimension();
  CHECK(max_abs_diff(pi * pi, MatrixXd::Identity(dim, dim)) < 1e-14);
  CHECK(max_abs_diff(pi * m * pi, MatrixXd(-m)) < 1e-13);
  for (int row = 0; row < dim; ++row)
    CHECK(pi(row, row) == doctest::Approx(basis.parity(row)));
}

TEST_CASE("x-polarized pair in the reduced sector") {
  const int n = 7;
  const ReducedBasis basis = ReducedBasis::enumerate_sector(n);
  const XPolarizedPair xp = x_polarized_states(basis);
  const HermitianOperator m_op = build_magnetization(basis);
  CHECK(xp.plus.norm() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(xp.minus.norm() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(xp.plus.dot(xp.minus)) < 1e-13);
  CHECK((m_op.apply(xp.plus) - n * xp.plus).norm() < 1e-12);
  CHECK((m_op.apply(xp.minus) + n * xp.minus).norm() < 1e-12);
  // in the full space the +N state is the uniform superposition
  const StateVector full =
      expand_to_full({xp.plus.cast<cplx>(), basis.tag()}, basis);
  const double uniform = std::pow(2.0, -0.5 * n);
  for (int b = 0; b < full.amplitudes.size(); ++b)
    CHECK(std::abs(std::abs(full.amplitudes[b]) - uniform) < 1e-13);

  const HermitianOperator w_op = build_W(basis);
  const VectorXcd p = xp.plus.cast<cplx>();
  const VectorXcd m = xp.minus.cast<cplx>();
  CHECK((w_op.apply(p) + cplx(0.0, 1.0) * m).norm() < 1e-12);
  CHECK((w_op.apply(m) - cplx(0.0, 1.0) * p).norm() < 1e-12);
}

TEST_CASE("strong transverse field polarizes the ground state down") {
  const int n = 8;
  const ReducedBasis basis = ReducedBasis::enumerate_sector(n);
  ModelParameters mp;
  mp.n_sites = n;
  mp.alpha = 1.1;
  mp.j = 2.0;
  mp.h = 1e3;
  const EigenSystem es =
      EigenSystem::diagonalize(build_tfim(basis, mp));
  // +h sum sigma_z favors every spin down; that configuration is the
  // bits=0 representative
  const int row = basis.locate(0);
  CHECK(std::abs(es.eigenvector(0)[row]) > 0.9999);
  CHECK(es.eigenvalues()[0] == doctest::Approx(-n * mp.h).epsilon(1e-3));
}

TEST_CASE("collective-sector operators") {
  const int n = 12;
  const HermitianOperator h_op = build_fully_connected(n, 0.5);
  const HermitianOperator m_op = dicke_magnetization(n);
  const HermitianOperator pi_op = dicke_parity(n);
  REQUIRE(h_op.dim() == n + 1);
  const MatrixXd h = h_op.to_dense_real();
  const MatrixXd m = m_op.to_dense_real();
  const MatrixXd pi = pi_op.to_dense_real();
  CHECK(max_abs_diff(pi * pi, MatrixXd::Identity(n + 1, n + 1)) < 1e-13);
  CHECK(max_abs_diff(pi * h, h * pi) < 1e-12);
  CHECK(max_abs_diff(pi * m * pi, MatrixXd(-m)) < 1e-12);
  // 2 Jx has the integer ladder spectrum -n, -n+2, ..., n
  const linalg::SymEigResult eig = linalg::sym_eig(m, false);
  for (int i = 0; i <= n; ++i)
    CHECK(eig.values[i] == doctest::Approx(-n + 2.0 * i).epsilon(1e-10));
  const XPolarizedPair xp = dicke_x_polarized(n);
  CHECK((m_op.apply(xp.plus) - double(n) * xp.plus).norm() < 1e-11);
  CHECK((m_op.apply(xp.minus) + double(n) * xp.minus).norm() < 1e-11);
  // at dominant field the ground energy approaches -n h
  const double big_h = 1e6;
  const linalg::SymEigResult ground =
      linalg::sym_eig(build_fully_connected(n, big_h).to_dense_real(), false);
  CHECK(std::abs(ground.values[0] + n * big_h) < 2.0 * n);
}
