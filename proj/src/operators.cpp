#include "sbq/operators.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sbq/linalg.hpp"

namespace sbq {

using linalg::require;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

// ---------------------------------------------------------------- storage

HermitianOperator::HermitianOperator(MatrixXd m, std::string basis_tag,
                                     std::string label)
    : m_(std::move(m)), basis_tag_(std::move(basis_tag)), label_(std::move(label)) {
  dim_ = static_cast<int>(dense_real().rows());
  require(dense_real().cols() == dim_, "HermitianOperator: square matrix required");
  check_hermitian();
}

HermitianOperator::HermitianOperator(MatrixXcd m, std::string basis_tag,
                                     std::string label)
    : m_(std::move(m)), basis_tag_(std::move(basis_tag)), label_(std::move(label)) {
  dim_ = static_cast<int>(dense_complex().rows());
  require(dense_complex().cols() == dim_, "HermitianOperator: square matrix required");
  check_hermitian();
}

HermitianOperator::HermitianOperator(SparseReal m, std::string basis_tag,
                                     std::string label)
    : m_(std::move(m)), basis_tag_(std::move(basis_tag)), label_(std::move(label)) {
  dim_ = static_cast<int>(sparse().rows());
  require(sparse().cols() == dim_, "HermitianOperator: square matrix required");
  check_hermitian();
}

bool HermitianOperator::is_dense_real() const {
  return std::holds_alternative<MatrixXd>(m_);
}
bool HermitianOperator::is_dense_complex() const {
  return std::holds_alternative<MatrixXcd>(m_);
}
bool HermitianOperator::is_sparse() const {
  return std::holds_alternative<SparseReal>(m_);
}

const MatrixXd& HermitianOperator::dense_real() const {
  return std::get<MatrixXd>(m_);
}
const MatrixXcd& HermitianOperator::dense_complex() const {
  return std::get<MatrixXcd>(m_);
}
const HermitianOperator::SparseReal& HermitianOperator::sparse() const {
  return std::get<SparseReal>(m_);
}

MatrixXcd HermitianOperator::to_dense_complex() const {
  if (is_dense_complex()) return dense_complex();
  if (is_dense_real()) return dense_real().cast<cplx>();
  return MatrixXd(sparse()).cast<cplx>();
}

MatrixXd HermitianOperator::to_dense_real() const {
  if (is_dense_real()) return dense_real();
  if (is_sparse()) return MatrixXd(sparse());
  throw std::invalid_argument("to_dense_real: operator has complex entries");
}

VectorXcd HermitianOperator::apply(const VectorXcd& v) const {
  require(v.size() == dim_, "apply: dimension mismatch");
  if (is_dense_real()) return dense_real() * v;
  if (is_dense_complex()) return dense_complex() * v;
  return sparse() * v;
}

VectorXd HermitianOperator::apply(const VectorXd& v) const {
  require(v.size() == dim_, "apply: dimension mismatch");
  if (is_dense_real()) return dense_real() * v;
  if (is_dense_complex())
    throw std::invalid_argument("apply: complex operator, real vector");
  return sparse() * v;
}

double HermitianOperator::expectation(const VectorXcd& v) const {
  cplx z = v.dot(apply(v));
  return z.real();
}

double HermitianOperator::frobenius_norm() const {
  if (is_dense_real()) return dense_real().norm();
  if (is_dense_complex()) return dense_complex().norm();
  return sparse().norm();
}

double HermitianOperator::spectral_bound() const {
  VectorXd row_abs = VectorXd::Zero(dim_);
  if (is_dense_real()) {
    row_abs = dense_real().cwiseAbs().rowwise().sum();
  } else if (is_dense_complex()) {
    row_abs = dense_complex().cwiseAbs().rowwise().sum();
  } else {
    for (int k = 0; k < sparse().outerSize(); ++k)
      for (SparseReal::InnerIterator it(sparse(), k); it; ++it)
        row_abs[it.row()] += std::abs(it.value());
  }
  return dim_ == 0 ? 0.0 : row_abs.maxCoeff();
}

void HermitianOperator::check_hermitian() const {
  double defect = 0.0;
  if (is_dense_real()) {
    defect = linalg::hermiticity_defect(dense_real());
  } else if (is_dense_complex()) {
    defect = linalg::hermiticity_defect(dense_complex());
  } else {
    SparseReal d = SparseReal(sparse().transpose()) - sparse();
    for (int k = 0; k < d.outerSize(); ++k)
      for (SparseReal::InnerIterator it(d, k); it; ++it)
        defect = std::max(defect, std::abs(it.value()));
  }
  const double scale = std::max(1.0, frobenius_norm());
  if (defect > kHermitianTol * scale)
    throw std::invalid_argument("HermitianOperator '" + label_ +
                                "': hermiticity defect " + std::to_string(defect));
}

// ---------------------------------------------------------------- helpers

double ring_distance(int i, int j, int n) {
  int d = std::abs(i - j);
  return static_cast<double>(std::min(d, n - d));
}

double kac_factor(int n, double alpha) {
  require(n >= 2, "kac_factor: N must be >= 2");
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) sum += std::pow(ring_distance(i, j, n), -alpha);
  return sum / (n - 1);
}

namespace {

// generic term-based assembly in the reduced basis: each term maps a
// configuration to one other configuration with a real coefficient
struct Term {
  uint32_t flip_mask;  // bits toggled by the term
  double coeff;
};

// matrix element between symmetrized states: applying a term to column
// representative r gives a configuration u; the entry picked up at
// row(u) is coeff * norm(col) / norm(row)
HermitianOperator assemble(const ReducedBasis& basis,
                           const std::vector<Term>& offdiag,
                           const std::function<double(uint32_t)>& diagonal,
                           const std::string& label, int dense_threshold) {
  const int dim = basis.dimension();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(dim) * (offdiag.size() + 1));
  for (int col = 0; col < dim; ++col) {
    const uint32_t r = basis.rep_bits(col);
    const double d = diagonal(r);
    if (d != 0.0) trip.emplace_back(col, col, d);
    for (const Term& t : offdiag) {
      const uint32_t u = r ^ t.flip_mask;
      const int row = basis.locate(u);
      if (row < 0)
        throw std::invalid_argument(
            label + ": term leaves the " + basis.tag() + " sector");
      trip.emplace_back(row, col,
                        t.coeff * basis.normalization(col) /
                            basis.normalization(row));
    }
  }
  Eigen::SparseMatrix<double> m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  if (dim <= dense_threshold)
    return {MatrixXd(m), basis.tag(), label};
  return {std::move(m), basis.tag(), label};
}

double sz_sum(uint32_t bits, int n) {
  // sum of sigma^z eigenvalues: +1 per up bit, -1 per down
  return 2.0 * __builtin_popcount(bits) - n;
}

}  // namespace

// ---------------------------------------------------------------- builders

HermitianOperator build_tfim(const ReducedBasis& basis,
                             const ModelParameters& params,
                             int dense_threshold) {
  require(params.n_sites == basis.n_sites(), "build_tfim: N mismatch");
  require(params.alpha >= 0.0, "build_tfim: alpha must be >= 0");
  const int n = basis.n_sites();
  const double kac = kac_factor(n, params.alpha);
  std::vector<Term> terms;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v =
          params.j / kac * std::pow(ring_distance(i, j, n), -params.alpha);
      terms.push_back({(1u << i) | (1u << j), -v});
    }
  const double h = params.h;
  return assemble(
      basis, terms, [n, h](uint32_t bits) { return h * sz_sum(bits, n); },
      "H_tfim", dense_threshold);
}

HermitianOperator build_perturbed(const ReducedBasis& basis,
                                  const ModelParameters& params,
                                  int dense_threshold) {
  require(params.n_sites == basis.n_sites(), "build_perturbed: N mismatch");
  if (params.epsilon != 0.0 && basis.parity_sector() != ParitySector::Both)
    throw std::invalid_argument(
        "build_perturbed: eps != 0 requires both parity blocks");
  if (params.epsilon == 0.0) return build_tfim(basis, params, dense_threshold);
  const int n = basis.n_sites();
  const double kac = kac_factor(n, params.alpha);
  std::vector<Term> terms;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v =
          params.j / kac * std::pow(ring_distance(i, j, n), -params.alpha);
      terms.push_back({(1u << i) | (1u << j), -v});
    }
  for (int i = 0; i < n; ++i) terms.push_back({1u << i, params.epsilon / 2.0});
  const double h = params.h;
  return assemble(
      basis, terms, [n, h](uint32_t bits) { return h * sz_sum(bits, n); },
      "H_eps", dense_threshold);
}

HermitianOperator build_magnetization(const ReducedBasis& basis,
                                      int dense_threshold) {
  std::vector<Term> terms;
  for (int i = 0; i < basis.n_sites(); ++i) terms.push_back({1u << i, 1.0});
  return assemble(
      basis, terms, [](uint32_t) { return 0.0; }, "M", dense_threshold);
}

HermitianOperator build_scaled_m(const ReducedBasis& basis,
                                 int dense_threshold) {
  const double inv_n = 1.0 / basis.n_sites();
  std::vector<Term> terms;
  for (int i = 0; i < basis.n_sites(); ++i) terms.push_back({1u << i, inv_n});
  return assemble(
      basis, terms, [](uint32_t) { return 0.0; }, "m", dense_threshold);
}

HermitianOperator build_parity(const ReducedBasis& basis) {
  const int dim = basis.dimension();
  Eigen::SparseMatrix<double> m(dim, dim);
  m.reserve(Eigen::VectorXi::Constant(dim, 1));
  for (int i = 0; i < dim; ++i)
    m.insert(i, i) = static_cast<double>(basis.parity(i));
  m.makeCompressed();
  return {std::move(m), basis.tag(), "Pi"};
}

HermitianOperator sign_star_from_spectrum(const VectorXd& values,
                                          const MatrixXd& vectors,
                                          const std::string& basis_tag,
                                          double zero_tol_rel) {
  const int n = static_cast<int>(values.size());
  require(vectors.rows() == n && vectors.cols() == n,
          "sign_star_from_spectrum: shape mismatch");
  const double scale = values.cwiseAbs().maxCoeff();
  const double tol = zero_tol_rel * scale;
  // split eigenvector columns by sign; C = V+ V+^T - V- V-^T
  int n_pos = 0, n_neg = 0;
  for (int i = 0; i < n; ++i) {
    if (values[i] > tol) ++n_pos;
    else if (values[i] < -tol) ++n_neg;
  }
  MatrixXd c = MatrixXd::Zero(n, n);
  // eigenvalues ascending: negatives first, positives last
  if (n_pos > 0)
    c.selfadjointView<Eigen::Lower>().rankUpdate(vectors.rightCols(n_pos), 1.0);
  if (n_neg > 0)
    c.selfadjointView<Eigen::Lower>().rankUpdate(vectors.leftCols(n_neg), -1.0);
  c.triangularView<Eigen::StrictlyUpper>() =
      c.triangularView<Eigen::StrictlyLower>().transpose();
  return {std::move(c), basis_tag, "sign*"};
}

HermitianOperator sign_star(const HermitianOperator& a, double zero_tol_rel) {
  const int n = a.dim();
  if (a.is_real()) {
    linalg::SymEigResult eig = linalg::sym_eig(a.to_dense_real());
    return sign_star_from_spectrum(eig.values, eig.vectors, a.basis_tag(),
                                   zero_tol_rel);
  }
  linalg::HermEigResult eig = linalg::herm_eig(a.to_dense_complex());
  const double scale = eig.values.cwiseAbs().maxCoeff();
  const double tol = zero_tol_rel * scale;
  VectorXd s(n);
  for (int i = 0; i < n; ++i)
    s[i] = eig.values[i] > tol ? 1.0 : (eig.values[i] < -tol ? -1.0 : 0.0);
  MatrixXcd c = eig.vectors * s.asDiagonal() * eig.vectors.adjoint();
  c = (c + c.adjoint().eval()) / 2.0;
  return {std::move(c), a.basis_tag(), "sign*(" + a.label() + ")"};
}

HermitianOperator build_K(const HermitianOperator& c,
                          const HermitianOperator& pi) {
  require(c.basis_tag() == pi.basis_tag(), "build_K: basis mismatch");
  const cplx half_i(0.0, 0.5);
  MatrixXcd cm = c.to_dense_complex();
  MatrixXcd pm = pi.to_dense_complex();
  MatrixXcd k = half_i * (cm * pm - pm * cm);
  k = (k + k.adjoint().eval()) / 2.0;
  return {std::move(k), c.basis_tag(), "K"};
}

XPolarizedPair x_polarized_states(const ReducedBasis& basis) {
  const int n = basis.n_sites();
  const int dim = basis.dimension();
  const double scale = std::pow(2.0, -0.5 * n);
  XPolarizedPair out;
  out.plus.resize(dim);
  out.minus.resize(dim);
  for (int i = 0; i < dim; ++i) {
    const double amp = basis.normalization(i) * scale;
    out.plus[i] = amp;
    const int n_down = n - __builtin_popcount(basis.rep_bits(i));
    out.minus[i] = (n_down % 2 == 0) ? amp : -amp;
  }
  return out;
}

HermitianOperator build_W(const ReducedBasis& basis) {
  XPolarizedPair x = x_polarized_states(basis);
  const cplx i_unit(0.0, 1.0);
  MatrixXcd w = i_unit * (x.plus.cast<cplx>() * x.minus.transpose().cast<cplx>() -
                          x.minus.cast<cplx>() * x.plus.transpose().cast<cplx>());
  return {std::move(w), basis.tag(), "W"};
}

// ----------------------------------------------------- fully connected

std::string dicke_tag(int n_sites) {
  return "dicke:N=" + std::to_string(n_sites);
}

namespace {

MatrixXd dicke_jx(int n) {
  const double j = n / 2.0;
  const int dim = n + 1;
  MatrixXd jx = MatrixXd::Zero(dim, dim);
  // row/col p corresponds to m_z = -j + p
  for (int p = 0; p + 1 < dim; ++p) {
    const double m = -j + p;
    const double amp = 0.5 * std::sqrt(j * (j + 1) - m * (m + 1));
    jx(p + 1, p) = amp;
    jx(p, p + 1) = amp;
  }
  return jx;
}

}  // namespace

HermitianOperator build_fully_connected(int n_sites, double h) {
  require(n_sites >= 2, "build_fully_connected: N must be >= 2");
  const int dim = n_sites + 1;
  const double j = n_sites / 2.0;
  MatrixXd m = 2.0 * dicke_jx(n_sites);
  MatrixXd ham = -(m * m) / n_sites;
  for (int p = 0; p < dim; ++p) ham(p, p) += 2.0 * h * (-j + p);
  return {std::move(ham), dicke_tag(n_sites), "H_fc"};
}

HermitianOperator dicke_magnetization(int n_sites) {
  MatrixXd m = 2.0 * dicke_jx(n_sites);
  return {std::move(m), dicke_tag(n_sites), "M"};
}

HermitianOperator dicke_parity(int n_sites) {
  const int dim = n_sites + 1;
  MatrixXd pi = MatrixXd::Zero(dim, dim);
  // m_z = -j + p leaves (N/2 - m_z) = N - p down-quanta
  for (int p = 0; p < dim; ++p)
    pi(p, p) = ((n_sites - p) % 2 == 0) ? 1.0 : -1.0;
  return {std::move(pi), dicke_tag(n_sites), "Pi"};
}

XPolarizedPair dicke_x_polarized(int n_sites) {
  linalg::SymEigResult eig = linalg::sym_eig(dicke_jx(n_sites));
  const int dim = n_sites + 1;
  XPolarizedPair out;
  out.plus = eig.vectors.col(dim - 1);   // m_x = +j
  out.minus = eig.vectors.col(0);        // m_x = -j
  // deterministic gauge: first z-ladder component positive (it is
  // nonzero for both edge states of Jx)
  if (out.plus[0] < 0) out.plus = -out.plus;
  if (out.minus[0] < 0) out.minus = -out.minus;
  return out;
}

}  // namespace sbq
