#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <variant>

#include "sbq/basis.hpp"

namespace sbq {

struct ModelParameters {
  int n_sites = 0;
  double alpha = 0.0;    // power-law exponent, >= 0
  double j = 1.0;        // coupling strength
  double h = 0.0;        // transverse field
  double epsilon = 0.0;  // symmetry-breaking strength
  // reference values quoted from the literature; inputs, never computed
  std::optional<double> h_c;
  std::optional<double> t_c;
};

// Complex Hermitian matrix tagged with the basis it lives in. Most
// operators of the chain are real symmetric in the z-configuration basis,
// so real (dense or sparse) storage is kept whenever possible; the large
// sector sizes make the complex-dense fallback unaffordable there.
class HermitianOperator {
 public:
  using SparseReal = Eigen::SparseMatrix<double>;

  HermitianOperator(Eigen::MatrixXd m, std::string basis_tag, std::string label);
  HermitianOperator(Eigen::MatrixXcd m, std::string basis_tag, std::string label);
  HermitianOperator(SparseReal m, std::string basis_tag, std::string label);

  int dim() const { return dim_; }
  const std::string& basis_tag() const { return basis_tag_; }
  const std::string& label() const { return label_; }

  bool is_dense_real() const;
  bool is_dense_complex() const;
  bool is_sparse() const;
  bool is_real() const { return !is_dense_complex(); }

  const Eigen::MatrixXd& dense_real() const;
  const Eigen::MatrixXcd& dense_complex() const;
  const SparseReal& sparse() const;

  Eigen::MatrixXcd to_dense_complex() const;
  Eigen::MatrixXd to_dense_real() const;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  // <v|A|v>; imaginary residue must be negligible for Hermitian A
  double expectation(const Eigen::VectorXcd& v) const;

  double frobenius_norm() const;
  // cheap upper bound on the spectral norm (Gershgorin)
  double spectral_bound() const;

 private:
  void check_hermitian() const;

  std::variant<Eigen::MatrixXd, Eigen::MatrixXcd, SparseReal> m_;
  std::string basis_tag_;
  std::string label_;
  int dim_ = 0;
};

double ring_distance(int i, int j, int n);
double kac_factor(int n, double alpha);

// default per-entry Hermiticity budget used by the builders
inline constexpr double kHermitianTol = 1e-13;
// relative zero-eigenvalue tolerance of sign*
inline constexpr double kSignStarZeroTol = 1e-9;
// relative gap below which an opposite-parity pair counts as a doublet
inline constexpr double kDoubletTol = 1e-8;

// H = -sum_{i<j} V_ij sx_i sx_j + h sum_i sz_i, V_ij = (J/Kac) d_ij^-alpha,
// periodic chain. Dense below `dense_threshold` rows, sparse above.
HermitianOperator build_tfim(const ReducedBasis& basis,
                             const ModelParameters& params,
                             int dense_threshold = 4096);
// H_eps = H_tfim + (eps/2) sum_i sx_i; requires both parity blocks
HermitianOperator build_perturbed(const ReducedBasis& basis,
                                  const ModelParameters& params,
                                  int dense_threshold = 4096);
HermitianOperator build_magnetization(const ReducedBasis& basis,
                                      int dense_threshold = 4096);
HermitianOperator build_scaled_m(const ReducedBasis& basis,
                                 int dense_threshold = 4096);
HermitianOperator build_parity(const ReducedBasis& basis);

// spectral sign with sign(0) := 0; eigenvalues below
// zero_tol_rel * max|eig| are treated as zero
HermitianOperator sign_star(const HermitianOperator& a,
                            double zero_tol_rel = kSignStarZeroTol);

// same, from an eigendecomposition already at hand (saves the dominant
// dense solve when the caller keeps the spectrum for other uses)
HermitianOperator sign_star_from_spectrum(const Eigen::VectorXd& values,
                                          const Eigen::MatrixXd& vectors,
                                          const std::string& basis_tag,
                                          double zero_tol_rel = kSignStarZeroTol);

// K = (i/2)[C, Pi]
HermitianOperator build_K(const HermitianOperator& c,
                          const HermitianOperator& pi);

// W = i|N><-N| - i|-N><N| with |+-N> the fully x-polarized product states
HermitianOperator build_W(const ReducedBasis& basis);

// reduced-sector coefficient vectors of |+N>_x and |-N>_x (both real)
struct XPolarizedPair {
  Eigen::VectorXd plus;   // |+N>
  Eigen::VectorXd minus;  // |-N>
};
XPolarizedPair x_polarized_states(const ReducedBasis& basis);

// ---- fully-connected model on the maximal collective-spin (Dicke) sector

std::string dicke_tag(int n_sites);

// H = -(1/N)(2 Jx)^2 + 2 h Jz on the (N+1)-dimensional j=N/2 ladder,
// self-term of the squared magnetization retained
HermitianOperator build_fully_connected(int n_sites, double h);
HermitianOperator dicke_magnetization(int n_sites);  // 2 Jx
HermitianOperator dicke_parity(int n_sites);
XPolarizedPair dicke_x_polarized(int n_sites);

}  // namespace sbq
