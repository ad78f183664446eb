#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace sbq::linalg {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

struct SymEigResult {
  VectorXd values;   // ascending
  MatrixXd vectors;  // empty when compute_vectors = false
};

struct HermEigResult {
  VectorXd values;
  MatrixXcd vectors;
};

// Dense real-symmetric eigensolve (LAPACK dsyevr). The input matrix is
// taken by value and destroyed; callers that need it afterwards must copy.
SymEigResult sym_eig(MatrixXd a, bool compute_vectors = true);

// In-place variant: eigenvectors overwrite `a` (LAPACK dsyev). Slower than
// sym_eig but needs no second n*n buffer; used for the large GGE solves.
VectorXd sym_eig_inplace(MatrixXd& a);

HermEigResult herm_eig(MatrixXcd a, bool compute_vectors = true);

// max |a - a^dagger| entry
double hermiticity_defect(const MatrixXcd& a);
double hermiticity_defect(const MatrixXd& a);

// phase = (e * t) mod 2pi computed in double-double arithmetic, so the
// result keeps ~1e-15 rad accuracy even for |e*t| ~ 1e17 where a plain
// double product has lost the entire fractional part.
double phase_mod_two_pi(double e, double t);

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace sbq::linalg
