#include "sbq/linalg.hpp"

#include <lapacke.h>

#include <cmath>
#include <vector>

namespace sbq::linalg {

SymEigResult sym_eig(MatrixXd a, bool compute_vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  require(a.cols() == n, "sym_eig: matrix must be square");
  SymEigResult r;
  r.values.resize(n);
  if (n == 0) return r;
  lapack_int m = 0;
  std::vector<lapack_int> isuppz(2 * static_cast<size_t>(n));
  if (compute_vectors) {
    r.vectors.resize(n, n);
    lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'A', 'L', n,
                                     a.data(), n, 0, 0, 0, 0, 0, &m,
                                     r.values.data(), r.vectors.data(), n,
                                     isuppz.data());
    require(info == 0, "dsyevr failed, info=" + std::to_string(info));
  } else {
    lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'N', 'A', 'L', n,
                                     a.data(), n, 0, 0, 0, 0, 0, &m,
                                     r.values.data(), nullptr, n,
                                     isuppz.data());
    require(info == 0, "dsyevr failed, info=" + std::to_string(info));
  }
  return r;
}

VectorXd sym_eig_inplace(MatrixXd& a) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  require(a.cols() == n, "sym_eig_inplace: matrix must be square");
  VectorXd w(n);
  if (n == 0) return w;
  lapack_int info =
      LAPACKE_dsyev(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
  require(info == 0, "dsyev failed, info=" + std::to_string(info));
  return w;
}

HermEigResult herm_eig(MatrixXcd a, bool compute_vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  require(a.cols() == n, "herm_eig: matrix must be square");
  HermEigResult r;
  r.values.resize(n);
  if (n == 0) return r;
  lapack_int m = 0;
  std::vector<lapack_int> isuppz(2 * static_cast<size_t>(n));
  auto* ap = reinterpret_cast<lapack_complex_double*>(a.data());
  if (compute_vectors) {
    r.vectors.resize(n, n);
    auto* zp = reinterpret_cast<lapack_complex_double*>(r.vectors.data());
    lapack_int info =
        LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'A', 'L', n, ap, n, 0, 0, 0, 0,
                       0, &m, r.values.data(), zp, n, isuppz.data());
    require(info == 0, "zheevr failed, info=" + std::to_string(info));
  } else {
    lapack_int info =
        LAPACKE_zheevr(LAPACK_COL_MAJOR, 'N', 'A', 'L', n, ap, n, 0, 0, 0, 0,
                       0, &m, r.values.data(), nullptr, n, isuppz.data());
    require(info == 0, "zheevr failed, info=" + std::to_string(info));
  }
  return r;
}

double hermiticity_defect(const MatrixXcd& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double hermiticity_defect(const MatrixXd& a) {
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

namespace {

struct dd {
  double hi, lo;
};

inline dd two_prod(double x, double y) {
  double p = x * y;
  double e = std::fma(x, y, -p);
  return {p, e};
}

inline dd two_sum(double x, double y) {
  double s = x + y;
  double bb = s - x;
  double e = (x - (s - bb)) + (y - bb);
  return {s, e};
}

// 2*pi split into high/low doubles (sum is 2*pi to ~1e-32)
constexpr double TWO_PI_HI = 6.283185307179586476925286766559;
constexpr double TWO_PI_LO = 2.4492935982947063545e-16;

}  // namespace

double phase_mod_two_pi(double e, double t) {
  dd r = two_prod(e, t);
  // Two reduction passes: for |e*t| beyond 2^53 the first k is only an
  // exactly-representable double near the true multiple, leaving a
  // remainder of up to a few hundred; the second pass finishes the job.
  for (int pass = 0; pass < 2; ++pass) {
    double k = std::nearbyint(r.hi / TWO_PI_HI);
    if (k == 0.0) break;
    dd khi = two_prod(k, TWO_PI_HI);
    dd klo = two_prod(k, TWO_PI_LO);
    dd d = two_sum(r.hi, -khi.hi);
    double rest = r.lo - khi.lo - klo.hi - klo.lo + d.lo;
    r = two_sum(d.hi, rest);
  }
  double phase = r.hi + r.lo;
  if (phase >= TWO_PI_HI / 2) phase -= TWO_PI_HI;
  if (phase < -TWO_PI_HI / 2) phase += TWO_PI_HI;
  return phase;
}

}  // namespace sbq::linalg
