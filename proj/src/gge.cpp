#include "sbq/gge.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "sbq/linalg.hpp"

namespace sbq {

using linalg::require;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

GgeParameters solve_multipliers(const ChargeTargets& targets, double delta) {
  require(delta > 0.0 && delta < 1.0, "solve_multipliers: delta out of (0,1)");
  const Vector3d v(targets.pi_target, targets.c_target, targets.k_target);
  const double n = v.norm();
  require(n <= 1.0 + 1e-9, "solve_multipliers: infeasible targets, |v| > 1");
  GgeParameters p;
  p.delta = delta;
  if (n == 0.0) return p;
  const double r = std::atanh(std::min(n, 1.0 - delta));
  const Vector3d lambda = -(r / n) * v;
  p.lambda_pi = lambda[0];
  p.lambda_c = lambda[1];
  p.lambda_k = lambda[2];
  return p;
}

Vector3d charge_forward_map(const GgeParameters& params) {
  const Vector3d lambda(params.lambda_pi, params.lambda_c, params.lambda_k);
  const double r = lambda.norm();
  if (r == 0.0) return Vector3d::Zero();
  return -std::tanh(r) / r * lambda;
}

GgeParameters solve_multipliers_newton(const ChargeTargets& targets,
                                       double delta, int max_iterations) {
  GgeParameters p = solve_multipliers(targets, delta);
  Vector3d v(targets.pi_target, targets.c_target, targets.k_target);
  const double n = v.norm();
  if (n == 0.0) return p;
  if (n > 1.0 - delta) v *= (1.0 - delta) / n;  // same cap as the closed form

  Vector3d lambda(p.lambda_pi, p.lambda_c, p.lambda_k);
  auto residual = [&](const Vector3d& l) -> Vector3d {
    const double r = l.norm();
    const double t = r == 0.0 ? 1.0 : std::tanh(r) / r;
    return -t * l - v;
  };
  Vector3d f = residual(lambda);
  for (int it = 0; it < max_iterations && f.norm() > 1e-14; ++it) {
    const double r = lambda.norm();
    const double t = r == 0.0 ? 1.0 : std::tanh(r) / r;
    const double sech2 = 1.0 - std::tanh(r) * std::tanh(r);
    const double tp_over_r =
        r == 0.0 ? -2.0 / 3.0 : (r * sech2 - std::tanh(r)) / (r * r * r);
    const Eigen::Matrix3d jac = -t * Eigen::Matrix3d::Identity() -
                                tp_over_r * (lambda * lambda.transpose());
    const Vector3d step = jac.fullPivLu().solve(-f);
    double damp = 1.0;
    Vector3d next = lambda + step;
    Vector3d fn = residual(next);
    while (fn.norm() > f.norm() && damp > 1e-8) {
      damp *= 0.5;
      next = lambda + damp * step;
      fn = residual(next);
    }
    lambda = next;
    f = fn;
  }
  p.lambda_pi = lambda[0];
  p.lambda_c = lambda[1];
  p.lambda_k = lambda[2];
  return p;
}

namespace {

double log_z_of(const VectorXd& r) {
  const double m = r.minCoeff();
  return -m + std::log((-(r.array() - m)).exp().sum());
}

VectorXd boltzmann_weights(const VectorXd& r, double* log_z) {
  const double m = r.minCoeff();
  VectorXd w = (-(r.array() - m)).exp();
  const double z = w.sum();
  if (log_z) *log_z = -m + std::log(z);
  w /= z;
  return w;
}

// a += coeff * op, handling every storage variant
void add_scaled(MatrixXd& a, const HermitianOperator& op, double coeff) {
  if (coeff == 0.0) return;
  if (op.is_sparse()) {
    const auto& s = op.sparse();
    for (int k = 0; k < s.outerSize(); ++k)
      for (HermitianOperator::SparseReal::InnerIterator it(s, k); it; ++it)
        a(it.row(), it.col()) += coeff * it.value();
  } else {
    a += coeff * op.to_dense_real();
  }
}

// real symmetric exponent beta*H + c_coeff*C + pi_coeff*Pi
MatrixXd build_exponent(const HermitianOperator& h, const HermitianOperator* c,
                        const HermitianOperator* pi, double beta, double c_coeff,
                        double pi_coeff) {
  MatrixXd a;
  if (c != nullptr && c_coeff != 0.0) {
    a = c->to_dense_real();
    a *= c_coeff;
  } else {
    a = MatrixXd::Zero(h.dim(), h.dim());
  }
  add_scaled(a, h, beta);
  if (pi != nullptr) add_scaled(a, *pi, pi_coeff);
  return a;
}

double apply_dot(const HermitianOperator& op, const VectorXd& q, VectorXd& buf) {
  if (op.is_sparse())
    buf.noalias() = op.sparse() * q;
  else
    buf.noalias() = op.dense_real() * q;
  return q.dot(buf);
}

struct RootResult {
  double beta = 0.0;
  double f = 0.0;
  int evals = 0;
};

RootResult find_beta_root(const std::function<double(double)>& f, double tol,
                          double beta_max, int max_evals, double hint) {
  int evals = 0;
  auto eval = [&](double b) {
    require(++evals <= max_evals, "fit_beta: evaluation budget exhausted");
    return f(b);
  };

  double lo = 0.0, flo = 0.0;
  double hi = -1.0, fhi = 0.0;
  if (hint > 0.0) {
    lo = 0.5 * hint;
    flo = eval(lo);
    while (flo <= -tol && lo > 0.0) {
      hi = lo;
      fhi = flo;
      lo = lo < 1e-8 ? 0.0 : 0.25 * lo;
      flo = eval(lo);
    }
  } else {
    flo = eval(0.0);
  }
  require(flo > -tol, "fit_beta: energy target above the beta=0 ensemble energy");
  if (std::abs(flo) <= tol) return {lo, flo, evals};
  if (hi < 0.0) {
    hi = std::max(2.0 * lo, hint > 0.0 ? hint : 1.0);
    fhi = eval(hi);
    while (fhi > 0.0) {
      if (fhi > flo + tol)
        throw std::logic_error("fit_beta: ensemble energy not monotone in beta");
      lo = hi;
      flo = fhi;
      hi *= 2.0;
      require(hi <= beta_max,
              "fit_beta: energy target below the range reachable by beta <= "
              "beta_max");
      fhi = eval(hi);
    }
  }
  if (std::abs(fhi) <= tol) return {hi, fhi, evals};

  double b_prev = lo, f_prev = flo, b_cur = hi, f_cur = fhi;
  while (true) {
    double b_new;
    if (std::abs(f_cur - f_prev) > 0.0) {
      b_new = b_cur - f_cur * (b_cur - b_prev) / (f_cur - f_prev);
      if (!(b_new > lo && b_new < hi)) b_new = 0.5 * (lo + hi);
    } else {
      b_new = 0.5 * (lo + hi);
    }
    const double f_new = eval(b_new);
    if (std::abs(f_new) <= tol || hi - lo < 1e-10 * std::max(1.0, hi))
      return {b_new, f_new, evals};
    if (f_new > 0.0) {
      if (f_new > flo + tol)
        throw std::logic_error("fit_beta: ensemble energy not monotone in beta");
      lo = b_new;
      flo = f_new;
    } else {
      if (f_new < fhi - tol)
        throw std::logic_error("fit_beta: ensemble energy not monotone in beta");
      hi = b_new;
      fhi = f_new;
    }
    b_prev = b_cur;
    f_prev = f_cur;
    b_cur = b_new;
    f_cur = f_new;
  }
}

// Tr[rho(beta) H] for the real exponent; exact (eigenvector) evaluation below
// the cutoff, central-difference d(ln Z)/d(-beta) above it
double ensemble_energy(const HermitianOperator& h, const HermitianOperator* c,
                       const HermitianOperator* pi, double beta, double c_coeff,
                       double pi_coeff, const BetaFitOptions& opts) {
  if (h.dim() <= opts.iteration_dense_cutoff) {
    linalg::SymEigResult eig =
        linalg::sym_eig(build_exponent(h, c, pi, beta, c_coeff, pi_coeff));
    const VectorXd w = boltzmann_weights(eig.values, nullptr);
    VectorXd buf(h.dim());
    double e = 0.0;
    for (int i = 0; i < h.dim(); ++i)
      e += w[i] * apply_dot(h, eig.vectors.col(i), buf);
    return e;
  }
  const double d = opts.fd_step * std::max(1.0, std::abs(beta));
  auto g = [&](double b) {
    return log_z_of(
        linalg::sym_eig(build_exponent(h, c, pi, b, c_coeff, pi_coeff), false)
            .values);
  };
  return (g(beta - d) - g(beta + d)) / (2.0 * d);
}

BetaFitResult fit_beta_core(const HermitianOperator& h,
                            const HermitianOperator* c,
                            const HermitianOperator* pi, double c_coeff,
                            double pi_coeff, double energy_target,
                            const BetaFitOptions& opts) {
  const double tol =
      opts.energy_tolerance_rel * std::max(1.0, h.frobenius_norm());
  auto f = [&](double beta) {
    return ensemble_energy(h, c, pi, beta, c_coeff, pi_coeff, opts) -
           energy_target;
  };
  RootResult r = find_beta_root(f, tol, opts.beta_max, opts.max_evaluations,
                                opts.beta_hint);
  BetaFitResult out;
  out.beta = r.beta;
  out.residual = r.f;
  out.energy = energy_target + r.f;
  out.evaluations = r.evals;
  return out;
}

}  // namespace

BetaFitResult fit_beta(const HermitianOperator& h, const HermitianOperator& c,
                       const HermitianOperator& pi, const GgeParameters& params,
                       double energy_target, const BetaFitOptions& opts) {
  require(h.basis_tag() == c.basis_tag() && h.basis_tag() == pi.basis_tag(),
          "fit_beta: operators live in different bases");
  const double mu = std::hypot(params.lambda_c, params.lambda_k);
  // lambda_c C + lambda_k K rotates to mu C, keeping the exponent real
  const double c_coeff = params.lambda_k != 0.0 ? mu : params.lambda_c;
  return fit_beta_core(h, &c, &pi, c_coeff, params.lambda_pi, energy_target,
                       opts);
}

PerturbedFit fit_perturbed(const HermitianOperator& h_eps,
                           const HermitianOperator& c, double c_measured,
                           double energy_target, const BetaFitOptions& opts) {
  require(std::abs(c_measured) < 1.0, "fit_perturbed: |<C>| must be < 1");
  const double lambda_c = -std::atanh(c_measured);
  BetaFitResult b =
      fit_beta_core(h_eps, &c, nullptr, lambda_c, 0.0, energy_target, opts);
  PerturbedFit out;
  out.beta = b.beta;
  out.lambda_c = lambda_c;
  out.energy = b.energy;
  out.residual = b.residual;
  out.evaluations = b.evaluations;
  return out;
}

double canonical_beta(const VectorXd& eigenvalues, double energy_target,
                      double beta_max) {
  auto energy = [&](double beta) {
    const VectorXd w = boltzmann_weights(beta * eigenvalues, nullptr);
    return w.dot(eigenvalues);
  };
  if (energy(0.0) <= energy_target) return 0.0;
  if (energy(beta_max) >= energy_target) return beta_max;
  double lo = 0.0, hi = beta_max;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (energy(mid) > energy_target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

GgeDensity GgeDensity::build(const HermitianOperator& h,
                             const HermitianOperator& c,
                             const HermitianOperator& k,
                             const HermitianOperator& pi,
                             const GgeParameters& params) {
  require(h.basis_tag() == c.basis_tag() && h.basis_tag() == k.basis_tag() &&
              h.basis_tag() == pi.basis_tag(),
          "gge_density: operators live in different bases");
  MatrixXcd r = params.beta * h.to_dense_complex();
  r += params.lambda_c * c.to_dense_complex();
  r += params.lambda_k * k.to_dense_complex();
  r += params.lambda_pi * pi.to_dense_complex();
  const double defect = linalg::hermiticity_defect(r);
  require(defect < 1e-10 * std::max(1.0, r.norm()),
          "gge_density: exponent is not Hermitian");
  linalg::HermEigResult eig = linalg::herm_eig(std::move(r));
  GgeDensity rho;
  const VectorXd w = boltzmann_weights(eig.values, &rho.log_z_);
  rho.rho_ = eig.vectors * w.asDiagonal() * eig.vectors.adjoint();
  rho.basis_tag_ = h.basis_tag();
  return rho;
}

double GgeDensity::expectation(const HermitianOperator& o) const {
  require(o.basis_tag() == basis_tag_, "gge expectation: basis mismatch");
  const MatrixXcd od = o.to_dense_complex();
  const std::complex<double> tr = rho_.cwiseProduct(od.transpose()).sum();
  require(std::abs(tr.imag()) < 1e-12 * std::max(1.0, std::abs(tr.real())),
          "gge expectation: non-negligible imaginary residue");
  return tr.real();
}

GgePrediction gge_predict(const HermitianOperator& h, const HermitianOperator& c,
                          const HermitianOperator& pi, const HermitianOperator& m,
                          const XPolarizedPair& xpair,
                          const GgeParameters& params, bool h_parity_pure,
                          const BetaFitOptions& opts) {
  require(h.basis_tag() == c.basis_tag() && h.basis_tag() == pi.basis_tag() &&
              h.basis_tag() == m.basis_tag(),
          "gge_predict: operators live in different bases");
  require(h_parity_pure || params.lambda_k == 0.0,
          "gge_predict: the K rotation needs a parity-conserving H");
  const double mu = std::hypot(params.lambda_c, params.lambda_k);
  const bool rotated = params.lambda_k != 0.0;
  const double c_coeff = rotated ? mu : params.lambda_c;

  GgePrediction out;
  out.params = params;

  MatrixXd a =
      build_exponent(h, &c, &pi, params.beta, c_coeff, params.lambda_pi);
  VectorXd values;
  MatrixXd vectors;
  if (h.dim() > opts.in_place_cutoff) {
    values = linalg::sym_eig_inplace(a);
    vectors = std::move(a);
  } else {
    linalg::SymEigResult eig = linalg::sym_eig(std::move(a));
    values = std::move(eig.values);
    vectors = std::move(eig.vectors);
  }
  const VectorXd w = boltzmann_weights(values, &out.log_z);

  const int dim = h.dim();
  VectorXd buf(dim);
  double tr_h = 0.0, tr_pi = 0.0, tr_m = 0.0;
  for (int i = 0; i < dim; ++i) {
    const auto q = vectors.col(i);
    tr_h += w[i] * apply_dot(h, q, buf);
    tr_pi += w[i] * apply_dot(pi, q, buf);
    tr_m += w[i] * apply_dot(m, q, buf);
  }
  out.energy = tr_h;
  out.pi = tr_pi;

  // Tr[rho' R] = beta Tr[rho' H] + c_coeff Tr[rho' C] + lpi Tr[rho' Pi]
  double tr_c = 0.0;
  if (c_coeff != 0.0) {
    const double tr_r = w.dot(values);
    tr_c = (tr_r - params.beta * tr_h - params.lambda_pi * tr_pi) / c_coeff;
  } else if (!h_parity_pure) {
    for (int i = 0; i < dim; ++i) tr_c += w[i] * apply_dot(c, vectors.col(i), buf);
  }  // parity-pure exponent with no charge term: Tr[rho' C] = 0 exactly

  // s, a: even/odd-parity halves of the fully x-polarized pair
  const VectorXd s = (xpair.plus + xpair.minus) / std::sqrt(2.0);
  const VectorXd anti = (xpair.plus - xpair.minus) / std::sqrt(2.0);
  const VectorXd vs = vectors.transpose() * s;
  const VectorXd va = vectors.transpose() * anti;
  const double s_rho_a = (w.array() * vs.array() * va.array()).sum();

  if (rotated) {
    out.c = params.lambda_c / mu * tr_c;
    out.k = params.lambda_k / mu * tr_c;
    out.m = params.lambda_c / mu * tr_m;
    out.w = params.lambda_k / mu * 2.0 * s_rho_a;
  } else {
    out.c = tr_c;
    out.k = 0.0;  // Tr[rho K] vanishes for a real symmetric rho
    out.m = tr_m;
    out.w = 0.0;  // same for W
  }
  return out;
}

}  // namespace sbq
