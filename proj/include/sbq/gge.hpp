#pragma once

#include <Eigen/Dense>
#include <string>

#include "sbq/operators.hpp"

namespace sbq {

// cap applied to |v| before inverting tanh: pure doublet states sit exactly
// on the unit sphere where the multiplier magnitude diverges
inline constexpr double kSaturationDelta = 2.6e-6;

struct GgeParameters {
  double beta = 0.0;
  double lambda_c = 0.0;
  double lambda_k = 0.0;
  double lambda_pi = 0.0;
  double delta = kSaturationDelta;
};

struct ChargeTargets {
  double pi_target = 0.0;
  double c_target = 0.0;
  double k_target = 0.0;
  double energy_target = 0.0;
};

// closed-form inversion of the doublet-block system v = -lambda tanh(r)/r:
// r = atanh(min(|v|, 1-delta)), lambda = -(r/|v|) v. beta is left at 0.
GgeParameters solve_multipliers(const ChargeTargets& targets,
                                double delta = kSaturationDelta);

// damped-Newton refinement of the same system, seeded by the closed form;
// kept as the hook for non-degenerate-block generalizations
GgeParameters solve_multipliers_newton(const ChargeTargets& targets,
                                       double delta = kSaturationDelta,
                                       int max_iterations = 50);

// forward map (pi, c, k) = -lambda tanh(|lambda|)/|lambda|
Eigen::Vector3d charge_forward_map(const GgeParameters& params);

// rho = e^{-R}/Z, R = beta H + lambda_c C + lambda_k K + lambda_pi Pi,
// materialized densely; small dimensions only
class GgeDensity {
 public:
  static GgeDensity build(const HermitianOperator& h, const HermitianOperator& c,
                          const HermitianOperator& k, const HermitianOperator& pi,
                          const GgeParameters& params);

  const Eigen::MatrixXcd& rho() const { return rho_; }
  double log_z() const { return log_z_; }
  const std::string& basis_tag() const { return basis_tag_; }
  double expectation(const HermitianOperator& o) const;

 private:
  Eigen::MatrixXcd rho_;
  double log_z_ = 0.0;
  std::string basis_tag_;
};

struct BetaFitOptions {
  double beta_max = 50.0;
  // |Tr[rho H] - target| < energy_tolerance_rel * max(1, ||H||_F)
  double energy_tolerance_rel = 1e-8;
  int max_evaluations = 60;
  // above this dimension the root find switches to eigenvalue-only solves
  // with a central-difference free-energy derivative, and the final
  // eigenvector solve runs in place to halve the memory footprint
  int iteration_dense_cutoff = 3000;
  int in_place_cutoff = 8000;
  double fd_step = 1e-4;  // relative finite-difference step in beta
  double beta_hint = 0.0;  // > 0: start the bracket around this value
};

struct BetaFitResult {
  double beta = 0.0;
  double energy = 0.0;    // Tr[rho(beta) H] at the returned beta
  double residual = 0.0;  // energy - target
  int evaluations = 0;
};

// bracketed root find on f(beta) = Tr[rho(beta) H] - energy_target with the
// lambda_* of `params` held fixed. The K term never enters explicitly: a
// diagonal phase rotation on the odd-parity block maps
// lambda_c C + lambda_k K to sqrt(lambda_c^2 + lambda_k^2) C exactly, so the
// exponent stays real symmetric. Requires a parity-pure H when lambda_k != 0.
BetaFitResult fit_beta(const HermitianOperator& h, const HermitianOperator& c,
                       const HermitianOperator& pi, const GgeParameters& params,
                       double energy_target, const BetaFitOptions& opts = {});

struct GgePrediction {
  GgeParameters params;
  double log_z = 0.0;
  double energy = 0.0;
  double c = 0.0;
  double k = 0.0;
  double pi = 0.0;
  double m = 0.0;
  double w = 0.0;
};

// expectations of the standard observable set under the GGE, computed from
// one real-symmetric eigendecomposition via the same phase rotation.
// `h_parity_pure` declares that H commutes with Pi (true for the unperturbed
// chain, false with a symmetry-breaking field); it gates which identities
// are safe when the C/K multipliers vanish.
GgePrediction gge_predict(const HermitianOperator& h, const HermitianOperator& c,
                          const HermitianOperator& pi, const HermitianOperator& m,
                          const XPolarizedPair& xpair, const GgeParameters& params,
                          bool h_parity_pure = true,
                          const BetaFitOptions& opts = {});

struct PerturbedFit {
  double beta = 0.0;
  double lambda_c = 0.0;
  double energy = 0.0;
  double residual = 0.0;
  int evaluations = 0;
};

// single-charge fit for the symmetry-broken Hamiltonian: lambda_c from
// <C> = -tanh(lambda_c), then beta from the energy target
PerturbedFit fit_perturbed(const HermitianOperator& h_eps,
                           const HermitianOperator& c, double c_measured,
                           double energy_target, const BetaFitOptions& opts = {});

// canonical inverse temperature reproducing `energy_target` on a fixed
// spectrum; cheap warm start for fit_beta brackets
double canonical_beta(const Eigen::VectorXd& eigenvalues, double energy_target,
                      double beta_max = 50.0);

}  // namespace sbq
