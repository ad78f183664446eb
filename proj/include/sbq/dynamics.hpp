#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "sbq/basis.hpp"
#include "sbq/operators.hpp"

namespace sbq {

// [begin, end) index ranges over ascending eigenvalues whose relative
// gaps (w.r.t. the spectral span) stay below rel_tol
std::vector<std::pair<int, int>> degeneracy_clusters(
    const Eigen::VectorXd& eigenvalues, double rel_tol = kDoubletTol);

// Ascending eigenvalues plus orthonormal eigenvectors, stored per
// diagonalization block (one block for a generic operator, one per parity
// block for a parity-pure Hamiltonian in a parity=both basis). Immutable.
class EigenSystem {
 public:
  struct Block {
    int offset = 0;  // first basis row covered by this block
    int rows = 0;
    Eigen::MatrixXd vectors_real;   // exactly one of these is non-empty
    Eigen::MatrixXcd vectors_cplx;
    int parity = 0;  // +-1 for parity blocks, 0 otherwise
  };

  // in_place: real operators only; eigenvectors overwrite the dense copy
  // of h (slower solver, no second n*n buffer — for the largest sectors)
  static EigenSystem diagonalize(const HermitianOperator& h,
                                 bool in_place = false);
  // per-parity-block diagonalization; requires a parity=both basis and a
  // parity-pure operator (no cross-block entries)
  static EigenSystem diagonalize_blocked(const HermitianOperator& h,
                                         const ReducedBasis& basis);

  int dim() const { return static_cast<int>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const std::string& basis_tag() const { return basis_tag_; }
  int parity_of(int i) const;  // 0 when not parity-labeled
  bool is_real() const;
  const std::vector<Block>& blocks() const { return blocks_; }

  Eigen::VectorXcd to_eigenbasis(const Eigen::VectorXcd& psi) const;
  Eigen::VectorXcd from_eigenbasis(const Eigen::VectorXcd& coeff) const;
  Eigen::MatrixXcd to_eigenbasis_batch(const Eigen::MatrixXcd& psis) const;
  Eigen::MatrixXcd from_eigenbasis_batch(const Eigen::MatrixXcd& coeffs) const;
  Eigen::VectorXcd eigenvector(int i) const;

  const std::vector<std::pair<int, int>>& clusters() const { return clusters_; }
  double cluster_tol() const { return cluster_tol_; }

  // test hooks
  double orthonormality_defect() const;
  double reconstruction_defect(const HermitianOperator& h) const;

 private:
  Eigen::VectorXd eigenvalues_;
  std::vector<Block> blocks_;
  // global sorted index -> (block, column)
  std::vector<std::pair<int, int>> where_;
  std::vector<std::pair<int, int>> clusters_;
  double cluster_tol_ = kDoubletTol;
  std::string basis_tag_;

  void finalize(std::vector<Block> blocks,
                std::vector<Eigen::VectorXd> block_values,
                std::string basis_tag);
};

// lowest eigenpair of each parity block; vectors are real (all chain and
// collective Hamiltonians here are real symmetric)
struct Doublet {
  Eigen::VectorXd plus;
  Eigen::VectorXd minus;
  double e_plus = 0.0;
  double e_minus = 0.0;
  std::string basis_tag;
  bool gauged = false;

  double gap() const { return std::abs(e_plus - e_minus); }
};

Doublet lowest_doublet(const EigenSystem& es);

// flips the sign of `minus` if needed so that <plus|C|minus> > 0, the
// convention under which the charge expectations of the prepared
// superposition take their standard form
void gauge_doublet(Doublet& d, const HermitianOperator& c);

// |Psi> = sqrt(p)|E0,+> + e^{i phi} sqrt(1-p)|E0,->
StateVector prepare_superposition(const Doublet& d, double p, double phi);

StateVector evolve(const EigenSystem& es, const StateVector& psi, double t);

// phases applied directly to eigenbasis coefficients (hot path)
Eigen::VectorXcd evolve_coefficients(const Eigen::VectorXd& eigenvalues,
                                     const Eigen::VectorXcd& coeff, double t);

struct RampSchedule {
  double h_start = 0.0;
  double h_end = 0.0;
  double tau_q = 1.0;  // inverse ramp rate: h moves by 1/tau_q per unit time

  double duration() const { return std::abs(h_end - h_start) * tau_q; }
  double field_at(double t) const;
};

struct StepControl {
  double initial_dt = 0.1;
  double tolerance = 1e-8;  // max state change between refinements
  int max_refinements = 24;
};

using HamiltonianBuilder = std::function<HermitianOperator(double h)>;

// piecewise-constant propagation with per-step eigendecomposition at the
// midpoint field; dt is halved until the final state moves by less than
// step_control.tolerance
StateVector ramp_evolve(const HamiltonianBuilder& builder,
                        const RampSchedule& schedule, const StateVector& psi0,
                        const StepControl& step_control = {});

// full ramp propagator for a fixed dt (small dimensions only)
Eigen::MatrixXcd ramp_propagator(const HamiltonianBuilder& builder,
                                 const RampSchedule& schedule, double dt);

// diagonal-ensemble average with degenerate-cluster cross terms
double diagonal_average(const StateVector& psi, const HermitianOperator& o,
                        const EigenSystem& es);

struct TimeSeries {
  std::vector<double> times;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;  // values[label][time]
};

struct MagnetizationHistogram {
  Eigen::VectorXd m_values;  // ascending eigenvalues of M/N
  Eigen::VectorXd mean_probabilities;
  Eigen::VectorXd std_probabilities;
};

MagnetizationHistogram magnetization_distribution(
    const EigenSystem& hamiltonian_es, const EigenSystem& m_es,
    const StateVector& psi0, const std::vector<double>& time_grid);

}  // namespace sbq
