#pragma once

#include <map>
#include <string>
#include <vector>

#include "sbq/dynamics.hpp"
#include "sbq/gge.hpp"
#include "sbq/operators.hpp"

namespace sbq {

enum class ModelKind { FullyConnected, Chain };

struct ProtocolConfig {
  ModelKind model = ModelKind::Chain;
  int n_sites = 19;
  double alpha = 1.1;
  double j = 2.0;
  // literature critical field for the chosen model convention; an input,
  // used only to place the ramp waypoints
  double h_c_reference = 2.0;
  double h1 = 0.0;  // 0 -> defaults to 2 * h_c_reference
  double h2 = 0.5;
  double h3 = 0.1;
  double tau_q = 40.96;  // inverse ramp rate: the field moves 1/tau_q per unit time
  double epsilon = 0.0;
  double p = 0.5;
  double phi = 1.0471975511965976;  // pi/3
  double t_max = 300.0;
  int n_samples = 3000;
  int n_tau_r = 64;
  double delta = kSaturationDelta;
  double time_unit = 1.0;  // label scale for externally-quoted times
  int dense_threshold = 4096;
  int in_place_cutoff = 8000;

  double h1_effective() const { return h1 > 0.0 ? h1 : 2.0 * h_c_reference; }
  // throws std::invalid_argument naming the offending key
  void validate() const;
};

struct ExperimentResult {
  TimeSeries series;
  MagnetizationHistogram histogram;
  bool has_histogram = false;
  GgePrediction gge;
  bool has_gge = false;
  ChargeTargets targets;
  std::map<std::string, double> scalars;
};

// m, W, C, K, Pi, E along the evolution of psi0 under the eigensystem's
// Hamiltonian; m is the magnetization per site
TimeSeries quench_series(const EigenSystem& es, const StateVector& psi0,
                         const std::vector<double>& times,
                         const HermitianOperator& h, const HermitianOperator& m,
                         const HermitianOperator& pi, const HermitianOperator& c,
                         const XPolarizedPair& xpair, int n_sites);

// ramp propagator with the time step refined until the result is stable
Eigen::MatrixXcd converged_propagator(const HamiltonianBuilder& builder,
                                      const RampSchedule& schedule,
                                      const StepControl& ctl = {});

// heavy chain-sector objects shared between quench runs: the symmetry
// basis, the order-parameter spectrum and the charge built from it, and the
// doublet superposition prepared at h2
struct ChainWorkspace {
  ReducedBasis basis;
  HermitianOperator m_op;
  HermitianOperator pi_op;
  HermitianOperator c_op;
  EigenSystem m_eigensystem;  // reset to reclaim memory if no histogram is needed
  XPolarizedPair xpair;
  Doublet doublet;
  StateVector psi0;
};

ChainWorkspace make_chain_workspace(const ProtocolConfig& config);

// one quench on a prepared workspace; extra_times are appended to the
// uniform grid (long-horizon samples), the histogram only averages the grid;
// release_m_eigensystem frees the M spectrum once the histogram is done so
// the fit runs with a smaller footprint
ExperimentResult quench_with_workspace(ChainWorkspace& workspace,
                                       const ProtocolConfig& config,
                                       bool with_histogram,
                                       const std::vector<double>& extra_times = {},
                                       bool release_m_eigensystem = false);

// polarized start -> ramp to h1 -> relax for tau_R -> ramp to h2, recording
// the charges after the final ramp for a grid of tau_R over one phase period
ExperimentResult run_preparation(const ProtocolConfig& config);

// superposition of the h2 doublet evolved under H(h3) (or its perturbed
// variant), with time series, magnetization histogram, and the GGE fit
ExperimentResult run_quench(const ProtocolConfig& config);

// quench repeated for several symmetry-breaking strengths, sharing the
// heavy spectral data across runs
std::vector<ExperimentResult> run_perturbation_sweep(
    const ProtocolConfig& config, const std::vector<double>& epsilons);

}  // namespace sbq
