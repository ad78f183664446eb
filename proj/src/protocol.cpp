#include "sbq/protocol.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>

#include "sbq/linalg.hpp"

namespace sbq {

using linalg::require;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

void ProtocolConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) {
    throw std::invalid_argument("config." + key + ": " + msg);
  };
  if (n_sites < 2 || n_sites > ReducedBasis::kMaxSites)
    fail("n_sites", "out of range [2, " +
                        std::to_string(ReducedBasis::kMaxSites) + "]");
  if (!(alpha >= 0.0)) fail("alpha", "must be >= 0");
  if (!(j > 0.0)) fail("j", "must be > 0");
  if (!(p >= 0.0 && p <= 1.0)) fail("p", "out of [0, 1]");
  if (!std::isfinite(phi)) fail("phi", "must be finite");
  if (!(tau_q > 0.0)) fail("tau_q", "must be > 0");
  if (!(std::abs(epsilon) <= 1.0)) fail("epsilon", "out of [-1, 1]");
  if (!(t_max >= 0.0)) fail("t_max", "must be >= 0");
  if (n_samples < 0) fail("n_samples", "must be >= 0");
  if (n_tau_r < 2) fail("n_tau_r", "must be >= 2");
  if (!(delta > 0.0 && delta < 1.0)) fail("delta", "out of (0, 1)");
  if (!(h_c_reference > 0.0)) fail("h_c_reference", "must be > 0");
  if (h1 < 0.0) fail("h1", "must be >= 0 (0 selects 2*h_c_reference)");
  if (h2 < 0.0) fail("h2", "must be >= 0");
  if (h3 < 0.0) fail("h3", "must be >= 0");
  if (!(time_unit > 0.0)) fail("time_unit", "must be > 0");
}

namespace {

VectorXd diagonal_of(const HermitianOperator& op) {
  VectorXd d = VectorXd::Zero(op.dim());
  if (op.is_sparse()) {
    const auto& s = op.sparse();
    for (int k = 0; k < s.outerSize(); ++k)
      for (HermitianOperator::SparseReal::InnerIterator it(s, k); it; ++it)
        if (it.row() == it.col()) d[it.row()] = it.value();
  } else if (op.is_dense_real()) {
    d = op.dense_real().diagonal();
  } else {
    d = op.dense_complex().diagonal().real();
  }
  return d;
}

std::vector<double> uniform_grid(double t_max, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = n <= 1 ? 0.0 : t_max * i / (n - 1);
  return g;
}

// sum_n |<n|psi>|^2 <n|O|n>: eigenbasis-population average, degenerate
// cross terms neglected (serves the split spectra of the perturbed model)
double population_average(const EigenSystem& es, const VectorXcd& psi,
                          const HermitianOperator& o) {
  require(es.blocks().size() == 1 && es.blocks()[0].vectors_real.size() > 0,
          "population_average: single real block expected");
  const MatrixXd& q = es.blocks()[0].vectors_real;
  const VectorXd w = es.to_eigenbasis(psi).cwiseAbs2();
  MatrixXd od;
  const MatrixXd* op = nullptr;
  if (o.is_dense_real()) {
    op = &o.dense_real();
  } else {
    od = o.to_dense_real();
    op = &od;
  }
  const int dim = es.dim();
  const int chunk = 1024;
  double acc = 0.0;
  for (int c0 = 0; c0 < dim; c0 += chunk) {
    const int nb = std::min(chunk, dim - c0);
    const MatrixXd b = (*op) * q.middleCols(c0, nb);
    for (int k = 0; k < nb; ++k) acc += w[c0 + k] * q.col(c0 + k).dot(b.col(k));
  }
  return acc;
}

}  // namespace

TimeSeries quench_series(const EigenSystem& es, const StateVector& psi0,
                         const std::vector<double>& times,
                         const HermitianOperator& h, const HermitianOperator& m,
                         const HermitianOperator& pi, const HermitianOperator& c,
                         const XPolarizedPair& xpair, int n_sites) {
  require(psi0.basis_tag == es.basis_tag(), "quench_series: basis mismatch");
  const int dim = es.dim();
  const int n_t = static_cast<int>(times.size());
  const VectorXcd c0 = es.to_eigenbasis(psi0.amplitudes);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const VectorXd s = inv_sqrt2 * (xpair.plus + xpair.minus);
  const VectorXd a = inv_sqrt2 * (xpair.plus - xpair.minus);
  const VectorXd pidiag = diagonal_of(pi);

  MatrixXd c_local;
  const MatrixXd* cr = nullptr;
  if (c.is_dense_real()) {
    cr = &c.dense_real();
  } else {
    c_local = c.to_dense_real();
    cr = &c_local;
  }

  TimeSeries ts;
  ts.times = times;
  ts.labels = {"m", "W", "C", "K", "Pi", "E"};
  ts.values.assign(6, std::vector<double>(n_t, 0.0));

  const int chunk = 256;
  for (int t0 = 0; t0 < n_t; t0 += chunk) {
    const int nb = std::min(chunk, n_t - t0);
    MatrixXcd coeff(dim, nb);
    for (int k = 0; k < nb; ++k)
      coeff.col(k) = evolve_coefficients(es.eigenvalues(), c0, times[t0 + k]);
    const MatrixXcd psis = es.from_eigenbasis_batch(coeff);
    const MatrixXd cr_re = (*cr) * psis.real();
    const MatrixXd cr_im = (*cr) * psis.imag();
    const MatrixXcd phis = pidiag.cast<cplx>().asDiagonal() * psis;
    const MatrixXd cp_re = (*cr) * phis.real();
    const MatrixXd cp_im = (*cr) * phis.imag();
    for (int k = 0; k < nb; ++k) {
      const VectorXcd pk = psis.col(k);
      const int t = t0 + k;
      ts.values[0][t] = std::real(pk.dot(m.apply(pk))) / n_sites;
      const cplx z1 = s.cast<cplx>().dot(pk);
      const cplx z2 = a.cast<cplx>().dot(pk);
      ts.values[1][t] = -2.0 * std::imag(std::conj(z2) * z1);
      ts.values[2][t] = pk.real().dot(cr_re.col(k)) + pk.imag().dot(cr_im.col(k));
      // <K> = -Im <psi| C Pi |psi>
      ts.values[3][t] =
          -(pk.real().dot(cp_im.col(k)) - pk.imag().dot(cp_re.col(k)));
      ts.values[4][t] = pidiag.dot(pk.cwiseAbs2());
      ts.values[5][t] = std::real(pk.dot(h.apply(pk)));
    }
  }
  return ts;
}

MatrixXcd converged_propagator(const HamiltonianBuilder& builder,
                               const RampSchedule& schedule,
                               const StepControl& ctl) {
  double dt = ctl.initial_dt;
  MatrixXcd u = ramp_propagator(builder, schedule, dt);
  const double scale = std::sqrt(static_cast<double>(u.cols()));
  for (int r = 0; r < ctl.max_refinements; ++r) {
    dt *= 0.5;
    MatrixXcd u2 = ramp_propagator(builder, schedule, dt);
    if ((u2 - u).norm() < ctl.tolerance * scale) return u2;
    u = std::move(u2);
  }
  throw std::runtime_error("converged_propagator: step refinement stalled at dt=" +
                           std::to_string(dt));
}

ExperimentResult run_preparation(const ProtocolConfig& cfg) {
  cfg.validate();
  const double h1 = cfg.h1_effective();
  require(cfg.h2 < cfg.h_c_reference && h1 > cfg.h_c_reference,
          "run_preparation: needs h2 < h_c_reference < h1");

  HamiltonianBuilder builder;
  std::optional<HermitianOperator> m_op, pi_op;
  XPolarizedPair xp;
  if (cfg.model == ModelKind::FullyConnected) {
    const int n = cfg.n_sites;
    builder = [n](double h) { return build_fully_connected(n, h); };
    m_op.emplace(dicke_magnetization(n));
    pi_op.emplace(dicke_parity(n));
    xp = dicke_x_polarized(n);
  } else {
    auto basis = std::make_shared<ReducedBasis>(
        ReducedBasis::enumerate_sector(cfg.n_sites, ParitySector::Both));
    require(basis->dimension() <= cfg.dense_threshold,
            "run_preparation: chain sector too large for the ramp pipeline");
    ModelParameters mp;
    mp.n_sites = cfg.n_sites;
    mp.alpha = cfg.alpha;
    mp.j = cfg.j;
    const int thr = cfg.dense_threshold;
    builder = [basis, mp, thr](double h) mutable {
      mp.h = h;
      return build_tfim(*basis, mp, thr);
    };
    m_op.emplace(build_magnetization(*basis, thr));
    pi_op.emplace(build_parity(*basis));
    xp = x_polarized_states(*basis);
  }
  HermitianOperator c_op = sign_star(*m_op);
  HermitianOperator k_op = build_K(c_op, *pi_op);

  const MatrixXcd u2 = converged_propagator(builder, {0.0, h1, cfg.tau_q});
  const MatrixXcd u4 = converged_propagator(builder, {h1, cfg.h2, cfg.tau_q});
  const EigenSystem es1 = EigenSystem::diagonalize(builder(h1));
  const double delta_e0 = es1.eigenvalues()[1] - es1.eigenvalues()[0];
  require(delta_e0 > 0.0, "run_preparation: degenerate spectrum at h1");
  const double period = 2.0 * M_PI / delta_e0;

  const StateVector psi_x{xp.plus.cast<cplx>(), m_op->basis_tag()};
  const StateVector psi1{u2 * psi_x.amplitudes, psi_x.basis_tag};

  ExperimentResult out;
  out.series.labels = {"C", "K", "Pi"};
  out.series.times = uniform_grid(period * (cfg.n_tau_r - 1.0) / cfg.n_tau_r,
                                  cfg.n_tau_r);
  out.series.values.assign(3, std::vector<double>(cfg.n_tau_r, 0.0));
  for (int i = 0; i < cfg.n_tau_r; ++i) {
    const StateVector relaxed = evolve(es1, psi1, out.series.times[i]);
    const VectorXcd psi4 = u4 * relaxed.amplitudes;
    out.series.values[0][i] = c_op.expectation(psi4);
    out.series.values[1][i] = k_op.expectation(psi4);
    out.series.values[2][i] = pi_op->expectation(psi4);
  }
  out.scalars["delta_e0"] = delta_e0;
  out.scalars["period"] = period;
  out.scalars["h1"] = h1;
  out.scalars["phi_q"] =
      std::atan2(out.series.values[1][0], out.series.values[0][0]);
  return out;
}

ChainWorkspace make_chain_workspace(const ProtocolConfig& cfg) {
  cfg.validate();
  ReducedBasis basis =
      ReducedBasis::enumerate_sector(cfg.n_sites, ParitySector::Both);
  HermitianOperator m_op = build_magnetization(basis, cfg.dense_threshold);
  HermitianOperator pi_op = build_parity(basis);
  // nothing else large is alive yet, so the two-buffer solver is affordable
  EigenSystem es_m = EigenSystem::diagonalize(m_op);
  HermitianOperator c_op = sign_star_from_spectrum(
      es_m.eigenvalues(), es_m.blocks()[0].vectors_real, basis.tag());

  ModelParameters mp;
  mp.n_sites = cfg.n_sites;
  mp.alpha = cfg.alpha;
  mp.j = cfg.j;
  mp.h = cfg.h2;
  HermitianOperator h2op = build_tfim(basis, mp, cfg.dense_threshold);
  EigenSystem es2 = EigenSystem::diagonalize_blocked(h2op, basis);
  Doublet d = lowest_doublet(es2);
  gauge_doublet(d, c_op);
  StateVector psi0 = prepare_superposition(d, cfg.p, cfg.phi);
  XPolarizedPair xp = x_polarized_states(basis);
  return {std::move(basis), std::move(m_op), std::move(pi_op),
          std::move(c_op), std::move(es_m), std::move(xp),
          std::move(d),     std::move(psi0)};
}

ExperimentResult quench_with_workspace(ChainWorkspace& ws,
                                       const ProtocolConfig& cfg,
                                       bool with_histogram,
                                       const std::vector<double>& extra_times,
                                       bool release_m_eigensystem) {
  const bool big = ws.basis.dimension() > cfg.in_place_cutoff;
  const bool parity_pure = cfg.epsilon == 0.0;
  ModelParameters mp;
  mp.n_sites = cfg.n_sites;
  mp.alpha = cfg.alpha;
  mp.j = cfg.j;
  mp.h = cfg.h3;
  mp.epsilon = cfg.epsilon;
  HermitianOperator h3op = build_perturbed(ws.basis, mp, cfg.dense_threshold);
  EigenSystem es3 = parity_pure
                        ? EigenSystem::diagonalize_blocked(h3op, ws.basis)
                        : EigenSystem::diagonalize(h3op, big);

  std::vector<double> grid = uniform_grid(cfg.t_max, cfg.n_samples);
  std::vector<double> times = grid;
  times.insert(times.end(), extra_times.begin(), extra_times.end());

  ExperimentResult out;
  out.series = quench_series(es3, ws.psi0, times, h3op, ws.m_op, ws.pi_op,
                             ws.c_op, ws.xpair, cfg.n_sites);
  if (with_histogram) {
    require(ws.m_eigensystem.dim() == ws.basis.dimension(),
            "quench: histogram requested but the M eigensystem was released");
    out.histogram =
        magnetization_distribution(es3, ws.m_eigensystem, ws.psi0, grid);
    out.has_histogram = true;
  }
  if (release_m_eigensystem) ws.m_eigensystem = EigenSystem();

  const double e_target = h3op.expectation(ws.psi0.amplitudes);
  const double amp = 2.0 * std::sqrt(cfg.p * (1.0 - cfg.p));
  out.targets.pi_target = 2.0 * cfg.p - 1.0;
  out.targets.c_target = amp * std::cos(cfg.phi);
  out.targets.k_target = amp * std::sin(cfg.phi);
  out.targets.energy_target = e_target;

  // measured counterparts of the doublet-block target formulas
  const VectorXcd& psi = ws.psi0.amplitudes;
  out.scalars["c_initial"] = ws.c_op.expectation(psi);
  out.scalars["pi_initial"] = ws.pi_op.expectation(psi);
  const VectorXcd pipsi = ws.pi_op.apply(psi);
  out.scalars["k_initial"] = -std::imag(psi.dot(ws.c_op.apply(pipsi)));
  out.scalars["doublet_gap"] = ws.doublet.gap();
  out.scalars["energy_target"] = e_target;

  BetaFitOptions opts;
  opts.in_place_cutoff = cfg.in_place_cutoff;
  opts.beta_hint = canonical_beta(es3.eigenvalues(), e_target);

  double c_measured = 0.0;
  if (!parity_pure) {
    c_measured = es3.dim() <= cfg.dense_threshold
                     ? diagonal_average(ws.psi0, ws.c_op, es3)
                     : population_average(es3, psi, ws.c_op);
    out.scalars["c_diagonal_ensemble"] = c_measured;
  }
  es3 = EigenSystem();  // the fit re-diagonalizes shifted exponents; free first

  GgeParameters params;
  params.delta = cfg.delta;
  if (parity_pure) {
    params = solve_multipliers(out.targets, cfg.delta);
    const BetaFitResult bf =
        fit_beta(h3op, ws.c_op, ws.pi_op, params, e_target, opts);
    params.beta = bf.beta;
    out.scalars["fit_residual"] = bf.residual;
    out.scalars["fit_evaluations"] = bf.evaluations;
  } else {
    const PerturbedFit pf =
        fit_perturbed(h3op, ws.c_op, c_measured, e_target, opts);
    params.beta = pf.beta;
    params.lambda_c = pf.lambda_c;
    out.scalars["fit_residual"] = pf.residual;
    out.scalars["fit_evaluations"] = pf.evaluations;
  }
  out.gge = gge_predict(h3op, ws.c_op, ws.pi_op, ws.m_op, ws.xpair, params,
                        parity_pure, opts);
  out.has_gge = true;
  out.scalars["beta"] = params.beta;
  out.scalars["gge_m_scaled"] = out.gge.m / cfg.n_sites;
  return out;
}

ExperimentResult run_quench(const ProtocolConfig& cfg) {
  cfg.validate();
  require(cfg.model == ModelKind::Chain, "run_quench: chain model required");
  ChainWorkspace ws = make_chain_workspace(cfg);
  return quench_with_workspace(ws, cfg, true, {}, true);
}

std::vector<ExperimentResult> run_perturbation_sweep(
    const ProtocolConfig& cfg, const std::vector<double>& epsilons) {
  cfg.validate();
  require(cfg.model == ModelKind::Chain, "run_perturbation_sweep: chain model");
  ChainWorkspace ws = make_chain_workspace(cfg);
  ws.m_eigensystem = EigenSystem();  // no histograms here; reclaim the memory
  std::vector<ExperimentResult> out;
  out.reserve(epsilons.size());
  for (double eps : epsilons) {
    ProtocolConfig run = cfg;
    run.epsilon = eps;
    out.push_back(quench_with_workspace(ws, run, false));
    out.back().scalars["epsilon"] = eps;
  }
  return out;
}

}  // namespace sbq
