#include "sbq/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sbq/linalg.hpp"

namespace sbq {

using linalg::require;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

std::vector<std::pair<int, int>> degeneracy_clusters(const VectorXd& evals,
                                                     double rel_tol) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(evals.size());
  if (n == 0) return out;
  double span = evals[n - 1] - evals[0];
  if (span <= 0) span = 1.0;
  int begin = 0;
  for (int i = 1; i < n; ++i) {
    if (std::abs(evals[i] - evals[i - 1]) / span >= rel_tol) {
      out.emplace_back(begin, i);
      begin = i;
    }
  }
  out.emplace_back(begin, n);
  return out;
}

void EigenSystem::finalize(std::vector<Block> blocks,
                           std::vector<VectorXd> block_values,
                           std::string basis_tag) {
  blocks_ = std::move(blocks);
  basis_tag_ = std::move(basis_tag);
  int total = 0;
  for (const auto& v : block_values) total += static_cast<int>(v.size());
  struct Item {
    double e;
    int block, col;
  };
  std::vector<Item> items;
  items.reserve(total);
  for (int b = 0; b < static_cast<int>(block_values.size()); ++b)
    for (int c = 0; c < block_values[b].size(); ++c)
      items.push_back({block_values[b][c], b, c});
  std::stable_sort(items.begin(), items.end(),
                   [](const Item& a, const Item& b) { return a.e < b.e; });
  eigenvalues_.resize(total);
  where_.resize(total);
  for (int i = 0; i < total; ++i) {
    eigenvalues_[i] = items[i].e;
    where_[i] = {items[i].block, items[i].col};
  }
  clusters_ = degeneracy_clusters(eigenvalues_, cluster_tol_);
}

EigenSystem EigenSystem::diagonalize(const HermitianOperator& h, bool in_place) {
  EigenSystem es;
  Block blk;
  blk.offset = 0;
  blk.rows = h.dim();
  VectorXd vals;
  if (h.is_real() && in_place) {
    MatrixXd a = h.to_dense_real();
    vals = linalg::sym_eig_inplace(a);
    blk.vectors_real = std::move(a);
  } else if (h.is_real()) {
    linalg::SymEigResult r = linalg::sym_eig(h.to_dense_real());
    blk.vectors_real = std::move(r.vectors);
    vals = std::move(r.values);
  } else {
    linalg::HermEigResult r = linalg::herm_eig(h.dense_complex());
    blk.vectors_cplx = std::move(r.vectors);
    vals = std::move(r.values);
  }
  std::vector<Block> blocks;
  blocks.push_back(std::move(blk));
  std::vector<VectorXd> values;
  values.push_back(std::move(vals));
  es.finalize(std::move(blocks), std::move(values), h.basis_tag());
  return es;
}

EigenSystem EigenSystem::diagonalize_blocked(const HermitianOperator& h,
                                             const ReducedBasis& basis) {
  require(h.basis_tag() == basis.tag(), "diagonalize_blocked: basis mismatch");
  require(basis.parity_sector() == ParitySector::Both,
          "diagonalize_blocked: needs both parity blocks");
  require(h.is_real(), "diagonalize_blocked: real operator expected");
  const int np = basis.n_plus();
  const int nm = basis.dimension() - np;

  // extract the two parity blocks without materializing the full matrix
  // (the largest sectors only fit in memory blockwise)
  MatrixXd app = MatrixXd::Zero(np, np);
  MatrixXd amm = MatrixXd::Zero(nm, nm);
  double cross = 0.0;
  if (h.is_sparse()) {
    const auto& s = h.sparse();
    for (int k = 0; k < s.outerSize(); ++k)
      for (HermitianOperator::SparseReal::InnerIterator it(s, k); it; ++it) {
        const int r = static_cast<int>(it.row());
        const int c = static_cast<int>(it.col());
        if (r < np && c < np) app(r, c) = it.value();
        else if (r >= np && c >= np) amm(r - np, c - np) = it.value();
        else cross = std::max(cross, std::abs(it.value()));
      }
  } else {
    const MatrixXd& f = h.dense_real();
    app = f.topLeftCorner(np, np);
    amm = f.bottomRightCorner(nm, nm);
    if (np > 0 && nm > 0) cross = f.block(np, 0, nm, np).cwiseAbs().maxCoeff();
  }
  require(cross < kHermitianTol * std::max(1.0, h.frobenius_norm()),
          "diagonalize_blocked: operator mixes parity blocks");

  EigenSystem es;
  std::vector<Block> blocks;
  std::vector<VectorXd> values;
  {
    linalg::SymEigResult r = linalg::sym_eig(std::move(app));
    Block b;
    b.offset = 0;
    b.rows = np;
    b.parity = +1;
    b.vectors_real = std::move(r.vectors);
    blocks.push_back(std::move(b));
    values.push_back(std::move(r.values));
  }
  {
    linalg::SymEigResult r = linalg::sym_eig(std::move(amm));
    Block b;
    b.offset = np;
    b.rows = nm;
    b.parity = -1;
    b.vectors_real = std::move(r.vectors);
    blocks.push_back(std::move(b));
    values.push_back(std::move(r.values));
  }
  es.finalize(std::move(blocks), std::move(values), h.basis_tag());
  return es;
}

int EigenSystem::parity_of(int i) const { return blocks_[where_[i].first].parity; }

bool EigenSystem::is_real() const {
  for (const Block& b : blocks_)
    if (b.vectors_cplx.size() > 0) return false;
  return true;
}

VectorXcd EigenSystem::to_eigenbasis(const VectorXcd& psi) const {
  MatrixXcd m = to_eigenbasis_batch(psi);
  return m.col(0);
}

VectorXcd EigenSystem::from_eigenbasis(const VectorXcd& coeff) const {
  MatrixXcd m = from_eigenbasis_batch(coeff);
  return m.col(0);
}

MatrixXcd EigenSystem::to_eigenbasis_batch(const MatrixXcd& psis) const {
  require(psis.rows() == dim(), "to_eigenbasis: dimension mismatch");
  MatrixXcd out(dim(), psis.cols());
  // per block: project, then scatter into global sorted order
  std::vector<int> cursor(blocks_.size(), 0);
  std::vector<MatrixXcd> block_coeff(blocks_.size());
  for (size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    const auto seg = psis.middleRows(blk.offset, blk.rows);
    if (blk.vectors_real.size() > 0)
      block_coeff[b] = blk.vectors_real.transpose() * seg;
    else
      block_coeff[b] = blk.vectors_cplx.adjoint() * seg;
  }
  for (int i = 0; i < dim(); ++i) {
    auto [b, c] = where_[i];
    out.row(i) = block_coeff[b].row(c);
  }
  return out;
}

MatrixXcd EigenSystem::from_eigenbasis_batch(const MatrixXcd& coeffs) const {
  require(coeffs.rows() == dim(), "from_eigenbasis: dimension mismatch");
  MatrixXcd out = MatrixXcd::Zero(dim(), coeffs.cols());
  for (size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    MatrixXcd bc(blk.rows, coeffs.cols());
    bc.setZero();
    for (int i = 0; i < dim(); ++i)
      if (where_[i].first == static_cast<int>(b))
        bc.row(where_[i].second) = coeffs.row(i);
    if (blk.vectors_real.size() > 0)
      out.middleRows(blk.offset, blk.rows) = blk.vectors_real * bc;
    else
      out.middleRows(blk.offset, blk.rows) = blk.vectors_cplx * bc;
  }
  return out;
}

VectorXcd EigenSystem::eigenvector(int i) const {
  require(i >= 0 && i < dim(), "eigenvector: index out of range");
  VectorXcd v = VectorXcd::Zero(dim());
  auto [b, c] = where_[i];
  const Block& blk = blocks_[b];
  if (blk.vectors_real.size() > 0)
    v.segment(blk.offset, blk.rows) = blk.vectors_real.col(c).cast<cplx>();
  else
    v.segment(blk.offset, blk.rows) = blk.vectors_cplx.col(c);
  return v;
}

double EigenSystem::orthonormality_defect() const {
  double worst = 0.0;
  for (const Block& b : blocks_) {
    if (b.vectors_real.size() > 0) {
      MatrixXd g = b.vectors_real.transpose() * b.vectors_real;
      g.diagonal().array() -= 1.0;
      worst = std::max(worst, g.cwiseAbs().maxCoeff());
    } else {
      MatrixXcd g = b.vectors_cplx.adjoint() * b.vectors_cplx;
      g.diagonal().array() -= 1.0;
      worst = std::max(worst, g.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

double EigenSystem::reconstruction_defect(const HermitianOperator& h) const {
  MatrixXcd rebuilt = MatrixXcd::Zero(dim(), dim());
  for (int i = 0; i < dim(); ++i) {
    VectorXcd v = eigenvector(i);
    rebuilt += eigenvalues_[i] * v * v.adjoint();
  }
  MatrixXcd orig = h.to_dense_complex();
  const double denom = std::max(1.0, orig.norm());
  return (rebuilt - orig).norm() / denom;
}

Doublet lowest_doublet(const EigenSystem& es) {
  const EigenSystem::Block* plus = nullptr;
  const EigenSystem::Block* minus = nullptr;
  for (const EigenSystem::Block& b : es.blocks()) {
    if (b.parity == +1) plus = &b;
    if (b.parity == -1) minus = &b;
  }
  require(plus != nullptr && minus != nullptr,
          "lowest_doublet: missing parity block");
  require(es.is_real(), "lowest_doublet: real eigenvectors expected");

  Doublet d;
  d.basis_tag = es.basis_tag();
  d.plus = VectorXd::Zero(es.dim());
  d.minus = VectorXd::Zero(es.dim());
  // the per-block ground states are the first global index of each parity
  double ep = 0, em = 0;
  bool have_p = false, have_m = false;
  for (int i = 0; i < es.dim() && !(have_p && have_m); ++i) {
    if (es.parity_of(i) == +1 && !have_p) {
      ep = es.eigenvalues()[i];
      d.plus = es.eigenvector(i).real();
      have_p = true;
    } else if (es.parity_of(i) == -1 && !have_m) {
      em = es.eigenvalues()[i];
      d.minus = es.eigenvector(i).real();
      have_m = true;
    }
  }
  d.e_plus = ep;
  d.e_minus = em;
  return d;
}

void gauge_doublet(Doublet& d, const HermitianOperator& c) {
  require(c.basis_tag() == d.basis_tag, "gauge_doublet: basis mismatch");
  const double overlap = d.plus.dot(c.apply(d.minus));
  require(std::abs(overlap) > 1e-6,
          "gauge_doublet: vanishing <+|C|->, doublet not charge-connected");
  if (overlap < 0) d.minus = -d.minus;
  d.gauged = true;
}

StateVector prepare_superposition(const Doublet& d, double p, double phi) {
  require(p >= 0.0 && p <= 1.0, "prepare_superposition: p out of [0,1]");
  require(d.gauged, "prepare_superposition: doublet must be gauge-fixed");
  VectorXcd amp = std::sqrt(p) * d.plus.cast<cplx>() +
                  std::exp(cplx(0, phi)) * std::sqrt(1.0 - p) * d.minus.cast<cplx>();
  amp /= amp.norm();
  return {amp, d.basis_tag};
}

VectorXcd evolve_coefficients(const VectorXd& evals, const VectorXcd& coeff,
                              double t) {
  VectorXcd out(coeff.size());
  for (int i = 0; i < coeff.size(); ++i) {
    const double phase = linalg::phase_mod_two_pi(evals[i], t);
    out[i] = coeff[i] * std::exp(cplx(0, -phase));
  }
  return out;
}

StateVector evolve(const EigenSystem& es, const StateVector& psi, double t) {
  require(psi.basis_tag == es.basis_tag(), "evolve: basis mismatch");
  VectorXcd c = es.to_eigenbasis(psi.amplitudes);
  c = evolve_coefficients(es.eigenvalues(), c, t);
  return {es.from_eigenbasis(c), psi.basis_tag};
}

double RampSchedule::field_at(double t) const {
  const double dir = h_end >= h_start ? 1.0 : -1.0;
  const double h = h_start + dir * t / tau_q;
  return dir > 0 ? std::min(h, h_end) : std::max(h, h_end);
}

namespace {

StateVector ramp_once(const HamiltonianBuilder& builder,
                      const RampSchedule& schedule, const StateVector& psi0,
                      double dt) {
  const double duration = schedule.duration();
  const int steps = std::max(1, static_cast<int>(std::ceil(duration / dt)));
  const double step = duration / steps;
  VectorXcd psi = psi0.amplitudes;
  for (int k = 0; k < steps; ++k) {
    const double tmid = (k + 0.5) * step;
    HermitianOperator h = builder(schedule.field_at(tmid));
    EigenSystem es = EigenSystem::diagonalize(h);
    VectorXcd c = es.to_eigenbasis(psi);
    c = evolve_coefficients(es.eigenvalues(), c, step);
    psi = es.from_eigenbasis(c);
  }
  return {psi, psi0.basis_tag};
}

}  // namespace

StateVector ramp_evolve(const HamiltonianBuilder& builder,
                        const RampSchedule& schedule, const StateVector& psi0,
                        const StepControl& ctl) {
  require(std::abs(psi0.amplitudes.norm() - 1.0) < 1e-10,
          "ramp_evolve: state must be normalized");
  if (schedule.duration() == 0.0) return psi0;
  double dt = ctl.initial_dt;
  StateVector prev = ramp_once(builder, schedule, psi0, dt);
  for (int r = 0; r < ctl.max_refinements; ++r) {
    dt /= 2;
    StateVector next = ramp_once(builder, schedule, psi0, dt);
    const double change = (next.amplitudes - prev.amplitudes).norm();
    if (change < ctl.tolerance) return next;
    prev = std::move(next);
  }
  throw std::runtime_error(
      "ramp_evolve: step control did not converge; achieved change " +
      std::to_string((ramp_once(builder, schedule, psi0, dt / 2).amplitudes -
                      prev.amplitudes)
                         .norm()));
}

MatrixXcd ramp_propagator(const HamiltonianBuilder& builder,
                          const RampSchedule& schedule, double dt) {
  HermitianOperator probe = builder(schedule.h_start);
  const int dim = probe.dim();
  MatrixXcd u = MatrixXcd::Identity(dim, dim);
  const double duration = schedule.duration();
  if (duration == 0.0) return u;
  const int steps = std::max(1, static_cast<int>(std::ceil(duration / dt)));
  const double step = duration / steps;
  for (int k = 0; k < steps; ++k) {
    const double tmid = (k + 0.5) * step;
    HermitianOperator h = builder(schedule.field_at(tmid));
    EigenSystem es = EigenSystem::diagonalize(h);
    MatrixXcd c = es.to_eigenbasis_batch(u);
    for (int i = 0; i < dim; ++i)
      c.row(i) *= std::exp(cplx(0, -linalg::phase_mod_two_pi(
                                       es.eigenvalues()[i], step)));
    u = es.from_eigenbasis_batch(c);
  }
  return u;
}

double diagonal_average(const StateVector& psi, const HermitianOperator& o,
                        const EigenSystem& es) {
  require(psi.basis_tag == es.basis_tag(), "diagonal_average: basis mismatch");
  require(o.basis_tag() == es.basis_tag(), "diagonal_average: basis mismatch");
  const VectorXcd c = es.to_eigenbasis(psi.amplitudes);
  double acc = 0.0;
  for (const auto& [begin, end] : es.clusters()) {
    // unnormalized projection onto the cluster, back in the tagged basis
    VectorXcd coeff = VectorXcd::Zero(es.dim());
    coeff.segment(begin, end - begin) = c.segment(begin, end - begin);
    VectorXcd v = es.from_eigenbasis(coeff);
    acc += std::real(v.dot(o.apply(v)));
  }
  return acc;
}

MagnetizationHistogram magnetization_distribution(
    const EigenSystem& hamiltonian_es, const EigenSystem& m_es,
    const StateVector& psi0, const std::vector<double>& time_grid) {
  require(psi0.basis_tag == hamiltonian_es.basis_tag(),
          "magnetization_distribution: basis mismatch");
  require(m_es.basis_tag() == hamiltonian_es.basis_tag(),
          "magnetization_distribution: basis mismatch");
  require(!time_grid.empty(), "magnetization_distribution: empty time grid");

  // integer spectrum of M: group eigenvalues by nearest integer
  const int dim = m_es.dim();
  std::vector<long> m_int(dim);
  std::vector<long> uniq;
  for (int i = 0; i < dim; ++i) {
    m_int[i] = std::lround(m_es.eigenvalues()[i]);
    uniq.push_back(m_int[i]);
  }
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<int> group(dim);
  for (int i = 0; i < dim; ++i)
    group[i] = static_cast<int>(
        std::lower_bound(uniq.begin(), uniq.end(), m_int[i]) - uniq.begin());

  const int n_vals = static_cast<int>(uniq.size());
  const int n_t = static_cast<int>(time_grid.size());
  MatrixXd probs(n_vals, n_t);

  const VectorXcd c0 = hamiltonian_es.to_eigenbasis(psi0.amplitudes);
  const int batch = 32;
  for (int t0 = 0; t0 < n_t; t0 += batch) {
    const int nb = std::min(batch, n_t - t0);
    MatrixXcd coeffs(dim, nb);
    for (int k = 0; k < nb; ++k)
      coeffs.col(k) = evolve_coefficients(hamiltonian_es.eigenvalues(), c0,
                                          time_grid[t0 + k]);
    MatrixXcd psis = hamiltonian_es.from_eigenbasis_batch(coeffs);
    MatrixXcd in_m = m_es.to_eigenbasis_batch(psis);
    for (int k = 0; k < nb; ++k) {
      VectorXd p = VectorXd::Zero(n_vals);
      for (int i = 0; i < dim; ++i) p[group[i]] += std::norm(in_m(i, k));
      probs.col(t0 + k) = p;
    }
  }

  MagnetizationHistogram hist;
  const double n_sites = static_cast<double>(
      std::max(std::abs(uniq.front()), std::abs(uniq.back())));
  hist.m_values.resize(n_vals);
  for (int v = 0; v < n_vals; ++v) hist.m_values[v] = uniq[v] / n_sites;
  hist.mean_probabilities = probs.rowwise().mean();
  hist.std_probabilities.resize(n_vals);
  for (int v = 0; v < n_vals; ++v) {
    const double mu = hist.mean_probabilities[v];
    hist.std_probabilities[v] =
        std::sqrt((probs.row(v).array() - mu).square().mean());
  }
  return hist;
}

}  // namespace sbq
