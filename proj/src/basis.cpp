#include "sbq/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sbq/linalg.hpp"

namespace sbq {

uint32_t translate_bits(uint32_t bits, int n) {
  const uint32_t mask = (n == 32) ? ~0u : ((1u << n) - 1u);
  return ((bits << 1) | (bits >> (n - 1))) & mask;
}

uint32_t reflect_bits(uint32_t bits, int n) {
  uint32_t out = 0;
  for (int i = 0; i < n; ++i) {
    if (bits & (1u << i)) out |= 1u << (n - 1 - i);
  }
  return out;
}

OrbitInfo orbit_representative(const SpinConfiguration& config) {
  const int n = config.n_sites;
  linalg::require(n >= 2 && n <= ReducedBasis::kMaxSites,
                  "orbit_representative: n_sites out of range");
  linalg::require(n == 32 || config.bits < (1u << n),
                  "orbit_representative: bits >= 2^N");
  uint32_t rep = config.bits;
  // count distinct group images; duplicates within the 2N-element list
  // correspond to the orbit stabilizer
  uint32_t images[64];
  int count = 0;
  uint32_t b = config.bits;
  for (int t = 0; t < n; ++t) {
    images[count++] = b;
    images[count++] = reflect_bits(b, n);
    b = translate_bits(b, n);
  }
  std::sort(images, images + count);
  int distinct = static_cast<int>(std::unique(images, images + count) - images);
  rep = images[0];
  return {{rep, n}, distinct};
}

ReducedBasis ReducedBasis::enumerate_sector(int n_sites, ParitySector parity) {
  linalg::require(n_sites >= 2, "enumerate_sector: N must be >= 2");
  linalg::require(n_sites <= kMaxSites, "enumerate_sector: N exceeds cap");
  ReducedBasis basis;
  basis.n_sites_ = n_sites;
  basis.parity_ = parity;

  struct Entry {
    uint32_t rep;
    int orbit_size;
    int parity;
  };
  std::vector<Entry> entries;
  const uint32_t total = 1u << n_sites;
  for (uint32_t bits = 0; bits < total; ++bits) {
    SpinConfiguration c{bits, n_sites};
    OrbitInfo info = orbit_representative(c);
    if (info.rep.bits != bits) continue;  // not the orbit minimum
    const int p = c.parity();
    if (parity == ParitySector::Plus && p != +1) continue;
    if (parity == ParitySector::Minus && p != -1) continue;
    entries.push_back({bits, info.orbit_size, p});
  }
  // parity-(+) block first, ascending bits inside each block
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) {
                     if (a.parity != b.parity) return a.parity > b.parity;
                     return a.rep < b.rep;
                   });
  basis.reps_.reserve(entries.size());
  for (const Entry& e : entries) {
    if (e.parity == +1) ++basis.n_plus_;
    basis.reps_.push_back(e.rep);
    basis.orbit_sizes_.push_back(e.orbit_size);
    // at k=0 / inversion(+) every orbit symmetrizes with all-positive
    // coefficients, so the norm is strictly positive by construction
    const double norm = std::sqrt(static_cast<double>(e.orbit_size));
    if (!(norm > 0.0))
      throw std::logic_error("enumerate_sector: phase-cancelled orbit");
    basis.norms_.push_back(norm);
    basis.parities_.push_back(e.parity);
  }
  basis.index_.reserve(basis.reps_.size() * 2);
  for (int i = 0; i < basis.dimension(); ++i) basis.index_[basis.reps_[i]] = i;

  const char* pname = parity == ParitySector::Both   ? "both"
                      : parity == ParitySector::Plus ? "+"
                                                     : "-";
  basis.tag_ = "chain:N=" + std::to_string(n_sites) + ":k0:inv+:parity=" + pname;
  return basis;
}

int ReducedBasis::locate(uint32_t bits) const {
  OrbitInfo info = orbit_representative({bits, n_sites_});
  return rep_row(info.rep.bits);
}

int ReducedBasis::rep_row(uint32_t rep) const {
  auto it = index_.find(rep);
  return it == index_.end() ? -1 : it->second;
}

StateVector expand_to_full(const StateVector& state, const ReducedBasis& basis) {
  linalg::require(state.basis_tag == basis.tag(),
                  "expand_to_full: state/basis tag mismatch");
  linalg::require(state.amplitudes.size() == basis.dimension(),
                  "expand_to_full: dimension mismatch");
  const int n = basis.n_sites();
  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(1u << n);
  for (int row = 0; row < basis.dimension(); ++row) {
    const std::complex<double> amp =
        state.amplitudes[row] / basis.normalization(row);
    uint32_t b = basis.rep_bits(row);
    for (int t = 0; t < n; ++t) {
      full[b] = amp;
      full[reflect_bits(b, n)] = amp;
      b = translate_bits(b, n);
    }
  }
  return {full, "full:N=" + std::to_string(n)};
}

StateVector project_to_reduced(const Eigen::VectorXcd& full,
                               const ReducedBasis& basis) {
  const int n = basis.n_sites();
  linalg::require(full.size() == (1 << n),
                  "project_to_reduced: full vector has wrong size");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(basis.dimension());
  for (int row = 0; row < basis.dimension(); ++row) {
    std::complex<double> acc = 0;
    uint32_t images[64];
    int count = 0;
    uint32_t b = basis.rep_bits(row);
    for (int t = 0; t < n; ++t) {
      images[count++] = b;
      images[count++] = reflect_bits(b, n);
      b = translate_bits(b, n);
    }
    std::sort(images, images + count);
    int distinct =
        static_cast<int>(std::unique(images, images + count) - images);
    for (int i = 0; i < distinct; ++i) acc += full[images[i]];
    out[row] = acc / basis.normalization(row);
  }
  return {out, basis.tag()};
}

}  // namespace sbq
