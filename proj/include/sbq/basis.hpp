#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace sbq {

// A normalized amplitude vector tagged with the basis it lives in.
struct StateVector {
  Eigen::VectorXcd amplitudes;
  std::string basis_tag;
};

struct SpinConfiguration {
  uint32_t bits = 0;  // bit i = 1 <=> site i up along z
  int n_sites = 0;

  int n_down() const { return n_sites - __builtin_popcount(bits); }
  // (-1)^(#down), the eigenvalue of prod_j sigma_j^z
  int parity() const { return (n_down() % 2 == 0) ? +1 : -1; }
};

enum class ParitySector { Plus, Minus, Both };

uint32_t translate_bits(uint32_t bits, int n);
uint32_t reflect_bits(uint32_t bits, int n);

struct OrbitInfo {
  SpinConfiguration rep;
  int orbit_size = 0;
};

// Minimal integer over all translations and reflected translations
// (dihedral group of the ring, order 2N).
OrbitInfo orbit_representative(const SpinConfiguration& config);

// Symmetry-adapted basis of the k=0, inversion-(+) sector of a periodic
// spin-1/2 chain, optionally restricted to one parity block. Representatives
// are orbit minima, sorted ascending; with parity=Both the (+) block comes
// first. Immutable after construction.
class ReducedBasis {
 public:
  static constexpr int kMaxSites = 26;

  static ReducedBasis enumerate_sector(int n_sites,
                                       ParitySector parity = ParitySector::Both);

  int n_sites() const { return n_sites_; }
  int dimension() const { return static_cast<int>(reps_.size()); }
  ParitySector parity_sector() const { return parity_; }
  const std::string& tag() const { return tag_; }

  uint32_t rep_bits(int row) const { return reps_[row]; }
  int orbit_size(int row) const { return orbit_sizes_[row]; }
  // norm of the unnormalized orbit sum, i.e. sqrt(orbit size); always > 0
  double normalization(int row) const { return norms_[row]; }
  int parity(int row) const { return parities_[row]; }
  // number of rows in the parity-(+) block (== dimension() unless Both)
  int n_plus() const { return n_plus_; }

  // row of the representative of `bits`'s orbit, or -1 if outside the
  // basis (possible only for parity-restricted sectors)
  int locate(uint32_t bits) const;
  // row of a representative already known to be an orbit minimum
  int rep_row(uint32_t rep) const;

 private:
  int n_sites_ = 0;
  ParitySector parity_ = ParitySector::Both;
  int n_plus_ = 0;
  std::vector<uint32_t> reps_;
  std::vector<int> orbit_sizes_;
  std::vector<double> norms_;
  std::vector<int> parities_;
  std::unordered_map<uint32_t, int> index_;
  std::string tag_;
};

// Symmetrization isometry: reduced amplitudes to the full 2^N product basis.
StateVector expand_to_full(const StateVector& state, const ReducedBasis& basis);

// Adjoint of expand_to_full (orthogonal projection onto the sector).
StateVector project_to_reduced(const Eigen::VectorXcd& full,
                               const ReducedBasis& basis);

}  // namespace sbq
