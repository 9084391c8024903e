#pragma once

#include <map>
#include <array>
#include <string>
#include <vector>

#include "qcare/care.hpp"
#include "qcare/errors.hpp"
#include "qcare/linalg.hpp"

namespace qcare::mrpa {

// Spin-orbital integral set (real orbitals). Occupied orbitals come first:
// 0 .. n_occ-1 occupied, n_occ .. n_occ+n_virt-1 virtual. Two-electron
// integrals are antisymmetrized, physicist ordering <pq||rs>, stored by a
// canonical representative with sign expansion on query.
class IntegralSet {
 public:
  int n_occ = 0;
  int n_virt = 0;
  std::vector<double> orbital_energies;

  int n_spin_orbitals() const { return n_occ + n_virt; }

  double h(int p, int q) const;
  void set_h(int p, int q, double value, double tol = 1e-10);
  bool has_one_body() const { return !one_body_.empty(); }

  double eri(int p, int q, int r, int s) const;
  void set_eri(int p, int q, int r, int s, double value, double tol = 1e-10);

  const std::map<std::pair<int, int>, double>& one_body() const { return one_body_; }
  const std::map<std::array<int, 4>, double>& two_body() const { return two_body_; }

  // One-body part of the many-body operator: the stored map when present,
  // otherwise the canonical completion diag(e) - occupied mean field, which
  // makes the Fock matrix equal diag(orbital_energies).
  RealMatrix effective_one_body() const;

  void check_indices(int p, const char* stage) const;

 private:
  std::map<std::pair<int, int>, double> one_body_;   // canonical p <= q
  std::map<std::array<int, 4>, double> two_body_;    // canonical antisymmetric rep
};

// Plain-text integral format: header "nOcc nVirt", one orbital energy per
// line, then "1B p q value" and "2B p q r s value" records (0-based).
IntegralSet load_integrals(const std::string& path, int orbital_cap = 12);
void save_integrals(const IntegralSet& ints, const std::string& path);

struct ExcitationIndex {
  std::vector<int> holes;      // ascending occupied indices
  std::vector<int> particles;  // ascending virtual indices (absolute)
  int rank = 0;
};

struct ExcitationBasis {
  int m = 0;
  int n_occ = 0;
  int n_virt = 0;
  std::vector<ExcitationIndex> strings;  // rank-major, lexicographic
  std::vector<Index> rank_offsets;       // size m+1, last entry = total
};

ExcitationBasis build_excitation_basis(int n_occ, int n_virt, int m, Index cap = 400);

struct RpaMatrices {
  RealMatrix a;
  RealMatrix b;
  std::vector<Index> rank_offsets;
  int m = 1;
  int n_occ = 0;
  int n_virt = 0;

  Index one_particle_size() const { return rank_offsets.size() > 1 ? rank_offsets[1] : 0; }
  RealMatrix block_a(int alpha, int beta) const;
  RealMatrix block_b(int alpha, int beta) const;
};

// Closed-form rank-1 matrices A = (e_a - e_i) delta + <ib||aj>, B = <ab||ij>.
RpaMatrices build_rpa_m1(const IntegralSet& ints);

// Double-commutator matrices over the rank-<=m excitation basis, evaluated
// by exact operator application on determinant bitstrings.
RpaMatrices build_mrpa_matrices(const IntegralSet& ints, int m, Index cap = 400);

// Commutator metric <HF|[K_mu, K_nu^dagger]|HF> over the same basis.
RealMatrix metric_matrix(const IntegralSet& ints, const ExcitationBasis& basis);

// Riccati embedding P = -A, Q = B, R = -B.
CareProblem rpa_to_care(const RpaMatrices& mats);

// Positive excitation branch of [[A, B], [-B, -A]];
// returns (sum Omega - tr A)/4. Complex eigenvalues beyond tolerance signal
// an instability and are reported, never truncated.
double plasmon_energy(const RpaMatrices& mats, double imag_tol = 1e-8);

double correlation_energy(const RealMatrix& b, const RealMatrix& t);

// Spectral norm of T B T + A T + T A + B (real-orbital form).
double riccati_residual(const RealMatrix& a, const RealMatrix& b, const RealMatrix& t);

}  // namespace qcare::mrpa
