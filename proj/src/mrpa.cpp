#include "qcare/mrpa.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace qcare::mrpa {

namespace {

// canonical antisymmetric representative: p < q, r < s, (p,q) <= (r,s)
struct EriKey {
  std::array<int, 4> key;
  int sign;  // value under the canonical key = sign * requested value
};

EriKey canonical_eri(int p, int q, int r, int s) {
  int sign = 1;
  if (p > q) {
    std::swap(p, q);
    sign = -sign;
  }
  if (r > s) {
    std::swap(r, s);
    sign = -sign;
  }
  if (std::pair(p, q) > std::pair(r, s)) {
    std::swap(p, r);
    std::swap(q, s);
  }
  return {{p, q, r, s}, sign};
}

}  // namespace

void IntegralSet::check_indices(int p, const char* stage) const {
  if (p < 0 || p >= n_spin_orbitals()) {
    throw IoError(stage, "orbital index out of range");
  }
}

double IntegralSet::h(int p, int q) const {
  check_indices(p, "one_body");
  check_indices(q, "one_body");
  if (p > q) std::swap(p, q);
  const auto it = one_body_.find({p, q});
  return it == one_body_.end() ? 0.0 : it->second;
}

void IntegralSet::set_h(int p, int q, double value, double tol) {
  check_indices(p, "one_body");
  check_indices(q, "one_body");
  if (p > q) std::swap(p, q);
  auto [it, inserted] = one_body_.try_emplace({p, q}, value);
  if (!inserted && std::abs(it->second - value) > tol) {
    throw IoError("one_body", "conflicting h entries for one index pair");
  }
}

double IntegralSet::eri(int p, int q, int r, int s) const {
  check_indices(p, "two_body");
  check_indices(q, "two_body");
  check_indices(r, "two_body");
  check_indices(s, "two_body");
  if (p == q || r == s) return 0.0;
  const EriKey canon = canonical_eri(p, q, r, s);
  const auto it = two_body_.find(canon.key);
  return it == two_body_.end() ? 0.0 : canon.sign * it->second;
}

void IntegralSet::set_eri(int p, int q, int r, int s, double value, double tol) {
  check_indices(p, "two_body");
  check_indices(q, "two_body");
  check_indices(r, "two_body");
  check_indices(s, "two_body");
  if (p == q || r == s) {
    if (std::abs(value) > tol) {
      throw IoError("two_body", "antisymmetry violated: repeated index with nonzero value");
    }
    return;
  }
  const EriKey canon = canonical_eri(p, q, r, s);
  const double canonical_value = canon.sign * value;
  auto [it, inserted] = two_body_.try_emplace(canon.key, canonical_value);
  if (!inserted && std::abs(it->second - canonical_value) > tol) {
    throw IoError("two_body", "antisymmetry violated beyond tolerance");
  }
}

RealMatrix IntegralSet::effective_one_body() const {
  const int nso = n_spin_orbitals();
  RealMatrix out = RealMatrix::Zero(nso, nso);
  if (has_one_body()) {
    for (const auto& [key, value] : one_body_) {
      out(key.first, key.second) = value;
      out(key.second, key.first) = value;
    }
    return out;
  }
  for (int p = 0; p < nso; ++p) {
    out(p, p) = orbital_energies.at(p);
    for (int q = p; q < nso; ++q) {
      double mean_field = 0.0;
      for (int k = 0; k < n_occ; ++k) mean_field += eri(p, k, q, k);
      out(p, q) -= mean_field;
      out(q, p) = out(p, q);
    }
  }
  return out;
}

IntegralSet load_integrals(const std::string& path, int orbital_cap) {
  std::ifstream in(path);
  if (!in) throw IoError("load_integrals", "cannot open " + path);

  auto next_line = [&in](std::string& line) {
    while (std::getline(in, line)) {
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '#') continue;
      return true;
    }
    return false;
  };

  std::string line;
  if (!next_line(line)) throw IoError("load_integrals", "missing header");
  IntegralSet ints;
  {
    std::istringstream head(line);
    if (!(head >> ints.n_occ >> ints.n_virt) || ints.n_occ < 1 || ints.n_virt < 1) {
      throw IoError("load_integrals", "malformed header (expected: nOcc nVirt)");
    }
  }
  if (ints.n_spin_orbitals() > orbital_cap) {
    throw IoError("load_integrals", "orbital count exceeds the desk-scale cap of " +
                                        std::to_string(orbital_cap));
  }
  for (int p = 0; p < ints.n_spin_orbitals(); ++p) {
    if (!next_line(line)) throw IoError("load_integrals", "missing orbital energy line");
    std::istringstream row(line);
    double e = 0.0;
    if (!(row >> e)) throw IoError("load_integrals", "malformed orbital energy: " + line);
    ints.orbital_energies.push_back(e);
  }
  while (next_line(line)) {
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag == "1B") {
      int p, q;
      double v;
      if (!(row >> p >> q >> v)) throw IoError("load_integrals", "malformed 1B record: " + line);
      ints.set_h(p, q, v);
    } else if (tag == "2B") {
      int p, q, r, s;
      double v;
      if (!(row >> p >> q >> r >> s >> v)) {
        throw IoError("load_integrals", "malformed 2B record: " + line);
      }
      ints.set_eri(p, q, r, s, v);
    } else {
      throw IoError("load_integrals", "unknown record tag: " + tag);
    }
  }
  return ints;
}

void save_integrals(const IntegralSet& ints, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_integrals", "cannot open " + path);
  out.precision(17);
  out << ints.n_occ << " " << ints.n_virt << "\n";
  for (const double e : ints.orbital_energies) out << e << "\n";
  for (const auto& [key, value] : ints.one_body()) {
    out << "1B " << key.first << " " << key.second << " " << value << "\n";
  }
  for (const auto& [key, value] : ints.two_body()) {
    out << "2B " << key[0] << " " << key[1] << " " << key[2] << " " << key[3] << " " << value
        << "\n";
  }
}

ExcitationBasis build_excitation_basis(int n_occ, int n_virt, int m, Index cap) {
  if (m < 1) throw IoError("excitation_basis", "rank cap must be >= 1");
  ExcitationBasis basis;
  basis.m = m;
  basis.n_occ = n_occ;
  basis.n_virt = n_virt;
  basis.rank_offsets.push_back(0);

  // lexicographic combination enumeration, holes outer, particles inner
  auto combinations = [](int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    if (k > n) return out;
    while (true) {
      out.push_back(idx);
      int i = k - 1;
      while (i >= 0 && idx[i] == n - k + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
  };

  for (int rank = 1; rank <= m; ++rank) {
    const auto hole_sets = combinations(n_occ, rank);
    const auto particle_sets = combinations(n_virt, rank);
    for (const auto& holes : hole_sets) {
      for (const auto& parts : particle_sets) {
        ExcitationIndex mu;
        mu.rank = rank;
        mu.holes = holes;
        mu.particles = parts;
        for (int& p : mu.particles) p += n_occ;  // absolute orbital labels
        basis.strings.push_back(std::move(mu));
      }
    }
    basis.rank_offsets.push_back(static_cast<Index>(basis.strings.size()));
    if (static_cast<Index>(basis.strings.size()) > cap) {
      throw IoError("excitation_basis", "basis size " + std::to_string(basis.strings.size()) +
                                            " exceeds the cap of " + std::to_string(cap));
    }
  }
  return basis;
}

namespace {

using Det = std::uint32_t;
using SparseVec = std::map<Det, double>;

int parity_below(Det d, int p) {
  const Det mask = (Det(1) << p) - 1;
  return (std::popcount(d & mask) & 1) ? -1 : 1;
}

// single fermionic operator; returns false when the state is annihilated
bool apply_op(Det& d, int& sign, int orbital, bool create) {
  const Det bit = Det(1) << orbital;
  if (create) {
    if (d & bit) return false;
    sign *= parity_below(d, orbital);
    d |= bit;
  } else {
    if (!(d & bit)) return false;
    sign *= parity_below(d, orbital);
    d &= ~bit;
  }
  return true;
}

struct StringOp {
  int orbital;
  bool create;
};

// operators listed right-to-left (application order)
std::vector<StringOp> excitation_ops(const ExcitationIndex& mu, bool dagger) {
  std::vector<StringOp> ops;
  const int rank = mu.rank;
  if (dagger) {
    // a+_{a_1} ... a+_{a_r} a_{i_r} ... a_{i_1}
    for (int k = 0; k < rank; ++k) ops.push_back({mu.holes[k], false});
    for (int k = rank - 1; k >= 0; --k) ops.push_back({mu.particles[k], true});
  } else {
    // adjoint: a+_{i_1} ... a+_{i_r} a_{a_r} ... a_{a_1}
    for (int k = 0; k < rank; ++k) ops.push_back({mu.particles[k], false});
    for (int k = rank - 1; k >= 0; --k) ops.push_back({mu.holes[k], true});
  }
  return ops;
}

SparseVec apply_string(const std::vector<StringOp>& ops, const SparseVec& v) {
  SparseVec out;
  for (const auto& [det, coeff] : v) {
    Det d = det;
    int sign = 1;
    bool alive = true;
    for (const auto& op : ops) {
      if (!apply_op(d, sign, op.orbital, op.create)) {
        alive = false;
        break;
      }
    }
    if (alive) out[d] += sign * coeff;
  }
  return out;
}

double dot(const SparseVec& a, const SparseVec& b) {
  double out = 0.0;
  const SparseVec& small = a.size() <= b.size() ? a : b;
  const SparseVec& large = a.size() <= b.size() ? b : a;
  for (const auto& [det, coeff] : small) {
    const auto it = large.find(det);
    if (it != large.end()) out += coeff * it->second;
  }
  return out;
}

// H = sum h_pq a+_p a_q + (1/4) sum <pq||rs> a+_p a+_q a_s a_r applied to a
// sparse vector; the quarter-sum collapses onto the stored canonical pairs.
SparseVec apply_hamiltonian(const SparseVec& v, const RealMatrix& h_one,
                            const IntegralSet& ints) {
  SparseVec out;
  const int nso = ints.n_spin_orbitals();
  for (const auto& [det, coeff] : v) {
    for (int q = 0; q < nso; ++q) {
      if (!(det & (Det(1) << q))) continue;
      for (int p = 0; p < nso; ++p) {
        const double hpq = h_one(p, q);
        if (hpq == 0.0) continue;
        Det d = det;
        int sign = 1;
        if (!apply_op(d, sign, q, false)) continue;
        if (!apply_op(d, sign, p, true)) continue;
        out[d] += sign * hpq * coeff;
      }
    }
    for (const auto& [key, value] : ints.two_body()) {
      // stored (p<q, r<s, (p,q) <= (r,s)); expand the mirrored term when the
      // pairs differ
      const int terms = (key[0] == key[2] && key[1] == key[3]) ? 1 : 2;
      for (int t = 0; t < terms; ++t) {
        const int p = t == 0 ? key[0] : key[2];
        const int q = t == 0 ? key[1] : key[3];
        const int r = t == 0 ? key[2] : key[0];
        const int s = t == 0 ? key[3] : key[1];
        Det d = det;
        int sign = 1;
        if (!apply_op(d, sign, r, false)) continue;
        if (!apply_op(d, sign, s, false)) continue;
        if (!apply_op(d, sign, q, true)) continue;
        if (!apply_op(d, sign, p, true)) continue;
        out[d] += sign * value * coeff;
      }
    }
  }
  return out;
}

}  // namespace

RealMatrix RpaMatrices::block_a(int alpha, int beta) const {
  const Index r0 = rank_offsets.at(alpha - 1), r1 = rank_offsets.at(alpha);
  const Index c0 = rank_offsets.at(beta - 1), c1 = rank_offsets.at(beta);
  return a.block(r0, c0, r1 - r0, c1 - c0);
}

RealMatrix RpaMatrices::block_b(int alpha, int beta) const {
  const Index r0 = rank_offsets.at(alpha - 1), r1 = rank_offsets.at(alpha);
  const Index c0 = rank_offsets.at(beta - 1), c1 = rank_offsets.at(beta);
  return b.block(r0, c0, r1 - r0, c1 - c0);
}

RpaMatrices build_rpa_m1(const IntegralSet& ints) {
  const int no = ints.n_occ;
  const int nv = ints.n_virt;
  const Index dim = static_cast<Index>(no) * nv;
  RpaMatrices out;
  out.m = 1;
  out.n_occ = no;
  out.n_virt = nv;
  out.rank_offsets = {0, dim};
  out.a = RealMatrix::Zero(dim, dim);
  out.b = RealMatrix::Zero(dim, dim);
  for (int i = 0; i < no; ++i) {
    for (int a = 0; a < nv; ++a) {
      const Index row = static_cast<Index>(i) * nv + a;
      const int aa = no + a;
      for (int j = 0; j < no; ++j) {
        for (int b = 0; b < nv; ++b) {
          const Index col = static_cast<Index>(j) * nv + b;
          const int bb = no + b;
          double el = ints.eri(i, bb, aa, j);
          if (i == j && a == b) {
            el += ints.orbital_energies.at(aa) - ints.orbital_energies.at(i);
          }
          out.a(row, col) = el;
          out.b(row, col) = ints.eri(aa, bb, i, j);
        }
      }
    }
  }
  return out;
}

RpaMatrices build_mrpa_matrices(const IntegralSet& ints, int m, Index cap) {
  const ExcitationBasis basis = build_excitation_basis(ints.n_occ, ints.n_virt, m, cap);
  const Index dim = static_cast<Index>(basis.strings.size());
  const RealMatrix h_one = ints.effective_one_body();

  const Det hf = (Det(1) << ints.n_occ) - 1;
  SparseVec hf_vec{{hf, 1.0}};
  const SparseVec h_hf = apply_hamiltonian(hf_vec, h_one, ints);

  // kets K+_nu |HF>, de-excited duals K_nu |HF> (identically empty), and the
  // strings themselves for the inner applications
  std::vector<SparseVec> kets(dim);
  std::vector<SparseVec> h_kets(dim);
  for (Index nu = 0; nu < dim; ++nu) {
    kets[nu] = apply_string(excitation_ops(basis.strings[nu], true), hf_vec);
    h_kets[nu] = apply_hamiltonian(kets[nu], h_one, ints);
  }

  RpaMatrices out;
  out.m = m;
  out.n_occ = ints.n_occ;
  out.n_virt = ints.n_virt;
  out.rank_offsets = basis.rank_offsets;
  out.a = RealMatrix::Zero(dim, dim);
  out.b = RealMatrix::Zero(dim, dim);

  for (Index mu = 0; mu < dim; ++mu) {
    const auto ops_dag = excitation_ops(basis.strings[mu], true);
    const auto ops_plain = excitation_ops(basis.strings[mu], false);
    const SparseVec bra = kets[mu];  // <HF| K_mu = (K+_mu |HF>)^T, real coefficients
    const SparseVec k_mu_hf = apply_string(ops_plain, hf_vec);  // identically zero

    for (Index nu = 0; nu < dim; ++nu) {
      const auto& str_nu = basis.strings[nu];
      // A = <HF|K_mu H K+_nu|HF> - <HF|K_mu K+_nu H|HF>
      //     - <HF|H K+_nu K_mu|HF> + <HF|K+_nu H K_mu|HF>
      const double t1 = dot(bra, h_kets[nu]);
      const double t2 = dot(bra, apply_string(excitation_ops(str_nu, true), h_hf));
      const double t3 =
          k_mu_hf.empty() ? 0.0
                          : dot(h_hf, apply_string(excitation_ops(str_nu, true), k_mu_hf));
      const double t4 =
          k_mu_hf.empty()
              ? 0.0
              : dot(apply_string(excitation_ops(str_nu, false), hf_vec),
                    apply_hamiltonian(k_mu_hf, h_one, ints));
      out.a(mu, nu) = t1 - t2 - t3 + t4;

      // B = -<HF|[K_mu,[H, K_nu]]|HF>; the surviving term is
      // <HF|K_mu K_nu H|HF>
      const double u2 = dot(bra, apply_string(excitation_ops(str_nu, false), h_hf));
      out.b(mu, nu) = u2;
    }
  }
  return out;
}

RealMatrix metric_matrix(const IntegralSet& ints, const ExcitationBasis& basis) {
  const Index dim = static_cast<Index>(basis.strings.size());
  const Det hf = (Det(1) << ints.n_occ) - 1;
  SparseVec hf_vec{{hf, 1.0}};
  std::vector<SparseVec> kets(dim);
  for (Index nu = 0; nu < dim; ++nu) {
    kets[nu] = apply_string(excitation_ops(basis.strings[nu], true), hf_vec);
  }
  RealMatrix g = RealMatrix::Zero(dim, dim);
  for (Index mu = 0; mu < dim; ++mu) {
    const SparseVec k_mu_hf = apply_string(excitation_ops(basis.strings[mu], false), hf_vec);
    for (Index nu = 0; nu < dim; ++nu) {
      const double direct = dot(kets[mu], kets[nu]);
      const double exchange =
          k_mu_hf.empty()
              ? 0.0
              : dot(apply_string(excitation_ops(basis.strings[nu], false), hf_vec), k_mu_hf);
      g(mu, nu) = direct - exchange;
    }
  }
  return g;
}

CareProblem rpa_to_care(const RpaMatrices& mats) {
  const Index dim = mats.a.rows();
  Matrix p = -mats.a.cast<Complex>();
  Matrix q = mats.b.cast<Complex>();
  Matrix r = -mats.b.cast<Complex>();
  (void)dim;
  return CareProblem::make(std::move(p), std::move(q), std::move(r));
}

double plasmon_energy(const RpaMatrices& mats, double imag_tol) {
  const Index dim = mats.a.rows();
  Matrix rpa = Matrix::Zero(2 * dim, 2 * dim);
  rpa.topLeftCorner(dim, dim) = mats.a.cast<Complex>();
  rpa.topRightCorner(dim, dim) = mats.b.cast<Complex>();
  rpa.bottomLeftCorner(dim, dim) = -mats.b.cast<Complex>();
  rpa.bottomRightCorner(dim, dim) = -mats.a.cast<Complex>();

  Eigen::ComplexEigenSolver<Matrix> es(rpa, /*computeEigenvectors=*/false);
  const double scale = std::max(1.0, spectral_norm(rpa));
  double omega_sum = 0.0;
  Index positive = 0;
  for (Index i = 0; i < 2 * dim; ++i) {
    const Complex lam = es.eigenvalues()(i);
    if (std::abs(lam.imag()) > imag_tol * scale) {
      throw SpectralError("plasmon_energy", "complex excitation energy: instability");
    }
    if (lam.real() > 0.0) {
      omega_sum += lam.real();
      ++positive;
    }
  }
  if (positive != dim) {
    throw SpectralError("plasmon_energy", "positive branch has wrong dimension");
  }
  return 0.25 * (omega_sum - mats.a.trace());
}

double correlation_energy(const RealMatrix& b, const RealMatrix& t) {
  if (b.rows() != t.cols() || b.cols() != t.rows()) {
    throw IoError("correlation_energy", "dimension mismatch");
  }
  return 0.25 * (b * t).trace();
}

double riccati_residual(const RealMatrix& a, const RealMatrix& b, const RealMatrix& t) {
  return spectral_norm(RealMatrix(t * b * t + a * t + t * a + b));
}

}  // namespace qcare::mrpa
