#pragma once

#include <Eigen/Dense>
#include <array>
#include <boost/rational.hpp>
#include <utility>
#include <vector>

#include "mgt/common.hpp"

namespace mgt {

// Exact Gaussian-rational scalar. Used for the cohomological layer so that
// frame pairings, the U-subspace and the 36-term triple pairing are computed
// without floating point. Magnitudes stay tiny, so long long never overflows.
using Rat = boost::rational<long long>;

struct GQ {
  Rat re{0};
  Rat im{0};

  GQ() = default;
  GQ(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}
  explicit GQ(long long r) : re(r), im(0) {}
  static GQ i(long long k = 1) { return GQ(Rat(0), Rat(k)); }

  // Compare numerators, not rational == int: the latter recurses under
  // C++20's reversed-candidate rules with this Boost version.
  bool is_zero() const { return re.numerator() == 0 && im.numerator() == 0; }
  GQ conj() const { return GQ(re, -im); }
  cplx to_cplx() const {
    return {boost::rational_cast<double>(re), boost::rational_cast<double>(im)};
  }

  friend GQ operator+(const GQ& a, const GQ& b) { return GQ(a.re + b.re, a.im + b.im); }
  friend GQ operator-(const GQ& a, const GQ& b) { return GQ(a.re - b.re, a.im - b.im); }
  friend GQ operator-(const GQ& a) { return GQ(-a.re, -a.im); }
  friend GQ operator*(const GQ& a, const GQ& b) {
    return GQ(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re);
  }
  friend GQ operator/(const GQ& a, const GQ& b) {
    Rat n = b.re * b.re + b.im * b.im;
    if (n.numerator() == 0) throw numeric_error("division by zero Gaussian rational");
    return GQ((a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n);
  }
  friend bool operator==(const GQ& a, const GQ& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const GQ& a, const GQ& b) { return !(a == b); }
};

using GQVec = std::vector<GQ>;

// The first-cohomology frame of a genus-g surface: labels 0..g-1 are the
// orthonormal holomorphic forms psi_1..psi_g, labels g..2g-1 their conjugates.
// In this frame the intersection pairing is
//   psi_i . conj(psi_j) = -2i delta_ij,   conj(psi_i) . psi_j = +2i delta_ij,
// and vanishes on pairs of the same kind.
GQ frame_dot(int g, int a, int b);

// Bilinear extension of the intersection pairing to coordinate vectors.
GQ intersection_pairing(int g, const GQVec& u, const GQVec& v);
cplx intersection_pairing(int g, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v);

// Coefficient matrix (row-major g x g) of the canonical Hodge element
// sum_i psi_i (x) conj(psi_i) in H' (x) H''; identity in any unitary frame.
std::vector<GQ> omega_hat(int g);

// Contraction of omega_hat against v through the intersection pairing in the
// second slot: sum_i psi_i * (conj(psi_i) . v). Returns 2g coordinates; equals
// 2i times the holomorphic component of v.
GQVec omega_hat_contract(int g, const GQVec& v);

// Basis of Lambda^3 H: ordered triples a<b<c of frame labels, lexicographic.
struct Wedge3Basis {
  int g = 0;
  std::vector<std::array<int, 3>> triples;

  static Wedge3Basis make(int g);
  int dim() const { return static_cast<int>(triples.size()); }
  int index(const std::array<int, 3>& t) const;
};

// Hodge type (p,q) of a basis triple: p = #holomorphic labels.
std::pair<int, int> triple_type(int g, const std::array<int, 3>& t);

// Complex conjugation on Lambda^3 H coordinates (psi_i <-> conj(psi_i),
// coefficients conjugated, signs from reordering the swapped triple).
GQVec wedge3_conj(const Wedge3Basis& basis, const GQVec& v);

// The contraction Lambda^3 H -> H,
//   f1^f2^f3 |-> (f2.f3) f1 + (f3.f1) f2 + (f1.f2) f3.
GQVec contract_wedge3(const Wedge3Basis& basis, const GQVec& v);

// The pairing on Lambda^3 H used on U: for decomposables,
//   <f1^f2^f3, h1^h2^h3> = sum over sigma,tau in S3 of prod_a f_sigma(a).h_tau(a)
// (equivalently 6 times the permanent of the 3x3 pairing matrix). Bilinear
// and antisymmetric: swapping the arguments transposes and negates the
// pairing matrix, and perm(-P^T) = -perm(P) in odd dimension.
GQ pairing_M0(const Wedge3Basis& basis, const GQVec& v, const GQVec& w);
cplx pairing_M0(const Wedge3Basis& basis, const Eigen::VectorXcd& v, const Eigen::VectorXcd& w);

// U = ker(contraction) in Lambda^3 H, computed exactly and graded by Hodge
// type. dim U = C(2g,3) - 2g for g >= 2 (contraction is onto), 0 for g <= 1.
struct USubspace {
  int g = 0;
  Wedge3Basis basis;
  std::vector<GQVec> vectors;               // coordinates over basis.triples
  std::vector<std::pair<int, int>> types;   // Hodge type of each vector

  int dim() const { return static_cast<int>(vectors.size()); }
  std::vector<int> block(int p, int q) const;
};

USubspace u_subspace(int g);

// Exact rank of a list of row vectors.
int gq_rank(std::vector<GQVec> rows);

// Convert exact coordinates to a complex vector.
Eigen::VectorXcd to_cplx(const GQVec& v);

}  // namespace mgt
