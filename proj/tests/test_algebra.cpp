#include <doctest.h>

#include <array>
#include <random>
#include <vector>

#include <mgt/algebra.hpp>

using namespace mgt;

namespace {

// Independent 36-term implementation of the triple pairing for decomposable
// f1^f2^f3 against h1^h2^h3, using a local copy of the frame intersection
// table: labels 0..g-1 holomorphic, g..2g-1 antiholomorphic,
// psi_i . conj(psi_j) = -2i delta, conj(psi_i) . psi_j = +2i delta.
GQ local_dot(int g, int a, int b) {
  if (a < g && b >= g && b - g == a) return GQ::i(-2);
  if (a >= g && b < g && a - g == b) return GQ::i(2);
  return GQ(0);
}

GQ brute_triple_pairing(int g, const std::array<int, 3>& f, const std::array<int, 3>& h) {
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  GQ total(0);
  for (const auto& s : perms)
    for (const auto& t : perms) {
      GQ term(1);
      for (int a = 0; a < 3; ++a) term = term * local_dot(g, f[s[a]], h[t[a]]);
      total = total + term;
    }
  return total;
}

GQVec decomposable(const Wedge3Basis& basis, std::array<int, 3> t) {
  // sort with sign
  GQ sign(1);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2 - i; ++j)
      if (t[j] > t[j + 1]) {
        std::swap(t[j], t[j + 1]);
        sign = -sign;
      }
  GQVec v(basis.dim());
  v[static_cast<std::size_t>(basis.index(t))] = sign;
  return v;
}

}  // namespace

TEST_SUITE("algebra") {
  TEST_CASE("gaussian-rational arithmetic") {
    GQ a(Rat(1), Rat(2)), b(Rat(3), Rat(-1));
    GQ p = a * b;  // (1+2i)(3-i) = 5+5i
    CHECK(p.re == Rat(5));
    CHECK(p.im == Rat(5));
    GQ q = p / b;
    CHECK(q == a);
    CHECK((a - a).is_zero());
    CHECK(a.conj().im == Rat(-2));
    CHECK_THROWS_AS(a / GQ(0), numeric_error);
    cplx z = GQ(Rat(1, 2), Rat(-1, 4)).to_cplx();
    CHECK(z.real() == doctest::Approx(0.5));
    CHECK(z.imag() == doctest::Approx(-0.25));
  }

  TEST_CASE("frame intersection table") {
    for (int g : {1, 2, 3}) {
      for (int a = 0; a < 2 * g; ++a)
        for (int b = 0; b < 2 * g; ++b) {
          GQ d = frame_dot(g, a, b);
          CHECK(d == local_dot(g, a, b));
          // antisymmetry of the intersection pairing
          CHECK(d == -frame_dot(g, b, a));
        }
    }
  }

  TEST_CASE("pairing extends bilinearly to coordinate vectors") {
    int g = 2;
    GQVec u(4), v(4);
    u[0] = GQ(2);          // 2 psi_1
    u[3] = GQ::i();        // + i conj(psi_2)
    v[2] = GQ(1);          // conj(psi_1)
    v[1] = GQ(Rat(1, 3), Rat(0));  // + (1/3) psi_2
    // u.v = 2*(psi1 . conj(psi1)) + i/3 * (conj(psi2) . psi2) = -4i + i/3*2i
    GQ d = intersection_pairing(g, u, v);
    CHECK(d.re == Rat(-2, 3));
    CHECK(d.im == Rat(-4));
  }

  TEST_CASE("canonical hodge element is the identity and contracts to 2i x hol part") {
    for (int g : {2, 3}) {
      std::vector<GQ> w = omega_hat(g);
      REQUIRE(static_cast<int>(w.size()) == g * g);
      for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
          CHECK(w[static_cast<std::size_t>(i * g + j)] == (i == j ? GQ(1) : GQ(0)));

      std::mt19937 rng(7);
      std::uniform_int_distribution<int> coeff(-3, 3);
      GQVec v(static_cast<std::size_t>(2 * g));
      for (auto& x : v) x = GQ(Rat(coeff(rng)), Rat(coeff(rng)));
      GQVec c = omega_hat_contract(g, v);
      REQUIRE(c.size() == v.size());
      for (int a = 0; a < 2 * g; ++a) {
        GQ expect = a < g ? GQ::i(2) * v[static_cast<std::size_t>(a)] : GQ(0);
        CHECK(c[static_cast<std::size_t>(a)] == expect);
      }
    }
  }

  TEST_CASE("wedge basis dimensions and index lookup") {
    Wedge3Basis w2 = Wedge3Basis::make(2);
    CHECK(w2.dim() == 4);  // C(4,3)
    Wedge3Basis w3 = Wedge3Basis::make(3);
    CHECK(w3.dim() == 20);  // C(6,3)
    for (int k = 0; k < w3.dim(); ++k) CHECK(w3.index(w3.triples[static_cast<std::size_t>(k)]) == k);
    // types partition: for g=3 the (p,q) block sizes are 1 / 9 / 9 / 1
    int count[4] = {0, 0, 0, 0};
    for (const auto& t : w3.triples) ++count[triple_type(3, t).first];
    CHECK(count[3] == 1);
    CHECK(count[2] == 9);
    CHECK(count[1] == 9);
    CHECK(count[0] == 1);
  }

  TEST_CASE("conjugation on wedge coordinates is an involution swapping types") {
    Wedge3Basis w = Wedge3Basis::make(3);
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> coeff(-3, 3);
    GQVec v(static_cast<std::size_t>(w.dim()));
    for (auto& x : v) x = GQ(Rat(coeff(rng)), Rat(coeff(rng)));
    GQVec vv = wedge3_conj(w, wedge3_conj(w, v));
    for (int k = 0; k < w.dim(); ++k) CHECK(vv[static_cast<std::size_t>(k)] == v[static_cast<std::size_t>(k)]);

    // a pure (2,1) basis triple conjugates into the (1,2) block
    GQVec e = decomposable(w, {0, 1, 3});
    GQVec ec = wedge3_conj(w, e);
    for (int k = 0; k < w.dim(); ++k)
      if (!ec[static_cast<std::size_t>(k)].is_zero())
        CHECK(triple_type(3, w.triples[static_cast<std::size_t>(k)]) == std::pair<int, int>(1, 2));
  }

  TEST_CASE("contraction of a decomposable matches the 3-term formula") {
    int g = 3;
    Wedge3Basis w = Wedge3Basis::make(g);
    std::array<int, 3> t = {0, 2, 3};  // psi_1 ^ psi_3 ^ conj(psi_1)
    GQVec c = contract_wedge3(w, decomposable(w, t));
    // (f2.f3) f1 + (f3.f1) f2 + (f1.f2) f3 with f1=psi1, f2=psi3, f3=conj(psi1):
    // f2.f3 = 0, f3.f1 = +2i, f1.f2 = 0 -> 2i psi_3
    REQUIRE(static_cast<int>(c.size()) == 2 * g);
    for (int a = 0; a < 2 * g; ++a) CHECK(c[static_cast<std::size_t>(a)] == (a == 2 ? GQ::i(2) : GQ(0)));
  }

  TEST_CASE("triple pairing matches an independent 36-term evaluation") {
    int g = 3;
    Wedge3Basis w = Wedge3Basis::make(g);
    std::vector<std::array<int, 3>> samples = {
        {0, 1, 2}, {3, 4, 5}, {0, 1, 3}, {0, 3, 4}, {1, 2, 5}, {0, 2, 4}, {2, 4, 5}};
    for (const auto& f : samples)
      for (const auto& h : samples) {
        GQ got = pairing_M0(w, decomposable(w, f), decomposable(w, h));
        CHECK(got == brute_triple_pairing(g, f, h));
      }
    // frozen values for the full holomorphic vs antiholomorphic triples
    GQ p = pairing_M0(w, decomposable(w, {0, 1, 2}), decomposable(w, {3, 4, 5}));
    CHECK(p.re == Rat(0));
    CHECK(p.im == Rat(48));
    GQ q = pairing_M0(w, decomposable(w, {3, 4, 5}), decomposable(w, {0, 1, 2}));
    CHECK(q.re == Rat(0));
    CHECK(q.im == Rat(-48));
  }

  TEST_CASE("triple pairing is antisymmetric") {
    Wedge3Basis w = Wedge3Basis::make(3);
    std::mt19937 rng(23);
    std::uniform_int_distribution<int> coeff(-3, 3);
    for (int trial = 0; trial < 5; ++trial) {
      GQVec v(static_cast<std::size_t>(w.dim())), u(static_cast<std::size_t>(w.dim()));
      for (auto& x : v) x = GQ(Rat(coeff(rng)), Rat(coeff(rng)));
      for (auto& x : u) x = GQ(Rat(coeff(rng)), Rat(coeff(rng)));
      CHECK(pairing_M0(w, v, u) == -pairing_M0(w, u, v));
    }
  }

  TEST_CASE("kernel of the contraction: dimensions and gradings") {
    CHECK(u_subspace(1).dim() == 0);
    CHECK(u_subspace(2).dim() == 0);  // C(4,3) = 4 = 2g, contraction is onto
    USubspace u = u_subspace(3);
    CHECK(u.dim() == 14);
    CHECK(u.block(3, 0).size() == 1);
    CHECK(u.block(2, 1).size() == 6);
    CHECK(u.block(1, 2).size() == 6);
    CHECK(u.block(0, 3).size() == 1);
    // every reported vector really lies in the kernel, exactly
    for (const GQVec& v : u.vectors)
      for (const GQ& x : contract_wedge3(u.basis, v)) CHECK(x.is_zero());
    // vectors are linearly independent
    CHECK(gq_rank(u.vectors) == 14);
  }

  TEST_CASE("pairing restricted to the kernel subspace is nondegenerate") {
    USubspace u = u_subspace(3);
    std::vector<GQVec> gram;
    for (int a = 0; a < u.dim(); ++a) {
      GQVec row(static_cast<std::size_t>(u.dim()));
      for (int b = 0; b < u.dim(); ++b)
        row[static_cast<std::size_t>(b)] =
            pairing_M0(u.basis, u.vectors[static_cast<std::size_t>(a)], u.vectors[static_cast<std::size_t>(b)]);
      gram.push_back(std::move(row));
    }
    CHECK(gq_rank(gram) == 14);
  }

  TEST_CASE("-i <v, conj v> is positive on the (1,2) block") {
    USubspace u = u_subspace(3);
    std::vector<int> idx = u.block(1, 2);
    std::mt19937 rng(91);
    std::uniform_int_distribution<int> coeff(-4, 4);
    int tested = 0;
    for (int trial = 0; trial < 40 && tested < 25; ++trial) {
      GQVec v(static_cast<std::size_t>(u.basis.dim()));
      bool nonzero = false;
      for (int a : idx) {
        GQ c(Rat(coeff(rng)), Rat(coeff(rng)));
        if (!c.is_zero()) nonzero = true;
        const GQVec& base = u.vectors[static_cast<std::size_t>(a)];
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = v[k] + c * base[k];
      }
      if (!nonzero) continue;
      ++tested;
      GQ p = pairing_M0(u.basis, v, wedge3_conj(u.basis, v));
      // -i p real and positive <=> Re p = 0 and Im p > 0, checked exactly
      CHECK(p.re == Rat(0));
      CHECK(p.im > Rat(0));
    }
    CHECK(tested == 25);
  }

  TEST_CASE("exact rank helper") {
    GQVec r1 = {GQ(1), GQ(2), GQ::i()};
    GQVec r2 = {GQ(2), GQ(4), GQ::i(2)};  // 2 * r1
    GQVec r3 = {GQ(0), GQ(1), GQ(0)};
    CHECK(gq_rank({r1, r2}) == 1);
    CHECK(gq_rank({r1, r2, r3}) == 2);
    CHECK(gq_rank({}) == 0);
    Eigen::VectorXcd z = to_cplx(r1);
    CHECK(z.size() == 3);
    CHECK(z[2] == cplx(0, 1));
  }
}
