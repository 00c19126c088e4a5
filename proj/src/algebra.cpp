#include "mgt/algebra.hpp"

#include <algorithm>

namespace mgt {

GQ frame_dot(int g, int a, int b) {
  if (a < 0 || b < 0 || a >= 2 * g || b >= 2 * g) throw numeric_error("frame label out of range");
  bool a_hol = a < g, b_hol = b < g;
  if (a_hol == b_hol) return GQ();
  if (a_hol && b - g == a) return GQ::i(-2);  // psi_i . conj(psi_i)
  if (!a_hol && a - g == b) return GQ::i(2);
  return GQ();
}

GQ intersection_pairing(int g, const GQVec& u, const GQVec& v) {
  if (static_cast<int>(u.size()) != 2 * g || static_cast<int>(v.size()) != 2 * g)
    throw numeric_error("coordinate vector has wrong length");
  GQ acc;
  for (int a = 0; a < 2 * g; ++a) {
    if (u[a].is_zero()) continue;
    // frame_dot is nonzero only at the conjugate label.
    int b = a < g ? a + g : a - g;
    acc = acc + u[a] * v[b] * frame_dot(g, a, b);
  }
  return acc;
}

cplx intersection_pairing(int g, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
  if (u.size() != 2 * g || v.size() != 2 * g) throw numeric_error("coordinate vector has wrong length");
  cplx acc = 0;
  for (int a = 0; a < 2 * g; ++a) {
    int b = a < g ? a + g : a - g;
    double s = a < g ? -2.0 : 2.0;
    acc += u[a] * v[b] * cplx(0, s);
  }
  return acc;
}

std::vector<GQ> omega_hat(int g) {
  std::vector<GQ> m(static_cast<std::size_t>(g) * g);
  for (int i = 0; i < g; ++i) m[static_cast<std::size_t>(i) * g + i] = GQ(1);
  return m;
}

GQVec omega_hat_contract(int g, const GQVec& v) {
  auto m = omega_hat(g);
  GQVec out(2 * g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      const GQ& c = m[static_cast<std::size_t>(i) * g + j];
      if (c.is_zero()) continue;
      // c * psi_i * (conj(psi_j) . v); the pairing only sees v's psi_j slot.
      out[i] = out[i] + c * frame_dot(g, g + j, j) * v[j];
    }
  return out;
}

Wedge3Basis Wedge3Basis::make(int g) {
  Wedge3Basis b;
  b.g = g;
  for (int a = 0; a < 2 * g; ++a)
    for (int c = a + 1; c < 2 * g; ++c)
      for (int d = c + 1; d < 2 * g; ++d) b.triples.push_back({a, c, d});
  return b;
}

int Wedge3Basis::index(const std::array<int, 3>& t) const {
  auto it = std::lower_bound(triples.begin(), triples.end(), t);
  if (it == triples.end() || *it != t) throw numeric_error("triple not in basis");
  return static_cast<int>(it - triples.begin());
}

std::pair<int, int> triple_type(int g, const std::array<int, 3>& t) {
  int p = 0;
  for (int x : t) p += x < g ? 1 : 0;
  return {p, 3 - p};
}

GQVec wedge3_conj(const Wedge3Basis& basis, const GQVec& v) {
  int g = basis.g;
  GQVec out(basis.triples.size());
  for (std::size_t k = 0; k < basis.triples.size(); ++k) {
    if (v[k].is_zero()) continue;
    std::array<int, 3> s = basis.triples[k];
    for (int& x : s) x = x < g ? x + g : x - g;
    // sort and track the permutation sign
    int sign = 1;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2 - i; ++j)
        if (s[j] > s[j + 1]) {
          std::swap(s[j], s[j + 1]);
          sign = -sign;
        }
    GQ c = v[k].conj();
    if (sign < 0) c = -c;
    int idx = basis.index(s);
    out[idx] = out[idx] + c;
  }
  return out;
}

GQVec contract_wedge3(const Wedge3Basis& basis, const GQVec& v) {
  int g = basis.g;
  GQVec out(2 * g);
  for (std::size_t k = 0; k < basis.triples.size(); ++k) {
    if (v[k].is_zero()) continue;
    auto [a, b, c] = basis.triples[k];
    struct Term {
      int keep;
      int x, y;
    };
    const Term terms[3] = {{a, b, c}, {b, c, a}, {c, a, b}};
    for (const Term& t : terms) {
      GQ d = frame_dot(g, t.x, t.y);
      if (!d.is_zero()) out[t.keep] = out[t.keep] + v[k] * d;
    }
  }
  return out;
}

namespace {

// 6 * permanent of the 3x3 matrix of frame pairings between two triples.
GQ triple_pairing(int g, const std::array<int, 3>& s, const std::array<int, 3>& t) {
  GQ m[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = frame_dot(g, s[i], t[j]);
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  GQ acc;
  for (auto& p : perms) acc = acc + m[0][p[0]] * m[1][p[1]] * m[2][p[2]];
  return acc * GQ(6);
}

}  // namespace

GQ pairing_M0(const Wedge3Basis& basis, const GQVec& v, const GQVec& w) {
  GQ acc;
  for (std::size_t a = 0; a < basis.triples.size(); ++a) {
    if (v[a].is_zero()) continue;
    for (std::size_t b = 0; b < basis.triples.size(); ++b) {
      if (w[b].is_zero()) continue;
      GQ p = triple_pairing(basis.g, basis.triples[a], basis.triples[b]);
      if (!p.is_zero()) acc = acc + v[a] * w[b] * p;
    }
  }
  return acc;
}

cplx pairing_M0(const Wedge3Basis& basis, const Eigen::VectorXcd& v, const Eigen::VectorXcd& w) {
  cplx acc = 0;
  for (std::size_t a = 0; a < basis.triples.size(); ++a) {
    if (v[static_cast<Eigen::Index>(a)] == cplx(0)) continue;
    for (std::size_t b = 0; b < basis.triples.size(); ++b) {
      if (w[static_cast<Eigen::Index>(b)] == cplx(0)) continue;
      GQ p = triple_pairing(basis.g, basis.triples[a], basis.triples[b]);
      if (!p.is_zero())
        acc += v[static_cast<Eigen::Index>(a)] * w[static_cast<Eigen::Index>(b)] * p.to_cplx();
    }
  }
  return acc;
}

namespace {

// Reduced row echelon form in place; returns pivot columns.
std::vector<int> gq_rref(std::vector<GQVec>& rows) {
  std::vector<int> pivots;
  if (rows.empty()) return pivots;
  std::size_t ncols = rows[0].size(), lead = 0;
  for (std::size_t r = 0; r < rows.size() && lead < ncols; ++lead) {
    std::size_t sel = r;
    while (sel < rows.size() && rows[sel][lead].is_zero()) ++sel;
    if (sel == rows.size()) continue;
    std::swap(rows[r], rows[sel]);
    GQ inv = GQ(1) / rows[r][lead];
    for (auto& x : rows[r]) x = x * inv;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][lead].is_zero()) continue;
      GQ f = rows[i][lead];
      for (std::size_t c = 0; c < ncols; ++c) rows[i][c] = rows[i][c] - f * rows[r][c];
    }
    pivots.push_back(static_cast<int>(lead));
    ++r;
  }
  return pivots;
}

}  // namespace

int gq_rank(std::vector<GQVec> rows) { return static_cast<int>(gq_rref(rows).size()); }

USubspace u_subspace(int g) {
  if (g < 1) throw model_error("u_subspace requires genus >= 1");
  USubspace u;
  u.g = g;
  u.basis = Wedge3Basis::make(g);
  int n = u.basis.dim();

  // The contraction preserves Hodge type, so the kernel splits by type. Work
  // block by block to keep the grading explicit.
  for (int p = 3; p >= 0; --p) {
    int q = 3 - p;
    std::vector<int> cols;  // triple indices of this type
    for (int k = 0; k < n; ++k)
      if (triple_type(g, u.basis.triples[k]) == std::make_pair(p, q)) cols.push_back(k);
    if (cols.empty()) continue;

    // Matrix of the contraction restricted to the block: rows = H coords.
    std::vector<GQVec> rows(2 * g, GQVec(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      GQVec e(n);
      e[cols[c]] = GQ(1);
      GQVec img = contract_wedge3(u.basis, e);
      for (int r = 0; r < 2 * g; ++r) rows[r][c] = img[r];
    }
    std::vector<int> pivots = gq_rref(rows);

    // Null-space basis from the RREF: one vector per free column.
    std::vector<bool> is_pivot(cols.size(), false);
    for (int pc : pivots) is_pivot[pc] = true;
    for (std::size_t free_c = 0; free_c < cols.size(); ++free_c) {
      if (is_pivot[free_c]) continue;
      GQVec vec(n);
      vec[cols[free_c]] = GQ(1);
      for (std::size_t pi = 0; pi < pivots.size(); ++pi) {
        // pivot row pi has 1 at pivots[pi]; its entry at free_c moves across.
        const GQ& coef = rows[pi][free_c];
        if (!coef.is_zero()) vec[cols[pivots[pi]]] = -coef;
      }
      u.vectors.push_back(std::move(vec));
      u.types.emplace_back(p, q);
    }
  }
  return u;
}

std::vector<int> USubspace::block(int p, int q) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < types.size(); ++i)
    if (types[i] == std::make_pair(p, q)) out.push_back(static_cast<int>(i));
  return out;
}

Eigen::VectorXcd to_cplx(const GQVec& v) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i].to_cplx();
  return out;
}

}  // namespace mgt
