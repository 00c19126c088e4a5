#include "mgt/johnson.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "mgt/basis.hpp"
#include "mgt/oneform.hpp"

namespace mgt {

E1Coefficients e1_coefficients(const ATensor& A) {
  const int g = A.g;
  E1Coefficients C;
  C.g = g;
  C.raw.assign(static_cast<std::size_t>(g) * g * g * g, cplx(0.0));
  // partial trace T(j,k) = sum_m A_{m jbar k mbar}
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(g, g);
  for (int j = 0; j < g; ++j)
    for (int k = 0; k < g; ++k)
      for (int m = 0; m < g; ++m) T(j, k) += A.entry(m, j, k, m);
  const cplx c3i(0.0, 3.0);
  for (int j = 0; j < g; ++j)
    for (int l = 0; l < g; ++l)
      for (int k = 0; k < g; ++k)
        for (int i = 0; i < g; ++i) {
          cplx v = -c3i * A.entry(i, j, k, l);
          if (i == l) v += c3i * T(j, k);
          C.raw[static_cast<std::size_t>(((j * g + l) * g + k)) * g + i] = v;
        }
  double res = 0.0;
  for (int j = 0; j < g; ++j)
    for (int l = 0; l < g; ++l)
      for (int k = 0; k < g; ++k)
        for (int i = 0; i < g; ++i)
          res = std::max(res, std::abs(std::conj(C.at(j, l, k, i)) + C.at(k, i, j, l)));
  C.conj_pattern_residual = res;
  return C;
}

cplx kahler_contraction(const ATensor& A) {
  E1Coefficients C = e1_coefficients(A);
  const int g = A.g;
  cplx s = 0.0;
  for (int j = 0; j < g; ++j)
    for (int l = 0; l < g; ++l) s += C.at(j, l, j, l) + C.at(j, l, l, j);
  return cplx(0.0, 2.0) * s;
}

QuadDiffBasis quad_diff_basis(const SurfaceState& state) {
  const auto* curve = std::get_if<HyperellipticCurve>(&state.model);
  if (!curve) throw model_error("quadratic differentials need a hyperelliptic curve model");
  const int g = curve->genus();
  if (g < 2) throw model_error("quadratic differential basis needs genus >= 2");

  QuadDiffBasis qd;
  qd.g = g;
  qd.n_even = 2 * g - 1;
  qd.n_odd = g - 2;
  const int n = qd.dim();
  qd.parity.resize(n);
  for (int b = 0; b < qd.n_even; ++b) qd.parity[b] = 1;
  for (int b = 0; b < qd.n_odd; ++b) qd.parity[qd.n_even + b] = -1;

  const auto& mesh = state.mesh;
  const int nt = static_cast<int>(mesh.triangles.size());
  HyperellipticEvaluator ev = HyperellipticEvaluator::make(*curve);

  Eigen::VectorXd rho = bergman_node_density(mesh, state.basis);
  const double prenorm = state.B.prenorm_total;

  qd.gram.setZero(n, n);
  qd.proj.setZero(n, nt);
  qd.rho_tri.setZero(nt);

  Eigen::MatrixXcd vals(n, 16);  // per-triangle scratch; rules have <= 16 nodes
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& rule = mesh.rule(t);
    const std::size_t off = mesh.node_offset[t];
    const std::size_t nq = rule.nodes.size();
    if (static_cast<Eigen::Index>(nq) > vals.cols()) vals.resize(n, static_cast<Eigen::Index>(nq));
    const double area = mesh.chart_area(t);
    const double sgn = mesh.sheet_sign(t);

    for (std::size_t q = 0; q < nq; ++q) {
      const cplx z = mesh.node_position(t, q);
      if (tri.chart == Chart::affine) {
        const cplx y = ev.y_affine(z);
        const cplx inv_y2 = 1.0 / (y * y);
        cplx p = inv_y2;  // x^a / y^2
        for (int a = 0; a < qd.n_even; ++a) {
          vals(a, static_cast<Eigen::Index>(q)) = p;
          p *= z;
        }
        cplx po = sgn / y;  // x^b / y, sheet-signed
        for (int b = 0; b < qd.n_odd; ++b) {
          vals(qd.n_even + b, static_cast<Eigen::Index>(q)) = po;
          po *= z;
        }
      } else {
        const cplx T = ev.y_infinity(z);
        const cplx inv_T2 = 1.0 / (T * T);
        // basis row a carries u^{2g-2-a} / T^2; fill ascending powers of u
        // into descending rows.
        cplx pe = inv_T2;
        for (int a = 2 * g - 2; a >= 0; --a) {
          vals(a, static_cast<Eigen::Index>(q)) = pe;
          pe *= z;
        }
        cplx poe = sgn / T;  // row n_even + b carries u^{g-3-b} / T, sheet-signed
        for (int b = qd.n_odd - 1; b >= 0; --b) {
          vals(qd.n_even + b, static_cast<Eigen::Index>(q)) = poe;
          poe *= z;
        }
      }
    }

    for (std::size_t q = 0; q < nq; ++q) {
      const double w = area * rule.nodes[q].weight;
      const double ir = prenorm / rho[static_cast<Eigen::Index>(off + q)];
      const double wr = w * ir;
      qd.rho_tri[t] += wr;
      for (int b1 = 0; b1 < n; ++b1) {
        const cplx vb = vals(b1, static_cast<Eigen::Index>(q));
        qd.proj(b1, t) += wr * std::conj(vb);
        for (int b2 = b1; b2 < n; ++b2)
          qd.gram(b1, b2) += wr * std::conj(vb) * vals(b2, static_cast<Eigen::Index>(q));
      }
    }
  }
  for (int b1 = 0; b1 < n; ++b1)
    for (int b2 = 0; b2 < b1; ++b2) qd.gram(b1, b2) = std::conj(qd.gram(b2, b1));
  return qd;
}

QContext make_q_context(const SurfaceState& state) {
  QContext ctx;
  const auto& mesh = state.mesh;
  const int nt = static_cast<int>(mesh.triangles.size());
  const int g2 = state.g() * state.g();
  ctx.d_fields.setZero(nt, g2);
  cplx w[3];
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    triangle_wirtinger_weights(tri, mesh.chart_area(t), w);
    for (int c = 0; c < 3; ++c) ctx.d_fields.row(t) += w[c] * state.green_fields.row(tri.v[c]);
  }
  return ctx;
}

namespace {

Eigen::VectorXcd q_samples(const SurfaceState& st, const QContext& ctx,
                           const Eigen::VectorXcd& f1, const Eigen::VectorXcd& f2,
                           const Eigen::VectorXcd& f3) {
  const int g = st.g();
  const int nt = static_cast<int>(st.mesh.triangles.size());
  const Eigen::VectorXcd* fs[3] = {&f1, &f2, &f3};
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(nt);
  Eigen::VectorXcd wkl(g * g);
  for (int cyc = 0; cyc < 3; ++cyc) {
    const Eigen::VectorXcd& fa = *fs[cyc];
    const Eigen::VectorXcd& fb = *fs[(cyc + 1) % 3];
    const Eigen::VectorXcd& fc = *fs[(cyc + 2) % 3];
    for (int k = 0; k < g; ++k)
      for (int l = 0; l < g; ++l)
        wkl[k * g + l] = fb[k] * fc[g + l] - fc[k] * fb[g + l];
    Eigen::VectorXcd mean_a = st.psi_tri_means.transpose() * fa.head(g);
    Eigen::VectorXcd du = ctx.d_fields * wkl;
    acc += mean_a.cwiseProduct(du);
  }
  return cplx(0.0, -1.0) * acc;
}

void project(const QuadDiffBasis& qd, QValue& qv) {
  Eigen::VectorXcd r = qd.proj * qv.tri_samples;
  double norm2 = qv.tri_samples.cwiseAbs2().dot(qd.rho_tri);
  qv.norm = std::sqrt(std::max(0.0, norm2));
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(qd.gram);
  if (ldlt.info() != Eigen::Success)
    throw numeric_error("quadratic-differential Gram factorization failed");
  qv.coeffs = ldlt.solve(r);
  double captured = std::real(r.dot(qv.coeffs));  // r^H coeffs
  qv.nonhol_residual = std::sqrt(std::max(0.0, norm2 - captured));

  std::vector<int> even;
  for (int b = 0; b < qd.dim(); ++b)
    if (qd.parity[b] > 0) even.push_back(b);
  const int ne = static_cast<int>(even.size());
  Eigen::MatrixXcd Ge(ne, ne);
  Eigen::VectorXcd re(ne);
  for (int a = 0; a < ne; ++a) {
    re[a] = r[even[a]];
    for (int b = 0; b < ne; ++b) Ge(a, b) = qd.gram(even[a], even[b]);
  }
  Eigen::VectorXcd ce = Eigen::LDLT<Eigen::MatrixXcd>(Ge).solve(re);
  qv.even_norm = std::sqrt(std::max(0.0, std::real(re.dot(ce))));
}

}  // namespace

QValue compute_q(const SurfaceState& state, const QuadDiffBasis& qd, const QContext& ctx,
                 const Eigen::VectorXcd& f1, const Eigen::VectorXcd& f2,
                 const Eigen::VectorXcd& f3) {
  QValue qv;
  qv.tri_samples = q_samples(state, ctx, f1, f2, f3);
  project(qd, qv);
  return qv;
}

QValue compute_q_wedge(const SurfaceState& state, const QuadDiffBasis& qd, const QContext& ctx,
                       const Wedge3Basis& basis, const Eigen::VectorXcd& coords) {
  const int g = state.g();
  if (coords.size() != basis.dim()) throw validation_error("q-wedge", "coordinate size mismatch with wedge basis");
  const int nt = static_cast<int>(state.mesh.triangles.size());
  QValue qv;
  qv.tri_samples = Eigen::VectorXcd::Zero(nt);
  auto unit = [&](int label) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(2 * g);
    e[label] = 1.0;
    return e;
  };
  for (int I = 0; I < basis.dim(); ++I) {
    if (coords[I] == cplx(0.0)) continue;
    const auto& tr = basis.triples[static_cast<std::size_t>(I)];
    qv.tri_samples +=
        coords[I] * q_samples(state, ctx, unit(tr[0]), unit(tr[1]), unit(tr[2]));
  }
  project(qd, qv);
  return qv;
}

DbarCheck dbar_q_check(const SurfaceState& state, const QContext& ctx,
                       const Eigen::VectorXcd& f1, const Eigen::VectorXcd& f2,
                       const Eigen::VectorXcd& f3) {
  const int g = state.g();
  const auto& mesh = state.mesh;
  const int nt = static_cast<int>(mesh.triangles.size());
  DbarCheck out;
  out.lhs.setZero(nt);
  out.rhs.setZero(nt);
  out.weight.setZero(nt);

  Eigen::VectorXcd samples = q_samples(state, ctx, f1, f2, f3);

  // predicted source: (i/4) sum_cyc mean(f_a') (f_b . f_c) rho
  Eigen::VectorXd rho = bergman_node_density(mesh, state.basis);
  Eigen::VectorXd rho_mean(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& rule = mesh.rule(t);
    const std::size_t off = mesh.node_offset[t];
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
      acc += rule.nodes[q].weight * rho[static_cast<Eigen::Index>(off + q)];
    rho_mean[t] = acc / state.B.prenorm_total;
  }
  const Eigen::VectorXcd* fs[3] = {&f1, &f2, &f3};
  for (int cyc = 0; cyc < 3; ++cyc) {
    const Eigen::VectorXcd& fa = *fs[cyc];
    cplx pair_bc = intersection_pairing(g, *fs[(cyc + 1) % 3], *fs[(cyc + 2) % 3]);
    if (pair_bc == cplx(0.0)) continue;
    Eigen::VectorXcd mean_a = state.psi_tri_means.transpose() * fa.head(g);
    out.rhs += (cplx(0.0, 0.25) * pair_bc) * mean_a.cwiseProduct(rho_mean.cast<cplx>());
  }

  // least-squares dbar via same-chart neighbor means
  std::vector<cplx> centroid(nt);
  std::vector<bool> cone_adjacent(nt, false);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    centroid[t] = (tri.corner[0] + tri.corner[1] + tri.corner[2]) / 3.0;
    for (int c = 0; c < 3; ++c)
      if (mesh.vertices[tri.v[c]].cone) cone_adjacent[t] = true;
  }
  double err2 = 0.0, rhs2 = 0.0;
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    if (cone_adjacent[t]) continue;
    bool ok = true;
    Eigen::MatrixXcd M(4, 3);
    Eigen::VectorXcd y(4);
    M(0, 0) = 1.0;
    M(0, 1) = 0.0;
    M(0, 2) = 0.0;
    y[0] = samples[t];
    for (int k = 0; k < 3 && ok; ++k) {
      int nb = tri.neighbor[k];
      if (nb < 0 || mesh.triangles[nb].chart != tri.chart || cone_adjacent[nb]) {
        ok = false;
        break;
      }
      cplx dz = centroid[nb] - centroid[t];
      M(k + 1, 0) = 1.0;
      M(k + 1, 1) = dz;
      M(k + 1, 2) = std::conj(dz);
      y[k + 1] = samples[nb];
    }
    if (!ok) continue;
    Eigen::Vector3cd fit = M.colPivHouseholderQr().solve(y);
    out.lhs[t] = fit[2];
    // both sides scale like rho^(3/2) in chart coordinates near cone points,
    // so the intrinsic L2 norm of the mismatch carries a rho^-2 weight
    out.weight[t] = mesh.chart_area(t) / (rho_mean[t] * rho_mean[t]);
    err2 += out.weight[t] * std::norm(out.lhs[t] - out.rhs[t]);
    rhs2 += out.weight[t] * std::norm(out.rhs[t]);
  }
  out.err_norm = std::sqrt(err2);
  out.rhs_norm = std::sqrt(rhs2);
  return out;
}

E1JResult e1_johnson(const SurfaceState& state, const QuadDiffBasis& qd, const QContext& ctx) {
  const int g = state.g();
  USubspace U = u_subspace(g);
  std::vector<int> idx = U.block(2, 1);
  if (idx.empty())
    throw model_error("first obstruction form needs a nonempty (2,1) block (genus >= 3)");
  const int m = static_cast<int>(idx.size());
  const int nq = qd.dim();

  E1JResult out;
  out.R.setZero(nq, m);
  for (int a = 0; a < m; ++a) {
    QValue qv = compute_q_wedge(state, qd, ctx, U.basis, to_cplx(U.vectors[idx[a]]));
    out.R.col(a) = qv.coeffs;
    out.max_nonhol_residual = std::max(out.max_nonhol_residual, qv.nonhol_residual);
    out.max_even_norm = std::max(out.max_even_norm, qv.even_norm);
    out.max_q_norm = std::max(out.max_q_norm, qv.norm);
  }
  out.N.setZero(m, m);
  for (int a = 0; a < m; ++a) {
    GQVec conj_a = wedge3_conj(U.basis, U.vectors[idx[a]]);
    for (int b = 0; b < m; ++b) {
      GQ p = pairing_M0(U.basis, conj_a, U.vectors[idx[b]]);
      out.N(b, a) = cplx(0.0, -1.0) * p.to_cplx();
    }
  }
  out.H = out.R * out.N * out.R.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (out.H + out.H.adjoint()));
  const Eigen::VectorXd& ev = eig.eigenvalues();
  double top = ev.cwiseAbs().maxCoeff();
  int rank = 0;
  for (int k = 0; k < ev.size(); ++k)
    if (std::abs(ev[k]) > 1e-10 * std::max(top, 1e-300)) ++rank;
  out.rank = rank;
  out.rank_deficient = rank < std::min<int>(nq, m);
  return out;
}

}  // namespace mgt
