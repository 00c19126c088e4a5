#include "mgt/laplace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <cmath>

namespace mgt {

TwoForm two_form_from_node_density(const BranchedMesh& mesh, const Eigen::VectorXcd& density) {
  if (static_cast<std::size_t>(density.size()) != mesh.total_nodes())
    throw model_error("two-form density has wrong node count");
  TwoForm f;
  f.load = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const TriangleRule& rule = mesh.rule(static_cast<int>(t));
    double area = mesh.chart_area(static_cast<int>(t));
    std::size_t off = mesh.node_offset[t];
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      cplx w = area * rule.nodes[q].weight * density[static_cast<Eigen::Index>(off + q)];
      for (int c = 0; c < 3; ++c) f.load[tri.v[c]] += w * rule.nodes[q].bary[c];
    }
  }
  return f;
}

std::vector<TwoForm> wedge_two_forms(const BranchedMesh& mesh, const DifferentialBasis& basis) {
  int g = basis.g;
  std::vector<TwoForm> out(static_cast<std::size_t>(g) * g);
  const cplx minus_two_i(0.0, -2.0);
  Eigen::VectorXcd density(static_cast<Eigen::Index>(mesh.total_nodes()));
  for (int i = 0; i < g; ++i) {
    for (int j = i; j < g; ++j) {
      for (Eigen::Index q = 0; q < density.size(); ++q)
        density[q] = minus_two_i * basis.psi_values(i, q) * std::conj(basis.psi_values(j, q));
      out[i * g + j] = two_form_from_node_density(mesh, density);
      if (j != i) {
        // exact floating-point relation load(j,i) = -conj(load(i,j))
        out[j * g + i].load = -out[i * g + j].load.conjugate();
      }
    }
  }
  return out;
}

TwoForm b_two_form(const VolumeFormB& B) {
  TwoForm f;
  f.load = B.mass.cast<cplx>();
  return f;
}

TwoForm point_two_form(int n_vertices, int vertex) {
  if (vertex < 0 || vertex >= n_vertices) throw model_error("point mass vertex out of range");
  TwoForm f;
  f.load = Eigen::VectorXcd::Zero(n_vertices);
  f.load[vertex] = 1.0;
  return f;
}

ConformalLaplacian::ConformalLaplacian(const BranchedMesh& mesh, const VolumeFormB& B) {
  n_ = static_cast<int>(mesh.vertices.size());
  mass_ = B.mass;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.triangles.size() * 9);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    double area = mesh.chart_area(static_cast<int>(t));
    if (area <= 0) throw numeric_error("degenerate triangle in stiffness assembly");
    cplx e[3];
    for (int k = 0; k < 3; ++k) e[k] = tri.corner[(k + 2) % 3] - tri.corner[(k + 1) % 3];
    double inv = 1.0 / (4.0 * area);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double dot = e[a].real() * e[b].real() + e[a].imag() * e[b].imag();
        if (a != b && dot * inv > 0) ++negative_weight_edges_;  // off-diag > 0 <=> cotan weight < 0
        trips.emplace_back(tri.v[a], tri.v[b], dot * inv);
      }
  }
  negative_weight_edges_ /= 2;  // each edge contributed from both (a,b) orders
  S_.resize(n_, n_);
  S_.setFromTriplets(trips.begin(), trips.end());

  double tr = 0;
  for (int i = 0; i < n_; ++i) tr += S_.coeff(i, i);
  sigma_ = tr / n_;
  Sg_ = S_;
  Sg_.coeffRef(0, 0) += sigma_;
  Sg_.makeCompressed();

  ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  ldlt_->compute(Sg_);
  if (ldlt_->info() != Eigen::Success)
    throw numeric_error("sparse Cholesky factorization of the grounded stiffness failed");
}

Eigen::MatrixXd ConformalLaplacian::solve_real(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd x = ldlt_->solve(rhs);
  // iterative refinement columns whose direct-solve residual is poor
  for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
    double rn = rhs.col(c).norm();
    if (rn == 0) continue;
    double res = (Sg_ * x.col(c) - rhs.col(c)).norm() / rn;
    if (res > 1e-9) {
      Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
      cg.setTolerance(1e-13);
      cg.setMaxIterations(4 * n_);
      cg.compute(Sg_);
      x.col(c) = cg.solveWithGuess(rhs.col(c), x.col(c).eval());
      res = (Sg_ * x.col(c) - rhs.col(c)).norm() / rn;
      if (res > 1e-6)
        throw numeric_error("Laplace solve did not converge (relative residual " +
                            std::to_string(res) + ")");
    }
  }
  return x;
}

Eigen::MatrixXcd ConformalLaplacian::green_apply_batch(const Eigen::MatrixXcd& loads,
                                                       double* max_residual) const {
  if (loads.rows() != n_) throw model_error("load vector size does not match mesh");
  Eigen::Index k = loads.cols();
  Eigen::MatrixXd rhs(n_, 2 * k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXcd r = -(loads.col(c) - loads.col(c).sum() * mass_.cast<cplx>());
    rhs.col(2 * c) = r.real();
    rhs.col(2 * c + 1) = r.imag();
  }
  Eigen::MatrixXd sol = solve_real(rhs);
  double worst = 0;
  Eigen::MatrixXcd out(n_, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    double rn = std::hypot(rhs.col(2 * c).norm(), rhs.col(2 * c + 1).norm());
    if (rn > 0) {
      double res = std::hypot((Sg_ * sol.col(2 * c) - rhs.col(2 * c)).norm(),
                              (Sg_ * sol.col(2 * c + 1) - rhs.col(2 * c + 1)).norm()) /
                   rn;
      worst = std::max(worst, res);
    }
    out.col(c).real() = sol.col(2 * c);
    out.col(c).imag() = sol.col(2 * c + 1);
    // normalization Int u B = 0; mass_ is real so the projection commutes
    // with conjugation exactly
    cplx mu = mass_.cast<cplx>().cwiseProduct(out.col(c)).sum();
    out.col(c).array() -= mu;
  }
  if (max_residual) *max_residual = worst;
  return out;
}

ScalarField ConformalLaplacian::green_apply(const TwoForm& omega) const {
  ScalarField f;
  Eigen::MatrixXcd u = green_apply_batch(omega.load, &f.solve_residual);
  f.values = u.col(0);
  return f;
}

Eigen::VectorXd ConformalLaplacian::green_kernel_column(int vertex) const {
  TwoForm p = point_two_form(n_, vertex);
  return green_apply(p).values.real();
}

Eigen::MatrixXd ConformalLaplacian::green_kernel_dense(int max_vertices) const {
  if (n_ > max_vertices)
    throw model_error("dense Green kernel requested for " + std::to_string(n_) +
                      " vertices (limit " + std::to_string(max_vertices) + ")");
  Eigen::MatrixXd rhs = -(Eigen::MatrixXd::Identity(n_, n_) -
                          mass_ * Eigen::RowVectorXd::Ones(n_));
  Eigen::MatrixXd K = solve_real(rhs);
  // project each column to Int K(.,q) B = 0
  Eigen::RowVectorXd mu = mass_.transpose() * K;
  K.rowwise() -= mu;
  return K;
}

Eigen::MatrixXd dense_green_kernel(const ConformalLaplacian& lap, int max_vertices) {
  int n = lap.size();
  if (n > max_vertices)
    throw model_error("dense spectral kernel requested for " + std::to_string(n) +
                      " vertices (limit " + std::to_string(max_vertices) + ")");
  Eigen::MatrixXd S = Eigen::MatrixXd(lap.stiffness());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) throw numeric_error("dense eigendecomposition failed");
  const Eigen::VectorXd& ev = eig.eigenvalues();
  double scale = ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  int dropped = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(ev[i]) > 1e-10 * scale)
      inv[i] = 1.0 / ev[i];
    else
      ++dropped;
  }
  if (dropped != 1)
    throw numeric_error("stiffness null space has dimension " + std::to_string(dropped) +
                        ", expected 1 (constants)");
  Eigen::MatrixXd Sp = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) -
                      Eigen::VectorXd::Ones(n) * lap.mass().transpose();
  return -(P * Sp * P.transpose());
}

}  // namespace mgt
