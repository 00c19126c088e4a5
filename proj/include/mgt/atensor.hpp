#pragma once

#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mgt/state.hpp"

namespace mgt {

// The rank-4 pairing tensor A_{i jbar k lbar} = Int (psi_i ^ conj(psi_j)) *
// GreenOp(psi_k ^ conj(psi_l)), stored as a g^2 x g^2 matrix with row index
// i*g+j and column index k*g+l.
struct ATensor {
  int g = 0;
  Eigen::MatrixXcd m;

  // Identity residuals, filled by verify_identities.
  double max_abs = 0.0;
  double conj_residual = 0.0;        // conj(A_ijkl) vs A_jilk
  double swap_residual = 0.0;        // A_ijkl vs A_klij
  double trace_first_residual = 0.0; // sum_j A_jjkl
  double trace_last_residual = 0.0;  // sum_l A_ijll
  double solve_residual = 0.0;       // carried over from the Green solves

  cplx entry(int i, int j, int k, int l) const { return m(i * g + j, k * g + l); }
};

ATensor compute_A(const SurfaceState& state);

// Fill the residual fields from the stored entries.
void verify_identities(ATensor& A);

// Trace invariant sum_{i,j} A_{i jbar j ibar}; checks that the imaginary part
// is at noise level and returns the real part. Throws numeric_error if not.
double kz_invariant(const ATensor& A);

// Serialization: 1-based index quadruples with split re/im, residual block,
// caller-supplied metadata object.
nlohmann::json atensor_to_json(const ATensor& A, const nlohmann::json& metadata);
ATensor atensor_from_json(const nlohmann::json& j);

}  // namespace mgt
