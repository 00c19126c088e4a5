#include "mgt/atensor.hpp"

#include <algorithm>
#include <cmath>

namespace mgt {

ATensor compute_A(const SurfaceState& state) {
  ATensor A;
  A.g = state.g();
  A.m = state.wedge_loads.transpose() * state.green_fields;  // bilinear pairing
  A.solve_residual = state.max_solve_residual;
  verify_identities(A);
  return A;
}

void verify_identities(ATensor& A) {
  const int g = A.g;
  A.max_abs = A.m.cwiseAbs().maxCoeff();
  A.swap_residual = (A.m - A.m.transpose()).cwiseAbs().maxCoeff();

  double conj_res = 0.0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      for (int k = 0; k < g; ++k)
        for (int l = 0; l < g; ++l) {
          cplx d = std::conj(A.entry(i, j, k, l)) - A.entry(j, i, l, k);
          conj_res = std::max(conj_res, std::abs(d));
        }
  A.conj_residual = conj_res;

  double tf = 0.0;
  for (int k = 0; k < g; ++k)
    for (int l = 0; l < g; ++l) {
      cplx s = 0.0;
      for (int j = 0; j < g; ++j) s += A.entry(j, j, k, l);
      tf = std::max(tf, std::abs(s));
    }
  A.trace_first_residual = tf;

  double tl = 0.0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      cplx s = 0.0;
      for (int l = 0; l < g; ++l) s += A.entry(i, j, l, l);
      tl = std::max(tl, std::abs(s));
    }
  A.trace_last_residual = tl;
}

double kz_invariant(const ATensor& A) {
  cplx sum = 0.0;
  double scale = 0.0;
  for (int i = 0; i < A.g; ++i)
    for (int j = 0; j < A.g; ++j) {
      cplx e = A.entry(i, j, j, i);
      sum += e;
      scale += std::abs(e);
    }
  const double tol = std::max(1e-10 * scale, 1e-13);
  if (std::abs(sum.imag()) > tol)
    throw numeric_error("trace invariant has non-real value " + std::to_string(sum.imag()) +
                        " beyond tolerance " + std::to_string(tol));
  return sum.real();
}

nlohmann::json atensor_to_json(const ATensor& A, const nlohmann::json& metadata) {
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < A.g; ++i)
    for (int j = 0; j < A.g; ++j)
      for (int k = 0; k < A.g; ++k)
        for (int l = 0; l < A.g; ++l) {
          cplx e = A.entry(i, j, k, l);
          entries.push_back({i + 1, j + 1, k + 1, l + 1, e.real(), e.imag()});
        }
  nlohmann::json j;
  j["g"] = A.g;
  j["entries"] = entries;
  j["residuals"] = {{"max_abs", A.max_abs},
                    {"conj", A.conj_residual},
                    {"swap", A.swap_residual},
                    {"trace_first", A.trace_first_residual},
                    {"trace_last", A.trace_last_residual},
                    {"solve", A.solve_residual}};
  j["metadata"] = metadata;
  return j;
}

ATensor atensor_from_json(const nlohmann::json& j) {
  ATensor A;
  A.g = j.at("g").get<int>();
  A.m.setZero(A.g * A.g, A.g * A.g);
  for (const auto& e : j.at("entries")) {
    const int i = e.at(0).get<int>() - 1;
    const int jj = e.at(1).get<int>() - 1;
    const int k = e.at(2).get<int>() - 1;
    const int l = e.at(3).get<int>() - 1;
    if (i < 0 || jj < 0 || k < 0 || l < 0 || i >= A.g || jj >= A.g || k >= A.g || l >= A.g)
      throw validation_error("tensor-index", "entry index out of range");
    A.m(i * A.g + jj, k * A.g + l) = cplx(e.at(4).get<double>(), e.at(5).get<double>());
  }
  if (j.contains("residuals")) {
    const auto& r = j.at("residuals");
    A.max_abs = r.value("max_abs", 0.0);
    A.conj_residual = r.value("conj", 0.0);
    A.swap_residual = r.value("swap", 0.0);
    A.trace_first_residual = r.value("trace_first", 0.0);
    A.trace_last_residual = r.value("trace_last", 0.0);
    A.solve_residual = r.value("solve", 0.0);
  }
  return A;
}

}  // namespace mgt
