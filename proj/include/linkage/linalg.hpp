#pragma once

#include <cstddef>
#include <vector>

namespace linkage {

/// Small dense row-major matrix. The systems solved here are tiny (Newton
/// steps over a handful of coefficients, SHAP regressions up to P features),
/// so no external linear algebra is pulled in.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }
};

/// Solves A x = b for symmetric positive definite A via Cholesky.
/// Throws linkage::Error when the factorization breaks down.
std::vector<double> solve_spd(Matrix a, std::vector<double> b);

/// Gaussian elimination with partial pivoting; fallback for systems that are
/// symmetric but only semi-definite up to rounding. Throws on singularity.
std::vector<double> solve_general(Matrix a, std::vector<double> b);

}  // namespace linkage
