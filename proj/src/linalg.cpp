#include "linkage/linalg.hpp"

#include <cmath>

#include "linkage/error.hpp"

namespace linkage {

std::vector<double> solve_spd(Matrix a, std::vector<double> b) {
  const size_t n = a.rows;
  if (a.cols != n || b.size() != n) throw Error("solve_spd: dimension mismatch");
  // In-place lower Cholesky.
  for (size_t j = 0; j < n; ++j) {
    double d = a.at(j, j);
    for (size_t k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
    if (!(d > 0.0)) throw Error("solve_spd: matrix not positive definite");
    d = std::sqrt(d);
    a.at(j, j) = d;
    for (size_t i = j + 1; i < n; ++i) {
      double s = a.at(i, j);
      for (size_t k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
      a.at(i, j) = s / d;
    }
  }
  // Forward then backward substitution.
  for (size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (size_t k = 0; k < i; ++k) s -= a.at(i, k) * b[k];
    b[i] = s / a.at(i, i);
  }
  for (size_t ii = n; ii > 0; --ii) {
    size_t i = ii - 1;
    double s = b[i];
    for (size_t k = i + 1; k < n; ++k) s -= a.at(k, i) * b[k];
    b[i] = s / a.at(i, i);
  }
  return b;
}

std::vector<double> solve_general(Matrix a, std::vector<double> b) {
  const size_t n = a.rows;
  if (a.cols != n || b.size() != n) throw Error("solve_general: dimension mismatch");
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    double best = std::fabs(a.at(col, col));
    for (size_t r = col + 1; r < n; ++r) {
      double v = std::fabs(a.at(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-12) throw Error("solve_general: singular system");
    if (pivot != col) {
      for (size_t c = 0; c < n; ++c) std::swap(a.at(pivot, c), a.at(col, c));
      std::swap(b[pivot], b[col]);
    }
    const double d = a.at(col, col);
    for (size_t r = col + 1; r < n; ++r) {
      const double f = a.at(r, col) / d;
      if (f == 0.0) continue;
      for (size_t c = col; c < n; ++c) a.at(r, c) -= f * a.at(col, c);
      b[r] -= f * b[col];
    }
  }
  for (size_t ii = n; ii > 0; --ii) {
    size_t i = ii - 1;
    double s = b[i];
    for (size_t c = i + 1; c < n; ++c) s -= a.at(i, c) * b[c];
    b[i] = s / a.at(i, i);
  }
  return b;
}

}  // namespace linkage
