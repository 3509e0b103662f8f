#include <algorithm>
#include <cmath>

#include "linkage/models.hpp"

namespace linkage {

namespace {

constexpr double kCoefCap = 30.0;
constexpr double kMaxNewtonStep = 5.0;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double log1pexp(double z) {
  // Stable log(1 + e^z).
  if (z > 35.0) return z;
  if (z < -35.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

}  // namespace

std::vector<uint8_t> labels01(const PairwiseDataset& pairs) {
  std::vector<uint8_t> y;
  y.reserve(pairs.rows.size());
  for (const auto& r : pairs.rows) {
    if (r.label == PairLabel::Unknown)
      throw Error("training requires labelled pairs; found an Unknown label");
    y.push_back(r.label == PairLabel::Linked ? 1 : 0);
  }
  return y;
}

LogisticFit fit_logistic(const Matrix& x, const std::vector<uint8_t>& y, double tol,
                         size_t max_iter) {
  const size_t n = x.rows;
  const size_t p = x.cols;
  if (y.size() != n) throw Error("fit_logistic: label count mismatch");
  if (n == 0) throw Error("fit_logistic: empty design");

  std::vector<double> beta(p + 1, 0.0);  // [intercept, coefficients...]
  auto predictor = [&](size_t i) {
    double eta = beta[0];
    for (size_t j = 0; j < p; ++j) eta += beta[j + 1] * x.at(i, j);
    return eta;
  };

  for (size_t iter = 0; iter < max_iter; ++iter) {
    std::vector<double> grad(p + 1, 0.0);
    Matrix hess(p + 1, p + 1);
    for (size_t i = 0; i < n; ++i) {
      const double pi = sigmoid(predictor(i));
      const double r = double(y[i]) - pi;
      const double w = std::max(pi * (1.0 - pi), 1e-12);
      grad[0] += r;
      hess.at(0, 0) += w;
      for (size_t j = 0; j < p; ++j) {
        const double xj = x.at(i, j);
        grad[j + 1] += r * xj;
        hess.at(0, j + 1) += w * xj;
        for (size_t k = 0; k <= j; ++k) hess.at(j + 1, k + 1) += w * xj * x.at(i, k);
      }
    }
    for (size_t j = 0; j < p + 1; ++j) {
      for (size_t k = j + 1; k < p + 1; ++k) hess.at(j, k) = hess.at(k, j);
      hess.at(j, j) += 1e-10;  // keep the solve alive on degenerate designs
    }
    std::vector<double> step = solve_spd(hess, grad);
    double biggest = 0.0;
    for (double s : step) biggest = std::max(biggest, std::fabs(s));
    if (biggest > kMaxNewtonStep)
      for (double& s : step) s *= kMaxNewtonStep / biggest;

    double applied = 0.0;
    for (size_t j = 0; j < p + 1; ++j) {
      const double before = beta[j];
      beta[j] = std::clamp(beta[j] + step[j], -kCoefCap, kCoefCap);
      applied = std::max(applied, std::fabs(beta[j] - before));
    }
    if (applied < tol) break;
  }

  LogisticFit fit;
  fit.intercept = beta[0];
  fit.coefficients.assign(beta.begin() + 1, beta.end());
  for (double b : beta)
    if (std::fabs(b) >= kCoefCap - 1e-9) fit.separation_warning = true;
  return fit;
}

double en_smooth_objective(const Matrix& x, const std::vector<uint8_t>& y, double intercept,
                           const std::vector<double>& beta, double lambda, double alpha) {
  const size_t n = x.rows;
  double nll = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double eta = intercept;
    for (size_t j = 0; j < x.cols; ++j) eta += beta[j] * x.at(i, j);
    nll += log1pexp(eta) - double(y[i]) * eta;
  }
  double ridge = 0.0;
  for (double b : beta) ridge += b * b;
  return nll / double(n) + lambda * (1.0 - alpha) * ridge / 2.0;
}

std::vector<double> en_smooth_gradient(const Matrix& x, const std::vector<uint8_t>& y,
                                       double intercept, const std::vector<double>& beta,
                                       double lambda, double alpha) {
  const size_t n = x.rows;
  std::vector<double> grad(x.cols + 1, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double eta = intercept;
    for (size_t j = 0; j < x.cols; ++j) eta += beta[j] * x.at(i, j);
    const double r = sigmoid(eta) - double(y[i]);
    grad[0] += r;
    for (size_t j = 0; j < x.cols; ++j) grad[j + 1] += r * x.at(i, j);
  }
  for (double& g : grad) g /= double(n);
  for (size_t j = 0; j < x.cols; ++j) grad[j + 1] += lambda * (1.0 - alpha) * beta[j];
  return grad;
}

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

std::vector<double> elastic_net_wls(const Matrix& x, const std::vector<double>& z,
                                    const std::vector<double>& w, double alpha, double lambda,
                                    double tol, size_t max_iter) {
  const size_t n = x.rows;
  const size_t p = x.cols;
  if (z.size() != n || w.size() != n) throw Error("elastic_net_wls: dimension mismatch");

  double wsum = 0.0;
  for (double wi : w) wsum += wi;
  if (!(wsum > 0.0)) throw Error("elastic_net_wls: weights sum to zero");

  std::vector<double> denom(p, 0.0);
  for (size_t j = 0; j < p; ++j) {
    for (size_t i = 0; i < n; ++i) denom[j] += w[i] * x.at(i, j) * x.at(i, j);
    denom[j] = denom[j] / double(n) + lambda * (1.0 - alpha);
  }

  std::vector<double> beta(p, 0.0);
  double b0 = 0.0;
  std::vector<double> eta(n, 0.0);  // b0 + x beta
  for (size_t it = 0; it < max_iter; ++it) {
    double delta = 0.0;
    // intercept: weighted mean of the residual
    {
      double num = 0.0;
      for (size_t i = 0; i < n; ++i) num += w[i] * (z[i] - (eta[i] - b0));
      const double nb0 = num / wsum;
      for (size_t i = 0; i < n; ++i) eta[i] += nb0 - b0;
      delta = std::max(delta, std::fabs(nb0 - b0));
      b0 = nb0;
    }
    for (size_t j = 0; j < p; ++j) {
      if (denom[j] <= 0.0) continue;
      double num = 0.0;
      for (size_t i = 0; i < n; ++i)
        num += w[i] * x.at(i, j) * (z[i] - eta[i] + x.at(i, j) * beta[j]);
      const double nb = soft_threshold(num / double(n), lambda * alpha) / denom[j];
      if (nb != beta[j]) {
        for (size_t i = 0; i < n; ++i) eta[i] += (nb - beta[j]) * x.at(i, j);
        delta = std::max(delta, std::fabs(nb - beta[j]));
        beta[j] = nb;
      }
    }
    if (delta < tol) break;
  }
  std::vector<double> out(p + 1);
  out[0] = b0;
  std::copy(beta.begin(), beta.end(), out.begin() + 1);
  return out;
}

namespace {

Matrix lr_design(const PairwiseDataset& pairs, const Codebook& codebook, LrKind kind,
                 std::vector<int>* group_ids, std::vector<std::vector<size_t>>* group_cols) {
  const auto groups = codebook.groups();
  if (kind == LrKind::LR6 && groups.empty())
    throw Error("train_lr: LR6 requires lr_group assignments in the codebook");
  const size_t p = kind == LrKind::LR1 ? 1 : groups.size();
  Matrix x(pairs.rows.size(), p);
  for (size_t i = 0; i < pairs.rows.size(); ++i) {
    auto [va, vb] = pairs.raw_vectors(pairs.rows[i]);
    if (kind == LrKind::LR1) {
      x.at(i, 0) = jaccard(va, vb);
    } else {
      size_t j = 0;
      for (const auto& [gid, cols] : groups) {
        std::vector<uint8_t> ga, gb;
        ga.reserve(cols.size());
        gb.reserve(cols.size());
        for (size_t c : cols) {
          ga.push_back(va[c]);
          gb.push_back(vb[c]);
        }
        x.at(i, j++) = jaccard(ga, gb);
        (void)gid;
      }
    }
  }
  if (group_ids && kind == LrKind::LR6) {
    for (const auto& [gid, cols] : groups) {
      group_ids->push_back(gid);
      group_cols->push_back(cols);
    }
  }
  return x;
}

}  // namespace

LinearModel train_lr(const PairwiseDataset& pairs, const Codebook& codebook, LrKind kind) {
  if (pairs.rows.empty()) throw Error("train_lr: empty dataset");
  if (codebook.entries.size() != pairs.n_features())
    throw Error("train_lr: codebook does not match the pair schema");
  LinearModel model;
  model.input_kind =
      kind == LrKind::LR1 ? LinearInputKind::JaccardOverall : LinearInputKind::JaccardGroups;
  model.feature_names = pairs.feature_names;
  Matrix x = lr_design(pairs, codebook, kind, &model.group_ids, &model.group_cols);
  LogisticFit fit = fit_logistic(x, labels01(pairs));
  model.intercept = fit.intercept;
  model.coefficients = fit.coefficients;
  model.separation_warning = fit.separation_warning;
  return model;
}

LinearModel train_elastic_net(const PairwiseDataset& pairs, const ElasticNetParams& params) {
  if (params.alpha < 0.0 || params.alpha > 1.0)
    throw Error("train_elastic_net: alpha must be in [0,1]");
  if (params.lambda < 0.0) throw Error("train_elastic_net: lambda must be >= 0");
  if (pairs.rows.empty()) throw Error("train_elastic_net: empty dataset");

  const size_t n = pairs.rows.size();
  const size_t p = pairs.n_features();
  Matrix x(n, p);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < p; ++j) x.at(i, j) = pairs.rows[i].match[j];
  const auto y = labels01(pairs);

  double pbar = 0.0;
  for (uint8_t v : y) pbar += v;
  pbar = std::clamp(pbar / double(n), 1e-9, 1.0 - 1e-9);

  double b0 = std::log(pbar / (1.0 - pbar));
  std::vector<double> beta(p, 0.0);
  std::vector<double> eta(n, b0);

  bool converged = false;
  for (size_t outer = 0; outer < params.max_iter && !converged; ++outer) {
    // IRLS quadratic refresh, then one penalized CD sweep on it.
    std::vector<double> w(n), z(n);
    for (size_t i = 0; i < n; ++i) {
      const double pi = sigmoid(eta[i]);
      w[i] = std::max(pi * (1.0 - pi), 1e-6);
      z[i] = eta[i] + (double(y[i]) - pi) / w[i];
    }
    double wsum = 0.0;
    for (double wi : w) wsum += wi;

    double delta = 0.0;
    {
      double num = 0.0;
      for (size_t i = 0; i < n; ++i) num += w[i] * (z[i] - (eta[i] - b0));
      const double nb0 = num / wsum;
      for (size_t i = 0; i < n; ++i) eta[i] += nb0 - b0;
      delta = std::max(delta, std::fabs(nb0 - b0));
      b0 = nb0;
    }
    for (size_t j = 0; j < p; ++j) {
      double num = 0.0, den = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double xj = x.at(i, j);
        num += w[i] * xj * (z[i] - eta[i] + xj * beta[j]);
        den += w[i] * xj * xj;
      }
      den = den / double(n) + params.lambda * (1.0 - params.alpha);
      if (den <= 0.0) continue;
      const double nb = soft_threshold(num / double(n), params.lambda * params.alpha) / den;
      if (nb != beta[j]) {
        for (size_t i = 0; i < n; ++i) eta[i] += (nb - beta[j]) * x.at(i, j);
        delta = std::max(delta, std::fabs(nb - beta[j]));
        beta[j] = nb;
      }
    }
    converged = delta < params.tol;
  }

  LinearModel model;
  model.input_kind = LinearInputKind::MatchVector;
  model.feature_names = pairs.feature_names;
  model.intercept = b0;
  model.coefficients = beta;
  if (!converged)
    throw ConvergenceError("train_elastic_net: no convergence after " +
                               std::to_string(params.max_iter) + " sweeps",
                           model);
  return model;
}

}  // namespace linkage
