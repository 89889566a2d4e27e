// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/priors/gaussian.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <string>

#include "promptlab/error.hpp"

namespace promptlab::priors {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const Mat> view(const nc::Tensor& t) {
  return Eigen::Map<const Mat>(t.data(), static_cast<Eigen::Index>(t.rows()),
                               static_cast<Eigen::Index>(t.cols()));
}

// Solves chol * y = x - mu by forward substitution.
std::vector<double> whiten(const GaussianParams& g, std::span<const double> x) {
  const std::size_t d = g.dim();
  if (x.size() != d) throw DimensionError("point has " + std::to_string(x.size()) + " coordinates, expected " + std::to_string(d));
  std::vector<double> y(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = x[i] - g.mu[i];
    for (std::size_t j = 0; j < i; ++j) s -= g.chol.at(i, j) * y[j];
    const double lii = g.chol.at(i, i);
    if (lii == 0.0) throw NumericError("Gaussian has a singular factor");
    y[i] = s / lii;
  }
  return y;
}

}  // namespace

GaussianParams make_gaussian(nc::Tensor mu, nc::Tensor sigma) {
  const std::size_t d = mu.size();
  if (mu.rank() != 1) throw DimensionError("mu must be a vector");
  if (sigma.rank() != 2 || sigma.rows() != d || sigma.cols() != d)
    throw DimensionError("sigma must be [" + std::to_string(d) + " x " + std::to_string(d) + "]");
  if (!mu.all_finite() || !sigma.all_finite()) throw NumericError("Gaussian parameters are not finite");
  GaussianParams g;
  g.mu = std::move(mu);
  g.sigma = std::move(sigma);
  g.chol = nc::Tensor({d, d}, 0.0);

  bool zero = true;
  for (double v : g.sigma.values()) zero = zero && v == 0.0;
  if (zero) return g;

  const Mat s = view(g.sigma);
  double scale = s.diagonal().cwiseAbs().mean();
  if (!(scale > 0.0)) scale = s.cwiseAbs().maxCoeff();
  double jitter = 0.0;
  for (unsigned j = 0; j <= kMaxJitterSteps; ++j) {
    Mat a = s;
    if (jitter > 0.0) a.diagonal().array() += jitter;
    Eigen::LLT<Mat> llt(a);
    if (llt.info() == Eigen::Success) {
      const Mat l = llt.matrixL();
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c <= r; ++c)
          g.chol.at(r, c) = l(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      g.jitter = jitter;
      return g;
    }
    jitter = kBaseJitter * scale * std::ldexp(1.0, static_cast<int>(j));
  }
  throw NumericError("covariance is degenerate: Cholesky failed up to jitter " +
                     std::to_string(jitter));
}

GaussianParams fit_gaussian(const nc::Tensor& points) {
  if (points.rank() != 2) throw DimensionError("fit_gaussian expects [N x d] points");
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  nc::Tensor mu({d}, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) mu[c] += points.at(i, c);
  for (std::size_t c = 0; c < d; ++c) mu[c] /= static_cast<double>(n);
  nc::Tensor sigma({d, d}, 0.0);
  std::vector<double> dev(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) dev[c] = points.at(i, c) - mu[c];
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = r; c < d; ++c) sigma.at(r, c) += dev[r] * dev[c];
  }
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = r; c < d; ++c) {
      sigma.at(r, c) /= static_cast<double>(n);
      sigma.at(c, r) = sigma.at(r, c);
    }
  return make_gaussian(std::move(mu), std::move(sigma));
}

double mahalanobis_sq(const GaussianParams& g, std::span<const double> x) {
  const auto y = whiten(g, x);
  double m = 0.0;
  for (double v : y) m += v * v;
  return m;
}

double log_density(const GaussianParams& g, std::span<const double> x, double scale) {
  if (!(scale > 0.0)) throw ConfigError("density scale must be positive");
  const double d = static_cast<double>(g.dim());
  double log_det = 0.0;
  for (std::size_t i = 0; i < g.dim(); ++i) log_det += 2.0 * std::log(g.chol.at(i, i));
  log_det += d * std::log(scale);
  const double m = mahalanobis_sq(g, x) / scale;
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + m);
}

}  // namespace promptlab::priors
