// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/analysis/pca.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>
#include <string>

#include "promptlab/error.hpp"

namespace promptlab::analysis {

PcaModel pca_fit(const nc::Tensor& points, std::size_t q) {
  if (points.rank() != 2) throw DimensionError("pca_fit expects [M x d] points");
  const std::size_t m = points.rows();
  const std::size_t d = points.cols();
  if (m < 2) throw ConfigError("pca_fit needs at least 2 points");
  if (q == 0 || q > std::min(m, d))
    throw ConfigError("pca components " + std::to_string(q) + " outside [1, " +
                      std::to_string(std::min(m, d)) + "]");
  PcaModel pca;
  pca.mean = nc::Tensor({d}, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < d; ++c) pca.mean[c] += points.at(i, c);
  for (std::size_t c = 0; c < d; ++c) pca.mean[c] /= static_cast<double>(m);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                               static_cast<Eigen::Index>(d));
  Eigen::VectorXd dev(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < d; ++c)
      dev(static_cast<Eigen::Index>(c)) = points.at(i, c) - pca.mean[c];
    cov.selfadjointView<Eigen::Lower>().rankUpdate(dev);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(m);
  pca.total_variance = cov.trace();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("PCA eigensolver failed");
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values(static_cast<Eigen::Index>(a)) > values(static_cast<Eigen::Index>(b));
  });

  pca.components = nc::Tensor({q, d}, 0.0);
  for (std::size_t r = 0; r < q; ++r) {
    const auto col = static_cast<Eigen::Index>(order[r]);
    pca.explained_variance.push_back(std::max(0.0, values(col)));
    double sign = 1.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double v = vectors(static_cast<Eigen::Index>(c), col);
      if (v != 0.0) {
        sign = v > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t c = 0; c < d; ++c)
      pca.components.at(r, c) = sign * vectors(static_cast<Eigen::Index>(c), col);
  }
  return pca;
}

nc::Tensor project(const nc::Tensor& points, const PcaModel& pca) {
  if (points.rank() != 2 || points.cols() != pca.dim())
    throw DimensionError("project expects [M x " + std::to_string(pca.dim()) + "] points, got " +
                         nc::shape_str(points.shape()));
  const std::size_t m = points.rows();
  const std::size_t d = pca.dim();
  const std::size_t q = pca.n_components();
  nc::Tensor out({m, q}, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < q; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += (points.at(i, c) - pca.mean[c]) * pca.components.at(r, c);
      out.at(i, r) = s;
    }
  return out;
}

}  // namespace promptlab::analysis
