// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/priors/samplers.hpp"

#include <cmath>
#include <random>
#include <string>

#include "promptlab/error.hpp"

namespace promptlab::priors {

namespace {

// out = mu + spread * chol * z with z ~ N(0, I).
void draw_row(const GaussianParams& g, Rng& rng, double spread, std::span<double> out,
              std::vector<double>& z) {
  const std::size_t d = g.dim();
  std::normal_distribution<double> normal;
  z.resize(d);
  for (auto& v : z) v = normal(rng);
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += g.chol.at(i, j) * z[j];
    out[i] = g.mu[i] + spread * s;
  }
}

void require_rows(std::size_t n) {
  if (n == 0) throw ConfigError("sample count must be positive");
}

}  // namespace

nc::Tensor sample_isotropic(std::size_t d, double sigma, std::size_t n, std::uint64_t seed) {
  require_rows(n);
  if (d == 0) throw ConfigError("dimension must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
  Rng rng(derive_seed(seed, "isotropic"));
  std::normal_distribution<double> normal;
  nc::Tensor out({n, d});
  for (double& v : out.values()) v = sigma * normal(rng);
  return out;
}

nc::Tensor sample_fitted(const GaussianParams& g, std::size_t n, std::uint64_t seed) {
  require_rows(n);
  Rng rng(derive_seed(seed, "fitted"));
  nc::Tensor out({n, g.dim()});
  std::vector<double> z;
  for (std::size_t i = 0; i < n; ++i) draw_row(g, rng, 1.0, out.row(i), z);
  return out;
}

std::string_view cdim_rule_name(CDimRule rule) {
  return rule == CDimRule::kLiteral ? "literal" : "power";
}

CDimRule parse_cdim_rule(std::string_view name) {
  if (name == "literal") return CDimRule::kLiteral;
  if (name == "power") return CDimRule::kPower;
  throw ConfigError("unknown c_dim rule '" + std::string(name) + "' (expected literal or power)");
}

double exclusion_cdim(double c, std::size_t d, CDimRule rule) {
  if (!(c > 1.0) || !std::isfinite(c)) throw ConfigError("exclusion c must be > 1");
  if (d == 0) throw ConfigError("dimension must be positive");
  const double two_over_d = 2.0 / static_cast<double>(d);
  const double cdim = rule == CDimRule::kLiteral ? std::exp(two_over_d) * std::log(c)
                                                 : std::exp(two_over_d * std::log(c));
  if (!(cdim > 1.0))
    throw ConfigError("c_dim = " + std::to_string(cdim) + " does not widen the proposal");
  return cdim;
}

double exclusion_log_ratio(double m, std::size_t d, double cdim) {
  return 0.5 * static_cast<double>(d) * std::log(cdim) - 0.5 * m * (1.0 - 1.0 / cdim);
}

double exclusion_accept_prob(double m, std::size_t d, double cdim) {
  const double lr = exclusion_log_ratio(m, d, cdim);
  if (lr >= 0.0) return 0.0;
  return -std::expm1(lr);
}

double ExclusionDraws::acceptance_rate() const {
  return proposals == 0 ? 0.0 : static_cast<double>(samples.rows()) / static_cast<double>(proposals);
}

ExclusionDraws sample_exclusion_draws(const GaussianParams& g, double c, std::size_t n,
                                      std::uint64_t seed, std::size_t max_draws, CDimRule rule) {
  require_rows(n);
  const std::size_t d = g.dim();
  ExclusionDraws res;
  res.cdim = exclusion_cdim(c, d, rule);
  const double spread = std::sqrt(res.cdim);
  Rng rng(derive_seed(seed, "exclusion"));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  res.samples = nc::Tensor({n, d});
  std::vector<double> x(d), z;
  std::size_t accepted = 0;
  while (accepted < n) {
    if (res.proposals == max_draws)
      throw NumericError("exclusion sampler accepted " + std::to_string(accepted) + " of " +
                         std::to_string(n) + " samples in " + std::to_string(max_draws) +
                         " proposals (acceptance rate " +
                         std::to_string(static_cast<double>(accepted) /
                                        static_cast<double>(max_draws)) + ")");
    draw_row(g, rng, spread, x, z);
    ++res.proposals;
    const double p = exclusion_accept_prob(mahalanobis_sq(g, x), d, res.cdim);
    if (unif(rng) < p) {
      auto dst = res.samples.row(accepted++);
      std::copy(x.begin(), x.end(), dst.begin());
    }
  }
  return res;
}

nc::Tensor sample_exclusion(const GaussianParams& g, double c, std::size_t n, std::uint64_t seed,
                            std::size_t max_draws, CDimRule rule) {
  return sample_exclusion_draws(g, c, n, seed, max_draws, rule).samples;
}

InterpolationDraws sample_interpolation_draws(const GaussianParams& g1, const GaussianParams& g2,
                                              std::size_t n, std::uint64_t seed,
                                              std::optional<double> forced_alpha) {
  require_rows(n);
  if (g1.dim() != g2.dim())
    throw DimensionError("interpolation Gaussians differ in dimension: " +
                         std::to_string(g1.dim()) + " vs " + std::to_string(g2.dim()));
  if (forced_alpha && !(*forced_alpha >= 0.0 && *forced_alpha <= 1.0))
    throw ConfigError("forced alpha must lie in [0, 1]");
  const std::size_t d = g1.dim();
  Rng rng(derive_seed(seed, "interpolation"));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  InterpolationDraws res{nc::Tensor({n, d}), nc::Tensor({n, d}), nc::Tensor({n, d}), {}};
  res.alpha.resize(n);
  std::vector<double> z;
  for (std::size_t i = 0; i < n; ++i) {
    draw_row(g1, rng, 1.0, res.first.row(i), z);
    draw_row(g2, rng, 1.0, res.second.row(i), z);
    const double a = unif(rng);
    res.alpha[i] = forced_alpha ? *forced_alpha : a;
    const auto x = res.first.row(i);
    const auto y = res.second.row(i);
    auto dst = res.samples.row(i);
    for (std::size_t c = 0; c < d; ++c) dst[c] = res.alpha[i] * x[c] + (1.0 - res.alpha[i]) * y[c];
  }
  return res;
}

nc::Tensor sample_interpolation(const GaussianParams& g1, const GaussianParams& g2, std::size_t n,
                                std::uint64_t seed, std::optional<double> forced_alpha) {
  return sample_interpolation_draws(g1, g2, n, seed, forced_alpha).samples;
}

double xavier_bound(std::size_t k, std::size_t d) {
  if (k == 0 || d == 0) throw ConfigError("xavier fan sizes must be positive");
  return std::sqrt(6.0 / static_cast<double>(k + d));
}

nc::Tensor xavier_init(std::size_t k, std::size_t d, std::uint64_t seed) {
  const double b = xavier_bound(k, d);
  Rng rng(derive_seed(seed, "xavier"));
  std::uniform_real_distribution<double> unif(-b, b);
  nc::Tensor out({k, d});
  for (double& v : out.values()) v = unif(rng);
  return out;
}

std::string_view prior_name(PriorKind kind) {
  switch (kind) {
    case PriorKind::kIsotropic: return "isotropic";
    case PriorKind::kFitted: return "fitted";
    case PriorKind::kExclusion: return "exclusion";
    case PriorKind::kInterpolation: return "interpolation";
    case PriorKind::kXavier: return "xavier";
  }
  return "unknown";
}

PriorKind parse_prior(std::string_view name) {
  for (auto k : {PriorKind::kIsotropic, PriorKind::kFitted, PriorKind::kExclusion,
                 PriorKind::kInterpolation, PriorKind::kXavier})
    if (prior_name(k) == name) return k;
  throw ConfigError("unknown prior '" + std::string(name) + "'");
}

void PriorSpec::validate() const {
  switch (kind) {
    case PriorKind::kIsotropic:
      if (!(sigma >= 0.0)) throw ConfigError("isotropic prior needs sigma >= 0");
      break;
    case PriorKind::kExclusion:
      exclusion_cdim(c, gaussian ? gaussian->dim() : 1, rule);
      [[fallthrough]];
    case PriorKind::kFitted:
      if (!gaussian) throw ConfigError(std::string(prior_name(kind)) + " prior needs a Gaussian");
      break;
    case PriorKind::kInterpolation:
      if (!gaussian || !second) throw ConfigError("interpolation prior needs two Gaussians");
      if (gaussian->dim() != second->dim())
        throw ConfigError("interpolation Gaussians differ in dimension");
      break;
    case PriorKind::kXavier:
      break;
  }
}

nc::Tensor sample_prior(const PriorSpec& spec, std::size_t n, std::size_t d) {
  spec.validate();
  if (spec.gaussian && spec.kind != PriorKind::kIsotropic && spec.kind != PriorKind::kXavier &&
      spec.gaussian->dim() != d)
    throw ConfigError("prior Gaussian has dimension " + std::to_string(spec.gaussian->dim()) +
                      ", prompts need " + std::to_string(d));
  switch (spec.kind) {
    case PriorKind::kIsotropic: return sample_isotropic(d, spec.sigma, n, spec.seed);
    case PriorKind::kFitted: return sample_fitted(*spec.gaussian, n, spec.seed);
    case PriorKind::kExclusion:
      return sample_exclusion(*spec.gaussian, spec.c, n, spec.seed, spec.max_draws, spec.rule);
    case PriorKind::kInterpolation:
      return sample_interpolation(*spec.gaussian, *spec.second, n, spec.seed);
    case PriorKind::kXavier: return xavier_init(n, d, spec.seed);
  }
  throw ConfigError("unknown prior kind");
}

}  // namespace promptlab::priors
