// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "promptlab/priors/gaussian.hpp"
#include "promptlab/rng.hpp"

namespace promptlab::priors {

inline constexpr double kDefaultSigma = 0.02;
inline constexpr double kDefaultExclusionC = 5.0;
inline constexpr std::size_t kDefaultMaxDraws = 10'000'000;

// Row-major [n x d] samples, all pure functions of their seed.
nc::Tensor sample_isotropic(std::size_t d, double sigma, std::size_t n, std::uint64_t seed);
nc::Tensor sample_fitted(const GaussianParams& g, std::size_t n, std::uint64_t seed);

// Widening factor of the exclusion proposal.
//   kLiteral  exp(2/d) * ln(c)
//   kPower    c^(2/d)
enum class CDimRule { kLiteral, kPower };
std::string_view cdim_rule_name(CDimRule rule);
CDimRule parse_cdim_rule(std::string_view name);
double exclusion_cdim(double c, std::size_t d, CDimRule rule);

// log(PDF(x) / PDF_wide(x)) for PDF = N(mu, S), PDF_wide = N(mu, c_dim S),
// given m = (x - mu)^T S^-1 (x - mu).
double exclusion_log_ratio(double m, std::size_t d, double cdim);
// max(0, 1 - PDF/PDF_wide).
double exclusion_accept_prob(double m, std::size_t d, double cdim);

struct ExclusionDraws {
  nc::Tensor samples;
  std::size_t proposals = 0;
  double cdim = 0.0;

  double acceptance_rate() const;
};

// Rejection sampling from N(mu, c_dim sigma). Throws NumericError with the
// observed acceptance rate when fewer than n are accepted in max_draws.
ExclusionDraws sample_exclusion_draws(const GaussianParams& g, double c, std::size_t n,
                                      std::uint64_t seed,
                                      std::size_t max_draws = kDefaultMaxDraws,
                                      CDimRule rule = CDimRule::kLiteral);
nc::Tensor sample_exclusion(const GaussianParams& g, double c, std::size_t n, std::uint64_t seed,
                            std::size_t max_draws = kDefaultMaxDraws,
                            CDimRule rule = CDimRule::kLiteral);

// Per row: x ~ g1, y ~ g2, alpha ~ U[0, 1], sample = alpha x + (1 - alpha) y.
struct InterpolationDraws {
  nc::Tensor samples;
  nc::Tensor first;   // parent draws from g1
  nc::Tensor second;  // parent draws from g2
  std::vector<double> alpha;
};
// forced_alpha replaces every alpha draw (the draw is still consumed).
InterpolationDraws sample_interpolation_draws(const GaussianParams& g1, const GaussianParams& g2,
                                              std::size_t n, std::uint64_t seed,
                                              std::optional<double> forced_alpha = {});
nc::Tensor sample_interpolation(const GaussianParams& g1, const GaussianParams& g2, std::size_t n,
                                std::uint64_t seed, std::optional<double> forced_alpha = {});

// Glorot-uniform with fan_in = k, fan_out = d.
double xavier_bound(std::size_t k, std::size_t d);
nc::Tensor xavier_init(std::size_t k, std::size_t d, std::uint64_t seed);

enum class PriorKind { kIsotropic, kFitted, kExclusion, kInterpolation, kXavier };
std::string_view prior_name(PriorKind kind);
// "isotropic", "fitted", "exclusion", "interpolation", "xavier".
PriorKind parse_prior(std::string_view name);

struct PriorSpec {
  PriorKind kind = PriorKind::kIsotropic;
  double sigma = kDefaultSigma;
  std::optional<GaussianParams> gaussian;  // fitted, exclusion, interpolation (first)
  std::optional<GaussianParams> second;    // interpolation
  double c = kDefaultExclusionC;
  CDimRule rule = CDimRule::kLiteral;
  std::size_t max_draws = kDefaultMaxDraws;
  std::uint64_t seed = 0;

  // Throws ConfigError when parameters are missing or inconsistent with kind.
  void validate() const;
};

// [n x d] draws from the prior. d must match the Gaussian parameters.
nc::Tensor sample_prior(const PriorSpec& spec, std::size_t n, std::size_t d);

}  // namespace promptlab::priors
