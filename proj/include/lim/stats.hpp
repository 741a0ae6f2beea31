#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>

#include "lim/masking.hpp"

namespace lim::stats {

/// p(masked | y=1) under LIM: mask_prob * p_nc / p_y1. With p_nc = p_y1 this
/// is mask_prob, i.e. plain MLM. Throws when p_y1 is 0 or the result exceeds 1.
double expected_conditional_mask_prob(double mask_prob, double p_nc, double p_y1);

/// Counterpart for non-chunk tokens: mask_prob * (1 - p_nc) / (1 - p_y1).
double expected_conditional_mask_prob_y0(double mask_prob, double p_nc, double p_y1);

/// Mergeable counts for the empirical masking report. Besides the totals it
/// keeps per-sequence cross products so the standard error of the ratio
/// estimators accounts for positions being masked together within a sequence.
struct MaskCounter {
  std::uint64_t n_sequences = 0;
  std::uint64_t n_tokens = 0;
  std::uint64_t n_y1 = 0;
  std::uint64_t n_masked_y1 = 0;
  std::uint64_t n_masked_y0 = 0;
  std::uint64_t n_fallback = 0;
  // Sums over sequences of a^2, a*b, b^2 with a = masked count, b = token
  // count, for each flag value.
  double y1_aa = 0, y1_ab = 0, y1_bb = 0;
  double y0_aa = 0, y0_ab = 0, y0_bb = 0;

  /// Throws when the example carries no y flags.
  void add(const masking::MaskedExample& example);
  void merge(const MaskCounter& other);
};

struct MaskProbReport {
  std::uint64_t n_sequences = 0;
  std::uint64_t n_tokens = 0;
  std::uint64_t n_fallback = 0;
  double p_y1 = 0.0;
  /// Undefined (nullopt) when no token has the corresponding flag.
  std::optional<double> p_mask_given_y1;
  std::optional<double> p_mask_given_y0;
  std::optional<double> se_y1;
  std::optional<double> se_y0;
  std::optional<double> expected_p_mask_given_y1;
  std::optional<double> expected_p_mask_given_y0;
  std::optional<double> abs_error;
  std::optional<double> abs_error_y0;
};

/// Expected values come from the strategy: mask_prob for MLM, the LIM
/// formulas with the counter's empirical p_y1 otherwise.
MaskProbReport make_mask_report(const MaskCounter& counts, masking::Strategy strategy,
                                double mask_prob, double p_nc);

/// Throws on an empty stream.
MaskProbReport empirical_mask_report(std::span<const masking::MaskedExample> examples,
                                     masking::Strategy strategy, double mask_prob, double p_nc);

struct KsResult {
  double d_statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// Kolmogorov survival function Q(lambda) = 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// Two-sample KS test. D is exact (merged scan over distinct values, so ties
/// are handled); the p-value is asymptotic with the effective-n correction.
KsResult ks_two_sample(std::span<const double> sample_a, std::span<const double> sample_b);

struct DistributionSummary {
  double mean = 0.0;
  /// Population standard deviation.
  double sd = 0.0;
  /// Bucketed by floor(value).
  std::map<std::int64_t, std::uint64_t> histogram;
};

DistributionSummary summarize_distribution(std::span<const double> sample);

}  // namespace lim::stats
