#include "lim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "lim/error.hpp"

namespace lim::stats {
namespace {

std::optional<double> ratio_se(double aa, double ab, double bb, double a_total, double b_total,
                               std::uint64_t n) {
  if (b_total <= 0 || n < 2) return std::nullopt;
  const double r = a_total / b_total;
  const double ss = std::max(0.0, aa - 2.0 * r * ab + r * r * bb);
  const double nn = static_cast<double>(n);
  return std::sqrt(ss * nn / (nn - 1.0)) / b_total;
}

}  // namespace

double expected_conditional_mask_prob(double mask_prob, double p_nc, double p_y1) {
  if (p_y1 <= 0.0) fail(ErrorKind::kInvalidArgument, "p_y1 must be positive");
  require(mask_prob > 0.0 && mask_prob <= 1.0, "mask_prob must be in (0, 1]");
  require(p_nc >= 0.0 && p_nc <= 1.0, "p_nc must be in [0, 1]");
  require(p_y1 <= 1.0, "p_y1 must be at most 1");
  // p_nc / p_y1 first: equal arguments then give mask_prob bit-exactly.
  const double p = mask_prob * (p_nc / p_y1);
  if (p > 1.0) {
    fail(ErrorKind::kInvalidArgument,
         "inconsistent parameterization: mask_prob * p_nc / p_y1 = " + std::to_string(p) +
             " exceeds 1");
  }
  return p;
}

double expected_conditional_mask_prob_y0(double mask_prob, double p_nc, double p_y1) {
  return expected_conditional_mask_prob(mask_prob, 1.0 - p_nc, 1.0 - p_y1);
}

void MaskCounter::add(const masking::MaskedExample& ex) {
  if (ex.y.size() != ex.input_ids.size()) {
    fail(ErrorKind::kInvalidArgument, "example lacks per-position chunk flags");
  }
  std::uint64_t b1 = 0;
  for (const bool flag : ex.y) b1 += flag ? 1 : 0;
  const std::uint64_t b0 = ex.y.size() - b1;
  std::uint64_t a1 = 0;
  for (const std::uint32_t pos : ex.masked_positions) a1 += ex.y[pos] ? 1 : 0;
  const std::uint64_t a0 = ex.masked_positions.size() - a1;

  ++n_sequences;
  n_tokens += ex.y.size();
  n_y1 += b1;
  n_masked_y1 += a1;
  n_masked_y0 += a0;
  n_fallback += ex.fallback ? 1 : 0;
  const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
  y1_aa += d(a1 * a1);
  y1_ab += d(a1 * b1);
  y1_bb += d(b1 * b1);
  y0_aa += d(a0 * a0);
  y0_ab += d(a0 * b0);
  y0_bb += d(b0 * b0);
}

void MaskCounter::merge(const MaskCounter& o) {
  n_sequences += o.n_sequences;
  n_tokens += o.n_tokens;
  n_y1 += o.n_y1;
  n_masked_y1 += o.n_masked_y1;
  n_masked_y0 += o.n_masked_y0;
  n_fallback += o.n_fallback;
  y1_aa += o.y1_aa;
  y1_ab += o.y1_ab;
  y1_bb += o.y1_bb;
  y0_aa += o.y0_aa;
  y0_ab += o.y0_ab;
  y0_bb += o.y0_bb;
}

MaskProbReport make_mask_report(const MaskCounter& c, masking::Strategy strategy,
                                double mask_prob, double p_nc) {
  MaskProbReport r;
  r.n_sequences = c.n_sequences;
  r.n_tokens = c.n_tokens;
  r.n_fallback = c.n_fallback;
  const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
  const std::uint64_t n_y0 = c.n_tokens - c.n_y1;
  r.p_y1 = c.n_tokens == 0 ? 0.0 : d(c.n_y1) / d(c.n_tokens);
  if (c.n_y1 > 0) {
    r.p_mask_given_y1 = d(c.n_masked_y1) / d(c.n_y1);
    r.se_y1 = ratio_se(c.y1_aa, c.y1_ab, c.y1_bb, d(c.n_masked_y1), d(c.n_y1), c.n_sequences);
  }
  if (n_y0 > 0) {
    r.p_mask_given_y0 = d(c.n_masked_y0) / d(n_y0);
    r.se_y0 = ratio_se(c.y0_aa, c.y0_ab, c.y0_bb, d(c.n_masked_y0), d(n_y0), c.n_sequences);
  }

  if (strategy == masking::Strategy::kMlm) {
    r.expected_p_mask_given_y1 = mask_prob;
    r.expected_p_mask_given_y0 = mask_prob;
  } else {
    if (c.n_y1 > 0) r.expected_p_mask_given_y1 = expected_conditional_mask_prob(mask_prob, p_nc, r.p_y1);
    if (n_y0 > 0) r.expected_p_mask_given_y0 = expected_conditional_mask_prob_y0(mask_prob, p_nc, r.p_y1);
  }
  if (r.p_mask_given_y1 && r.expected_p_mask_given_y1) {
    r.abs_error = std::abs(*r.p_mask_given_y1 - *r.expected_p_mask_given_y1);
  }
  if (r.p_mask_given_y0 && r.expected_p_mask_given_y0) {
    r.abs_error_y0 = std::abs(*r.p_mask_given_y0 - *r.expected_p_mask_given_y0);
  }
  return r;
}

MaskProbReport empirical_mask_report(std::span<const masking::MaskedExample> examples,
                                     masking::Strategy strategy, double mask_prob, double p_nc) {
  if (examples.empty()) fail(ErrorKind::kInvalidArgument, "empty example stream");
  MaskCounter counter;
  for (const auto& ex : examples) counter.add(ex);
  return make_mask_report(counter, strategy, mask_prob, p_nc);
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double q;
  if (lambda < 1.18) {
    // The alternating series converges slowly here; use the equivalent
    // Jacobi-theta form of the CDF instead.
    constexpr double pi = std::numbers::pi;
    const double t = -pi * pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(odd * odd * t);
      cdf += term;
      if (term < 1e-300) break;
    }
    cdf *= std::sqrt(2.0 * pi) / lambda;
    q = 1.0 - cdf;
  } else {
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      sum += (k % 2 == 1) ? term : -term;
    }
    q = 2.0 * sum;
  }
  return std::clamp(q, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> sample_a, std::span<const double> sample_b) {
  if (sample_a.empty() || sample_b.empty()) fail(ErrorKind::kInvalidArgument, "empty sample");
  std::vector<double> a(sample_a.begin(), sample_a.end());
  std::vector<double> b(sample_b.begin(), sample_b.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());

  // Both ECDFs are right-continuous step functions, so the supremum of their
  // difference is attained just after some distinct sample value.
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (i == a.size()) {
      v = b[j];
    } else if (j == b.size()) {
      v = a[i];
    } else {
      v = std::min(a[i], b[j]);
    }
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }

  KsResult result;
  result.d_statistic = d;
  result.n1 = a.size();
  result.n2 = b.size();
  const double ne = n1 * n2 / (n1 + n2);
  const double sqrt_ne = std::sqrt(ne);
  result.p_value = kolmogorov_q((sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d);
  return result;
}

DistributionSummary summarize_distribution(std::span<const double> sample) {
  if (sample.empty()) fail(ErrorKind::kInvalidArgument, "empty sample");
  DistributionSummary s;
  double sum = 0.0;
  for (const double v : sample) {
    sum += v;
    ++s.histogram[static_cast<std::int64_t>(std::floor(v))];
  }
  const double n = static_cast<double>(sample.size());
  s.mean = sum / n;
  double ss = 0.0;
  for (const double v : sample) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / n);
  return s;
}

}  // namespace lim::stats
