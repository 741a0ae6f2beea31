#include <gtest/gtest.h>

#include "lim/error.hpp"
#include "lim/stats.hpp"
#include "lim/synthetic.hpp"
#include "oracles.hpp"

using namespace lim::stats;
using lim::masking::Strategy;

namespace {

std::vector<lim::masking::MaskedExample> synthetic_examples(Strategy strategy, double p_nc,
                                                            std::size_t n) {
  lim::synthetic::FlagCorpusConfig fc;
  fc.n_sentences = n;
  lim::masking::MaskingConfig c;
  c.strategy = strategy;
  c.p_nc = p_nc;
  c.mask_id = 1;
  c.vocab_size = 1002;
  return lim::masking::generate_examples(lim::synthetic::flag_sequences(fc), c);
}

}  // namespace

TEST(ExpectedConditional, Values) {
  EXPECT_NEAR(expected_conditional_mask_prob(0.15, 0.75, 0.507), 0.2219, 1e-4);
  EXPECT_EQ(expected_conditional_mask_prob(0.15, 0.507, 0.507), 0.15);
  EXPECT_DOUBLE_EQ(expected_conditional_mask_prob(0.15, 1.0, 0.5), 0.30);
  EXPECT_NEAR(expected_conditional_mask_prob_y0(0.15, 0.75, 0.507), 0.0761, 1e-4);
}

TEST(ExpectedConditional, Errors) {
  EXPECT_THROW(expected_conditional_mask_prob(0.15, 0.75, 0.0), lim::Error);
  try {
    expected_conditional_mask_prob(0.5, 1.0, 0.1);
    FAIL();
  } catch (const lim::Error& e) {
    EXPECT_NE(std::string(e.what()).find("inconsistent"), std::string::npos);
  }
}

TEST(EmpiricalReport, MlmIsIndependentOfFlags) {
  const auto ex = synthetic_examples(Strategy::kMlm, 0.75, 20000);
  const auto r = empirical_mask_report(ex, Strategy::kMlm, 0.15, 0.75);
  EXPECT_NEAR(*r.p_mask_given_y1, 0.15, 0.005);
  EXPECT_NEAR(*r.p_mask_given_y0, 0.15, 0.005);
  EXPECT_EQ(*r.expected_p_mask_given_y1, 0.15);
}

TEST(EmpiricalReport, ForcedChunkBranch) {
  const auto ex = synthetic_examples(Strategy::kLim, 1.0, 5000);
  const auto r = empirical_mask_report(ex, Strategy::kLim, 0.15, 1.0);
  EXPECT_EQ(r.n_fallback, 0u);
  EXPECT_EQ(*r.p_mask_given_y0, 0.0);
}

TEST(EmpiricalReport, ConditionalLaw) {
  const auto ex = synthetic_examples(Strategy::kLim, 0.75, 100000);
  const auto r = empirical_mask_report(ex, Strategy::kLim, 0.15, 0.75);
  EXPECT_NEAR(*r.p_mask_given_y1, 0.222, 0.005);
  EXPECT_NEAR(*r.p_mask_given_y0, 0.076, 0.005);
  EXPECT_LT(*r.abs_error, 4.0 * *r.se_y1);
}

TEST(EmpiricalReport, UndefinedWithoutChunkTokens) {
  lim::masking::TokenizedSequence seq{{2, 3, 4, 5}, {false, false, false, false}, "d"};
  lim::masking::MaskingConfig c;
  c.vocab_size = 10;
  const auto ex = lim::masking::generate_examples(std::vector{seq}, c);
  const auto r = empirical_mask_report(ex, Strategy::kMlm, 0.15, 0.75);
  EXPECT_FALSE(r.p_mask_given_y1.has_value());
  EXPECT_TRUE(r.p_mask_given_y0.has_value());
}

TEST(EmpiricalReport, EmptyStreamFails) {
  EXPECT_THROW(empirical_mask_report({}, Strategy::kMlm, 0.15, 0.75), lim::Error);
}

TEST(EmpiricalReport, StandardErrorMatchesReplicateSpread) {
  // Spread of the estimator across independent corpora should match the
  // reported standard error.
  std::vector<double> estimates;
  double se = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    lim::synthetic::FlagCorpusConfig fc;
    fc.n_sentences = 2000;
    fc.seed = 100 + seed;
    lim::masking::MaskingConfig c;
    c.strategy = Strategy::kLim;
    c.seed = seed;
    c.mask_id = 1;
    c.vocab_size = 1002;
    const auto ex = lim::masking::generate_examples(lim::synthetic::flag_sequences(fc), c);
    const auto r = empirical_mask_report(ex, Strategy::kLim, 0.15, 0.75);
    estimates.push_back(*r.p_mask_given_y1);
    se += *r.se_y1 / 30.0;
  }
  const auto s = summarize_distribution(estimates);
  EXPECT_GT(s.sd, 0.6 * se);
  EXPECT_LT(s.sd, 1.5 * se);
}

TEST(CounterMerge, MatchesSequential) {
  const auto ex = synthetic_examples(Strategy::kLim, 0.75, 3000);
  MaskCounter whole, a, b;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    whole.add(ex[i]);
    (i < 1234 ? a : b).add(ex[i]);
  }
  a.merge(b);
  EXPECT_EQ(a.n_masked_y1, whole.n_masked_y1);
  EXPECT_EQ(a.n_y1, whole.n_y1);
  EXPECT_DOUBLE_EQ(a.y1_ab, whole.y1_ab);
}

TEST(Ks, HandCases) {
  const std::vector<double> same = {1, 2, 3};
  EXPECT_EQ(ks_two_sample(same, same).d_statistic, 0.0);
  EXPECT_EQ(ks_two_sample(same, same).p_value, 1.0);
  EXPECT_EQ(ks_two_sample(std::vector<double>{1, 2}, std::vector<double>{3, 4}).d_statistic, 1.0);
  EXPECT_EQ(ks_two_sample(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3, 10}).d_statistic,
            0.25);
}

TEST(Ks, EmptyFails) {
  EXPECT_THROW(ks_two_sample({}, std::vector<double>{1}), lim::Error);
}

TEST(Ks, MatchesBruteForce) {
  lim::Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> a(1 + rng.index(50)), b(1 + rng.index(50));
    const std::uint64_t range = 1 + rng.index(12);
    for (double& x : a) x = static_cast<double>(rng.index(range));
    for (double& x : b) x = static_cast<double>(rng.index(range)) + (trial % 3 == 0 ? 2.0 : 0.0);
    EXPECT_EQ(ks_two_sample(a, b).d_statistic, oracle::ks_d(a, b));
  }
}

TEST(Ks, PValueBehaviour) {
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
  // Reference values of the Kolmogorov distribution.
  EXPECT_NEAR(kolmogorov_q(1.0), 0.26999967, 1e-7);
  EXPECT_NEAR(kolmogorov_q(1.36), 0.04939, 1e-4);
  EXPECT_NEAR(kolmogorov_q(0.5), 0.96394524, 1e-7);
  // The two series agree where they meet.
  EXPECT_NEAR(kolmogorov_q(1.1799999), kolmogorov_q(1.18), 1e-6);
  double last = 1.0;
  for (double l = 0.05; l < 3.0; l += 0.05) {
    const double q = kolmogorov_q(l);
    EXPECT_LE(q, last + 1e-12);
    last = q;
  }
}

TEST(Ks, LargeShiftIsSignificant) {
  std::vector<double> a, b;
  lim::Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    a.push_back(static_cast<double>(rng.index(5)));
    b.push_back(static_cast<double>(rng.index(5) + 1));
  }
  EXPECT_LT(ks_two_sample(a, b).p_value, 1e-6);
}

TEST(Summary, HandCases) {
  const auto s = summarize_distribution(std::vector<double>{2, 2, 4});
  EXPECT_DOUBLE_EQ(s.mean, 8.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.sd, std::sqrt(8.0 / 9.0));
  EXPECT_EQ(s.histogram.at(2), 2u);
  EXPECT_EQ(summarize_distribution(std::vector<double>{5, 5, 5}).sd, 0.0);
  EXPECT_DOUBLE_EQ(summarize_distribution(std::vector<double>{1, 1, 7, 7}).mean, 4.0);
  EXPECT_THROW(summarize_distribution({}), lim::Error);
}
