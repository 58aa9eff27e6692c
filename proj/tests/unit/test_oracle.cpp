#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "orbitmart/error.hpp"
#include "orbitmart/numerics.hpp"
#include "orbitmart/oracle.hpp"
#include "orbitmart/scenario.hpp"

using namespace orbitmart;

namespace {

std::vector<Observation> scalars(std::initializer_list<double> xs) {
  std::vector<Observation> out;
  for (double x : xs) out.push_back(Observation::scalar(x));
  return out;
}

// One-sample KS statistic against a continuous CDF.
template <class Cdf>
double ks_against(std::vector<double> xs, Cdf&& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace

TEST(HaarSample, PermutationOrderingsAreUniform) {
  CounterRng rng(51);
  const auto prefix = scalars({1, 2, 3});
  std::map<std::vector<double>, int> freq;
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) ++freq[oracle::haar_sample(GroupSpec::full_permutation(), prefix, rng)];
  ASSERT_EQ(freq.size(), 6u);
  // Joint chi-square over the six orderings; a per-cell 3 SE band would fail
  // by chance for one of six cells more often than intended.
  const double expected = draws / 6.0;
  double chi2 = 0;
  for (const auto& [perm, count] : freq) chi2 += (count - expected) * (count - expected) / expected;
  EXPECT_LT(chi2, 20.52);  // 99.9% quantile, 5 degrees of freedom
}

TEST(HaarSample, ModularShufflesWithinClassesOnly) {
  CounterRng rng(52);
  const auto prefix = scalars({1, 2, 3, 4, 5, 6, 7});
  for (int i = 0; i < 200; ++i) {
    const auto s = oracle::haar_sample(GroupSpec::modular_permutation(3), prefix, rng);
    for (std::size_t j = 0; j < s.size(); ++j) {
      // Values are 1..7 at positions 0..6; a value may only move by multiples of 3.
      ASSERT_EQ((static_cast<int>(s[j]) - 1 - static_cast<int>(j)) % 3, 0);
    }
  }
}

TEST(HaarSample, LabelShufflesWithinLabels) {
  CounterRng rng(53);
  std::vector<Observation> prefix{Observation::labelled(1, 0), Observation::labelled(2, 1),
                                  Observation::labelled(3, 0), Observation::labelled(4, 1)};
  for (int i = 0; i < 200; ++i) {
    const auto s = oracle::haar_sample(GroupSpec::label_permutation(2), prefix, rng);
    ASSERT_TRUE((s[0] == 1 && s[2] == 3) || (s[0] == 3 && s[2] == 1));
    ASSERT_TRUE((s[1] == 2 && s[3] == 4) || (s[1] == 4 && s[3] == 2));
  }
}

TEST(HaarSample, SpherePointsKeepNorm) {
  CounterRng rng(54);
  const auto prefix = scalars({0.3, -2, 1.5, 4, 0.1});
  const double norm = std::sqrt(0.09 + 4 + 2.25 + 16 + 0.01);
  for (int i = 0; i < 1000; ++i) {
    const auto s = oracle::haar_sample(GroupSpec::full_orthogonal(), prefix, rng);
    double sq = 0;
    for (double x : s) sq += x * x;
    ASSERT_NEAR(std::sqrt(sq), norm, 1e-10);
  }
}

TEST(HaarSample, IsotropyPointsKeepFitAndNorm) {
  CounterRng rng(55);
  std::mt19937_64 gen(55);
  std::normal_distribution<double> normal;
  const std::size_t n = 12, d = 3;
  std::vector<Observation> prefix;
  for (std::size_t i = 0; i < n; ++i) {
    prefix.push_back(Observation::with_covariates(normal(gen), {1.0, normal(gen), normal(gen)}));
  }
  Eigen::MatrixXd Z(n, d);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y(i) = prefix[i].value;
    for (std::size_t j = 0; j < d; ++j) Z(i, j) = prefix[i].covariates[j];
  }
  const Eigen::VectorXd zy = Z.transpose() * y;
  for (int t = 0; t < 500; ++t) {
    const auto s = oracle::haar_sample(GroupSpec::design_isotropy(d), prefix, rng);
    const Eigen::VectorXd ys = Eigen::Map<const Eigen::VectorXd>(s.data(), n);
    ASSERT_LE((Z.transpose() * ys - zy).cwiseAbs().maxCoeff(), 1e-9);
    ASSERT_NEAR(ys.norm(), y.norm(), 1e-9);
  }
}

TEST(HaarSample, SphereLastCoordinateMatchesCapQuantiles) {
  CounterRng rng(56);
  const auto prefix = scalars({1, -0.5, 2, 0.7, -1.2, 0.4});
  double sq = 0;
  for (const auto& o : prefix) sq += o.value * o.value;
  const double radius = std::sqrt(sq);
  const int m = static_cast<int>(prefix.size());
  std::vector<double> last;
  for (int i = 0; i < 100000; ++i) last.push_back(oracle::haar_sample(GroupSpec::full_orthogonal(), prefix, rng).back());
  const double d = ks_against(last, [&](double x) { return 1 - numerics::cap_measure(x / radius, m); });
  // Asymptotic 1% critical value 1.628 / sqrt(S).
  EXPECT_LT(d, 1.628 / std::sqrt(100000.0));
}

TEST(HaarSample, DegenerateOrbitReturnsPoint) {
  CounterRng rng(57);
  const auto zeros = scalars({0, 0, 0});
  EXPECT_EQ(oracle::haar_sample(GroupSpec::full_orthogonal(), zeros, rng), (std::vector<double>{0, 0, 0}));
}

TEST(BruteForce, ExactExample) {
  const auto r = oracle::brute_force_exact(GroupSpec::full_permutation(), scalars({0.5, 0.2, 0.9}), 0.5);
  EXPECT_EQ(r.total, 6u);
  EXPECT_EQ(r.upper_count, 0u);
  EXPECT_EQ(r.tie_count, 2u);
  EXPECT_NEAR(r.r, 1.0 / 6, 1e-15);
}

TEST(BruteForce, ExactRejectsLargeClassAndMatrixFamilies) {
  EXPECT_THROW(oracle::brute_force_exact(GroupSpec::full_permutation(), scalars({1, 2, 3, 4, 5, 6, 7, 8, 9}), 0.5),
               Error);
  EXPECT_NO_THROW(oracle::brute_force_exact(GroupSpec::modular_permutation(2),
                                            scalars({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}), 0.5));
  EXPECT_THROW(oracle::brute_force_exact(GroupSpec::full_orthogonal(), scalars({1, 2}), 0.5), Error);
}

TEST(BruteForce, MonteCarloCircle) {
  CounterRng rng(58);
  const auto r = oracle::brute_force_monte_carlo(GroupSpec::full_orthogonal(), scalars({1, 1}), 0.3, 100000, rng);
  EXPECT_NEAR(r.r, 0.25, 3 * std::sqrt(0.25 * 0.75 / 1e5));
  EXPECT_EQ(r.tie_count, 0u);
}

TEST(BruteForce, DegeneratePrefixReturnsTheta) {
  CounterRng rng(59);
  const auto r = oracle::brute_force_monte_carlo(GroupSpec::full_orthogonal(), scalars({0, 0, 0}), 0.37, 100, rng);
  EXPECT_EQ(r.r, 0.37);
}

TEST(BruteForce, IsotropyThreePointExampleHasEmptyCap) {
  CounterRng rng(60);
  std::vector<Observation> prefix;
  for (double y : {0.0, 0.0, 3.0}) prefix.push_back(Observation::with_covariates(y, {1.0}));
  const auto r = oracle::brute_force_monte_carlo(GroupSpec::design_isotropy(1), prefix, 0.5, 20000, rng);
  EXPECT_EQ(r.upper_count, 0u);
}

TEST(Reconstruct, ThreePointExample) {
  RankStream s(GroupSpec::full_permutation());
  std::vector<OrbitRank> ranks;
  for (double x : {0.5, 0.2, 0.9}) ranks.push_back(s.push(Observation::scalar(x), 0.4));
  const auto back = oracle::reconstruct(ranks, s.state());
  EXPECT_EQ(back.values, (std::vector<double>{0.5, 0.2, 0.9}));
  for (double t : back.thetas) EXPECT_NEAR(t, 0.4, 1e-12);
}

TEST(Reconstruct, SingleElement) {
  RankStream s(GroupSpec::full_permutation());
  std::vector<OrbitRank> ranks{s.push(Observation::scalar(-7.5), 0.9)};
  EXPECT_EQ(oracle::reconstruct(ranks, s.state()).values, (std::vector<double>{-7.5}));
}

TEST(Reconstruct, TiesAreRejected) {
  RankStream s(GroupSpec::full_permutation());
  std::vector<OrbitRank> ranks;
  for (double x : {1.0, 2.0, 1.0}) ranks.push_back(s.push(Observation::scalar(x), 0.5));
  try {
    oracle::reconstruct(ranks, s.state());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("ties"), std::string::npos);
  }
}

TEST(Reconstruct, InconsistentRanks) {
  RankStream s(GroupSpec::full_permutation());
  std::vector<OrbitRank> ranks;
  for (double x : {1.0, 2.0}) ranks.push_back(s.push(Observation::scalar(x), 0.5));
  ranks.pop_back();
  EXPECT_THROW(oracle::reconstruct(ranks, s.state()), Error);
}

TEST(CalibratorSampling, PowerDensityKs) {
  CounterRng rng(61);
  const auto cal = Calibrator::power(0.3);
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(oracle::sample_from_calibrator(cal, rng)[0]);
  EXPECT_LT(ks_against(xs, [](double r) { return std::pow(r, 0.3); }), 1.628 / std::sqrt(20000.0));
}

TEST(CalibratorSampling, MixtureDensityKs) {
  CounterRng rng(62);
  const auto cal = Calibrator::power_mixture();
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(oracle::sample_from_calibrator(cal, rng)[0]);
  auto cdf = [](double r) {
    double f = 0;
    for (int j = 1; j <= 19; ++j) f += std::pow(r, 0.05 * j) / 19;
    return f;
  };
  EXPECT_LT(ks_against(xs, cdf), 1.628 / std::sqrt(20000.0));
}

TEST(CalibratorSampling, HistogramDensityKs) {
  CounterRng rng(63);
  auto cal = Calibrator::histogram(5, 1.0);
  for (double r : {0.05, 0.1, 0.15, 0.9, 0.5, 0.01}) cal.update(r);
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(oracle::sample_from_calibrator(cal, rng)[0]);
  auto cdf = [&](double r) {
    // Integrate the piecewise-constant density.
    double f = 0;
    for (int b = 0; b < 5; ++b) {
      const double lo = b / 5.0, hi = (b + 1) / 5.0;
      f += cal.evaluate((lo + hi) / 2) * std::clamp(r - lo, 0.0, hi - lo);
    }
    return f;
  };
  EXPECT_LT(ks_against(xs, cdf), 1.628 / std::sqrt(20000.0));
}

TEST(CalibratorSampling, JointHistogramCellFrequencies) {
  CounterRng rng(64);
  auto cal = Calibrator::histogram_kd(2, 2, 1.0);
  for (int i = 0; i < 6; ++i) {
    const double p[2] = {0.1, 0.8};
    cal.update(p);
  }
  // Cell (0, 1) has (6 + 1) / (6 + 4) of the mass.
  int hits = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const auto p = oracle::sample_from_calibrator(cal, rng);
    hits += p[0] < 0.5 && p[1] >= 0.5;
  }
  EXPECT_NEAR(hits / static_cast<double>(draws), 0.7, 3 * std::sqrt(0.21 / draws));
}
