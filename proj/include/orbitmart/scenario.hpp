#pragma once

// Simulation harness: data generators, replicated martingale runs and the
// aggregate report (rank uniformity, anytime crossing frequency, growth).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "orbitmart/group.hpp"
#include "orbitmart/rng.hpp"

namespace orbitmart::sim {

enum class GeneratorKind { IidGaussian, Changepoint, Ar1, HeavyTail, DependentPair, LinearModel };

struct Generator {
  GeneratorKind kind = GeneratorKind::IidGaussian;
  double mu = 0.0;
  double sigma = 1.0;
  std::uint64_t n0 = 0;   // changepoint: shift applies for n > n0
  double shift = 0.0;
  double rho = 0.0;       // ar1 coefficient or pairwise correlation
  double df = 3.0;        // heavy_tail degrees of freedom
  double noise = 1.0;     // linear_model noise scale
  std::vector<double> beta;  // linear_model coefficients (padded with zeros)
};

struct Scenario {
  GroupSpec group = GroupSpec::full_permutation();
  Generator generator;
  std::uint64_t horizon = 1000;
  std::uint64_t replications = 100;
  std::uint64_t seed = 0;
  std::string calibrator = "power-mixture";
  double alpha = 0.05;
  std::size_t joint = 1;  // K > 1 runs the joint-rank independence test
  std::vector<std::uint64_t> checkpoints{10, 100, 1000};

  /// Throws InvalidSpec on out-of-range parameters.
  void validate() const;

  /// `key = value` lines; '#' starts a comment. Throws InvalidSpec.
  static Scenario parse(std::istream& in);
  static Scenario load(const std::filesystem::path& path);
};

/// Produces the observations of one replication, one time step at a time.
class DataSource {
 public:
  DataSource(const Scenario& scenario, CounterRng rng);

  /// K observations for time n (1-based), one per stream.
  std::vector<Observation> next();

 private:
  double marginal(std::size_t stream);

  const Scenario& scenario_;
  CounterRng rng_;
  std::uint64_t n_ = 0;
  std::vector<double> ar_state_;
};

struct ReplicationResult {
  std::vector<double> ranks;        // horizon * K, time-major
  std::vector<double> log_wealth;   // natural log M_n, n = 1..horizon
  std::uint64_t rejection_time = 0; // first n with M_n >= 1/alpha, 0 if never
};

/// Runs replication `index` of the scenario; pure function of (scenario, index).
ReplicationResult run_replication(const Scenario& scenario, std::uint64_t index);

struct CheckpointMean {
  std::uint64_t n = 0;
  double mean = 0.0;            // Monte Carlo mean of M_n
  double standard_error = 0.0;
};

struct Report {
  Scenario scenario;
  double ks_statistic = 0.0;
  double ks_p_value = 1.0;
  double lag1_correlation = 0.0;
  double lag1_bound = 0.0;  // 3 / sqrt(N R)
  double crossing_frequency = 0.0;
  double crossing_bound = 0.0;  // alpha + 3 binomial standard errors
  double mean_final_log10 = 0.0;
  double median_final_log10 = 0.0;
  std::vector<CheckpointMean> checkpoints;
  std::vector<double> mean_log10_curve;
  std::vector<double> median_log10_curve;
  std::vector<double> crossed_curve;  // fraction of replications crossed by n
  std::vector<double> final_log10;
  std::vector<std::uint64_t> rejection_times;

  nlohmann::json to_json() const;
};

/// Runs every replication on `threads` workers (0 = hardware concurrency) and
/// folds the results in replication order, so the report does not depend on
/// the thread count.
Report run_scenario(const Scenario& scenario, unsigned threads = 0);

/// Writes report.json, trajectory.csv and replications.csv into `dir`.
void write_report(const Report& report, const std::filesystem::path& dir);

// --- statistics ------------------------------------------------------------

/// Kolmogorov-Smirnov distance between the sample and Uniform[0, 1].
double ks_statistic_uniform(std::span<const double> sample);
/// Asymptotic p-value of the one-sample KS test (Stephens' small-n correction).
double ks_p_value(double statistic, std::size_t n);
/// Pearson correlation of consecutive pairs within each series of `length`.
double lag1_correlation(std::span<const double> series, std::size_t length);

}  // namespace orbitmart::sim
