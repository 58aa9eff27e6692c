#pragma once

// Ground-truth oracles that evaluate orbit ranks directly from the raw data
// prefix, independently of the incremental summaries in group.hpp.

#include <cstdint>
#include <span>
#include <vector>

#include "orbitmart/calibrator.hpp"
#include "orbitmart/group.hpp"
#include "orbitmart/orbit_rank.hpp"
#include "orbitmart/rng.hpp"

namespace orbitmart::oracle {

/// Largest class that exact enumeration accepts (8! = 40320 permutations).
inline constexpr std::size_t kMaxExactClass = 8;

/// Responses of a uniformly drawn point on the orbit of `prefix`; labels and
/// covariates stay fixed. Permutation families shuffle within classes;
/// FullOrthogonal draws on the sphere of radius ||X^n||; DesignIsotropy keeps
/// the fitted part HY and draws the residual on the sphere of radius
/// sqrt(rss) inside col(Z)^perp.
std::vector<double> haar_sample(const GroupSpec& spec, std::span<const Observation> prefix,
                                CounterRng& rng);

struct BruteForceRank {
  double r = 0.0;
  double upper_mass = 0.0;
  double tie_mass = 0.0;
  double standard_error = 0.0;  // zero for exact enumeration
  std::uint64_t upper_count = 0;
  std::uint64_t tie_count = 0;
  std::uint64_t total = 0;
};

/// Enumerates every permutation of the newest observation's class. Throws
/// InvalidArgument for non-permutation families or classes above kMaxExactClass.
BruteForceRank brute_force_exact(const GroupSpec& spec, std::span<const Observation> prefix,
                                 double theta);

/// Estimates upper and tie masses from `samples` Haar draws on the orbit.
BruteForceRank brute_force_monte_carlo(const GroupSpec& spec, std::span<const Observation> prefix,
                                       double theta, std::uint64_t samples, CounterRng& rng);

struct Reconstruction {
  std::vector<double> values;
  std::vector<double> thetas;
};

/// Recovers the observation sequence (and the randomization draws) of a
/// FullPermutation stream from its ranks and final order statistics. Throws
/// InvalidArgument with "ties" when the summary has repeated values and when
/// the ranks are inconsistent with the summary.
Reconstruction reconstruct(std::span<const OrbitRank> ranks, const OrbitState& final_summary);

/// One draw from the calibrator's current density (inverse transform for power
/// densities, bin choice plus uniform offset for histograms).
std::vector<double> sample_from_calibrator(const Calibrator& cal, CounterRng& rng);

}  // namespace orbitmart::oracle
