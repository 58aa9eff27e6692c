#pragma once

// Predictable calibrators: densities on [0,1]^K that turn orbit ranks into
// martingale factors.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace orbitmart {

/// f(r) = kappa r^(kappa - 1), kappa in (0, 1]; kappa = 1 is the uniform density.
struct PowerFixed {
  double kappa = 1.0;
};

/// Equal-or-weighted mixture of power calibrators.
struct PowerMixture {
  std::vector<double> kappas;
  std::vector<double> weights;

  /// kappa in {0.05, 0.10, ..., 0.95} with equal weights.
  static PowerMixture default_grid();
};

/// Laplace-smoothed histogram on B equal bins of [0, 1].
struct Histogram1D {
  std::size_t bins = 10;
  double lambda = 1.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
};

/// Laplace-smoothed histogram on the B^K grid of [0, 1]^K.
struct HistogramKD {
  std::size_t bins = 4;
  std::size_t dims = 2;
  double lambda = 1.0;
  std::vector<std::uint64_t> counts;  // row-major, first axis slowest
  std::uint64_t total = 0;
};

using UnivariateCalibrator = std::variant<PowerFixed, PowerMixture, Histogram1D>;

/// Joint density that is the product of independent univariate calibrators.
struct ProductCalibrator {
  std::vector<UnivariateCalibrator> factors;
};

using CalibratorState =
    std::variant<PowerFixed, PowerMixture, Histogram1D, HistogramKD, ProductCalibrator>;

/// Value wrapper around CalibratorState with validation and parsing.
class Calibrator {
 public:
  explicit Calibrator(CalibratorState state);

  static Calibrator power(double kappa);
  static Calibrator power_mixture();
  static Calibrator histogram(std::size_t bins, double lambda);
  static Calibrator histogram_kd(std::size_t bins, std::size_t dims, double lambda);
  static Calibrator product(std::vector<UnivariateCalibrator> factors);

  /// Parses "power:<kappa>", "power-mixture", "hist:<B>:<lambda>" or
  /// "histkd:<B>:<lambda>". `dims` is the rank dimension K; only histkd
  /// accepts K > 1.
  static Calibrator parse(std::string_view text, std::size_t dims = 1);

  /// Dimension K of the cube the density lives on.
  std::size_t dims() const noexcept;

  /// Density at r. Throws InvalidArgument if r is outside the cube or has the
  /// wrong dimension.
  double evaluate(std::span<const double> r) const;
  double evaluate(double r) const { return evaluate(std::span<const double>(&r, 1)); }

  /// Records r; histogram states gain one count, fixed calibrators are unchanged.
  void update(std::span<const double> r);
  void update(double r) { update(std::span<const double>(&r, 1)); }

  /// Exact integral of the current density over the cube.
  double integral() const;

  const CalibratorState& state() const noexcept { return state_; }
  std::string describe() const;

 private:
  CalibratorState state_;
};

/// Value-returning forms matching the stream API.
inline double evaluate(const Calibrator& cal, std::span<const double> r) { return cal.evaluate(r); }
inline Calibrator update(Calibrator cal, std::span<const double> r) {
  cal.update(r);
  return cal;
}

/// Bin of x in [0, 1] among B half-open bins, last bin closed.
std::size_t bin_index(double x, std::size_t bins);

}  // namespace orbitmart
