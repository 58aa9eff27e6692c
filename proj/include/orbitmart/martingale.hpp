#pragma once

#include <cstdint>
#include <span>

#include "orbitmart/calibrator.hpp"
#include "orbitmart/orbit_rank.hpp"

namespace orbitmart {

/// Conformal test martingale M_n = prod f_i(R_i), tracked in log space.
///
/// Rejection latches on the running maximum: once M_n has reached 1/alpha the
/// state stays rejected, matching the stopped process at the first crossing.
class MartingaleState {
 public:
  explicit MartingaleState(double alpha);

  double log_wealth() const noexcept { return log_wealth_; }
  double max_log_wealth() const noexcept { return max_log_wealth_; }
  double log10_wealth() const noexcept;
  /// exp(log M_n), saturating at +inf / 0.
  double wealth() const noexcept;
  std::uint64_t n() const noexcept { return n_; }
  double alpha() const noexcept { return alpha_; }
  bool rejected() const noexcept { return rejected_; }
  /// -log(alpha)
  double log_threshold() const noexcept;

  /// Multiplies in one factor. Throws Internal for a nonpositive or
  /// non-finite factor.
  void accumulate(double factor);

  /// Optional continuation: this stream followed by an independent one.
  /// Throws InvalidArgument when alpha differs.
  static MartingaleState combine(const MartingaleState& first, const MartingaleState& second);

 private:
  void refresh_rejection();

  double log_wealth_ = 0.0;
  double max_log_wealth_ = 0.0;
  std::uint64_t n_ = 0;
  double alpha_;
  bool rejected_ = false;
};

/// Evaluates the calibrator at r, multiplies the factor into m, then feeds r
/// to the calibrator. Returns the factor.
double step(MartingaleState& m, Calibrator& cal, std::span<const double> r);
double step(MartingaleState& m, Calibrator& cal, const OrbitRank& r);

inline MartingaleState combine(const MartingaleState& a, const MartingaleState& b) {
  return MartingaleState::combine(a, b);
}

}  // namespace orbitmart
