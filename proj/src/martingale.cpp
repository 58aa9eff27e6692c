#include "orbitmart/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "orbitmart/error.hpp"

namespace orbitmart {
namespace {

// log(4) + log(5) may land one ulp below -log(0.05); compare with a few ulps
// of slack so M_n = 1/alpha counts as a crossing.
constexpr double kThresholdUlps = 8 * std::numeric_limits<double>::epsilon();

}  // namespace

MartingaleState::MartingaleState(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  }
}

double MartingaleState::log_threshold() const noexcept { return -std::log(alpha_); }

double MartingaleState::log10_wealth() const noexcept { return log_wealth_ / std::log(10.0); }

double MartingaleState::wealth() const noexcept { return std::exp(log_wealth_); }

void MartingaleState::refresh_rejection() {
  const double threshold = log_threshold();
  if (max_log_wealth_ >= threshold - kThresholdUlps * threshold) rejected_ = true;
}

void MartingaleState::accumulate(double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    std::ostringstream os;
    os.precision(17);
    os << "calibrator produced an invalid factor " << factor << " at n=" << n_ + 1;
    throw Error(ErrorKind::Internal, os.str());
  }
  log_wealth_ += std::log(factor);
  max_log_wealth_ = std::max(max_log_wealth_, log_wealth_);
  ++n_;
  refresh_rejection();
}

MartingaleState MartingaleState::combine(const MartingaleState& first,
                                         const MartingaleState& second) {
  if (first.alpha_ != second.alpha_) {
    throw Error(ErrorKind::InvalidArgument, "cannot combine martingales with different alpha");
  }
  MartingaleState out(first.alpha_);
  out.log_wealth_ = first.log_wealth_ + second.log_wealth_;
  out.max_log_wealth_ =
      std::max(first.max_log_wealth_, first.log_wealth_ + second.max_log_wealth_);
  out.n_ = first.n_ + second.n_;
  out.rejected_ = first.rejected_ || second.rejected_;
  out.refresh_rejection();
  return out;
}

double step(MartingaleState& m, Calibrator& cal, std::span<const double> r) {
  const double factor = cal.evaluate(r);
  m.accumulate(factor);
  cal.update(r);
  return factor;
}

double step(MartingaleState& m, Calibrator& cal, const OrbitRank& r) {
  return step(m, cal, std::span<const double>(&r.r, 1));
}

}  // namespace orbitmart
