#include "orbitmart/orbit_rank.hpp"

#include <algorithm>
#include <cmath>

#include "orbitmart/error.hpp"
#include "orbitmart/numerics.hpp"

namespace orbitmart {
namespace {

constexpr double kDegenerateTolerance = 1e-10;

void check_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "theta must lie in [0, 1]");
  }
}

void check_nonempty(const OrbitState& state) {
  if (state.n() == 0) {
    throw Error(ErrorKind::InvalidArgument, "rank requires the state to include the observation");
  }
}

OrbitRank point_orbit(std::uint64_t n, double theta, bool degenerate) {
  return OrbitRank{theta, theta, n, 0.0, 1.0, degenerate};
}

OrbitRank continuous(std::uint64_t n, double theta, double r) {
  return OrbitRank{r, theta, n, r, 0.0, false};
}

}  // namespace

OrbitRank rank_permutation(const OrbitState& state, const Observation& obs, double theta) {
  check_theta(theta);
  check_nonempty(state);
  const auto& cls = state.permutation().classes[state.class_index(obs, state.n())];
  const double score = obs.value;
  const auto greater = cls.count_greater(score);
  const auto equal = cls.count_equal(score);
  if (equal == 0) {
    throw Error(ErrorKind::InvalidArgument, "state does not contain the ranked observation");
  }
  const double size = static_cast<double>(cls.size());
  OrbitRank out;
  out.theta = theta;
  out.n = state.n();
  out.upper_mass = static_cast<double>(greater) / size;
  out.tie_mass = static_cast<double>(equal) / size;
  out.r = (static_cast<double>(greater) + theta * static_cast<double>(equal)) / size;
  return out;
}

OrbitRank rank_spherical(const OrbitState& state, const Observation& obs, double theta) {
  check_theta(theta);
  check_nonempty(state);
  const auto& orth = state.orthogonal();
  if (orth.last_value != obs.value) {
    throw Error(ErrorKind::InvalidArgument, "state does not end with the ranked observation");
  }
  const auto n = state.n();
  if (orth.norm_sq == 0.0) return point_orbit(n, theta, true);
  // O(1) = {+-1}: the first rank is theta by convention.
  if (n == 1) return point_orbit(n, theta, false);
  const double c = obs.value / std::sqrt(orth.norm_sq);
  return continuous(n, theta, numerics::cap_measure(c, static_cast<int>(n)));
}

double spherical_rank_via_t(const OrbitState& state, double theta) {
  check_theta(theta);
  check_nonempty(state);
  const auto& orth = state.orthogonal();
  const auto n = state.n();
  if (orth.norm_sq == 0.0 || n == 1) return theta;
  const double x = orth.last_value;
  if (orth.prev_norm_sq == 0.0) return x > 0.0 ? 0.0 : 1.0;
  const double dof = static_cast<double>(n - 1);
  const double t = x / std::sqrt(orth.prev_norm_sq / dof);
  return numerics::t_upper_tail(t, static_cast<int>(n - 1));
}

OrbitRank rank_isotropy(const OrbitState& state, const Observation& obs, double theta) {
  check_theta(theta);
  check_nonempty(state);
  check_payload(state.spec(), obs);
  const auto& iso = state.isotropy();
  const auto n = state.n();
  const auto d = static_cast<std::uint64_t>(state.spec().parameter);
  // n <= d: the isotropy group fixes every coordinate.
  if (!iso.fitted || n <= d) return point_orbit(n, theta, true);
  const double h = iso.last_leverage;
  const double rss = iso.rss;
  if (h >= 1.0 - kDegenerateTolerance || rss <= kDegenerateTolerance * kDegenerateTolerance * std::max(1.0, iso.y_norm_sq)) {
    return point_orbit(n, theta, true);
  }
  double c = iso.last_residual / (std::sqrt(rss) * std::sqrt(1.0 - h));
  c = std::clamp(c, -1.0, 1.0);
  const auto sphere_dim = n - d;
  if (sphere_dim == 1) {
    // Two-point orbit {Y, Y - 2w}: the reflection wins iff the residual is negative.
    if (iso.last_residual == 0.0) return point_orbit(n, theta, false);
    const double upper = c < 0.0 ? 0.5 : 0.0;
    return OrbitRank{upper + 0.5 * theta, theta, n, upper, 0.5, false};
  }
  return continuous(n, theta, numerics::cap_measure(c, static_cast<int>(sphere_dim)));
}

OrbitRank rank(const OrbitState& state, const Observation& obs, double theta) {
  switch (state.spec().family) {
    case Family::FullPermutation:
    case Family::ModularPermutation:
    case Family::LabelPermutation:
      return rank_permutation(state, obs, theta);
    case Family::FullOrthogonal:
      return rank_spherical(state, obs, theta);
    case Family::DesignIsotropy:
      return rank_isotropy(state, obs, theta);
  }
  throw Error(ErrorKind::Internal, "unknown family");
}

}  // namespace orbitmart
