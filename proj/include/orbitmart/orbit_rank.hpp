#pragma once

#include <cstdint>

#include "orbitmart/group.hpp"

namespace orbitmart {

/// One smoothed orbit rank: r = upper_mass + theta * tie_mass, where the masses
/// are Haar probabilities of group elements sending the newest score above
/// (respectively onto) its observed value.
struct OrbitRank {
  double r = 0.0;
  double theta = 0.0;
  std::uint64_t n = 0;
  double upper_mass = 0.0;
  double tie_mass = 0.0;
  bool degenerate = false;  // orbit collapsed to a point
};

// Each rank_* function expects `state` to already include `obs` as its newest
// observation (call OrbitState::update first).

OrbitRank rank_permutation(const OrbitState& state, const Observation& obs, double theta);
OrbitRank rank_spherical(const OrbitState& state, const Observation& obs, double theta);
OrbitRank rank_isotropy(const OrbitState& state, const Observation& obs, double theta);

/// Dispatches on the state's family.
OrbitRank rank(const OrbitState& state, const Observation& obs, double theta);

/// The spherical rank through the Student-t upper tail with n - 1 degrees of
/// freedom instead of the cap area. Used to cross-check rank_spherical.
double spherical_rank_via_t(const OrbitState& state, double theta);

/// Couples a summary with the rank computation: update, then rank.
class RankStream {
 public:
  explicit RankStream(GroupSpec spec) : state_(spec) {}

  OrbitRank push(const Observation& obs, double theta) {
    state_.update(obs);
    return rank(state_, obs, theta);
  }

  const OrbitState& state() const noexcept { return state_; }

 private:
  OrbitState state_;
};

}  // namespace orbitmart
