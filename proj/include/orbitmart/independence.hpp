#pragma once

// Joint ranks of K parallel invariant streams, scored by a joint calibrator on
// [0,1]^K.

#include <cstdint>
#include <span>
#include <vector>

#include "orbitmart/calibrator.hpp"
#include "orbitmart/martingale.hpp"
#include "orbitmart/orbit_rank.hpp"

namespace orbitmart {

struct JointRank {
  std::vector<OrbitRank> components;
  std::uint64_t n = 0;

  std::vector<double> point() const;
};

struct JointStepResult {
  JointRank rank;
  double factor = 1.0;
};

/// Advances K streams by one K-tuple: update and rank each stream, score the
/// joint rank under `cal`, step `m`, then feed the joint rank to `cal`.
///
/// Throws InvalidArgument on dimension mismatch and InvalidSpec when the
/// streams do not share a group family.
JointStepResult step_joint(std::span<OrbitState> states, Calibrator& cal, MartingaleState& m,
                           std::span<const Observation> obs, std::span<const double> thetas);

/// Owns the K stream states, the joint calibrator and the martingale.
class JointTest {
 public:
  JointTest(const GroupSpec& spec, std::size_t streams, Calibrator cal, double alpha);

  JointStepResult push(std::span<const Observation> obs, std::span<const double> thetas) {
    return step_joint(states_, cal_, m_, obs, thetas);
  }

  std::size_t streams() const noexcept { return states_.size(); }
  const MartingaleState& martingale() const noexcept { return m_; }
  const Calibrator& calibrator() const noexcept { return cal_; }
  const std::vector<OrbitState>& states() const noexcept { return states_; }

 private:
  std::vector<OrbitState> states_;
  Calibrator cal_;
  MartingaleState m_;
};

}  // namespace orbitmart
