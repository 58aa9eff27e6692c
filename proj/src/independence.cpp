#include "orbitmart/independence.hpp"

#include "orbitmart/error.hpp"

namespace orbitmart {

std::vector<double> JointRank::point() const {
  std::vector<double> p;
  p.reserve(components.size());
  for (const auto& c : components) p.push_back(c.r);
  return p;
}

JointStepResult step_joint(std::span<OrbitState> states, Calibrator& cal, MartingaleState& m,
                           std::span<const Observation> obs, std::span<const double> thetas) {
  const std::size_t k = states.size();
  if (k == 0 || obs.size() != k || thetas.size() != k || cal.dims() != k) {
    throw Error(ErrorKind::InvalidArgument,
                "joint step needs K states, K observations, K thetas and a K-dimensional calibrator");
  }
  for (const auto& s : states) {
    if (!(s.spec() == states.front().spec()) || s.n() != states.front().n()) {
      throw Error(ErrorKind::InvalidSpec, "joint streams must share the group family and time index");
    }
  }
  // Validate every payload before mutating any stream.
  for (std::size_t i = 0; i < k; ++i) check_payload(states[i].spec(), obs[i]);

  JointStepResult out;
  out.rank.components.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    states[i].update(obs[i]);
    out.rank.components.push_back(rank(states[i], obs[i], thetas[i]));
  }
  out.rank.n = states.front().n();
  const auto point = out.rank.point();
  out.factor = step(m, cal, point);
  return out;
}

JointTest::JointTest(const GroupSpec& spec, std::size_t streams, Calibrator cal, double alpha)
    : states_(streams, OrbitState(spec)), cal_(std::move(cal)), m_(alpha) {
  if (streams == 0 || cal_.dims() != streams) {
    throw Error(ErrorKind::InvalidArgument, "joint calibrator dimension must equal the stream count");
  }
}

}  // namespace orbitmart
