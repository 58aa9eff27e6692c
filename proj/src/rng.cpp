#include "orbitmart/rng.hpp"

namespace orbitmart {

CounterRng CounterRng::split(std::uint64_t index) const noexcept {
  return CounterRng(FromKey{}, mix(key_ ^ mix(index + kGolden)) + kGolden);
}

}  // namespace orbitmart
