#include "orbitmart/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "orbitmart/error.hpp"

namespace orbitmart::oracle {
namespace {

constexpr double kOrthTolerance = 1e-10;

std::size_t class_of(const GroupSpec& spec, const Observation& obs, std::size_t position) {
  switch (spec.family) {
    case Family::ModularPermutation: return (position + 1) % spec.parameter;
    case Family::LabelPermutation: return static_cast<std::size_t>(*obs.label);
    default: return 0;
  }
}

std::vector<std::size_t> class_positions(const GroupSpec& spec, std::span<const Observation> prefix,
                                         std::size_t cls) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (class_of(spec, prefix[i], i) == cls) out.push_back(i);
  }
  return out;
}

void check_prefix(const GroupSpec& spec, std::span<const Observation> prefix) {
  spec.validate();
  if (prefix.empty()) throw Error(ErrorKind::InvalidArgument, "oracle needs a nonempty prefix");
  for (const auto& obs : prefix) check_payload(spec, obs);
}

Eigen::VectorXd responses(std::span<const Observation> prefix) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(prefix.size()));
  for (std::size_t i = 0; i < prefix.size(); ++i) y(static_cast<Eigen::Index>(i)) = prefix[i].value;
  return y;
}

// Orthonormal basis of the design's column space by modified Gram-Schmidt with
// one re-orthogonalization pass. Dependent columns are dropped.
Eigen::MatrixXd column_basis(std::span<const Observation> prefix, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(prefix.size());
  std::vector<Eigen::VectorXd> basis;
  for (std::size_t j = 0; j < d; ++j) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = prefix[static_cast<std::size_t>(i)].covariates[j];
    const double original = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) v -= q.dot(v) * q;
    }
    const double norm = v.norm();
    if (original > 0.0 && norm > kOrthTolerance * original) basis.push_back(v / norm);
  }
  Eigen::MatrixXd q(n, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) q.col(static_cast<Eigen::Index>(j)) = basis[j];
  return q;
}

Eigen::VectorXd gaussian_vector(Eigen::Index n, CounterRng& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; ++i) g(i) = normal(rng);
  return g;
}

// Uniform direction in the complement of span(q), scaled to `radius`.
Eigen::VectorXd complement_sphere_point(const Eigen::MatrixXd& q, double radius, CounterRng& rng) {
  while (true) {
    Eigen::VectorXd g = gaussian_vector(q.rows(), rng);
    if (q.cols() > 0) {
      for (int pass = 0; pass < 2; ++pass) g -= q * (q.transpose() * g);
    }
    const double norm = g.norm();
    if (norm > 0.0) return g * (radius / norm);
  }
}

template <class Fn>
BruteForceRank tally(std::uint64_t upper, std::uint64_t tie, std::uint64_t total, double theta,
                     Fn&& standard_error) {
  BruteForceRank out;
  out.upper_count = upper;
  out.tie_count = tie;
  out.total = total;
  out.upper_mass = static_cast<double>(upper) / static_cast<double>(total);
  out.tie_mass = static_cast<double>(tie) / static_cast<double>(total);
  out.r = (static_cast<double>(upper) + theta * static_cast<double>(tie)) / static_cast<double>(total);
  out.standard_error = standard_error(out.r);
  return out;
}

// Precomputes what a family needs to draw repeatedly from one orbit.
class OrbitSampler {
 public:
  OrbitSampler(const GroupSpec& spec, std::span<const Observation> prefix)
      : spec_(spec), prefix_(prefix) {
    check_prefix(spec, prefix);
    const auto n = static_cast<Eigen::Index>(prefix.size());
    if (spec.is_permutation()) {
      const std::size_t classes = spec.family == Family::FullPermutation ? 1 : spec.parameter;
      for (std::size_t cls = 0; cls < classes; ++cls) {
        classes_.push_back(class_positions(spec, prefix, cls));
      }
      return;
    }
    const Eigen::VectorXd y = responses(prefix);
    basis_ = spec.family == Family::DesignIsotropy ? column_basis(prefix, spec.parameter)
                                                   : Eigen::MatrixXd(n, 0);
    fitted_ = basis_.cols() > 0 ? Eigen::VectorXd(basis_ * (basis_.transpose() * y))
                                : Eigen::VectorXd::Zero(n);
    radius_ = (y - fitted_).norm();
    point_orbit_ = radius_ <= kOrthTolerance * std::max(1.0, y.norm()) || basis_.cols() >= n;
  }

  std::vector<double> sample(CounterRng& rng) const {
    std::vector<double> out(prefix_.size());
    for (std::size_t i = 0; i < prefix_.size(); ++i) out[i] = prefix_[i].value;
    if (spec_.is_permutation()) {
      for (const auto& positions : classes_) {
        std::vector<double> values;
        values.reserve(positions.size());
        for (auto p : positions) values.push_back(prefix_[p].value);
        std::shuffle(values.begin(), values.end(), rng);
        for (std::size_t j = 0; j < positions.size(); ++j) out[positions[j]] = values[j];
      }
      return out;
    }
    if (point_orbit_) return out;
    const Eigen::VectorXd point = fitted_ + complement_sphere_point(basis_, radius_, rng);
    return {point.data(), point.data() + point.size()};
  }

 private:
  GroupSpec spec_;
  std::span<const Observation> prefix_;
  std::vector<std::vector<std::size_t>> classes_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd fitted_;
  double radius_ = 0.0;
  bool point_orbit_ = false;
};

}  // namespace

std::vector<double> haar_sample(const GroupSpec& spec, std::span<const Observation> prefix,
                                CounterRng& rng) {
  return OrbitSampler(spec, prefix).sample(rng);
}

BruteForceRank brute_force_exact(const GroupSpec& spec, std::span<const Observation> prefix,
                                 double theta) {
  check_prefix(spec, prefix);
  if (!spec.is_permutation()) {
    throw Error(ErrorKind::InvalidArgument, "exact enumeration needs a permutation family");
  }
  const std::size_t last = prefix.size() - 1;
  const auto positions = class_positions(spec, prefix, class_of(spec, prefix[last], last));
  const std::size_t m = positions.size();
  if (m > kMaxExactClass) {
    throw Error(ErrorKind::InvalidArgument, "class of size " + std::to_string(m) +
                                                " exceeds the enumeration limit");
  }
  // Position of the newest observation within its class is the last slot.
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  const double observed = prefix[last].value;
  std::uint64_t upper = 0, tie = 0, total = 0;
  do {
    const double moved = prefix[positions[perm[m - 1]]].value;
    upper += moved > observed;
    tie += moved == observed;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return tally(upper, tie, total, theta, [](double) { return 0.0; });
}

BruteForceRank brute_force_monte_carlo(const GroupSpec& spec, std::span<const Observation> prefix,
                                       double theta, std::uint64_t samples, CounterRng& rng) {
  check_prefix(spec, prefix);
  if (samples == 0) throw Error(ErrorKind::InvalidArgument, "Monte Carlo needs samples >= 1");
  const OrbitSampler sampler(spec, prefix);
  const double observed = prefix.back().value;
  std::uint64_t upper = 0, tie = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const double moved = sampler.sample(rng).back();
    upper += moved > observed;
    tie += moved == observed;
  }
  return tally(upper, tie, samples, theta, [samples](double r) {
    return std::sqrt(r * (1.0 - r) / static_cast<double>(samples));
  });
}

Reconstruction reconstruct(std::span<const OrbitRank> ranks, const OrbitState& final_summary) {
  if (final_summary.spec().family != Family::FullPermutation) {
    throw Error(ErrorKind::InvalidArgument, "reconstruction supports FullPermutation only");
  }
  std::vector<double> remaining = final_summary.permutation().classes.front().values();
  if (ranks.size() != remaining.size()) {
    throw Error(ErrorKind::InvalidArgument, "rank count does not match the summary size");
  }
  if (std::adjacent_find(remaining.begin(), remaining.end()) != remaining.end()) {
    throw Error(ErrorKind::InvalidArgument, "ties: reconstruction is not unique");
  }
  Reconstruction out;
  out.values.resize(ranks.size());
  out.thetas.resize(ranks.size());
  for (std::size_t i = ranks.size(); i-- > 0;) {
    const auto n = remaining.size();
    const double r = ranks[i].r;
    if (!(r >= 0.0 && r <= 1.0) || ranks[i].n != n) {
      throw Error(ErrorKind::InvalidArgument, "rank inconsistent with the summary");
    }
    // Without ties r = (greater + theta) / n with theta in [0, 1).
    const double scaled = r * static_cast<double>(n);
    const auto greater = std::min(static_cast<std::size_t>(std::floor(scaled)), n - 1);
    const std::size_t pos = n - 1 - greater;
    out.values[i] = remaining[pos];
    out.thetas[i] = scaled - static_cast<double>(greater);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  return out;
}

std::vector<double> sample_from_calibrator(const Calibrator& cal, CounterRng& rng) {
  auto pick = [&rng](const std::vector<double>& weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = rng.uniform01() * total;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (u < weights[j]) return j;
      u -= weights[j];
    }
    return weights.size() - 1;
  };
  auto power = [&rng](double kappa) { return std::pow(rng.uniform01(), 1.0 / kappa); };
  auto histogram = [&](double lambda, const std::vector<std::uint64_t>& counts) {
    std::vector<double> w(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j) w[j] = static_cast<double>(counts[j]) + lambda;
    return pick(w);
  };
  auto univariate = [&](const UnivariateCalibrator& u) -> double {
    if (const auto* p = std::get_if<PowerFixed>(&u)) return power(p->kappa);
    if (const auto* p = std::get_if<PowerMixture>(&u)) return power(p->kappas[pick(p->weights)]);
    const auto& h = std::get<Histogram1D>(u);
    const auto bin = histogram(h.lambda, h.counts);
    return (static_cast<double>(bin) + rng.uniform01()) / static_cast<double>(h.bins);
  };

  const auto& state = cal.state();
  if (const auto* h = std::get_if<HistogramKD>(&state)) {
    auto cell = histogram(h->lambda, h->counts);
    std::vector<double> point(h->dims);
    for (std::size_t k = h->dims; k-- > 0;) {
      point[k] = (static_cast<double>(cell % h->bins) + rng.uniform01()) / static_cast<double>(h->bins);
      cell /= h->bins;
    }
    return point;
  }
  if (const auto* p = std::get_if<ProductCalibrator>(&state)) {
    std::vector<double> point;
    for (const auto& f : p->factors) point.push_back(univariate(f));
    return point;
  }
  return {std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PowerFixed> || std::is_same_v<T, PowerMixture> ||
                      std::is_same_v<T, Histogram1D>) {
          return univariate(UnivariateCalibrator(s));
        } else {
          return 0.0;
        }
      },
      state)};
}

}  // namespace orbitmart::oracle
