#include "orbitmart/selfcheck.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "orbitmart/calibrator.hpp"
#include "orbitmart/error.hpp"
#include "orbitmart/numerics.hpp"
#include "orbitmart/oracle.hpp"
#include "orbitmart/orbit_rank.hpp"
#include "orbitmart/rng.hpp"

namespace orbitmart::selfcheck {
namespace {

struct Worst {
  double error = 0.0;
  std::string where;

  void observe(double got, double want, const std::string& at) {
    const double e = std::fabs(got - want);
    if (!(e <= error)) {
      error = std::isnan(e) ? INFINITY : e;
      where = at;
    }
  }

  CheckResult verdict(std::string name, double tolerance) const {
    std::ostringstream os;
    os << std::setprecision(3) << "max error " << error << " (tol " << tolerance << ")";
    if (!where.empty()) os << " at " << where;
    return {std::move(name), error <= tolerance, os.str()};
  }
};

std::string at(double x, double a, double b) {
  std::ostringstream os;
  os << std::setprecision(6) << "x=" << x << " a=" << a << " b=" << b;
  return os.str();
}

template <class Fn>
CheckResult guarded(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {name, false, std::string("threw: ") + e.what()};
  }
}

CheckResult beta_closed_forms(const BetaFn& beta) {
  Worst w;
  for (double x : {0.0, 0.3, 1.0}) w.observe(beta(x, 1, 1), x, at(x, 1, 1));
  for (double a : {0.5, 2.0, 7.5}) w.observe(beta(0.5, a, a), 0.5, at(0.5, a, a));
  w.observe(beta(0.25, 2, 2), 0.15625, at(0.25, 2, 2));
  return w.verdict("beta closed forms", 1e-12);
}

CheckResult beta_reflection(const BetaFn& beta, CounterRng rng) {
  Worst w;
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform01();
    const double a = 0.1 + 30.0 * rng.uniform01();
    const double b = 0.1 + 30.0 * rng.uniform01();
    w.observe(beta(x, a, b) + beta(1.0 - x, b, a), 1.0, at(x, a, b));
  }
  return w.verdict("beta reflection I_x(a,b)+I_1-x(b,a)=1", 1e-12);
}

CheckResult circle_cap(const BetaFn& beta) {
  Worst w;
  for (int i = 0; i <= 40; ++i) {
    const double c = -1.0 + i / 20.0;
    const double half = 0.5 * beta(1.0 - c * c, 0.5, 0.5);
    const double cap = c >= 0 ? half : 1.0 - half;
    w.observe(cap, std::acos(c) / std::numbers::pi, at(c, 0.5, 0.5));
  }
  return w.verdict("circle cap = arccos(c)/pi", 1e-12);
}

CheckResult t_closed_forms(const BetaFn& beta) {
  Worst w;
  auto tail = [&](double t, double nu) { return 0.5 * beta(nu / (nu + t * t), 0.5 * nu, 0.5); };
  w.observe(tail(1.0, 1.0), 0.25, "t=1 nu=1");
  w.observe(tail(1.0, 2.0), 0.5 - 1.0 / (2.0 * std::sqrt(3.0)), "t=1 nu=2");
  for (double t : {0.5, 2.0, 4.0}) {
    w.observe(tail(t, 1.0), 0.5 - std::atan(t) / std::numbers::pi, "cauchy t=" + std::to_string(t));
    w.observe(tail(t, 2.0), 0.5 - t / (2.0 * std::sqrt(2.0 + t * t)), "t2 t=" + std::to_string(t));
  }
  return w.verdict("t tail closed forms", 1e-12);
}

CheckResult cap_versus_t(CounterRng rng) {
  Worst w;
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    OrbitState state(GroupSpec::full_orthogonal());
    const int n = 2 + trial % 40;
    Observation obs;
    for (int i = 0; i < n; ++i) {
      obs = Observation::scalar(normal(rng));
      state.update(obs);
    }
    w.observe(rank_spherical(state, obs, 0.5).r, spherical_rank_via_t(state, 0.5),
              "n=" + std::to_string(n));
  }
  return w.verdict("spherical rank: cap area = t tail", 1e-10);
}

CheckResult permutation_oracle(CounterRng rng) {
  Worst w;
  std::normal_distribution<double> normal;
  const GroupSpec specs[] = {GroupSpec::full_permutation(), GroupSpec::modular_permutation(2),
                             GroupSpec::label_permutation(2)};
  for (int trial = 0; trial < 60; ++trial) {
    const auto& spec = specs[trial % 3];
    RankStream stream(spec);
    std::vector<Observation> prefix;
    OrbitRank r;
    const int n = 1 + trial % 8;
    for (int i = 0; i < n; ++i) {
      // Rounded values force ties.
      Observation obs = Observation::scalar(std::round(2.0 * normal(rng)) / 2.0);
      if (spec.family == Family::LabelPermutation) obs.label = static_cast<std::int64_t>(rng() % 2);
      prefix.push_back(obs);
      r = stream.push(obs, rng.uniform01());
    }
    const auto exact = oracle::brute_force_exact(spec, prefix, r.theta);
    w.observe(r.r, exact.r, spec.to_string() + " n=" + std::to_string(n));
  }
  return w.verdict("permutation ranks = exact enumeration", 1e-14);
}

CheckResult matrix_oracle(CounterRng rng) {
  std::normal_distribution<double> normal;
  constexpr std::uint64_t kSamples = 20000;
  double worst_z = 0.0;
  std::string where;
  const GroupSpec specs[] = {GroupSpec::full_orthogonal(), GroupSpec::design_isotropy(1),
                             GroupSpec::design_isotropy(2)};
  for (int trial = 0; trial < 6; ++trial) {
    const auto& spec = specs[trial % 3];
    RankStream stream(spec);
    std::vector<Observation> prefix;
    OrbitRank r;
    const int n = 6 + trial;
    for (int i = 0; i < n; ++i) {
      Observation obs = Observation::scalar(normal(rng));
      if (spec.family == Family::DesignIsotropy) {
        obs.covariates.push_back(1.0);
        for (std::size_t j = 1; j < spec.parameter; ++j) obs.covariates.push_back(normal(rng));
      }
      prefix.push_back(obs);
      r = stream.push(obs, 0.5);
    }
    const auto mc = oracle::brute_force_monte_carlo(spec, prefix, 0.5, kSamples, rng);
    const double se = std::sqrt(r.r * (1.0 - r.r) / static_cast<double>(kSamples));
    const double z = se > 0 ? std::fabs(mc.r - r.r) / se : (mc.r == r.r ? 0.0 : INFINITY);
    if (z > worst_z) {
      worst_z = z;
      where = spec.to_string() + " n=" + std::to_string(n);
    }
  }
  std::ostringstream os;
  os << std::setprecision(3) << "max |z| " << worst_z << " (tol 4) at " << where;
  return {"matrix ranks = Haar Monte Carlo", worst_z <= 4.0, os.str()};
}

CheckResult reconstruction(CounterRng rng) {
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    RankStream stream(GroupSpec::full_permutation());
    std::vector<double> values;
    std::vector<OrbitRank> ranks;
    const int n = 1 + trial * 2;
    for (int i = 0; i < n; ++i) {
      values.push_back(normal(rng));
      ranks.push_back(stream.push(Observation::scalar(values.back()), rng.uniform01()));
    }
    const auto back = oracle::reconstruct(ranks, stream.state());
    if (back.values != values) {
      return {"reconstruction round trip", false, "mismatch at n=" + std::to_string(n)};
    }
  }
  return {"reconstruction round trip", true, "20 sequences"};
}

CheckResult calibrator_integrals(CounterRng rng) {
  Worst w;
  Calibrator hist = Calibrator::histogram(10, 1.0);
  Calibrator joint = Calibrator::histogram_kd(4, 2, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double r = rng.uniform01() * rng.uniform01();
    hist.update(r);
    const double p[2] = {r, rng.uniform01()};
    joint.update(p);
  }
  w.observe(hist.integral(), 1.0, "hist");
  w.observe(joint.integral(), 1.0, "histkd");
  w.observe(Calibrator::power_mixture().integral(), 1.0, "power-mixture");
  return w.verdict("calibrator densities integrate to 1", 1e-12);
}

}  // namespace

std::vector<CheckResult> run(const BetaFn& beta_in, std::uint64_t seed) {
  const BetaFn beta = beta_in ? beta_in : BetaFn([](double x, double a, double b) {
    return numerics::reg_inc_beta(x, a, b);
  });
  const CounterRng root(seed);
  std::vector<CheckResult> out;
  out.push_back(guarded("beta closed forms", [&] { return beta_closed_forms(beta); }));
  out.push_back(guarded("beta reflection", [&] { return beta_reflection(beta, root.split(1)); }));
  out.push_back(guarded("circle cap", [&] { return circle_cap(beta); }));
  out.push_back(guarded("t tail closed forms", [&] { return t_closed_forms(beta); }));
  out.push_back(guarded("cap vs t", [&] { return cap_versus_t(root.split(2)); }));
  out.push_back(guarded("permutation oracle", [&] { return permutation_oracle(root.split(3)); }));
  out.push_back(guarded("matrix oracle", [&] { return matrix_oracle(root.split(4)); }));
  out.push_back(guarded("reconstruction", [&] { return reconstruction(root.split(5)); }));
  out.push_back(guarded("calibrator integrals", [&] { return calibrator_integrals(root.split(6)); }));
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return !results.empty();
}

void print_table(std::ostream& out, const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    out << (r.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(44) << r.name << r.detail
        << '\n';
  }
  out << (all_passed(results) ? "all checks passed" : "some checks FAILED") << '\n';
}

}  // namespace orbitmart::selfcheck
