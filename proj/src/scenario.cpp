#include "orbitmart/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "orbitmart/calibrator.hpp"
#include "orbitmart/error.hpp"
#include "orbitmart/independence.hpp"
#include "orbitmart/martingale.hpp"
#include "orbitmart/orbit_rank.hpp"

namespace orbitmart::sim {
namespace {

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorKind::InvalidSpec, message);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v)) {
    invalid("scenario key '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_count(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    invalid("scenario key '" + key + "' expects a nonnegative integer, got '" + value + "'");
  }
  return v;
}

template <class T, class Fn>
std::vector<T> to_list(const std::string& key, const std::string& value, Fn&& convert) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(convert(key, trim(item)));
  return out;
}

GeneratorKind to_generator(const std::string& value) {
  if (value == "iid_gaussian") return GeneratorKind::IidGaussian;
  if (value == "changepoint") return GeneratorKind::Changepoint;
  if (value == "ar1") return GeneratorKind::Ar1;
  if (value == "heavy_tail") return GeneratorKind::HeavyTail;
  if (value == "dependent_pair") return GeneratorKind::DependentPair;
  if (value == "linear_model") return GeneratorKind::LinearModel;
  invalid("unknown generator '" + value + "'");
}

const char* generator_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::IidGaussian: return "iid_gaussian";
    case GeneratorKind::Changepoint: return "changepoint";
    case GeneratorKind::Ar1: return "ar1";
    case GeneratorKind::HeavyTail: return "heavy_tail";
    case GeneratorKind::DependentPair: return "dependent_pair";
    case GeneratorKind::LinearModel: return "linear_model";
  }
  return "?";
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

// --- Scenario --------------------------------------------------------------

void Scenario::validate() const {
  group.validate();
  if (horizon < 1) invalid("horizon must be >= 1");
  if (replications < 1) invalid("replications must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) invalid("alpha must lie in (0, 1)");
  if (joint < 1) invalid("joint must be >= 1");
  if (!(generator.sigma > 0.0)) invalid("sigma must be > 0");
  if (!(generator.df > 0.0)) invalid("df must be > 0");
  if (!(generator.noise > 0.0)) invalid("noise must be > 0");
  if (!(std::fabs(generator.rho) < 1.0)) invalid("|rho| must be < 1");
  if (generator.kind == GeneratorKind::DependentPair) {
    if (joint < 2) invalid("dependent_pair needs joint >= 2");
    if (joint > 2 && generator.rho < 0.0) invalid("dependent_pair with K > 2 needs rho >= 0");
  }
  if (generator.kind == GeneratorKind::LinearModel && group.family != Family::DesignIsotropy) {
    invalid("linear_model needs an isotropy group");
  }
  (void)Calibrator::parse(calibrator, joint);
}

Scenario Scenario::parse(std::istream& in) {
  Scenario s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) invalid("scenario line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    auto& g = s.generator;
    if (key == "group") s.group = GroupSpec::parse(value);
    else if (key == "generator") g.kind = to_generator(value);
    else if (key == "mu") g.mu = to_double(key, value);
    else if (key == "sigma") g.sigma = to_double(key, value);
    else if (key == "n0") g.n0 = to_count(key, value);
    else if (key == "shift") g.shift = to_double(key, value);
    else if (key == "rho") g.rho = to_double(key, value);
    else if (key == "df") g.df = to_double(key, value);
    else if (key == "noise") g.noise = to_double(key, value);
    else if (key == "beta") g.beta = to_list<double>(key, value, to_double);
    else if (key == "horizon") s.horizon = to_count(key, value);
    else if (key == "replications") s.replications = to_count(key, value);
    else if (key == "seed") s.seed = to_count(key, value);
    else if (key == "calibrator") s.calibrator = value;
    else if (key == "alpha") s.alpha = to_double(key, value);
    else if (key == "joint") s.joint = static_cast<std::size_t>(to_count(key, value));
    else if (key == "checkpoints") s.checkpoints = to_list<std::uint64_t>(key, value, to_count);
    else invalid("scenario line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  s.validate();
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot read scenario file '" + path.string() + "'");
  return parse(in);
}

// --- DataSource ------------------------------------------------------------

DataSource::DataSource(const Scenario& scenario, CounterRng rng)
    : scenario_(scenario), rng_(rng), ar_state_(scenario.joint, 0.0) {
  if (scenario.generator.kind == GeneratorKind::Ar1) {
    // Start from the stationary law.
    std::normal_distribution<double> normal;
    const double rho = scenario.generator.rho;
    for (auto& x : ar_state_) x = normal(rng_) / std::sqrt(1.0 - rho * rho);
  }
}

double DataSource::marginal(std::size_t stream) {
  const auto& g = scenario_.generator;
  std::normal_distribution<double> normal;
  switch (g.kind) {
    case GeneratorKind::IidGaussian:
    case GeneratorKind::DependentPair:
      return g.mu + g.sigma * normal(rng_);
    case GeneratorKind::Changepoint:
      return g.mu + g.sigma * normal(rng_) + (n_ > g.n0 ? g.shift : 0.0);
    case GeneratorKind::Ar1: {
      auto& x = ar_state_[stream];
      x = g.rho * x + normal(rng_);
      return g.mu + g.sigma * x;
    }
    case GeneratorKind::HeavyTail: {
      std::student_t_distribution<double> t(g.df);
      return g.mu + g.sigma * t(rng_);
    }
    case GeneratorKind::LinearModel:
      return g.noise * normal(rng_);
  }
  return 0.0;
}

std::vector<Observation> DataSource::next() {
  ++n_;
  const auto& spec = scenario_.group;
  const auto& g = scenario_.generator;
  const std::size_t k = scenario_.joint;
  std::normal_distribution<double> normal;

  std::optional<std::int64_t> label;
  if (spec.family == Family::LabelPermutation) {
    std::uniform_int_distribution<std::int64_t> pick(0, static_cast<std::int64_t>(spec.parameter) - 1);
    label = pick(rng_);
  }
  std::vector<double> z;
  if (spec.family == Family::DesignIsotropy) {
    z.resize(spec.parameter);
    z[0] = 1.0;
    for (std::size_t j = 1; j < z.size(); ++j) z[j] = normal(rng_);
  }

  std::vector<double> values(k);
  if (g.kind == GeneratorKind::DependentPair) {
    if (k == 2) {
      const double a = normal(rng_);
      const double b = g.rho * a + std::sqrt(1.0 - g.rho * g.rho) * normal(rng_);
      values = {g.mu + g.sigma * a, g.mu + g.sigma * b};
    } else {
      const double common = normal(rng_);
      for (auto& v : values) {
        v = g.mu + g.sigma * (std::sqrt(g.rho) * common + std::sqrt(1.0 - g.rho) * normal(rng_));
      }
    }
  } else {
    for (std::size_t i = 0; i < k; ++i) values[i] = marginal(i);
  }

  std::vector<Observation> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    double v = values[i];
    for (std::size_t j = 0; j < z.size() && j < g.beta.size(); ++j) v += g.beta[j] * z[j];
    out[i] = Observation{v, label, z};
  }
  return out;
}

// --- replications ------------------------------------------------------------

ReplicationResult run_replication(const Scenario& scenario, std::uint64_t index) {
  const CounterRng root = CounterRng(scenario.seed).split(substream::kReplication).split(index);
  DataSource data(scenario, root.split(substream::kData));
  CounterRng theta_rng = root.split(substream::kTheta);
  const std::size_t k = scenario.joint;

  ReplicationResult out;
  out.ranks.reserve(scenario.horizon * k);
  out.log_wealth.reserve(scenario.horizon);
  std::vector<double> thetas(k);

  auto record = [&](const MartingaleState& m) {
    out.log_wealth.push_back(m.log_wealth());
    if (m.rejected() && out.rejection_time == 0) out.rejection_time = m.n();
  };

  if (k == 1) {
    RankStream stream(scenario.group);
    Calibrator cal = Calibrator::parse(scenario.calibrator, 1);
    MartingaleState m(scenario.alpha);
    for (std::uint64_t n = 1; n <= scenario.horizon; ++n) {
      const auto obs = data.next();
      const auto r = stream.push(obs.front(), theta_rng.uniform01());
      step(m, cal, r);
      out.ranks.push_back(r.r);
      record(m);
    }
  } else {
    JointTest test(scenario.group, k, Calibrator::parse(scenario.calibrator, k), scenario.alpha);
    for (std::uint64_t n = 1; n <= scenario.horizon; ++n) {
      const auto obs = data.next();
      for (auto& t : thetas) t = theta_rng.uniform01();
      const auto result = test.push(obs, thetas);
      for (const auto& c : result.rank.components) out.ranks.push_back(c.r);
      record(test.martingale());
    }
  }
  return out;
}

Report run_scenario(const Scenario& scenario, unsigned threads) {
  scenario.validate();
  const std::uint64_t reps = scenario.replications;
  std::vector<ReplicationResult> results(reps);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, reps));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::uint64_t i = next++; i < reps; i = next++) {
          try {
            results[i] = run_replication(scenario, i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);

  const std::uint64_t horizon = scenario.horizon;
  const std::size_t k = scenario.joint;
  const double log10e = 1.0 / std::log(10.0);
  Report report;
  report.scenario = scenario;

  std::vector<double> pooled;
  pooled.reserve(reps * horizon * k);
  std::vector<double> series;  // one series of length horizon per (replication, stream)
  series.reserve(reps * horizon * k);
  for (const auto& res : results) {
    pooled.insert(pooled.end(), res.ranks.begin(), res.ranks.end());
    for (std::size_t c = 0; c < k; ++c) {
      for (std::uint64_t n = 0; n < horizon; ++n) series.push_back(res.ranks[n * k + c]);
    }
  }
  report.ks_statistic = ks_statistic_uniform(pooled);
  report.ks_p_value = ks_p_value(report.ks_statistic, pooled.size());
  report.lag1_correlation = lag1_correlation(series, horizon);
  report.lag1_bound = 3.0 / std::sqrt(static_cast<double>(horizon * reps));

  std::uint64_t crossed = 0;
  for (const auto& res : results) {
    crossed += res.rejection_time != 0;
    report.rejection_times.push_back(res.rejection_time);
    report.final_log10.push_back(res.log_wealth.back() * log10e);
  }
  const double r = static_cast<double>(reps);
  report.crossing_frequency = static_cast<double>(crossed) / r;
  report.crossing_bound = scenario.alpha + 3.0 * std::sqrt(scenario.alpha * (1.0 - scenario.alpha) / r);
  double total = 0.0;
  for (double v : report.final_log10) total += v;
  report.mean_final_log10 = total / r;
  report.median_final_log10 = median(report.final_log10);

  for (auto n : scenario.checkpoints) {
    if (n < 1 || n > horizon) continue;
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& res : results) {
      const double w = std::exp(res.log_wealth[n - 1]);
      sum += w;
      sum_sq += w * w;
    }
    const double mean = sum / r;
    const double var = reps > 1 ? std::max(0.0, (sum_sq - r * mean * mean) / (r - 1.0)) : 0.0;
    report.checkpoints.push_back({n, mean, std::sqrt(var / r)});
  }

  report.mean_log10_curve.resize(horizon);
  report.median_log10_curve.resize(horizon);
  report.crossed_curve.resize(horizon);
  std::vector<double> column(reps);
  for (std::uint64_t n = 0; n < horizon; ++n) {
    double sum = 0.0;
    std::uint64_t crossed_by_n = 0;
    for (std::uint64_t i = 0; i < reps; ++i) {
      column[i] = results[i].log_wealth[n] * log10e;
      sum += column[i];
      const auto t = results[i].rejection_time;
      crossed_by_n += t != 0 && t <= n + 1;
    }
    report.mean_log10_curve[n] = sum / r;
    report.median_log10_curve[n] = median(column);
    report.crossed_curve[n] = static_cast<double>(crossed_by_n) / r;
  }
  return report;
}

nlohmann::json Report::to_json() const {
  nlohmann::json j;
  const auto& s = scenario;
  j["scenario"] = {
      {"group", s.group.to_string()},
      {"generator", generator_name(s.generator.kind)},
      {"horizon", s.horizon},
      {"replications", s.replications},
      {"seed", s.seed},
      {"calibrator", s.calibrator},
      {"alpha", s.alpha},
      {"joint", s.joint},
  };
  j["ks_statistic"] = ks_statistic;
  j["ks_p_value"] = ks_p_value;
  j["lag1_correlation"] = lag1_correlation;
  j["lag1_bound"] = lag1_bound;
  j["crossing_frequency"] = crossing_frequency;
  j["crossing_bound"] = crossing_bound;
  j["mean_final_log10_wealth"] = mean_final_log10;
  j["median_final_log10_wealth"] = median_final_log10;
  auto& cps = j["checkpoint_means"] = nlohmann::json::array();
  for (const auto& c : checkpoints) {
    cps.push_back({{"n", c.n}, {"mean_wealth", c.mean}, {"standard_error", c.standard_error}});
  }
  j["rejection_times"] = rejection_times;
  return j;
}

void write_report(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + (dir / name).string());
    out.precision(17);
    return out;
  };
  {
    auto out = open("report.json");
    out << report.to_json().dump(2) << '\n';
  }
  {
    auto out = open("trajectory.csv");
    out << "n,mean_log10_wealth,median_log10_wealth,crossed_fraction\n";
    for (std::size_t n = 0; n < report.mean_log10_curve.size(); ++n) {
      out << n + 1 << ',' << report.mean_log10_curve[n] << ',' << report.median_log10_curve[n]
          << ',' << report.crossed_curve[n] << '\n';
    }
  }
  {
    auto out = open("replications.csv");
    out << "replication,final_log10_wealth,rejection_time\n";
    for (std::size_t i = 0; i < report.final_log10.size(); ++i) {
      out << i << ',' << report.final_log10[i] << ',' << report.rejection_times[i] << '\n';
    }
  }
}

// --- statistics ------------------------------------------------------------

double ks_statistic_uniform(std::span<const double> sample) {
  if (sample.empty()) return 0.0;
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double x = std::clamp(sorted[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
  }
  return d;
}

double ks_p_value(double statistic, std::size_t n) {
  if (n == 0) return 1.0;
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double lag1_correlation(std::span<const double> series, std::size_t length) {
  if (length < 2 || series.size() < length) return 0.0;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  double pairs = 0;
  for (std::size_t start = 0; start + length <= series.size(); start += length) {
    for (std::size_t i = start; i + 1 < start + length; ++i) {
      const double x = series[i], y = series[i + 1];
      sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
      pairs += 1;
    }
  }
  const double cov = sxy / pairs - (sx / pairs) * (sy / pairs);
  const double vx = sxx / pairs - (sx / pairs) * (sx / pairs);
  const double vy = syy / pairs - (sy / pairs) * (sy / pairs);
  if (vx <= 0.0 || vy <= 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

}  // namespace orbitmart::sim
