#include "orbitmart/cli.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "orbitmart/calibrator.hpp"
#include "orbitmart/error.hpp"
#include "orbitmart/independence.hpp"
#include "orbitmart/martingale.hpp"
#include "orbitmart/orbit_rank.hpp"
#include "orbitmart/rng.hpp"
#include "orbitmart/scenario.hpp"
#include "orbitmart/selfcheck.hpp"

namespace orbitmart::cli {
namespace {

using nlohmann::json;

void append_real(std::string& s, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  s += buf;
}

void append_reals(std::string& s, const std::vector<double>& xs) {
  if (xs.size() == 1) {
    append_real(s, xs[0]);
    return;
  }
  s += '[';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    append_real(s, xs[i]);
  }
  s += ']';
}

double require_number(const json& j, const char* field) {
  if (!j.is_number()) throw std::invalid_argument(std::string("field '") + field + "' must be a number");
  return j.get<double>();
}

/// Decodes one input record into K observations sharing label and covariates.
std::vector<Observation> decode(const json& rec, std::size_t joint) {
  if (!rec.is_object()) throw std::invalid_argument("record must be a JSON object");
  Observation base;
  if (auto it = rec.find("label"); it != rec.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw std::invalid_argument("field 'label' must be an integer");
    base.label = it->get<std::int64_t>();
  }
  if (auto it = rec.find("covariates"); it != rec.end() && !it->is_null()) {
    if (!it->is_array()) throw std::invalid_argument("field 'covariates' must be an array");
    for (const auto& z : *it) base.covariates.push_back(require_number(z, "covariates"));
  }

  std::vector<Observation> out;
  if (joint == 1) {
    auto it = rec.find("value");
    if (it == rec.end()) throw std::invalid_argument("missing field 'value'");
    base.value = require_number(*it, "value");
    out.push_back(std::move(base));
    return out;
  }
  auto it = rec.find("values");
  if (it == rec.end() || !it->is_array()) throw std::invalid_argument("missing array field 'values'");
  if (it->size() != joint) {
    throw std::invalid_argument("expected " + std::to_string(joint) + " values, got " +
                                std::to_string(it->size()));
  }
  for (const auto& v : *it) {
    Observation obs = base;
    obs.value = require_number(v, "values");
    out.push_back(std::move(obs));
  }
  return out;
}

std::vector<double> decode_ranks(const json& rec, std::size_t joint) {
  if (!rec.is_object()) throw std::invalid_argument("record must be a JSON object");
  auto it = rec.find("r");
  if (it == rec.end()) throw std::invalid_argument("missing field 'r'");
  std::vector<double> r;
  if (it->is_array()) {
    for (const auto& x : *it) r.push_back(require_number(x, "r"));
  } else {
    r.push_back(require_number(*it, "r"));
  }
  if (r.size() != joint) throw std::invalid_argument("rank dimension does not match --joint");
  return r;
}

std::vector<double> field_reals(const json& rec, const char* name) {
  std::vector<double> v;
  if (auto it = rec.find(name); it != rec.end()) {
    if (it->is_array()) {
      for (const auto& x : *it) v.push_back(x.get<double>());
    } else if (it->is_number()) {
      v.push_back(it->get<double>());
    }
  }
  return v;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

Calibrator make_calibrator(const std::string& text, std::size_t joint, std::ostream& err) {
  Calibrator cal = Calibrator::parse(text.empty() ? default_calibrator(joint) : text, joint);
  if (const auto* kd = std::get_if<HistogramKD>(&cal.state())) {
    const double cells = std::pow(static_cast<double>(kd->bins), static_cast<double>(kd->dims));
    if (cells > kGridWarnCells) {
      err << "warning: joint histogram has " << cells << " cells (B^K > 1e6)\n";
    }
  }
  return cal;
}

}  // namespace

std::string default_calibrator(std::size_t joint) {
  return joint > 1 ? "histkd:4:1" : "power-mixture";
}

std::uint64_t default_seed() {
  const char* env = std::getenv("ORBITMART_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  return (end != nullptr && *end == '\0') ? static_cast<std::uint64_t>(v) : 0;
}

std::string format_record(std::uint64_t n, const std::vector<double>& r,
                          const std::vector<double>& theta, double log10_wealth, bool rejected,
                          bool degenerate) {
  std::string s = "{\"n\":" + std::to_string(n) + ",\"r\":";
  append_reals(s, r);
  s += ",\"theta\":";
  append_reals(s, theta);
  s += ",\"log10_wealth\":";
  append_real(s, log10_wealth);
  s += ",\"rejected\":";
  s += rejected ? "true" : "false";
  s += ",\"degenerate\":";
  s += degenerate ? "true" : "false";
  s += '}';
  return s;
}

int cmd_test(const TestOptions& options, std::istream& in, std::ostream& out, std::ostream& err) {
  const std::size_t K = options.joint;
  std::optional<JointTest> joint;
  std::optional<RankStream> single;
  std::optional<Calibrator> cal;
  std::optional<MartingaleState> m;
  try {
    if (K == 0) throw Error(ErrorKind::InvalidSpec, "--joint must be at least 1");
    options.group.validate();
    Calibrator c = make_calibrator(options.calibrator, K, err);
    if (K > 1) {
      joint.emplace(options.group, K, std::move(c), options.alpha);
    } else {
      single.emplace(options.group);
      cal.emplace(std::move(c));
      m.emplace(options.alpha);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  CounterRng theta_rng = CounterRng(options.seed).split(substream::kTheta);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> r(K), theta(K);
  bool rejected = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
      }
      auto obs = decode(rec, K);
      for (const auto& o : obs) check_payload(options.group, o);
      for (auto& t : theta) t = theta_rng.uniform01();

      bool degenerate = false;
      double log10_wealth = 0.0;
      std::uint64_t n = 0;
      if (K > 1) {
        const auto step = joint->push(obs, theta);
        for (std::size_t k = 0; k < K; ++k) {
          r[k] = step.rank.components[k].r;
          degenerate = degenerate || step.rank.components[k].degenerate;
        }
        n = step.rank.n;
        log10_wealth = joint->martingale().log10_wealth();
        rejected = joint->martingale().rejected();
      } else {
        const OrbitRank rank = single->push(obs[0], theta[0]);
        step(*m, *cal, rank);
        r[0] = rank.r;
        degenerate = rank.degenerate;
        n = rank.n;
        log10_wealth = m->log10_wealth();
        rejected = m->rejected();
      }
      out << format_record(n, r, theta, log10_wealth, rejected, degenerate) << '\n';
    } catch (const std::exception& e) {
      out.flush();
      err << "error: line " << line_no << ": " << e.what() << '\n';
      return kExitInputError;
    }
    if (rejected && options.stop_on_reject) break;
  }
  out.flush();
  return rejected ? kExitRejected : kExitOk;
}

int cmd_replay(const std::string& calibrator, double alpha, std::size_t joint, std::istream& in,
               std::ostream& out, std::ostream& err) {
  std::optional<Calibrator> cal;
  std::optional<MartingaleState> m;
  try {
    if (joint == 0) throw Error(ErrorKind::InvalidSpec, "--joint must be at least 1");
    cal.emplace(make_calibrator(calibrator, joint, err));
    m.emplace(alpha);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
      }
      const auto r = decode_ranks(rec, joint);
      step(*m, *cal, r);
      const bool degenerate = rec.value("degenerate", false);
      out << format_record(m->n(), r, field_reals(rec, "theta"), m->log10_wealth(), m->rejected(),
                           degenerate)
          << '\n';
    } catch (const std::exception& e) {
      out.flush();
      err << "error: line " << line_no << ": " << e.what() << '\n';
      return kExitInputError;
    }
  }
  out.flush();
  return m->rejected() ? kExitRejected : kExitOk;
}

int cmd_simulate(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
                 unsigned threads, std::ostream& out, std::ostream& err) {
  try {
    const auto s = sim::Scenario::load(scenario);
    const auto report = sim::run_scenario(s, threads);
    sim::write_report(report, out_dir);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "replications=%" PRIu64 " crossing=%.17g bound=%.17g ks_p=%.17g median_log10=%.17g\n",
                  s.replications, report.crossing_frequency, report.crossing_bound,
                  report.ks_p_value, report.median_final_log10);
    out << buf;
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

int cmd_selfcheck(std::uint64_t seed, std::ostream& out) {
  const auto results = selfcheck::run({}, seed);
  selfcheck::print_table(out, results);
  return selfcheck::all_passed(results) ? kExitOk : 1;
}

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anytime-valid sequential tests of group invariance"};
  app.require_subcommand(1);

  std::string group_text = "perm";
  TestOptions opts;
  opts.seed = default_seed();
  auto* test = app.add_subcommand("test", "Stream JSON records from stdin and test invariance");
  test->add_option("--group", group_text, "perm | perm-mod:<k> | perm-label:<K> | sphere | isotropy:<d>");
  test->add_option("--calibrator", opts.calibrator,
                   "power:<kappa> | power-mixture | hist:<B>:<lambda> | histkd:<B>:<lambda>");
  test->add_option("--alpha", opts.alpha, "Test level");
  test->add_option("--seed", opts.seed, "Seed of the randomization stream (default $ORBITMART_SEED or 0)");
  test->add_option("--joint", opts.joint, "Number of parallel streams for the independence test");
  test->add_flag("--stop-on-reject", opts.stop_on_reject, "Stop reading once the test rejects");

  std::string replay_cal;
  double replay_alpha = 0.05;
  std::size_t replay_joint = 1;
  auto* replay = app.add_subcommand("replay", "Recompute log10_wealth from recorded output records");
  replay->add_option("--calibrator", replay_cal, "Calibrator used by the original run");
  replay->add_option("--alpha", replay_alpha, "Test level");
  replay->add_option("--joint", replay_joint, "Rank dimension");

  std::filesystem::path scenario, out_dir = ".";
  unsigned threads = 0;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario file and write a report");
  simulate->add_option("--scenario", scenario, "Scenario file")->required();
  simulate->add_option("--out", out_dir, "Output directory");
  simulate->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::uint64_t check_seed = 0;
  auto* check = app.add_subcommand("selfcheck", "Run the fast oracle and special-function checks");
  check->add_option("--seed", check_seed, "Seed for the randomized checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  if (*test) {
    try {
      opts.group = GroupSpec::parse(group_text);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitInputError;
    }
    return cmd_test(opts, in, out, err);
  }
  if (*replay) return cmd_replay(replay_cal, replay_alpha, replay_joint, in, out, err);
  if (*simulate) return cmd_simulate(scenario, out_dir, threads, out, err);
  return cmd_selfcheck(check_seed, out);
}

}  // namespace orbitmart::cli
