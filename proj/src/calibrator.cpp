#include "orbitmart/calibrator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "orbitmart/error.hpp"

namespace orbitmart {
namespace {

// Power densities diverge at 0; continuous ranks can hit 0 after clamping.
constexpr double kRankFloor = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorKind::InvalidSpec, message);
}

double power_density(double kappa, double r) {
  return kappa * std::pow(std::max(r, kRankFloor), kappa - 1.0);
}

void validate(const PowerFixed& p) {
  if (!(p.kappa > 0.0 && p.kappa <= 1.0)) invalid("power calibrator needs kappa in (0, 1]");
}

void validate(const PowerMixture& p) {
  if (p.kappas.empty() || p.kappas.size() != p.weights.size()) {
    invalid("power mixture needs matching non-empty kappas and weights");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < p.kappas.size(); ++j) {
    validate(PowerFixed{p.kappas[j]});
    if (!(p.weights[j] >= 0.0)) invalid("power mixture weights must be nonnegative");
    total += p.weights[j];
  }
  if (std::fabs(total - 1.0) > 1e-12) invalid("power mixture weights must sum to 1");
}

void validate(const Histogram1D& h) {
  if (h.bins < 1) invalid("histogram needs at least one bin");
  if (!(h.lambda > 0.0) || !std::isfinite(h.lambda)) invalid("histogram pseudocount must be > 0");
  if (h.counts.size() != h.bins) invalid("histogram counts do not match bin count");
}

void validate(const HistogramKD& h) {
  if (h.bins < 1 || h.dims < 1) invalid("joint histogram needs bins >= 1 and dims >= 1");
  if (!(h.lambda > 0.0) || !std::isfinite(h.lambda)) invalid("histogram pseudocount must be > 0");
  double cells = std::pow(static_cast<double>(h.bins), static_cast<double>(h.dims));
  if (cells > 1e9) invalid("joint histogram grid is too large");
  if (h.counts.size() != static_cast<std::size_t>(cells)) {
    invalid("joint histogram counts do not match the grid");
  }
}

void validate(const ProductCalibrator& p) {
  if (p.factors.empty()) invalid("product calibrator needs at least one factor");
  for (const auto& f : p.factors) std::visit([](const auto& s) { validate(s); }, f);
}

void check_point(std::span<const double> r, std::size_t dims) {
  if (r.size() != dims) {
    throw Error(ErrorKind::InvalidArgument, "rank has dimension " + std::to_string(r.size()) +
                                                ", calibrator expects " + std::to_string(dims));
  }
  for (double x : r) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "rank outside the unit cube");
    }
  }
}

double evaluate_univariate(const UnivariateCalibrator& cal, double r) {
  return std::visit(
      overloaded{
          [r](const PowerFixed& p) { return p.kappa == 1.0 ? 1.0 : power_density(p.kappa, r); },
          [r](const PowerMixture& p) {
            double sum = 0.0;
            for (std::size_t j = 0; j < p.kappas.size(); ++j) {
              sum += p.weights[j] * power_density(p.kappas[j], r);
            }
            return sum;
          },
          [r](const Histogram1D& h) {
            const double b = static_cast<double>(h.bins);
            const double count = static_cast<double>(h.counts[bin_index(r, h.bins)]);
            return (count + h.lambda) * b / (static_cast<double>(h.total) + h.lambda * b);
          },
      },
      cal);
}

void update_univariate(UnivariateCalibrator& cal, double r) {
  if (auto* h = std::get_if<Histogram1D>(&cal)) {
    ++h->counts[bin_index(r, h->bins)];
    ++h->total;
  }
}

double integral_univariate(const UnivariateCalibrator& cal) {
  return std::visit(
      overloaded{
          [](const PowerFixed&) { return 1.0; },
          [](const PowerMixture& p) { return std::accumulate(p.weights.begin(), p.weights.end(), 0.0); },
          [](const Histogram1D& h) {
            const double b = static_cast<double>(h.bins);
            double sum = 0.0;
            for (auto c : h.counts) sum += (static_cast<double>(c) + h.lambda) / b;
            return sum * b / (static_cast<double>(h.total) + h.lambda * b);
          },
      },
      cal);
}

std::size_t cell_index(const HistogramKD& h, std::span<const double> r) {
  std::size_t idx = 0;
  for (double x : r) idx = idx * h.bins + bin_index(x, h.bins);
  return idx;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_double(std::string_view text, std::string_view context) {
  // from_chars for double is unavailable in GCC 11's libstdc++ for all modes
  std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    invalid("bad number '" + s + "' in calibrator '" + std::string(context) + "'");
  }
  return v;
}

std::size_t parse_count(std::string_view text, std::string_view context) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v == 0) {
    invalid("bad bin count '" + std::string(text) + "' in calibrator '" + std::string(context) + "'");
  }
  return v;
}

}  // namespace

std::size_t bin_index(double x, std::size_t bins) {
  const auto idx = static_cast<std::size_t>(std::floor(x * static_cast<double>(bins)));
  return std::min(idx, bins - 1);
}

PowerMixture PowerMixture::default_grid() {
  PowerMixture mix;
  for (int j = 1; j <= 19; ++j) mix.kappas.push_back(0.05 * j);
  mix.weights.assign(mix.kappas.size(), 1.0 / static_cast<double>(mix.kappas.size()));
  return mix;
}

Calibrator::Calibrator(CalibratorState state) : state_(std::move(state)) {
  std::visit([](const auto& s) { validate(s); }, state_);
}

Calibrator Calibrator::power(double kappa) { return Calibrator(PowerFixed{kappa}); }

Calibrator Calibrator::power_mixture() { return Calibrator(PowerMixture::default_grid()); }

Calibrator Calibrator::histogram(std::size_t bins, double lambda) {
  return Calibrator(Histogram1D{bins, lambda, std::vector<std::uint64_t>(bins, 0), 0});
}

Calibrator Calibrator::histogram_kd(std::size_t bins, std::size_t dims, double lambda) {
  const double cells = std::pow(static_cast<double>(bins), static_cast<double>(dims));
  if (bins < 1 || dims < 1 || cells > 1e9) invalid("joint histogram grid is empty or too large");
  return Calibrator(
      HistogramKD{bins, dims, lambda, std::vector<std::uint64_t>(static_cast<std::size_t>(cells), 0), 0});
}

Calibrator Calibrator::product(std::vector<UnivariateCalibrator> factors) {
  return Calibrator(ProductCalibrator{std::move(factors)});
}

Calibrator Calibrator::parse(std::string_view text, std::size_t dims) {
  const auto parts = split(text, ':');
  const auto kind = parts.front();
  if (dims < 1) invalid("calibrator dimension must be >= 1");
  if (kind == "histkd" && parts.size() == 3) {
    return histogram_kd(parse_count(parts[1], text), dims, parse_double(parts[2], text));
  }
  if (dims != 1) {
    invalid("calibrator '" + std::string(text) + "' is univariate; joint ranks need histkd");
  }
  if (kind == "power" && parts.size() == 2) return power(parse_double(parts[1], text));
  if (kind == "power-mixture" && parts.size() == 1) return power_mixture();
  if (kind == "hist" && parts.size() == 3) {
    return histogram(parse_count(parts[1], text), parse_double(parts[2], text));
  }
  invalid("unknown calibrator '" + std::string(text) + "'");
}

std::size_t Calibrator::dims() const noexcept {
  return std::visit(overloaded{
                        [](const HistogramKD& h) { return h.dims; },
                        [](const ProductCalibrator& p) { return p.factors.size(); },
                        [](const auto&) { return std::size_t{1}; },
                    },
                    state_);
}

double Calibrator::evaluate(std::span<const double> r) const {
  check_point(r, dims());
  return std::visit(
      overloaded{
          [&](const HistogramKD& h) {
            const double cells = static_cast<double>(h.counts.size());
            const double count = static_cast<double>(h.counts[cell_index(h, r)]);
            // (count + lambda) / ((n + lambda B^K) * B^-K)
            return (count + h.lambda) * cells / (static_cast<double>(h.total) + h.lambda * cells);
          },
          [&](const ProductCalibrator& p) {
            double f = 1.0;
            for (std::size_t k = 0; k < p.factors.size(); ++k) f *= evaluate_univariate(p.factors[k], r[k]);
            return f;
          },
          [&](const PowerFixed& p) { return evaluate_univariate(p, r[0]); },
          [&](const PowerMixture& p) { return evaluate_univariate(p, r[0]); },
          [&](const Histogram1D& h) { return evaluate_univariate(h, r[0]); },
      },
      state_);
}

void Calibrator::update(std::span<const double> r) {
  check_point(r, dims());
  std::visit(overloaded{
                 [&](HistogramKD& h) {
                   ++h.counts[cell_index(h, r)];
                   ++h.total;
                 },
                 [&](ProductCalibrator& p) {
                   for (std::size_t k = 0; k < p.factors.size(); ++k) update_univariate(p.factors[k], r[k]);
                 },
                 [&](Histogram1D& h) {
                   ++h.counts[bin_index(r[0], h.bins)];
                   ++h.total;
                 },
                 [](auto&) {},
             },
             state_);
}

double Calibrator::integral() const {
  return std::visit(
      overloaded{
          [](const HistogramKD& h) {
            const double cells = static_cast<double>(h.counts.size());
            double sum = 0.0;
            for (auto c : h.counts) sum += (static_cast<double>(c) + h.lambda) / cells;
            return sum * cells / (static_cast<double>(h.total) + h.lambda * cells);
          },
          [](const ProductCalibrator& p) {
            double f = 1.0;
            for (const auto& u : p.factors) f *= integral_univariate(u);
            return f;
          },
          [](const PowerFixed& p) { return integral_univariate(p); },
          [](const PowerMixture& p) { return integral_univariate(p); },
          [](const Histogram1D& h) { return integral_univariate(h); },
      },
      state_);
}

std::string Calibrator::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const PowerFixed& p) { os << "power:" << p.kappa; },
                 [&](const PowerMixture& p) { os << "power-mixture(" << p.kappas.size() << ")"; },
                 [&](const Histogram1D& h) { os << "hist:" << h.bins << ":" << h.lambda; },
                 [&](const HistogramKD& h) { os << "histkd:" << h.bins << ":" << h.lambda << " K=" << h.dims; },
                 [&](const ProductCalibrator& p) { os << "product(" << p.factors.size() << ")"; },
             },
             state_);
  return os.str();
}

}  // namespace orbitmart
