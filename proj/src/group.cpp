#include "orbitmart/group.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "orbitmart/error.hpp"

namespace orbitmart {
namespace {

constexpr double kPivotTolerance = 1e-10;

std::size_t parse_positive(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || value == 0) {
    throw Error(ErrorKind::InvalidSpec,
                std::string(what) + " must be a positive integer, got '" +
                    std::string(text) + "'");
  }
  return value;
}

bool full_rank(const Eigen::LDLT<Eigen::MatrixXd>& factor) {
  const Eigen::VectorXd pivots = factor.vectorD().cwiseAbs();
  const double largest = pivots.maxCoeff();
  return factor.info() == Eigen::Success && largest > 0.0 &&
         pivots.minCoeff() > kPivotTolerance * largest;
}

}  // namespace

GroupSpec GroupSpec::full_permutation() { return {Family::FullPermutation, 0, Score::Identity}; }

GroupSpec GroupSpec::modular_permutation(std::size_t period) {
  return {Family::ModularPermutation, period, Score::Identity};
}

GroupSpec GroupSpec::label_permutation(std::size_t labels) {
  return {Family::LabelPermutation, labels, Score::CovariateProjection};
}

GroupSpec GroupSpec::full_orthogonal() { return {Family::FullOrthogonal, 0, Score::Identity}; }

GroupSpec GroupSpec::design_isotropy(std::size_t dimension) {
  return {Family::DesignIsotropy, dimension, Score::Identity};
}

void GroupSpec::validate() const {
  switch (family) {
    case Family::ModularPermutation:
    case Family::LabelPermutation:
    case Family::DesignIsotropy:
      if (parameter < 1) {
        throw Error(ErrorKind::InvalidSpec, to_string() + ": parameter must be >= 1");
      }
      break;
    case Family::FullPermutation:
    case Family::FullOrthogonal:
      break;
  }
  const Score expected =
      family == Family::LabelPermutation ? Score::CovariateProjection : Score::Identity;
  if (score != expected) {
    throw Error(ErrorKind::InvalidSpec, to_string() + ": unsupported nonconformity score");
  }
}

bool GroupSpec::is_permutation() const noexcept {
  return family == Family::FullPermutation || family == Family::ModularPermutation ||
         family == Family::LabelPermutation;
}

std::string GroupSpec::to_string() const {
  switch (family) {
    case Family::FullPermutation: return "perm";
    case Family::ModularPermutation: return "perm-mod:" + std::to_string(parameter);
    case Family::LabelPermutation: return "perm-label:" + std::to_string(parameter);
    case Family::FullOrthogonal: return "sphere";
    case Family::DesignIsotropy: return "isotropy:" + std::to_string(parameter);
  }
  return "?";
}

GroupSpec GroupSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const bool has_arg = colon != std::string_view::npos;
  const std::string_view arg = has_arg ? text.substr(colon + 1) : std::string_view{};
  if (head == "perm" && !has_arg) return full_permutation();
  if (head == "sphere" && !has_arg) return full_orthogonal();
  if (head == "perm-mod" && has_arg) return modular_permutation(parse_positive(arg, "period"));
  if (head == "perm-label" && has_arg) return label_permutation(parse_positive(arg, "label count"));
  if (head == "isotropy" && has_arg) return design_isotropy(parse_positive(arg, "dimension"));
  throw Error(ErrorKind::InvalidSpec, "unknown group '" + std::string(text) + "'");
}

void check_payload(const GroupSpec& spec, const Observation& obs) {
  if (!std::isfinite(obs.value)) {
    throw Error(ErrorKind::PayloadMismatch, "observation value must be finite");
  }
  const bool wants_label = spec.family == Family::LabelPermutation;
  const bool wants_covariates = spec.family == Family::DesignIsotropy;
  if (wants_label) {
    if (!obs.label) throw Error(ErrorKind::PayloadMismatch, "missing label");
    if (*obs.label < 0 || static_cast<std::size_t>(*obs.label) >= spec.parameter) {
      throw Error(ErrorKind::PayloadMismatch,
                  "label " + std::to_string(*obs.label) + " outside [0, " +
                      std::to_string(spec.parameter) + ")");
    }
  } else if (obs.label) {
    throw Error(ErrorKind::PayloadMismatch, "unexpected label for " + spec.to_string());
  }
  if (wants_covariates) {
    if (obs.covariates.size() != spec.parameter) {
      throw Error(ErrorKind::PayloadMismatch,
                  "expected " + std::to_string(spec.parameter) + " covariates, got " +
                      std::to_string(obs.covariates.size()));
    }
    for (double z : obs.covariates) {
      if (!std::isfinite(z)) throw Error(ErrorKind::PayloadMismatch, "covariates must be finite");
    }
  } else if (!obs.covariates.empty()) {
    throw Error(ErrorKind::PayloadMismatch, "unexpected covariates for " + spec.to_string());
  }
}

// --- SortedMultiset --------------------------------------------------------

void SortedMultiset::insert(double x) { tree_.insert({x, next_id_++}); }

bool SortedMultiset::erase_one(double x) {
  auto it = tree_.lower_bound({x, 0});
  if (it == tree_.end() || it->first != x) return false;
  tree_.erase(it);
  return true;
}

std::size_t SortedMultiset::count_less(double x) const { return tree_.order_of_key({x, 0}); }

std::size_t SortedMultiset::count_less_equal(double x) const {
  return tree_.order_of_key({x, std::numeric_limits<std::uint64_t>::max()});
}

std::size_t SortedMultiset::count_greater(double x) const {
  return tree_.size() - count_less_equal(x);
}

std::size_t SortedMultiset::count_equal(double x) const {
  return count_less_equal(x) - count_less(x);
}

double SortedMultiset::nth(std::size_t k) const {
  if (k >= tree_.size()) throw Error(ErrorKind::InvalidArgument, "order statistic out of range");
  return tree_.find_by_order(k)->first;
}

std::vector<double> SortedMultiset::values() const {
  std::vector<double> out;
  out.reserve(tree_.size());
  for (const auto& key : tree_) out.push_back(key.first);
  return out;
}

bool operator==(const SortedMultiset& a, const SortedMultiset& b) {
  if (a.size() != b.size()) return false;
  auto ia = a.tree_.begin();
  for (auto ib = b.tree_.begin(); ib != b.tree_.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
  }
  return true;
}

// --- OrbitState ------------------------------------------------------------

OrbitState::OrbitState(GroupSpec spec) : spec_(spec) {
  spec_.validate();
  switch (spec_.family) {
    case Family::FullPermutation:
      summary_ = PermutationSummary{std::vector<SortedMultiset>(1)};
      break;
    case Family::ModularPermutation:
    case Family::LabelPermutation:
      summary_ = PermutationSummary{std::vector<SortedMultiset>(spec_.parameter)};
      break;
    case Family::FullOrthogonal:
      summary_ = OrthogonalSummary{};
      break;
    case Family::DesignIsotropy: {
      const auto d = static_cast<Eigen::Index>(spec_.parameter);
      IsotropySummary iso;
      iso.gram = Eigen::MatrixXd::Zero(d, d);
      iso.cross = Eigen::VectorXd::Zero(d);
      iso.beta = Eigen::VectorXd::Zero(d);
      summary_ = std::move(iso);
      break;
    }
  }
}

std::size_t OrbitState::class_index(const Observation& obs, std::uint64_t n) const {
  switch (spec_.family) {
    case Family::ModularPermutation:
      return static_cast<std::size_t>(n % spec_.parameter);
    case Family::LabelPermutation:
      return static_cast<std::size_t>(obs.label.value_or(0));
    default:
      return 0;
  }
}

void OrbitState::update(const Observation& obs) {
  check_payload(spec_, obs);
  switch (spec_.family) {
    case Family::FullPermutation:
    case Family::ModularPermutation:
    case Family::LabelPermutation: {
      auto& perm = std::get<PermutationSummary>(summary_);
      const double score = obs.value;  // Identity and CovariateProjection alike
      perm.classes[class_index(obs, n_ + 1)].insert(score);
      break;
    }
    case Family::FullOrthogonal: {
      auto& orth = std::get<OrthogonalSummary>(summary_);
      orth.prev_norm_sq = orth.norm_sq;
      orth.norm_sq += obs.value * obs.value;
      orth.last_value = obs.value;
      break;
    }
    case Family::DesignIsotropy:
      update_isotropy(obs);
      break;
  }
  ++n_;
}

void OrbitState::update_isotropy(const Observation& obs) {
  const auto& iso = std::get<IsotropySummary>(summary_);
  const std::uint64_t n = n_ + 1;
  const auto d = static_cast<std::uint64_t>(spec_.parameter);
  const Eigen::Map<const Eigen::VectorXd> z(obs.covariates.data(),
                                            static_cast<Eigen::Index>(obs.covariates.size()));
  const double y = obs.value;

  IsotropySummary next = iso;
  next.gram.noalias() += z * z.transpose();
  next.cross += y * z;
  next.y_norm_sq += y * y;

  if (iso.fitted) {
    // Recursive least squares: predicted residual against the previous fit.
    const Eigen::LDLT<Eigen::MatrixXd> prev(iso.gram);
    const double q = z.dot(prev.solve(z));
    const double predicted = y - z.dot(iso.beta);
    next.rss = iso.rss + predicted * predicted / (1.0 + q);
    next.last_leverage = q / (1.0 + q);
    next.last_residual = predicted / (1.0 + q);
    next.beta = Eigen::LDLT<Eigen::MatrixXd>(next.gram).solve(next.cross);
  } else if (n >= d) {
    const Eigen::LDLT<Eigen::MatrixXd> factor(next.gram);
    if (full_rank(factor)) {
      next.fitted = true;
      next.beta = factor.solve(next.cross);
      next.rss = std::max(0.0, next.y_norm_sq - next.cross.dot(next.beta));
      next.last_leverage = std::min(1.0, z.dot(factor.solve(z)));
      next.last_residual = y - z.dot(next.beta);
    } else if (n > d) {
      throw Error(ErrorKind::DegenerateDesign,
                  "design matrix is rank deficient at n=" + std::to_string(n));
    }
  }
  if (!next.fitted) {
    next.last_leverage = 1.0;
    next.last_residual = 0.0;
  }
  summary_ = std::move(next);
}

const PermutationSummary& OrbitState::permutation() const {
  if (const auto* p = std::get_if<PermutationSummary>(&summary_)) return *p;
  throw Error(ErrorKind::InvalidArgument, spec_.to_string() + " has no permutation summary");
}

const OrthogonalSummary& OrbitState::orthogonal() const {
  if (const auto* p = std::get_if<OrthogonalSummary>(&summary_)) return *p;
  throw Error(ErrorKind::InvalidArgument, spec_.to_string() + " has no orthogonal summary");
}

const IsotropySummary& OrbitState::isotropy() const {
  if (const auto* p = std::get_if<IsotropySummary>(&summary_)) return *p;
  throw Error(ErrorKind::InvalidArgument, spec_.to_string() + " has no isotropy summary");
}

std::size_t OrbitState::approx_bytes() const {
  // Red-black node: key, three links, color and subtree size.
  constexpr std::size_t kNodeBytes =
      sizeof(std::pair<double, std::uint64_t>) + 3 * sizeof(void*) + 2 * sizeof(std::size_t);
  std::size_t bytes = sizeof(*this);
  if (const auto* perm = std::get_if<PermutationSummary>(&summary_)) {
    for (const auto& cls : perm->classes) bytes += sizeof(cls) + cls.size() * kNodeBytes;
  } else if (const auto* iso = std::get_if<IsotropySummary>(&summary_)) {
    bytes += sizeof(double) * static_cast<std::size_t>(iso->gram.size() + iso->cross.size() +
                                                       iso->beta.size());
  }
  return bytes;
}

bool operator==(const OrbitState& a, const OrbitState& b) {
  if (!(a.spec_ == b.spec_) || a.n_ != b.n_) return false;
  if (const auto* pa = std::get_if<PermutationSummary>(&a.summary_)) {
    return *pa == std::get<PermutationSummary>(b.summary_);
  }
  if (const auto* oa = std::get_if<OrthogonalSummary>(&a.summary_)) {
    return oa->norm_sq == std::get<OrthogonalSummary>(b.summary_).norm_sq;
  }
  const auto& ia = std::get<IsotropySummary>(a.summary_);
  const auto& ib = std::get<IsotropySummary>(b.summary_);
  return ia.gram == ib.gram && ia.cross == ib.cross && ia.y_norm_sq == ib.y_norm_sq;
}

}  // namespace orbitmart
