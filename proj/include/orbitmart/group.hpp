#pragma once

// Sequential group families and their online orbit summaries.

#include <cstddef>
#include <cstdint>
#include <ext/pb_ds/assoc_container.hpp>
#include <ext/pb_ds/tree_policy.hpp>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace orbitmart {

enum class Family {
  FullPermutation,
  ModularPermutation,
  LabelPermutation,
  FullOrthogonal,
  DesignIsotropy,
};

enum class Score { Identity, CovariateProjection };

/// Declarative description of a sequential group family.
///
/// `parameter` is the period k (ModularPermutation), the label alphabet size
/// (LabelPermutation) or the covariate dimension d (DesignIsotropy); it is
/// unused by the other families.
struct GroupSpec {
  Family family = Family::FullPermutation;
  std::size_t parameter = 0;
  Score score = Score::Identity;

  static GroupSpec full_permutation();
  static GroupSpec modular_permutation(std::size_t period);
  static GroupSpec label_permutation(std::size_t labels);
  static GroupSpec full_orthogonal();
  static GroupSpec design_isotropy(std::size_t dimension);

  void validate() const;
  bool is_permutation() const noexcept;

  /// CLI form: perm, perm-mod:<k>, perm-label:<K>, sphere, isotropy:<d>.
  std::string to_string() const;
  static GroupSpec parse(std::string_view text);

  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;
};

struct Observation {
  double value = 0.0;
  std::optional<std::int64_t> label;
  std::vector<double> covariates;  // empty when absent

  static Observation scalar(double v) { return Observation{v, std::nullopt, {}}; }
  static Observation labelled(double v, std::int64_t l) { return Observation{v, l, {}}; }
  static Observation with_covariates(double v, std::vector<double> z) {
    return Observation{v, std::nullopt, std::move(z)};
  }
};

/// Throws PayloadMismatch unless `obs` carries exactly what `spec` needs.
void check_payload(const GroupSpec& spec, const Observation& obs);

/// Multiset of reals with O(log n) insertion and order-statistic counts.
class SortedMultiset {
 public:
  void insert(double x);
  /// Removes one copy of x; returns false if absent.
  bool erase_one(double x);

  std::size_t size() const noexcept { return tree_.size(); }
  bool empty() const noexcept { return tree_.empty(); }
  std::size_t count_greater(double x) const;
  std::size_t count_equal(double x) const;
  /// k-th smallest element, 0-based.
  double nth(std::size_t k) const;
  std::vector<double> values() const;

  friend bool operator==(const SortedMultiset& a, const SortedMultiset& b);

 private:
  using Key = std::pair<double, std::uint64_t>;
  using Tree = __gnu_pbds::tree<Key, __gnu_pbds::null_type, std::less<Key>,
                                __gnu_pbds::rb_tree_tag,
                                __gnu_pbds::tree_order_statistics_node_update>;
  std::size_t count_less_equal(double x) const;
  std::size_t count_less(double x) const;

  Tree tree_;
  std::uint64_t next_id_ = 1;
};

/// Order statistics per class. One class for FullPermutation, k residue
/// classes for ModularPermutation, one class per label for LabelPermutation.
struct PermutationSummary {
  std::vector<SortedMultiset> classes;
  friend bool operator==(const PermutationSummary&, const PermutationSummary&) = default;
};

struct OrthogonalSummary {
  double norm_sq = 0.0;       // ||X^n||^2
  double prev_norm_sq = 0.0;  // ||X^{n-1}||^2
  double last_value = 0.0;
  friend bool operator==(const OrthogonalSummary&, const OrthogonalSummary&) = default;
};

/// Least-squares accumulators for Y = Z beta + noise.
///
/// The Gram matrix, cross moment and ||Y||^2 are the summary proper; the
/// residual sum of squares is carried by the recursive least-squares update
/// so it never suffers the cancellation of ||Y||^2 - Y'HY.
struct IsotropySummary {
  Eigen::MatrixXd gram;   // Z'Z
  Eigen::VectorXd cross;  // Z'Y
  double y_norm_sq = 0.0;
  bool fitted = false;    // Z'Z full rank
  Eigen::VectorXd beta;   // least-squares coefficients, valid when fitted
  double rss = 0.0;       // ||(I - H) Y||^2, valid when fitted
  // Newest-row ingredients: leverage h = H_nn and residual e = ((I - H)Y)_n.
  double last_leverage = 1.0;
  double last_residual = 0.0;
};

/// The online summary of the observed prefix for one group family.
class OrbitState {
 public:
  /// Empty summary (n = 0). Throws InvalidSpec for bad parameters.
  explicit OrbitState(GroupSpec spec);

  const GroupSpec& spec() const noexcept { return spec_; }
  std::uint64_t n() const noexcept { return n_; }

  /// Folds one observation into the summary.
  void update(const Observation& obs);

  const PermutationSummary& permutation() const;
  const OrthogonalSummary& orthogonal() const;
  const IsotropySummary& isotropy() const;

  /// Class of the reference multiset for an observation at time n (1-based).
  std::size_t class_index(const Observation& obs, std::uint64_t n) const;

  /// Approximate resident bytes of the summary.
  std::size_t approx_bytes() const;

  /// Summary equality; isotropy summaries compare exactly.
  friend bool operator==(const OrbitState& a, const OrbitState& b);

 private:
  void update_isotropy(const Observation& obs);

  GroupSpec spec_;
  std::uint64_t n_ = 0;
  std::variant<PermutationSummary, OrthogonalSummary, IsotropySummary> summary_;
};

inline OrbitState init_state(const GroupSpec& spec) { return OrbitState(spec); }

inline OrbitState update_state(OrbitState state, const Observation& obs) {
  state.update(obs);
  return state;
}

}  // namespace orbitmart
