#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sizenorm/freqmatrix.hpp"

namespace sizenorm {

struct ProblemParams {
  double gap = 0.1;        // minimum distance between adjacent sizes of a type
  double reg_coeff = 0.1;  // span penalty is reg_coeff / |S_t| * (x_last - x_first)
  // Co-purchases inside one size type are ignored by default.
  bool include_same_type_pairs = false;
};

enum class PairScope { CrossType, All };

/// Normalized value of every (size type, size) key plus a connected-component
/// label per size type.
class NormalizationMap {
 public:
  struct Entry {
    double value = 0.0;
    std::size_t component = 0;
  };

  void set(const SizeKey& key, double value, std::size_t component);
  void erase(const SizeKey& key);

  std::optional<double> value(const SizeKey& key) const;
  std::optional<double> value(std::string_view brand, std::string_view raw_size) const;
  std::optional<std::size_t> component(std::string_view brand, std::string_view raw_size) const;
  std::optional<SizeKey> key_of(std::string_view brand, std::string_view raw_size) const;

  const std::map<SizeKey, Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<SizeKey, Entry> entries_;
  std::map<std::pair<std::string, std::string>, SizeKey> by_brand_size_;
};

/// Optimization layout over a frequency matrix: one variable per key, in the
/// matrix's dense-id order, so each size type is a contiguous run.
class Problem {
 public:
  struct Edge {
    std::size_t i;
    std::size_t j;
    double weight;
  };
  struct TypeRange {
    std::size_t first;
    std::size_t count;
  };

  explicit Problem(const FrequencyMatrix& f, ProblemParams params = {});

  const ProblemParams& params() const { return params_; }
  std::size_t num_variables() const { return keys_.size(); }
  const std::vector<SizeKey>& keys() const { return keys_; }
  const std::vector<SizeType>& size_types() const { return size_types_; }
  const std::vector<TypeRange>& types() const { return types_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Size types linked transitively by nonzero cross-type mass share a label.
  /// Labels are numbered by the first size type of each component.
  std::size_t num_components() const { return num_components_; }
  std::size_t type_component(std::size_t type_index) const { return type_component_[type_index]; }
  std::size_t variable_component(std::size_t var) const { return type_component_[var_type_[var]]; }
  std::vector<std::size_t> component_types(std::size_t component) const;

  double objective(const Eigen::VectorXd& x) const;
  double regularizer(const Eigen::VectorXd& x) const;
  double loss(const Eigen::VectorXd& x) const { return objective(x) + regularizer(x); }
  /// Gradient of objective + reg_weight * regularizer with respect to x.
  Eigen::VectorXd gradient(const Eigen::VectorXd& x, double reg_weight = 1.0) const;

  /// Translates every component so that its minimum value is exactly 0.
  void anchor_components(Eigen::VectorXd& x) const;

  NormalizationMap to_map(const Eigen::VectorXd& x) const;
  /// Dense vector in variable order. Throws MissingKey.
  Eigen::VectorXd from_map(const NormalizationMap& map) const;

 private:
  ProblemParams params_;
  std::vector<SizeKey> keys_;
  std::vector<SizeType> size_types_;
  std::vector<TypeRange> types_;
  std::vector<std::size_t> var_type_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> type_component_;
  std::size_t num_components_ = 0;
};

/// sum over stored pairs of F_pq * (x_p - x_q)^2. Throws MissingKey.
double objective(const NormalizationMap& x, const FrequencyMatrix& f, PairScope scope = PairScope::CrossType);

/// sum over size types of reg_coeff / |S_t| * (x_last - x_first). Throws MissingKey.
double regularizer(const NormalizationMap& x, std::span<const SizeType> size_types, double reg_coeff);

struct KktReport {
  double stationarity = 0.0;
  double feasibility = 0.0;  // largest violation of a gap or nonnegativity constraint
  double complementarity = 0.0;
};

/// Optimality certificate for the gap-constrained QP at x.
///
/// The gap constraints together with x_first >= 0 are written in slack
/// coordinates z (z_first = x_first, z_m = x_m - x_{m-1} - gap), where they
/// become z >= 0 with an identity Jacobian. The least-squares nonnegative
/// multipliers are then lambda = max(grad_z, 0); stationarity is
/// max |grad_z - lambda| and complementarity max lambda_i * max(z_i, 0).
KktReport kkt_report(const Problem& p, const Eigen::VectorXd& x);
KktReport kkt_report(const Problem& p, const NormalizationMap& x);

enum class SolveStatus { Converged, NotConverged };

std::string_view to_string(SolveStatus s);

struct SolveInfo {
  std::string backend;
  SolveStatus status = SolveStatus::Converged;
  std::size_t iterations = 0;
  double loss = 0.0;  // objective + regularizer, the QP objective
  KktReport kkt;
  double wall_seconds = 0.0;
  // GD only: largest amount by which the final clamp widened a gap.
  double gap_repair = 0.0;
};

struct Solution {
  Eigen::VectorXd x;
  NormalizationMap map;
  SolveInfo info;
};

struct QpOptions {
  double tolerance = 1e-8;  // on the infinity norm of the projected gradient
  std::size_t max_iterations = 100000;
};

/// Exact QP backend. Each component is rewritten in slack coordinates as a
/// bound-constrained convex QP and solved by projected gradient steps with
/// exact line search, each followed by a conjugate-gradient step on the face
/// of free variables. The result is anchored per component.
Solution solve_qp(const Problem& p, const QpOptions& options = {});

struct GdOptions {
  double alpha = 0.001;       // regularizer weight
  double beta_hinge = 100.0;  // gap hinge weight
  std::vector<double> learning_rates{0.1, 0.01, 0.001};
  std::size_t iterations_per_rate = 40000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double init_noise = 0.01;  // theta starts at log(gap) + U(-init_noise, init_noise)
  std::uint64_t seed = 0;
  // After the schedule, raise every increment exp(theta) below the gap to the
  // gap. Adam settles within about lr of the hinge kink, not on it.
  bool clamp_final_gaps = true;
};

/// x_{t,m} = sum_{k <= m} exp(theta_{t,k}) within each size type.
Eigen::VectorXd x_from_theta(const Problem& p, const Eigen::VectorXd& theta);

/// objective + alpha * regularizer + beta * hinge at theta, with the analytic
/// gradient written to grad when given.
double gd_loss(const Problem& p, const Eigen::VectorXd& theta, const GdOptions& options,
               Eigen::VectorXd* grad = nullptr);

/// Adam over theta through the learning-rate schedule. Throws NonFiniteLoss
/// if the loss diverges.
Solution solve_gd(const Problem& p, const GdOptions& options = {});

}  // namespace sizenorm
