#include "sizenorm/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "sizenorm/error.hpp"
#include "sizenorm/rng.hpp"

namespace sizenorm {

// ---------------------------------------------------------------------------
// NormalizationMap

void NormalizationMap::set(const SizeKey& key, double value, std::size_t component) {
  entries_[key] = Entry{value, component};
  by_brand_size_[{brand_of_size_type(key.size_type_id), key.raw_size}] = key;
}

void NormalizationMap::erase(const SizeKey& key) {
  if (entries_.erase(key) > 0) by_brand_size_.erase({brand_of_size_type(key.size_type_id), key.raw_size});
}

std::optional<double> NormalizationMap::value(const SizeKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.value;
}

std::optional<SizeKey> NormalizationMap::key_of(std::string_view brand, std::string_view raw_size) const {
  auto it = by_brand_size_.find({std::string(brand), std::string(raw_size)});
  if (it == by_brand_size_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> NormalizationMap::value(std::string_view brand, std::string_view raw_size) const {
  auto key = key_of(brand, raw_size);
  if (!key) return std::nullopt;
  return value(*key);
}

std::optional<std::size_t> NormalizationMap::component(std::string_view brand, std::string_view raw_size) const {
  auto key = key_of(brand, raw_size);
  if (!key) return std::nullopt;
  return entries_.at(*key).component;
}

// ---------------------------------------------------------------------------
// Problem

Problem::Problem(const FrequencyMatrix& f, ProblemParams params)
    : params_(params), keys_(f.keys()), size_types_(f.size_types()) {
  if (!(params_.gap > 0.0) || !std::isfinite(params_.gap)) throw ConfigError("gap must be a positive number");
  if (!(params_.reg_coeff >= 0.0) || !std::isfinite(params_.reg_coeff))
    throw ConfigError("reg_coeff must be a nonnegative number");

  var_type_.resize(keys_.size());
  for (std::size_t t = 0; t < size_types_.size(); ++t) {
    types_.push_back({f.first_id(t), size_types_[t].sizes.size()});
    for (std::size_t k = 0; k < size_types_[t].sizes.size(); ++k) var_type_[f.first_id(t) + k] = t;
  }

  std::vector<std::size_t> parent(size_types_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [pair, mass] : f.entries()) {
    auto [i, j] = pair;
    if (i == j || mass <= 0.0) continue;
    bool same_type = var_type_[i] == var_type_[j];
    if (same_type && !params_.include_same_type_pairs) continue;
    edges_.push_back({i, j, mass});
    if (!same_type) {
      auto a = root(var_type_[i]);
      auto b = root(var_type_[j]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  type_component_.assign(size_types_.size(), 0);
  std::vector<std::size_t> label(size_types_.size(), SIZE_MAX);
  for (std::size_t t = 0; t < size_types_.size(); ++t) {
    auto r = root(t);
    if (label[r] == SIZE_MAX) label[r] = num_components_++;
    type_component_[t] = label[r];
  }
}

std::vector<std::size_t> Problem::component_types(std::size_t component) const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < types_.size(); ++t)
    if (type_component_[t] == component) out.push_back(t);
  return out;
}

double Problem::objective(const Eigen::VectorXd& x) const {
  double total = 0.0;
  for (const auto& e : edges_) {
    double d = x[static_cast<Eigen::Index>(e.i)] - x[static_cast<Eigen::Index>(e.j)];
    total += e.weight * d * d;
  }
  return total;
}

double Problem::regularizer(const Eigen::VectorXd& x) const {
  double total = 0.0;
  for (const auto& t : types_) {
    if (t.count == 0) continue;
    auto first = static_cast<Eigen::Index>(t.first);
    auto last = static_cast<Eigen::Index>(t.first + t.count - 1);
    total += params_.reg_coeff / static_cast<double>(t.count) * (x[last] - x[first]);
  }
  return total;
}

Eigen::VectorXd Problem::gradient(const Eigen::VectorXd& x, double reg_weight) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (const auto& e : edges_) {
    auto i = static_cast<Eigen::Index>(e.i);
    auto j = static_cast<Eigen::Index>(e.j);
    double d = 2.0 * e.weight * (x[i] - x[j]);
    g[i] += d;
    g[j] -= d;
  }
  for (const auto& t : types_) {
    if (t.count < 2) continue;
    double c = reg_weight * params_.reg_coeff / static_cast<double>(t.count);
    g[static_cast<Eigen::Index>(t.first)] -= c;
    g[static_cast<Eigen::Index>(t.first + t.count - 1)] += c;
  }
  return g;
}

void Problem::anchor_components(Eigen::VectorXd& x) const {
  std::vector<double> lowest(num_components_, std::numeric_limits<double>::infinity());
  for (std::size_t v = 0; v < keys_.size(); ++v) {
    auto c = variable_component(v);
    lowest[c] = std::min(lowest[c], x[static_cast<Eigen::Index>(v)]);
  }
  for (std::size_t v = 0; v < keys_.size(); ++v) x[static_cast<Eigen::Index>(v)] -= lowest[variable_component(v)];
}

NormalizationMap Problem::to_map(const Eigen::VectorXd& x) const {
  NormalizationMap map;
  for (std::size_t v = 0; v < keys_.size(); ++v) map.set(keys_[v], x[static_cast<Eigen::Index>(v)], variable_component(v));
  return map;
}

Eigen::VectorXd Problem::from_map(const NormalizationMap& map) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(keys_.size()));
  for (std::size_t v = 0; v < keys_.size(); ++v) {
    auto value = map.value(keys_[v]);
    if (!value) throw MissingKey("normalization map lacks " + keys_[v].size_type_id + " / " + keys_[v].raw_size);
    x[static_cast<Eigen::Index>(v)] = *value;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Map-level objective and regularizer

double objective(const NormalizationMap& x, const FrequencyMatrix& f, PairScope scope) {
  double total = 0.0;
  for (const auto& [pair, mass] : f.entries()) {
    auto [i, j] = pair;
    if (i == j) continue;
    if (scope == PairScope::CrossType && f.type_of(i) == f.type_of(j)) continue;
    auto xi = x.value(f.key(i));
    auto xj = x.value(f.key(j));
    if (!xi) throw MissingKey("normalization map lacks " + f.key(i).size_type_id + " / " + f.key(i).raw_size);
    if (!xj) throw MissingKey("normalization map lacks " + f.key(j).size_type_id + " / " + f.key(j).raw_size);
    total += mass * (*xi - *xj) * (*xi - *xj);
  }
  return total;
}

double regularizer(const NormalizationMap& x, std::span<const SizeType> size_types, double reg_coeff) {
  double total = 0.0;
  for (const auto& t : size_types) {
    if (t.sizes.empty()) continue;
    auto first = x.value(SizeKey{t.id, t.sizes.front()});
    auto last = x.value(SizeKey{t.id, t.sizes.back()});
    if (!first || !last) throw MissingKey("normalization map lacks sizes of " + t.id);
    total += reg_coeff / static_cast<double>(t.sizes.size()) * (*last - *first);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Slack coordinates
//
// Within a size type, z_first = x_first and z_m = x_m - x_{m-1} - gap, so
// x = A z + offset with A a per-type cumulative sum.

namespace {

void cumulative_sum(const std::vector<Problem::TypeRange>& types, const Eigen::VectorXd& z, Eigen::VectorXd& x) {
  for (const auto& t : types) {
    double run = 0.0;
    for (std::size_t k = 0; k < t.count; ++k) {
      auto v = static_cast<Eigen::Index>(t.first + k);
      run += z[v];
      x[v] = run;
    }
  }
}

void reverse_cumulative_sum(const std::vector<Problem::TypeRange>& types, const Eigen::VectorXd& y,
                            Eigen::VectorXd& out) {
  for (const auto& t : types) {
    double run = 0.0;
    for (std::size_t k = t.count; k-- > 0;) {
      auto v = static_cast<Eigen::Index>(t.first + k);
      run += y[v];
      out[v] = run;
    }
  }
}

Eigen::VectorXd slack_coordinates(const Problem& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd z(x.size());
  for (const auto& t : p.types()) {
    for (std::size_t k = 0; k < t.count; ++k) {
      auto v = static_cast<Eigen::Index>(t.first + k);
      z[v] = k == 0 ? x[v] : x[v] - x[v - 1] - p.params().gap;
    }
  }
  return z;
}

// Bound-constrained QP min f(z) s.t. z >= 0 for one component, in local
// variable numbering.
class SlackQp {
 public:
  SlackQp(const Problem& p, std::span<const std::size_t> type_indices) : gap_(p.params().gap) {
    std::vector<std::size_t> local(p.num_variables(), SIZE_MAX);
    std::size_t n = 0;
    for (auto t : type_indices) {
      const auto& range = p.types()[t];
      types_.push_back({n, range.count});
      for (std::size_t k = 0; k < range.count; ++k) {
        local[range.first + k] = n;
        global_.push_back(range.first + k);
        ++n;
      }
    }
    for (const auto& e : p.edges()) {
      if (local[e.i] == SIZE_MAX) continue;
      edges_.push_back({local[e.i], local[e.j], e.weight});
    }
    linear_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    offset_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (const auto& t : types_) {
      for (std::size_t k = 0; k < t.count; ++k) {
        auto v = static_cast<Eigen::Index>(t.first + k);
        offset_[v] = static_cast<double>(k) * gap_;
        if (k > 0) linear_[v] = p.params().reg_coeff / static_cast<double>(t.count);
      }
    }
    x_buf_.resize(static_cast<Eigen::Index>(n));
    y_buf_.resize(static_cast<Eigen::Index>(n));
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(global_.size()); }
  const std::vector<std::size_t>& global() const { return global_; }

  Eigen::VectorXd to_x(const Eigen::VectorXd& z) const {
    Eigen::VectorXd x(z.size());
    cumulative_sum(types_, z, x);
    return x + offset_;
  }

  double value(const Eigen::VectorXd& z) {
    cumulative_sum(types_, z, x_buf_);
    x_buf_ += offset_;
    double total = linear_.dot(z);
    for (const auto& e : edges_) {
      double d = x_buf_[static_cast<Eigen::Index>(e.i)] - x_buf_[static_cast<Eigen::Index>(e.j)];
      total += e.weight * d * d;
    }
    return total;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& z) {
    cumulative_sum(types_, z, x_buf_);
    x_buf_ += offset_;
    laplacian(x_buf_, y_buf_);
    Eigen::VectorXd g(z.size());
    reverse_cumulative_sum(types_, y_buf_, g);
    return g + linear_;
  }

  Eigen::VectorXd hessian_times(const Eigen::VectorXd& v) {
    cumulative_sum(types_, v, x_buf_);
    laplacian(x_buf_, y_buf_);
    Eigen::VectorXd out(v.size());
    reverse_cumulative_sum(types_, y_buf_, out);
    return out;
  }

 private:
  // y = 2 L x for the weighted graph Laplacian L.
  void laplacian(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.setZero();
    for (const auto& e : edges_) {
      auto i = static_cast<Eigen::Index>(e.i);
      auto j = static_cast<Eigen::Index>(e.j);
      double d = 2.0 * e.weight * (x[i] - x[j]);
      y[i] += d;
      y[j] -= d;
    }
  }

  double gap_;
  std::vector<Problem::TypeRange> types_;
  std::vector<Problem::Edge> edges_;
  std::vector<std::size_t> global_;
  Eigen::VectorXd linear_;
  Eigen::VectorXd offset_;
  Eigen::VectorXd x_buf_;
  Eigen::VectorXd y_buf_;
};

double projected_gradient_norm(const Eigen::VectorXd& z, const Eigen::VectorXd& g) {
  double norm = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) norm = std::max(norm, z[i] > 0.0 ? std::abs(g[i]) : std::max(-g[i], 0.0));
  return norm;
}

struct QpRun {
  Eigen::VectorXd z;
  std::size_t iterations = 0;
  bool converged = false;
};

QpRun minimize_bound_constrained(SlackQp& qp, const QpOptions& options) {
  const Eigen::Index n = qp.size();
  QpRun run;
  run.z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd& z = run.z;

  for (run.iterations = 0; run.iterations < options.max_iterations; ++run.iterations) {
    Eigen::VectorXd g = qp.gradient(z);
    if (projected_gradient_norm(z, g) <= options.tolerance) {
      run.converged = true;
      break;
    }

    // Projected gradient step, exact line search on the feasible segment.
    Eigen::VectorXd pg(n);
    for (Eigen::Index i = 0; i < n; ++i) pg[i] = z[i] > 0.0 ? g[i] : std::min(g[i], 0.0);
    double curvature = pg.dot(qp.hessian_times(pg));
    double step = curvature > 0.0 ? pg.squaredNorm() / curvature : 1.0;
    Eigen::VectorXd d = (z - step * g).cwiseMax(0.0) - z;
    double dhd = d.dot(qp.hessian_times(d));
    double slope = g.dot(d);
    double t = dhd > 0.0 ? std::min(1.0, -slope / dhd) : 1.0;
    if (t > 0.0) z = (z + t * d).cwiseMax(0.0);

    // Conjugate gradient on the face of non-binding variables.
    g = qp.gradient(z);
    std::vector<bool> free(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) free[static_cast<std::size_t>(i)] = z[i] > 0.0 || g[i] < 0.0;
    auto mask = [&](Eigen::VectorXd& v) {
      for (Eigen::Index i = 0; i < n; ++i)
        if (!free[static_cast<std::size_t>(i)]) v[i] = 0.0;
    };
    Eigen::VectorXd r = -g;
    mask(r);
    const double r0 = r.norm();
    if (r0 == 0.0) continue;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd dir = r;
    double rr = r.squaredNorm();
    const std::size_t max_cg = 2 * static_cast<std::size_t>(n) + 50;
    for (std::size_t k = 0; k < max_cg; ++k) {
      Eigen::VectorXd hd = qp.hessian_times(dir);
      mask(hd);
      double dh = dir.dot(hd);
      if (dh <= 1e-300) break;
      double a = rr / dh;
      p += a * dir;
      r -= a * hd;
      double rr_next = r.squaredNorm();
      if (std::sqrt(rr_next) <= std::max(1e-12 * r0, 1e-3 * options.tolerance)) break;
      dir = r + (rr_next / rr) * dir;
      rr = rr_next;
    }

    double f0 = qp.value(z);
    double scale = 1.0;
    for (int tries = 0; tries < 50; ++tries, scale *= 0.5) {
      Eigen::VectorXd trial = (z + scale * p).cwiseMax(0.0);
      if (qp.value(trial) <= f0) {
        z = std::move(trial);
        break;
      }
    }
  }
  return run;
}

}  // namespace

// ---------------------------------------------------------------------------
// KKT

KktReport kkt_report(const Problem& p, const Eigen::VectorXd& x) {
  if (x.size() != static_cast<Eigen::Index>(p.num_variables()))
    throw std::invalid_argument("kkt_report: dimension mismatch");
  KktReport report;
  for (Eigen::Index v = 0; v < x.size(); ++v) report.feasibility = std::max(report.feasibility, -x[v]);

  Eigen::VectorXd z = slack_coordinates(p, x);
  for (const auto& t : p.types())
    for (std::size_t k = 1; k < t.count; ++k)
      report.feasibility = std::max(report.feasibility, -z[static_cast<Eigen::Index>(t.first + k)]);

  Eigen::VectorXd gx = p.gradient(x);
  Eigen::VectorXd gz(x.size());
  reverse_cumulative_sum(p.types(), gx, gz);
  for (Eigen::Index v = 0; v < gz.size(); ++v) {
    double lambda = std::max(gz[v], 0.0);
    report.stationarity = std::max(report.stationarity, std::abs(gz[v] - lambda));
    report.complementarity = std::max(report.complementarity, lambda * std::max(z[v], 0.0));
  }
  return report;
}

KktReport kkt_report(const Problem& p, const NormalizationMap& x) { return kkt_report(p, p.from_map(x)); }

std::string_view to_string(SolveStatus s) {
  return s == SolveStatus::Converged ? "converged" : "not_converged";
}

// ---------------------------------------------------------------------------
// QP backend

Solution solve_qp(const Problem& p, const QpOptions& options) {
  auto start = std::chrono::steady_clock::now();
  Solution sol;
  sol.info.backend = "qp";
  sol.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.num_variables()));

  for (std::size_t c = 0; c < p.num_components(); ++c) {
    auto types = p.component_types(c);
    SlackQp qp(p, types);
    QpRun run = minimize_bound_constrained(qp, options);
    sol.info.iterations += run.iterations;
    if (!run.converged) sol.info.status = SolveStatus::NotConverged;
    Eigen::VectorXd x = qp.to_x(run.z);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      sol.x[static_cast<Eigen::Index>(qp.global()[static_cast<std::size_t>(i)])] = x[i];
  }
  p.anchor_components(sol.x);

  sol.map = p.to_map(sol.x);
  sol.info.loss = p.loss(sol.x);
  sol.info.kkt = kkt_report(p, sol.x);
  sol.info.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

// ---------------------------------------------------------------------------
// GD backend

Eigen::VectorXd x_from_theta(const Problem& p, const Eigen::VectorXd& theta) {
  Eigen::VectorXd x(theta.size());
  cumulative_sum(p.types(), theta.array().exp().matrix(), x);
  return x;
}

double gd_loss(const Problem& p, const Eigen::VectorXd& theta, const GdOptions& options, Eigen::VectorXd* grad) {
  const double gap = p.params().gap;
  Eigen::VectorXd e = theta.array().exp().matrix();
  Eigen::VectorXd x(theta.size());
  cumulative_sum(p.types(), e, x);

  double hinge = 0.0;
  for (const auto& t : p.types())
    for (std::size_t k = 1; k < t.count; ++k) hinge += std::max(0.0, gap - e[static_cast<Eigen::Index>(t.first + k)]);
  double loss = p.objective(x) + options.alpha * p.regularizer(x) + options.beta_hinge * hinge;

  if (grad) {
    Eigen::VectorXd gx = p.gradient(x, options.alpha);
    Eigen::VectorXd tail(theta.size());
    reverse_cumulative_sum(p.types(), gx, tail);
    *grad = e.cwiseProduct(tail);
    for (const auto& t : p.types()) {
      for (std::size_t k = 1; k < t.count; ++k) {
        auto v = static_cast<Eigen::Index>(t.first + k);
        if (gap - e[v] > 0.0) (*grad)[v] -= options.beta_hinge * e[v];
      }
    }
  }
  return loss;
}

Solution solve_gd(const Problem& p, const GdOptions& options) {
  auto start = std::chrono::steady_clock::now();
  const auto n = static_cast<Eigen::Index>(p.num_variables());
  Rng rng(options.seed);
  Eigen::VectorXd theta(n);
  for (Eigen::Index v = 0; v < n; ++v)
    theta[v] = std::log(p.params().gap) + rng.uniform(-options.init_noise, options.init_noise);

  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad(n);
  double b1t = 1.0, b2t = 1.0;
  std::size_t iteration = 0;
  for (std::size_t stage = 0; stage < options.learning_rates.size(); ++stage) {
    const double lr = options.learning_rates[stage];
    for (std::size_t it = 0; it < options.iterations_per_rate; ++it, ++iteration) {
      double loss = gd_loss(p, theta, options, &grad);
      if (!std::isfinite(loss) || !grad.allFinite())
        throw NonFiniteLoss(fmt::format("gradient descent diverged at iteration {} (learning rate {}), loss {}",
                                        iteration, lr, loss));
      b1t *= options.beta1;
      b2t *= options.beta2;
      m = options.beta1 * m + (1.0 - options.beta1) * grad;
      s = options.beta2 * s + (1.0 - options.beta2) * grad.cwiseAbs2();
      theta.array() -= lr * (m.array() / (1.0 - b1t)) / ((s.array() / (1.0 - b2t)).sqrt() + options.epsilon);
    }
  }

  Solution sol;
  sol.info.backend = "gd";
  sol.info.iterations = iteration;
  if (options.clamp_final_gaps) {
    const double floor = std::log(p.params().gap);
    for (const auto& t : p.types())
      for (std::size_t k = 1; k < t.count; ++k) {
        double& th = theta[static_cast<Eigen::Index>(t.first + k)];
        if (th < floor) {
          sol.info.gap_repair = std::max(sol.info.gap_repair, p.params().gap - std::exp(th));
          th = floor;
        }
      }
  }
  sol.x = x_from_theta(p, theta);
  if (!sol.x.allFinite()) throw NonFiniteLoss("gradient descent produced non-finite sizes");
  p.anchor_components(sol.x);
  sol.map = p.to_map(sol.x);
  sol.info.loss = p.loss(sol.x);
  sol.info.kkt = kkt_report(p, sol.x);
  sol.info.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

}  // namespace sizenorm
