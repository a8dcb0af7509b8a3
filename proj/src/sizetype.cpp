#include "sizenorm/sizetype.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "sizenorm/error.hpp"

namespace sizenorm {

PositionWeights position_weights(const PatternGroup& group, double beta_softmax) {
  if (group.members.empty()) throw std::invalid_argument("position_weights: empty pattern group");
  const std::size_t n = group.members.front().tokens.size();
  std::vector<std::set<std::string>> unique(n);
  for (const auto& m : group.members) {
    if (m.tokens.size() != n) throw std::invalid_argument("position_weights: mixed patterns in group");
    for (std::size_t i = 0; i < n; ++i) unique[i].insert(m.tokens[i].text);
  }
  double total = 0.0;
  for (const auto& u : unique) total += static_cast<double>(u.size());

  PositionWeights w;
  w.beta_softmax = beta_softmax;
  w.q_hat.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.q_hat[i] = 1.0 - static_cast<double>(unique[i].size()) / total;

  // Shift by the max before exponentiating.
  double top = *std::max_element(w.q_hat.begin(), w.q_hat.end());
  w.q.resize(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w.q[i] = std::exp(beta_softmax * (w.q_hat[i] - top));
    z += w.q[i];
  }
  for (double& v : w.q) v /= z;
  return w;
}

double distance(const TokenizedSize& a, const TokenizedSize& b, const PositionWeights& w) {
  if (a.pattern != b.pattern) return kInfiniteDistance;
  if (w.q.size() != a.tokens.size()) throw std::invalid_argument("distance: weight vector does not match pattern");
  double sim = 0.0;
  for (std::size_t i = 0; i < a.tokens.size(); ++i) {
    if (a.tokens[i].text == b.tokens[i].text) sim += w.q[i];
  }
  return std::max(0.0, 1.0 - sim);
}

double DistanceMatrix::off_diagonal_std() const {
  if (n_ < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if (i != j) sum += (*this)(i, j);
  const double count = static_cast<double>(n_ * (n_ - 1));
  const double mean = sum / count;
  double ss = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if (i != j) ss += ((*this)(i, j) - mean) * ((*this)(i, j) - mean);
  return std::sqrt(ss / count);
}

DistanceMatrix pairwise_distances(std::span<const TokenizedSize> members, const PositionWeights& w) {
  DistanceMatrix d(members.size());
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j) d.set(i, j, distance(members[i], members[j], w));
  return d;
}

std::vector<Merge> complete_linkage(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  std::vector<Merge> merges;
  if (n < 2) return merges;
  merges.reserve(n - 1);

  // Working linkage matrix over slots; slot i holds cluster id ids[i].
  std::vector<double> link(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) link[i * n + j] = d(i, j);
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<bool> active(n, true);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = n, bj = n;
    double best = kInfiniteDistance;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        double v = link[i * n + j];
        if (bi == n || v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    merges.push_back({std::min(ids[bi], ids[bj]), std::max(ids[bi], ids[bj]), best});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      double v = std::max(link[bi * n + k], link[bj * n + k]);
      link[bi * n + k] = v;
      link[k * n + bi] = v;
    }
    active[bj] = false;
    ids[bi] = n + step;
  }
  return merges;
}

std::vector<std::size_t> cut_tree(std::span<const Merge> merges, std::size_t n, std::size_t k) {
  if (n == 0) return {};
  if (k == 0 || k > n) throw std::invalid_argument("cut_tree: k out of range");
  // Each node id maps to the leaf representative of its cluster.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::size_t> node_leaf(n + merges.size());
  std::iota(node_leaf.begin(), node_leaf.begin() + static_cast<std::ptrdiff_t>(n), 0);
  const std::size_t steps = n - k;
  for (std::size_t s = 0; s < merges.size(); ++s) {
    std::size_t ra = root(node_leaf[merges[s].a]);
    std::size_t rb = root(node_leaf[merges[s].b]);
    if (s < steps) parent[rb] = ra;
    node_leaf[n + s] = ra;
  }
  std::vector<std::size_t> labels(n);
  std::vector<std::size_t> label_of_root(n, n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = root(i);
    if (label_of_root[r] == n) label_of_root[r] = next++;
    labels[i] = label_of_root[r];
  }
  return labels;
}

double silhouette_score(const DistanceMatrix& d, std::span<const std::size_t> labels) {
  const std::size_t n = d.size();
  if (labels.size() != n) throw std::invalid_argument("silhouette_score: label count mismatch");
  if (n == 0) return 0.0;
  std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::size_t> counts(k, 0);
  for (auto l : labels) ++counts[l];

  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[labels[i]] <= 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[labels[j]] += d(i, j);
    double a = sums[labels[i]] / static_cast<double>(counts[labels[i]] - 1);
    double b = kInfiniteDistance;
    for (std::size_t c = 0; c < k; ++c)
      if (c != labels[i] && counts[c] > 0) b = std::min(b, sums[c] / static_cast<double>(counts[c]));
    double denom = std::max(a, b);
    if (denom > 0.0 && std::isfinite(b)) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

std::vector<std::vector<std::size_t>> cluster_group(const PatternGroup& group, const PositionWeights& w,
                                                    const ClusteringParams& params) {
  const std::size_t n = group.members.size();
  if (n == 0) return {};
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (n == 1) return {all};

  DistanceMatrix d = pairwise_distances(group.members, w);
  if (n == 2) {
    if (d(0, 1) < params.pair_merge_threshold) return {all};
    return {{0}, {1}};
  }
  if (d.off_diagonal_std() < params.epsilon_std) return {all};

  std::vector<Merge> merges = complete_linkage(d);
  std::size_t k_max = std::min(n - 1, std::max<std::size_t>(params.max_clusters, 2));
  std::vector<std::size_t> best_labels;
  double best_score = -kInfiniteDistance;
  for (std::size_t k = 2; k <= k_max; ++k) {
    auto labels = cut_tree(merges, n, k);
    double s = silhouette_score(d, labels);
    if (best_labels.empty() || s > best_score + 1e-12) {
      best_score = s;
      best_labels = std::move(labels);
    }
  }
  std::size_t k = *std::max_element(best_labels.begin(), best_labels.end()) + 1;
  std::vector<std::vector<std::size_t>> clusters(k);
  for (std::size_t i = 0; i < n; ++i) clusters[best_labels[i]].push_back(i);
  return clusters;
}

std::string_view to_string(Ordering o) {
  switch (o) {
    case Ordering::Less:
      return "LESS";
    case Ordering::Equal:
      return "EQUAL";
    case Ordering::Greater:
      return "GREATER";
    case Ordering::Incomparable:
      return "INCOMPARABLE";
  }
  return "INCOMPARABLE";
}

std::optional<int> alpha_size_rank(std::string_view word, bool alone) {
  if (alone && (word == "P" || word == "PETITE")) return -1;

  int extra = 0;
  constexpr std::string_view kExtra = "EXTRA ";
  while (word.substr(0, kExtra.size()) == kExtra) {
    ++extra;
    word.remove_prefix(kExtra.size());
  }
  int xs = 0;
  while (xs < static_cast<int>(word.size()) && word[static_cast<std::size_t>(xs)] == 'X') ++xs;
  std::string_view base = word.substr(static_cast<std::size_t>(xs));
  const int steps = extra + xs;

  if (base == "S" || base == "SM" || base == "SML" || base == "SMALL") return -1 - steps;
  if (base == "L" || base == "LG" || base == "LRG" || base == "LARGE") return 1 + steps;
  if (steps == 0 && (base == "M" || base == "MD" || base == "MED" || base == "MEDIUM")) return 0;
  return std::nullopt;
}

namespace {

double parse_number(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{}) throw std::invalid_argument("not a number: " + std::string(text));
  return v;
}

struct OrderingToken {
  bool numeric;
  double value;
};

std::vector<OrderingToken> ordering_tokens(const TokenizedSize& t) {
  std::vector<OrderingToken> out;
  const bool alone = t.tokens.size() == 1;
  for (const auto& tok : t.tokens) {
    if (tok.kind == TokenKind::Numer) {
      out.push_back({true, parse_number(tok.text)});
    } else if (tok.kind == TokenKind::Alpha) {
      if (auto r = alpha_size_rank(tok.text, alone)) out.push_back({false, static_cast<double>(*r)});
    }
  }
  return out;
}

}  // namespace

Ordering semantic_compare(const TokenizedSize& a, const TokenizedSize& b) {
  if (a.same_tokens(b)) return Ordering::Equal;
  auto ka = ordering_tokens(a);
  auto kb = ordering_tokens(b);
  for (std::size_t i = 0; i < std::min(ka.size(), kb.size()); ++i) {
    if (ka[i].numeric != kb[i].numeric) return Ordering::Incomparable;
    if (ka[i].value < kb[i].value) return Ordering::Less;
    if (ka[i].value > kb[i].value) return Ordering::Greater;
  }
  return Ordering::Incomparable;
}

Ordering semantic_compare(std::string_view a, std::string_view b) {
  return semantic_compare(tokenize(a), tokenize(b));
}

std::string make_size_type_id(std::string_view brand, std::size_t ordinal) {
  return std::string(brand) + "#" + std::to_string(ordinal);
}

std::string brand_of_size_type(std::string_view size_type_id) {
  auto pos = size_type_id.rfind('#');
  if (pos == std::string_view::npos) throw DataError("malformed size type id: " + std::string(size_type_id));
  return std::string(size_type_id.substr(0, pos));
}

SizeTypeInference infer_size_types(std::span<const std::string> brand_sizes, std::string_view brand,
                                   const ClusteringParams& params) {
  std::vector<std::string> sizes(brand_sizes.begin(), brand_sizes.end());
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  std::map<std::string, PatternGroup> groups;
  for (const auto& raw : sizes) {
    TokenizedSize t = tokenize(raw);
    std::string key = pattern_key(t);
    auto& g = groups[key];
    g.brand = std::string(brand);
    g.pattern = key;
    g.members.push_back(std::move(t));
  }

  SizeTypeInference out;
  auto emit = [&](std::vector<std::string> members) {
    out.size_types.push_back({make_size_type_id(brand, out.size_types.size()), std::string(brand), std::move(members)});
  };

  for (const auto& [key, group] : groups) {
    PositionWeights w = position_weights(group, params.beta_softmax);
    for (const auto& cluster : cluster_group(group, w, params)) {
      std::optional<std::pair<std::size_t, std::size_t>> bad;
      for (std::size_t i = 0; i < cluster.size() && !bad; ++i)
        for (std::size_t j = i + 1; j < cluster.size() && !bad; ++j) {
          Ordering o = semantic_compare(group.members[cluster[i]], group.members[cluster[j]]);
          if (o != Ordering::Less && o != Ordering::Greater) bad = {cluster[i], cluster[j]};
        }
      if (bad) {
        PartitionDefect defect{std::string(brand), {}, group.members[bad->first].raw, group.members[bad->second].raw};
        for (auto idx : cluster) defect.cluster.push_back(group.members[idx].raw);
        for (auto idx : cluster) emit({group.members[idx].raw});
        out.defects.push_back(std::move(defect));
        continue;
      }
      std::vector<std::size_t> order = cluster;
      std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return semantic_compare(group.members[x], group.members[y]) == Ordering::Less;
      });
      std::vector<std::string> members;
      for (auto idx : order) members.push_back(group.members[idx].raw);
      emit(std::move(members));
    }
  }
  return out;
}

SizeTypeMap::SizeTypeMap(std::vector<SizeType> types) : types_(std::move(types)) {
  for (std::size_t t = 0; t < types_.size(); ++t) {
    if (!by_id_.emplace(types_[t].id, t).second) throw DataError("duplicate size type id: " + types_[t].id);
    for (std::size_t s = 0; s < types_[t].sizes.size(); ++s) {
      if (!slots_.emplace(std::pair{types_[t].brand, types_[t].sizes[s]}, SizeTypeSlot{t, s}).second)
        throw DataError("size '" + types_[t].sizes[s] + "' of brand '" + types_[t].brand +
                        "' is assigned to more than one size type");
    }
  }
}

std::optional<SizeTypeSlot> SizeTypeMap::find(std::string_view brand, std::string_view raw_size) const {
  auto it = slots_.find(std::pair{std::string(brand), std::string(raw_size)});
  if (it == slots_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> SizeTypeMap::find_type(std::string_view size_type_id) const {
  auto it = by_id_.find(size_type_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

}  // namespace sizenorm
