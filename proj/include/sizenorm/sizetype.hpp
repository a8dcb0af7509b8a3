#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sizenorm/tokenizer.hpp"

namespace sizenorm {

/// Sizes of one brand sharing a token-type pattern.
struct PatternGroup {
  std::string brand;
  std::string pattern;
  std::vector<TokenizedSize> members;  // unique by raw string
};

struct ClusteringParams {
  double beta_softmax = 15.0;
  double epsilon_std = 0.005;
  std::size_t max_clusters = 12;
  // Two-member groups: merged when their distance is below this.
  double pair_merge_threshold = 0.5;
};

struct PositionWeights {
  std::vector<double> q_hat;
  std::vector<double> q;
  double beta_softmax = 15.0;
};

/// q_hat[i] = 1 - unique(i) / sum_j unique(j), q = softmax(beta * q_hat).
PositionWeights position_weights(const PatternGroup& group, double beta_softmax = 15.0);

/// Returned by distance() for sizes with different patterns.
inline constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

/// 1 - sum_i [a_i == b_i] q_i, or kInfiniteDistance when the patterns differ.
double distance(const TokenizedSize& a, const TokenizedSize& b, const PositionWeights& w);

// Dense symmetric matrix of pairwise distances.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

  /// Population standard deviation over the i != j entries.
  double off_diagonal_std() const;

 private:
  std::size_t n_;
  std::vector<double> d_;
};

DistanceMatrix pairwise_distances(std::span<const TokenizedSize> members, const PositionWeights& w);

struct Merge {
  std::size_t a;  // cluster ids: 0..n-1 are leaves, n+k is the k-th merge
  std::size_t b;
  double height;
};

/// Complete-linkage agglomerative clustering. Ties in the minimum linkage are
/// resolved toward the lowest cluster ids, so the result is deterministic.
std::vector<Merge> complete_linkage(const DistanceMatrix& d);

/// Flat labels with k clusters. Labels are numbered by first appearance.
std::vector<std::size_t> cut_tree(std::span<const Merge> merges, std::size_t n, std::size_t k);

/// Mean silhouette coefficient from a precomputed distance matrix. Members
/// of singleton clusters score 0.
double silhouette_score(const DistanceMatrix& d, std::span<const std::size_t> labels);

/// Splits a pattern group into clusters of member indices. One cluster when
/// the off-diagonal std of the distance matrix is below epsilon_std; otherwise
/// the k in [2, min(n-1, max_clusters)] with the best silhouette (smallest k
/// on ties).
std::vector<std::vector<std::size_t>> cluster_group(const PatternGroup& group, const PositionWeights& w,
                                                    const ClusteringParams& params = {});

enum class Ordering { Less, Equal, Greater, Incomparable };

std::string_view to_string(Ordering o);

/// Deterministic semantic ordering of two size strings.
///
/// NUMER tokens order numerically and alpha size words (XS, SMALL, MED, ...)
/// through a fixed rank lexicon; every other token is a non-ordering modifier.
/// The leftmost differing ordering token decides. Equal means identical
/// tokens; Incomparable covers everything else, including sizes that differ
/// only in modifiers.
Ordering semantic_compare(std::string_view a, std::string_view b);
Ordering semantic_compare(const TokenizedSize& a, const TokenizedSize& b);

/// Rank of an alpha size word, or nullopt for modifiers. P / PETITE rank with
/// S only when they are the whole size string.
std::optional<int> alpha_size_rank(std::string_view word, bool alone);

struct SizeType {
  std::string id;  // "<brand>#<ordinal>"
  std::string brand;
  std::vector<std::string> sizes;  // ascending
};

std::string make_size_type_id(std::string_view brand, std::size_t ordinal);
/// Inverse of make_size_type_id: text before the last '#'.
std::string brand_of_size_type(std::string_view size_type_id);

struct PartitionDefect {
  std::string brand;
  std::vector<std::string> cluster;  // the cluster that was split into singletons
  std::string first;
  std::string second;  // an unorderable pair inside it
};

struct SizeTypeInference {
  std::vector<SizeType> size_types;
  std::vector<PartitionDefect> defects;
};

/// Partitions one brand's sizes into ordered size types: tokenize, group by
/// pattern, cluster each group, sort each cluster. A cluster holding an
/// unorderable pair is split into singletons and reported as a defect.
/// Output is independent of the input order.
SizeTypeInference infer_size_types(std::span<const std::string> brand_sizes, std::string_view brand,
                                   const ClusteringParams& params = {});

struct SizeTypeSlot {
  std::size_t type_index;
  std::size_t sorted_index;
};

/// All size types of a catalog with a (brand, raw size) lookup.
class SizeTypeMap {
 public:
  SizeTypeMap() = default;
  explicit SizeTypeMap(std::vector<SizeType> types);

  const std::vector<SizeType>& size_types() const { return types_; }
  std::optional<SizeTypeSlot> find(std::string_view brand, std::string_view raw_size) const;
  std::optional<std::size_t> find_type(std::string_view size_type_id) const;
  std::size_t num_sizes() const { return slots_.size(); }

 private:
  std::vector<SizeType> types_;
  std::map<std::pair<std::string, std::string>, SizeTypeSlot> slots_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

}  // namespace sizenorm
