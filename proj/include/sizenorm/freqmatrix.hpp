#pragma once

#include <chrono>
#include <compare>
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

#include "sizenorm/sizetype.hpp"

namespace sizenorm {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD. Throws DataError on anything else or an invalid date.
Date parse_date(std::string_view text);
std::string format_date(Date d);
/// "YYYY-MM".
std::string month_key(Date d);

struct SaleRecord {
  std::string user_id;
  std::string brand;
  std::string raw_size;
  std::string product_id;
  Date timestamp{};
  bool returned = false;
};

struct SizeKey {
  std::string size_type_id;
  std::string raw_size;

  auto operator<=>(const SizeKey&) const = default;
};

/// Sparse symmetric co-purchase mass between (size type, size) keys.
///
/// Every size of every size type gets a dense id; ids are contiguous per size
/// type and follow the sorted size order. Entries are stored once per
/// unordered pair with the smaller id first. A diagonal entry (i, i) holds
/// co-purchases of two different products in the same size.
class FrequencyMatrix {
 public:
  using Pair = std::pair<std::uint32_t, std::uint32_t>;

  FrequencyMatrix() = default;
  explicit FrequencyMatrix(const SizeTypeMap& map);

  std::size_t num_keys() const { return keys_.size(); }
  const SizeKey& key(std::size_t id) const { return keys_[id]; }
  const std::vector<SizeKey>& keys() const { return keys_; }
  std::optional<std::size_t> find(const SizeKey& key) const;
  /// Size type index of a dense id.
  std::size_t type_of(std::size_t id) const { return key_type_[id]; }
  /// First dense id of a size type; its sizes occupy [first, first + count).
  std::size_t first_id(std::size_t type_index) const { return type_offset_[type_index]; }

  const std::vector<SizeType>& size_types() const { return types_; }
  std::optional<std::size_t> find_type(std::string_view size_type_id) const;

  void add(std::size_t i, std::size_t j, double mass);
  double at(std::size_t i, std::size_t j) const;
  const std::map<Pair, double>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  double total_mass() const;

  /// Entry-wise addition of a matrix over the same key set.
  void merge(const FrequencyMatrix& other);

 private:
  std::vector<SizeType> types_;
  std::vector<std::size_t> type_offset_;
  std::vector<SizeKey> keys_;
  std::vector<std::size_t> key_type_;
  std::map<SizeKey, std::size_t> key_ids_;
  std::map<std::string, std::size_t, std::less<>> type_ids_;
  std::map<Pair, double> entries_;
};

struct BuildStats {
  std::size_t records = 0;
  std::size_t returned = 0;
  std::size_t unresolved = 0;  // kept records whose (brand, size) has no size type
  std::size_t duplicates = 0;  // repeated (product, size) purchases of one user
  std::size_t users = 0;
  std::size_t pairing_users = 0;  // users with two or more kept purchases
  double expected_mass = 0.0;     // sum over users of (|P_u| - 1) / 2

  double skip_fraction() const {
    std::size_t kept = records - returned;
    return kept == 0 ? 0.0 : static_cast<double>(unresolved) / static_cast<double>(kept);
  }
};

/// Diluted co-purchase counts from kept sales. Each user's kept purchases are
/// deduplicated by (brand, product, size); every distinct pair then adds
/// 1/|P_u| to the entry of its two size keys. With threads > 1 users are
/// sharded and the partial matrices merged.
FrequencyMatrix build_frequency_matrix(std::span<const SaleRecord> sales, const SizeTypeMap& map,
                                       BuildStats* stats = nullptr, unsigned threads = 1);

/// Dense |S_t1| x |S_t2| block in sorted-size order. Throws UnknownSizeType.
Eigen::MatrixXd block(const FrequencyMatrix& f, std::string_view t1, std::string_view t2);

}  // namespace sizenorm
