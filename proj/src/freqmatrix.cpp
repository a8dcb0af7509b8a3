#include "sizenorm/freqmatrix.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "sizenorm/error.hpp"

namespace sizenorm {

Date parse_date(std::string_view text) {
  auto bad = [&] { return DataError("invalid ISO-8601 date: '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  auto field = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    auto res = std::from_chars(text.data() + pos, text.data() + pos + len, v);
    if (res.ec != std::errc{} || res.ptr != text.data() + pos + len) throw bad();
    return v;
  };
  Date d{std::chrono::year{field(0, 4)}, std::chrono::month{static_cast<unsigned>(field(5, 2))},
         std::chrono::day{static_cast<unsigned>(field(8, 2))}};
  if (!d.ok()) throw bad();
  return d;
}

std::string format_date(Date d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                     static_cast<unsigned>(d.day()));
}

std::string month_key(Date d) {
  return fmt::format("{:04d}-{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()));
}

FrequencyMatrix::FrequencyMatrix(const SizeTypeMap& map) : types_(map.size_types()) {
  for (std::size_t t = 0; t < types_.size(); ++t) {
    type_ids_.emplace(types_[t].id, t);
    type_offset_.push_back(keys_.size());
    for (const auto& raw : types_[t].sizes) {
      key_ids_.emplace(SizeKey{types_[t].id, raw}, keys_.size());
      keys_.push_back(SizeKey{types_[t].id, raw});
      key_type_.push_back(t);
    }
  }
}

std::optional<std::size_t> FrequencyMatrix::find(const SizeKey& key) const {
  auto it = key_ids_.find(key);
  if (it == key_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> FrequencyMatrix::find_type(std::string_view size_type_id) const {
  auto it = type_ids_.find(size_type_id);
  if (it == type_ids_.end()) return std::nullopt;
  return it->second;
}

void FrequencyMatrix::add(std::size_t i, std::size_t j, double mass) {
  if (i >= keys_.size() || j >= keys_.size()) throw std::out_of_range("FrequencyMatrix::add: key id out of range");
  if (mass < 0.0) throw std::invalid_argument("FrequencyMatrix::add: negative mass");
  if (i > j) std::swap(i, j);
  entries_[{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)}] += mass;
}

double FrequencyMatrix::at(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  auto it = entries_.find({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
  return it == entries_.end() ? 0.0 : it->second;
}

double FrequencyMatrix::total_mass() const {
  double total = 0.0;
  for (const auto& [pair, mass] : entries_) total += mass;
  return total;
}

void FrequencyMatrix::merge(const FrequencyMatrix& other) {
  if (other.keys_ != keys_) throw std::invalid_argument("FrequencyMatrix::merge: key sets differ");
  for (const auto& [pair, mass] : other.entries_) entries_[pair] += mass;
}

namespace {

using Item = std::tuple<std::string, std::string, std::string>;  // brand, product, size

void accumulate_users(const std::vector<const std::set<Item>*>& users, const SizeTypeMap& map,
                      FrequencyMatrix& f) {
  std::vector<std::size_t> ids;
  for (const auto* items : users) {
    ids.clear();
    for (const auto& [brand, product, raw] : *items) {
      auto slot = map.find(brand, raw);
      ids.push_back(f.first_id(slot->type_index) + slot->sorted_index);
    }
    if (ids.size() < 2) continue;
    const double w = 1.0 / static_cast<double>(ids.size());
    for (std::size_t a = 0; a < ids.size(); ++a)
      for (std::size_t b = a + 1; b < ids.size(); ++b) f.add(ids[a], ids[b], w);
  }
}

}  // namespace

FrequencyMatrix build_frequency_matrix(std::span<const SaleRecord> sales, const SizeTypeMap& map,
                                       BuildStats* stats, unsigned threads) {
  BuildStats local;
  std::map<std::string, std::set<Item>> purchases;
  for (const auto& rec : sales) {
    ++local.records;
    if (rec.returned) {
      ++local.returned;
      continue;
    }
    if (!map.find(rec.brand, rec.raw_size)) {
      ++local.unresolved;
      continue;
    }
    if (!purchases[rec.user_id].emplace(rec.brand, rec.product_id, rec.raw_size).second) ++local.duplicates;
  }
  local.users = purchases.size();

  std::vector<const std::set<Item>*> users;
  users.reserve(purchases.size());
  for (const auto& [user, items] : purchases) {
    users.push_back(&items);
    if (items.size() >= 2) {
      ++local.pairing_users;
      local.expected_mass += (static_cast<double>(items.size()) - 1.0) / 2.0;
    }
  }

  FrequencyMatrix f(map);
  threads = std::max(1u, threads);
  if (threads == 1 || users.size() < 2) {
    accumulate_users(users, map, f);
  } else {
    std::vector<std::vector<const std::set<Item>*>> shards(threads);
    for (std::size_t u = 0; u < users.size(); ++u) shards[u % threads].push_back(users[u]);
    std::vector<FrequencyMatrix> partial(threads, FrequencyMatrix(map));
    {
      std::vector<std::jthread> workers;
      for (unsigned t = 0; t < threads; ++t)
        workers.emplace_back([&, t] { accumulate_users(shards[t], map, partial[t]); });
    }
    for (const auto& p : partial) f.merge(p);
  }
  if (stats) *stats = local;
  return f;
}

Eigen::MatrixXd block(const FrequencyMatrix& f, std::string_view t1, std::string_view t2) {
  auto a = f.find_type(t1);
  if (!a) throw UnknownSizeType("unknown size type: " + std::string(t1));
  auto b = f.find_type(t2);
  if (!b) throw UnknownSizeType("unknown size type: " + std::string(t2));
  const auto& ta = f.size_types()[*a];
  const auto& tb = f.size_types()[*b];
  Eigen::MatrixXd m(static_cast<Eigen::Index>(ta.sizes.size()), static_cast<Eigen::Index>(tb.sizes.size()));
  for (std::size_t i = 0; i < ta.sizes.size(); ++i)
    for (std::size_t j = 0; j < tb.sizes.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f.at(f.first_id(*a) + i, f.first_id(*b) + j);
  return m;
}

}  // namespace sizenorm
