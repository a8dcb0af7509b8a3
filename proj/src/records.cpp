#include "sizenorm/records.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "sizenorm/error.hpp"

namespace sizenorm::records {
namespace {

constexpr std::string_view kSalesColumns[] = {"user_id", "brand", "raw_size", "product_id", "timestamp", "returned"};
constexpr std::string_view kSizeTypeColumns[] = {"brand", "raw_size", "size_type_id", "sorted_index"};
constexpr std::string_view kFreqColumns[] = {"size_type_1", "raw_size_1", "size_type_2", "raw_size_2", "mass"};
constexpr std::string_view kMapColumns[] = {"size_type_id", "raw_size", "normalized_value", "component_label"};
constexpr std::string_view kCaseColumns[] = {"user_id", "month",     "a_brand",  "a_size",      "a_product",
                                             "b_brand", "b_product", "b_actual", "b_available"};
constexpr std::string_view kTraceColumns[] = {"case",          "user_id",      "b_brand", "b_actual", "predicted",
                                              "predicted_value", "actual_value", "scored",  "correct"};
constexpr std::string_view kBlockColumns[] = {"raw_size_1", "raw_size_2", "mass"};

constexpr char kListSeparator = '|';

std::string checked(std::string_view field, std::string_view what) {
  if (field.find_first_of("\t\n\r") != std::string_view::npos)
    throw DataError(fmt::format("{} contains a tab or newline: '{}'", what, field));
  return std::string(field);
}

class Reader {
 public:
  Reader(std::istream& in, std::string_view kind, std::size_t columns) : in_(in), columns_(columns) {
    std::string line;
    if (!std::getline(in_, line)) throw DataError(fmt::format("empty {} file", kind));
    strip(line);
    std::string expected = fmt::format("#sizenorm/{}/{}", kind, kFormatVersion);
    if (line.substr(0, line.find('\t')) != expected)
      throw DataError(fmt::format("not a {} v{} file (header '{}')", kind, kFormatVersion, line.substr(0, 60)));
  }

  // Fields of the next record; false at end of input. Blank lines are skipped.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      strip(line);
      if (line.empty()) continue;
      fields.clear();
      std::size_t start = 0;
      while (true) {
        auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      if (fields.size() != columns_) fail(fmt::format("expected {} fields, got {}", columns_, fields.size()));
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(fmt::format("line {}: {}", line_no_, what));
  }

  double number(const std::string& text) const {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) fail("bad number '" + text + "'");
    return v;
  }

  std::size_t count(const std::string& text) const {
    std::size_t v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) fail("bad integer '" + text + "'");
    return v;
  }

  bool boolean(const std::string& text) const {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    fail("bad boolean '" + text + "'");
  }

  std::string non_empty(std::string text, std::string_view what) const {
    if (text.empty()) fail(fmt::format("empty {}", what));
    return text;
  }

 private:
  static void strip(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }

  std::istream& in_;
  std::size_t columns_;
  std::size_t line_no_ = 1;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(kListSeparator, start);
    out.push_back(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::string format_number(double v) { return fmt::format("{}", v); }

std::string header(std::string_view kind, std::span<const std::string_view> columns) {
  std::string out = fmt::format("#sizenorm/{}/{}", kind, kFormatVersion);
  for (auto c : columns) {
    out += '\t';
    out += c;
  }
  return out;
}

void write_sales(std::ostream& out, std::span<const SaleRecord> sales) {
  out << header("sales", kSalesColumns) << '\n';
  for (const auto& s : sales) {
    out << checked(s.user_id, "user_id") << '\t' << checked(s.brand, "brand") << '\t'
        << checked(s.raw_size, "raw_size") << '\t' << checked(s.product_id, "product_id") << '\t'
        << format_date(s.timestamp) << '\t' << (s.returned ? "true" : "false") << '\n';
  }
}

std::vector<SaleRecord> read_sales(std::istream& in) {
  Reader r(in, "sales", std::size(kSalesColumns));
  std::vector<SaleRecord> out;
  std::vector<std::string> f;
  while (r.next(f)) {
    SaleRecord s;
    s.user_id = r.non_empty(f[0], "user_id");
    s.brand = r.non_empty(f[1], "brand");
    s.raw_size = r.non_empty(f[2], "raw_size");
    s.product_id = r.non_empty(f[3], "product_id");
    try {
      s.timestamp = parse_date(f[4]);
    } catch (const DataError& e) {
      r.fail(e.what());
    }
    s.returned = r.boolean(f[5]);
    out.push_back(std::move(s));
  }
  return out;
}

void write_size_types(std::ostream& out, std::span<const SizeType> types) {
  out << header("sizetypes", kSizeTypeColumns) << '\n';
  for (const auto& t : types)
    for (std::size_t i = 0; i < t.sizes.size(); ++i)
      out << checked(t.brand, "brand") << '\t' << checked(t.sizes[i], "raw_size") << '\t' << checked(t.id, "size_type_id")
          << '\t' << i << '\n';
}

std::vector<SizeType> read_size_types(std::istream& in) {
  Reader r(in, "sizetypes", std::size(kSizeTypeColumns));
  std::vector<SizeType> types;
  std::map<std::string, std::size_t> index;
  std::vector<std::map<std::size_t, std::string>> slots;
  std::vector<std::string> f;
  while (r.next(f)) {
    const std::string& id = r.non_empty(f[2], "size_type_id");
    auto [it, inserted] = index.emplace(id, types.size());
    if (inserted) {
      types.push_back({id, r.non_empty(f[0], "brand"), {}});
      slots.emplace_back();
    } else if (types[it->second].brand != f[0]) {
      r.fail("size type " + id + " spans several brands");
    }
    if (!slots[it->second].emplace(r.count(f[3]), r.non_empty(f[1], "raw_size")).second)
      r.fail("duplicate sorted_index in size type " + id);
  }
  for (std::size_t t = 0; t < types.size(); ++t) {
    std::size_t expect = 0;
    for (auto& [idx, raw] : slots[t]) {
      if (idx != expect++) throw DataError("size type " + types[t].id + " has gaps in sorted_index");
      types[t].sizes.push_back(std::move(raw));
    }
  }
  return types;
}

void write_frequency_matrix(std::ostream& out, const FrequencyMatrix& f) {
  out << header("freq", kFreqColumns) << '\n';
  for (const auto& [pair, mass] : f.entries()) {
    const auto& a = f.key(pair.first);
    const auto& b = f.key(pair.second);
    out << a.size_type_id << '\t' << a.raw_size << '\t' << b.size_type_id << '\t' << b.raw_size << '\t'
        << format_number(mass) << '\n';
  }
}

FrequencyMatrix read_frequency_matrix(std::istream& in, const SizeTypeMap& map) {
  Reader r(in, "freq", std::size(kFreqColumns));
  FrequencyMatrix f(map);
  std::vector<std::string> fields;
  while (r.next(fields)) {
    auto a = f.find(SizeKey{fields[0], fields[1]});
    auto b = f.find(SizeKey{fields[2], fields[3]});
    if (!a) r.fail("unknown key " + fields[0] + " / " + fields[1]);
    if (!b) r.fail("unknown key " + fields[2] + " / " + fields[3]);
    double mass = r.number(fields[4]);
    if (!(mass >= 0.0)) r.fail("negative mass");
    f.add(*a, *b, mass);
  }
  return f;
}

void write_map(std::ostream& out, const NormalizationMap& map) {
  out << header("map", kMapColumns) << '\n';
  for (const auto& [key, entry] : map.entries())
    out << checked(key.size_type_id, "size_type_id") << '\t' << checked(key.raw_size, "raw_size") << '\t'
        << format_number(entry.value) << '\t' << entry.component << '\n';
}

NormalizationMap read_map(std::istream& in) {
  Reader r(in, "map", std::size(kMapColumns));
  NormalizationMap map;
  std::vector<std::string> f;
  while (r.next(f)) {
    SizeKey key{r.non_empty(f[0], "size_type_id"), r.non_empty(f[1], "raw_size")};
    if (key.size_type_id.find('#') == std::string::npos) r.fail("size type id lacks a brand prefix: " + key.size_type_id);
    if (map.value(key)) r.fail("duplicate key " + key.size_type_id + " / " + key.raw_size);
    map.set(key, r.number(f[2]), r.count(f[3]));
  }
  return map;
}

void write_cases(std::ostream& out, std::span<const TestCase> cases) {
  out << header("cases", kCaseColumns) << '\n';
  for (const auto& c : cases) {
    std::string available;
    for (std::size_t i = 0; i < c.b_available.size(); ++i) {
      if (c.b_available[i].find(kListSeparator) != std::string::npos)
        throw DataError("size contains the list separator '|': " + c.b_available[i]);
      if (i > 0) available += kListSeparator;
      available += checked(c.b_available[i], "raw_size");
    }
    out << checked(c.user_id, "user_id") << '\t' << c.month << '\t' << checked(c.a_brand, "brand") << '\t'
        << checked(c.a_size, "raw_size") << '\t' << checked(c.a_product, "product_id") << '\t'
        << checked(c.b_brand, "brand") << '\t' << checked(c.b_product, "product_id") << '\t'
        << checked(c.b_actual, "raw_size") << '\t' << available << '\n';
  }
}

std::vector<TestCase> read_cases(std::istream& in) {
  Reader r(in, "cases", std::size(kCaseColumns));
  std::vector<TestCase> out;
  std::vector<std::string> f;
  while (r.next(f)) {
    TestCase c{f[0], f[1], f[2], f[3], f[4], f[5], f[6], split_list(f[8]), f[7]};
    if (std::find(c.b_available.begin(), c.b_available.end(), c.b_actual) == c.b_available.end())
      r.fail("b_available does not contain b_actual");
    out.push_back(std::move(c));
  }
  return out;
}

void write_traces(std::ostream& out, std::span<const TestCase> cases, const EvalReport& report) {
  if (cases.size() != report.traces.size()) throw std::invalid_argument("write_traces: one trace per case expected");
  out << header("traces", kTraceColumns) << '\n';
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& t = report.traces[i];
    out << i << '\t' << cases[i].user_id << '\t' << cases[i].b_brand << '\t' << cases[i].b_actual << '\t'
        << t.predicted.value_or("") << '\t' << optional_number(t.predicted_value) << '\t'
        << optional_number(t.actual_value) << '\t' << (t.scored ? "true" : "false") << '\t'
        << (t.correct ? "true" : "false") << '\n';
  }
}

void write_block(std::ostream& out, const FrequencyMatrix& f, std::string_view t1, std::string_view t2) {
  Eigen::MatrixXd m = block(f, t1, t2);
  const auto& a = f.size_types()[*f.find_type(t1)];
  const auto& b = f.size_types()[*f.find_type(t2)];
  out << header("block", kBlockColumns) << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << a.sizes[static_cast<std::size_t>(i)] << '\t' << b.sizes[static_cast<std::size_t>(j)] << '\t'
          << format_number(m(i, j)) << '\n';
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace sizenorm::records
