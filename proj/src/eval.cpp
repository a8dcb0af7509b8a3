#include "sizenorm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "sizenorm/rng.hpp"
#include "sizenorm/stats.hpp"

namespace sizenorm {

std::vector<TestCase> sample_test_cases(std::span<const SaleRecord> sales, const SamplingConfig& config) {
  std::map<std::pair<std::string, std::string>, std::set<std::string>> size_runs;
  for (const auto& rec : sales) size_runs[{rec.brand, rec.product_id}].insert(rec.raw_size);

  // (brand, product, size, date) per purchase, grouped by (user, month).
  using Purchase = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<std::pair<std::string, std::string>, std::vector<Purchase>> groups;
  for (const auto& rec : sales) {
    if (rec.returned) continue;
    if (config.from && rec.timestamp < *config.from) continue;
    if (config.to && !(rec.timestamp < *config.to)) continue;
    groups[{rec.user_id, month_key(rec.timestamp)}].emplace_back(rec.brand, rec.product_id, rec.raw_size,
                                                                 format_date(rec.timestamp));
  }

  Rng rng(config.seed);
  std::vector<TestCase> cases;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (auto& [user_month, purchases] : groups) {
    std::sort(purchases.begin(), purchases.end());
    pairs.clear();
    for (std::size_t i = 0; i < purchases.size(); ++i)
      for (std::size_t j = i + 1; j < purchases.size(); ++j)
        if (std::get<0>(purchases[i]) != std::get<0>(purchases[j]) ||
            std::get<1>(purchases[i]) != std::get<1>(purchases[j]))
          pairs.emplace_back(i, j);
    if (pairs.empty()) continue;
    auto [i, j] = pairs[rng.index(pairs.size())];
    if (rng.bernoulli(0.5)) std::swap(i, j);
    const auto& a = purchases[i];
    const auto& b = purchases[j];
    TestCase tc;
    tc.user_id = user_month.first;
    tc.month = user_month.second;
    tc.a_brand = std::get<0>(a);
    tc.a_product = std::get<1>(a);
    tc.a_size = std::get<2>(a);
    tc.b_brand = std::get<0>(b);
    tc.b_product = std::get<1>(b);
    tc.b_actual = std::get<2>(b);
    const auto& run = size_runs.at({tc.b_brand, tc.b_product});
    tc.b_available.assign(run.begin(), run.end());
    cases.push_back(std::move(tc));
  }

  if (config.max_cases > 0 && cases.size() > config.max_cases) {
    std::vector<std::size_t> idx(cases.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    for (std::size_t k = 0; k < config.max_cases; ++k) std::swap(idx[k], idx[k + rng.index(idx.size() - k)]);
    idx.resize(config.max_cases);
    std::sort(idx.begin(), idx.end());
    std::vector<TestCase> kept;
    kept.reserve(idx.size());
    for (auto k : idx) kept.push_back(std::move(cases[k]));
    cases = std::move(kept);
  }
  return cases;
}

std::optional<std::string> predict(const NormalizationMap& map, const TestCase& tc, const PredictOptions& options) {
  auto anchor = map.value(tc.a_brand, tc.a_size);
  if (!anchor) return std::nullopt;
  auto anchor_component = map.component(tc.a_brand, tc.a_size);

  std::optional<std::string> best;
  double best_delta = 0.0, best_value = 0.0;
  for (const auto& size : tc.b_available) {
    auto v = map.value(tc.b_brand, size);
    if (!v) continue;
    if (options.abstain_cross_component && map.component(tc.b_brand, size) != anchor_component) continue;
    double delta = std::abs(*v - *anchor);
    bool better = !best || delta < best_delta || (delta == best_delta && *v < best_value) ||
                  (delta == best_delta && *v == best_value && size < *best);
    if (better) {
      best = size;
      best_delta = delta;
      best_value = *v;
    }
  }
  return best;
}

std::vector<std::optional<std::string>> predict_all(const NormalizationMap& map, std::span<const TestCase> cases,
                                                    const PredictOptions& options) {
  std::vector<std::optional<std::string>> out;
  out.reserve(cases.size());
  for (const auto& tc : cases) out.push_back(predict(map, tc, options));
  return out;
}

EvalReport score(std::span<const TestCase> cases, std::span<const std::optional<std::string>> predictions,
                 const NormalizationMap& reference, Correctness correctness) {
  if (cases.size() != predictions.size()) throw std::invalid_argument("score: one prediction per case expected");
  EvalReport report;
  report.n_cases = cases.size();
  report.traces.reserve(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CaseTrace trace;
    trace.predicted = predictions[i];
    trace.actual_value = reference.value(cases[i].b_brand, cases[i].b_actual);
    if (predictions[i]) {
      ++report.n_predicted;
      trace.predicted_value = reference.value(cases[i].b_brand, *predictions[i]);
      if (correctness == Correctness::StringEquality) {
        trace.scored = true;
        trace.correct = *predictions[i] == cases[i].b_actual;
      } else if (trace.predicted_value && trace.actual_value) {
        trace.scored = true;
        trace.correct = std::abs(*trace.predicted_value - *trace.actual_value) <= 1e-9;
      }
      if (trace.scored) ++report.n_scored;
      if (trace.correct) ++report.n_correct;
    }
    report.traces.push_back(std::move(trace));
  }
  report.coverage =
      report.n_cases == 0 ? 0.0 : static_cast<double>(report.n_predicted) / static_cast<double>(report.n_cases);
  if (report.n_scored > 0)
    report.accuracy = static_cast<double>(report.n_correct) / static_cast<double>(report.n_scored);
  return report;
}

EvalReport evaluate(const NormalizationMap& map, std::span<const TestCase> cases, const NormalizationMap& reference,
                    const PredictOptions& options) {
  auto predictions = predict_all(map, cases, options);
  return score(cases, predictions, reference);
}

double prediction_agreement(std::span<const std::optional<std::string>> a,
                            std::span<const std::optional<std::string>> b) {
  if (a.size() != b.size()) throw std::invalid_argument("prediction_agreement: length mismatch");
  if (a.empty()) return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

double map_spearman(const NormalizationMap& learned, const NormalizationMap& other,
                    std::optional<std::size_t> component, std::size_t* matched) {
  std::vector<double> xs, ys;
  for (const auto& [key, entry] : learned.entries()) {
    if (component && entry.component != *component) continue;
    auto v = other.value(brand_of_size_type(key.size_type_id), key.raw_size);
    if (!v) continue;
    xs.push_back(entry.value);
    ys.push_back(*v);
  }
  if (matched) *matched = xs.size();
  return spearman(xs, ys);
}

}  // namespace sizenorm
