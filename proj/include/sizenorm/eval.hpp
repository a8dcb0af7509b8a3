#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sizenorm/freqmatrix.hpp"
#include "sizenorm/optimize.hpp"

namespace sizenorm {

/// Two purchases of one user in the same month: predict B's size from A's.
struct TestCase {
  std::string user_id;
  std::string month;  // YYYY-MM
  std::string a_brand;
  std::string a_size;
  std::string a_product;
  std::string b_brand;
  std::string b_product;
  std::vector<std::string> b_available;  // sizes B is offered in; contains b_actual
  std::string b_actual;
};

struct SamplingConfig {
  std::size_t max_cases = 0;  // 0 keeps every candidate
  std::uint64_t seed = 0;
  std::optional<Date> from;  // inclusive
  std::optional<Date> to;    // exclusive
};

/// Draws at most one case per (user, month) from kept purchases inside the
/// window: a uniformly chosen pair of purchases of different products in a
/// random A/B order. B's available sizes are every size the product was sold
/// in anywhere in `sales`. Deterministic for a given seed and input multiset.
std::vector<TestCase> sample_test_cases(std::span<const SaleRecord> sales, const SamplingConfig& config);

struct PredictOptions {
  // Only consider B sizes from A's connected component.
  bool abstain_cross_component = false;
};

/// The available B size whose normalized value is closest to A's; the smaller
/// value wins a tie. nullopt is an abstention.
std::optional<std::string> predict(const NormalizationMap& map, const TestCase& tc, const PredictOptions& options = {});

std::vector<std::optional<std::string>> predict_all(const NormalizationMap& map, std::span<const TestCase> cases,
                                                    const PredictOptions& options = {});

enum class Correctness {
  ReferenceValue,  // reference values of predicted and actual sizes agree within 1e-9
  StringEquality,  // naive string comparison, kept for contrast
};

struct CaseTrace {
  std::optional<std::string> predicted;
  std::optional<double> predicted_value;  // reference values, when known
  std::optional<double> actual_value;
  bool scored = false;
  bool correct = false;
};

struct EvalReport {
  std::size_t n_cases = 0;
  std::size_t n_predicted = 0;
  std::size_t n_scored = 0;  // predictions the reference could judge
  std::size_t n_correct = 0;
  double coverage = 0.0;
  std::optional<double> accuracy;  // n_correct / n_scored, absent without scored predictions
  std::vector<CaseTrace> traces;
};

EvalReport score(std::span<const TestCase> cases, std::span<const std::optional<std::string>> predictions,
                 const NormalizationMap& reference, Correctness correctness = Correctness::ReferenceValue);

EvalReport evaluate(const NormalizationMap& map, std::span<const TestCase> cases, const NormalizationMap& reference,
                    const PredictOptions& options = {});

/// Fraction of cases where both prediction lists say the same thing
/// (including both abstaining).
double prediction_agreement(std::span<const std::optional<std::string>> a,
                            std::span<const std::optional<std::string>> b);

/// Spearman correlation over keys present in both maps, matched by
/// (brand, raw size). Restricted to one component of `learned` when given.
double map_spearman(const NormalizationMap& learned, const NormalizationMap& other,
                    std::optional<std::size_t> component = std::nullopt, std::size_t* matched = nullptr);

}  // namespace sizenorm
