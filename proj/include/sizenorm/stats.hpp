#pragma once

#include <span>
#include <vector>

namespace sizenorm {

/// 1-based ranks with ties given their average rank.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation (Pearson on average ranks). Returns 0 when either
/// side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace sizenorm
