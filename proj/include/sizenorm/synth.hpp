#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sizenorm/freqmatrix.hpp"
#include "sizenorm/optimize.hpp"

namespace sizenorm {

// Brand catalog layouts the generator can assign. Each brand carries one or
// more size grids laid out on a shared latent scale.
enum class BrandProfile {
  AlphaAndNumeric,  // XS..XXL plus 0..16
  AlphaAbbreviated,  // XS, SM, MED, LG, XL, XXL
  NumericAndPetite,  // 0..16 plus 0P..14P
  AlphaSpelledOut,   // Extra Small .. Extra Extra Large
  HalfSizes,         // 5, 5.5, ..., 10
  Widths,            // 6M..10M plus 6W..10W
  AlphaAndPlus,      // S, M, L, XL plus 1X, 2X, 3X
};

inline constexpr std::size_t kNumBrandProfiles = 7;

struct SynthConfig {
  std::size_t n_users = 10000;
  std::size_t n_brands = 12;
  // Profiles per brand; empty cycles through all profiles in order.
  std::vector<BrandProfile> profiles;
  double latent_mean = 0.0;
  double latent_std = 1.0;
  double offset_min = -0.3;  // brand placement: true = offset + scale * template
  double offset_max = 0.3;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double sessions_mean = 1.5;   // shopping months per user: 1 + Poisson(mean)
  double purchases_mean = 1.0;  // purchases per shopping month: 1 + Poisson(mean)
  double fit_noise_std = 0.15;
  double return_prob = 0.5;  // applied when the size misses the user by more than one grid step
  std::size_t products_per_type = 4;
  std::string start_date = "2016-05-01";
  std::size_t n_months = 24;
  std::uint64_t seed = 7;

  /// Throws ConfigError.
  void validate() const;
};

struct GroundTruth {
  // Values on the latent scale, shifted so the smallest is 0; one component.
  NormalizationMap map;
  // Intended size types of every brand, ascending.
  std::vector<SizeType> size_types;
  // Latent distance between adjacent sizes, per size type.
  std::vector<double> grid_steps;
  // Truth value = latent position - shift.
  double shift = 0.0;
};

struct SynthUser {
  std::string id;
  double latent = 0.0;
};

struct SynthData {
  std::vector<SaleRecord> sales;
  GroundTruth truth;
  std::vector<SynthUser> users;
};

SynthData generate(const SynthConfig& config);

}  // namespace sizenorm
