#include "sizenorm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "sizenorm/error.hpp"
#include "sizenorm/rng.hpp"

namespace sizenorm {
namespace {

struct Grid {
  std::vector<std::string> sizes;
  std::vector<double> positions;  // template latent positions, strictly increasing
};

Grid evenly(std::vector<std::string> sizes, double first, double step) {
  Grid g{std::move(sizes), {}};
  for (std::size_t i = 0; i < g.sizes.size(); ++i) g.positions.push_back(first + step * static_cast<double>(i));
  return g;
}

Grid numbered(double from, double to, double by, std::string_view suffix, double first, double step) {
  std::vector<std::string> sizes;
  for (double v = from; v <= to + 1e-9; v += by) sizes.push_back(fmt::format("{}{}", v, suffix));
  return evenly(std::move(sizes), first, step);
}

std::vector<Grid> grids_for(BrandProfile profile) {
  switch (profile) {
    case BrandProfile::AlphaAndNumeric:
      return {evenly({"XS", "S", "M", "L", "XL", "XXL"}, -2.0, 0.8), numbered(0, 16, 2, "", -2.0, 0.5)};
    case BrandProfile::AlphaAbbreviated:
      return {evenly({"XS", "SM", "MED", "LG", "XL", "XXL"}, -2.0, 0.8)};
    case BrandProfile::NumericAndPetite:
      return {numbered(0, 16, 2, "", -2.0, 0.5), numbered(0, 14, 2, "P", -2.25, 0.5)};
    case BrandProfile::AlphaSpelledOut:
      return {evenly({"Extra Small", "Small", "Medium", "Large", "Extra Large", "Extra Extra Large"}, -2.0, 0.8)};
    case BrandProfile::HalfSizes:
      return {numbered(5, 10, 0.5, "", -2.5, 0.5)};
    case BrandProfile::Widths:
      return {numbered(6, 10, 1, "M", -1.0, 0.5), numbered(6, 10, 1, "W", -0.75, 0.5)};
    case BrandProfile::AlphaAndPlus:
      return {evenly({"S", "M", "L", "XL"}, -1.2, 0.8), evenly({"1X", "2X", "3X"}, 1.4, 0.5)};
  }
  return {};
}

struct BrandType {
  std::string brand;
  std::vector<std::string> sizes;
  std::vector<double> values;
  double step;
};

std::size_t nearest(const std::vector<double>& values, double target) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (std::abs(values[i] - target) < std::abs(values[best] - target)) best = i;
  return best;
}

}  // namespace

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid synth config: ") + what);
  };
  require(n_users >= 1, "n_users must be >= 1");
  require(n_brands >= 1, "n_brands must be >= 1");
  require(products_per_type >= 1, "products_per_type must be >= 1");
  require(n_months >= 1, "n_months must be >= 1");
  require(latent_std >= 0.0, "latent_std must be >= 0");
  require(fit_noise_std >= 0.0, "fit_noise_std must be >= 0");
  require(return_prob >= 0.0 && return_prob <= 1.0, "return_prob must be in [0, 1]");
  require(sessions_mean >= 0.0 && purchases_mean >= 0.0, "purchase count means must be >= 0");
  require(offset_min <= offset_max, "offset range is inverted");
  require(scale_min > 0.0 && scale_min <= scale_max, "scale range must be positive and ordered");
  for (auto p : profiles) require(static_cast<std::size_t>(p) < kNumBrandProfiles, "unknown brand profile");
  try {
    parse_date(start_date);
  } catch (const DataError& e) {
    throw ConfigError(std::string("invalid synth config: ") + e.what());
  }
}

SynthData generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SynthData data;

  std::vector<std::vector<std::size_t>> brand_types(config.n_brands);
  std::vector<BrandType> types;
  for (std::size_t b = 0; b < config.n_brands; ++b) {
    BrandProfile profile = config.profiles.empty() ? static_cast<BrandProfile>(b % kNumBrandProfiles)
                                                   : config.profiles[b % config.profiles.size()];
    std::string brand = fmt::format("BRAND{:02d}", b + 1);
    double offset = rng.uniform(config.offset_min, config.offset_max);
    double scale = rng.uniform(config.scale_min, config.scale_max);
    auto grids = grids_for(profile);
    for (std::size_t g = 0; g < grids.size(); ++g) {
      BrandType t{brand, grids[g].sizes, {}, scale * (grids[g].positions[1] - grids[g].positions[0])};
      for (double pos : grids[g].positions) t.values.push_back(offset + scale * pos);
      brand_types[b].push_back(types.size());
      data.truth.size_types.push_back({make_size_type_id(brand, g), brand, grids[g].sizes});
      data.truth.grid_steps.push_back(t.step);
      types.push_back(std::move(t));
    }
  }

  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& t : types) lowest = std::min(lowest, t.values.front());
  data.truth.shift = lowest;
  for (std::size_t t = 0; t < types.size(); ++t)
    for (std::size_t s = 0; s < types[t].sizes.size(); ++s)
      data.truth.map.set(SizeKey{data.truth.size_types[t].id, types[t].sizes[s]}, types[t].values[s] - lowest, 0);

  const Date start = parse_date(config.start_date);
  const std::chrono::year_month first_month{start.year(), start.month()};
  for (std::size_t u = 0; u < config.n_users; ++u) {
    SynthUser user{fmt::format("U{:06d}", u + 1), rng.normal(config.latent_mean, config.latent_std)};
    std::size_t sessions = 1 + rng.poisson(config.sessions_mean);
    for (std::size_t s = 0; s < sessions; ++s) {
      auto ym = first_month + std::chrono::months{static_cast<int>(rng.index(config.n_months))};
      std::size_t purchases = 1 + rng.poisson(config.purchases_mean);
      for (std::size_t k = 0; k < purchases; ++k) {
        Date day{ym.year(), ym.month(), std::chrono::day{static_cast<unsigned>(1 + rng.index(28))}};
        std::size_t b = rng.index(config.n_brands);
        std::size_t t = brand_types[b][rng.index(brand_types[b].size())];
        std::size_t product = rng.index(config.products_per_type);
        const auto& type = types[t];
        std::size_t chosen = nearest(type.values, user.latent + rng.normal(0.0, config.fit_noise_std));
        bool misfit = std::abs(type.values[chosen] - user.latent) > type.step;
        bool returned = misfit && rng.bernoulli(config.return_prob);
        data.sales.push_back(SaleRecord{user.id, type.brand, type.sizes[chosen],
                                        fmt::format("{}-T{}-P{}", type.brand, t, product), day, returned});
      }
    }
    data.users.push_back(std::move(user));
  }
  return data;
}

}  // namespace sizenorm
