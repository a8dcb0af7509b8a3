#include "sizenorm/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "sizenorm/error.hpp"
#include "sizenorm/records.hpp"
#include "sizenorm/stats.hpp"

namespace sizenorm::cli {
namespace {

using nlohmann::json;

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Qp:
      return "qp";
    case Backend::Gd:
      return "gd";
    case Backend::Both:
      return "both";
  }
  return "qp";
}

Backend parse_backend(const std::string& s) {
  if (s == "qp") return Backend::Qp;
  if (s == "gd") return Backend::Gd;
  if (s == "both") return Backend::Both;
  throw ConfigError("backend must be qp, gd or both, not '" + s + "'");
}

std::optional<Date> parse_optional_date(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    return parse_date(s);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

template <class T>
T get_as(const json& v, std::string_view key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
  }
}

void apply_object(const json& obj, std::string_view section,
                  const std::map<std::string, std::function<void(const json&)>, std::less<>>& setters) {
  if (!obj.is_object()) throw ConfigError(fmt::format("config section '{}' must be an object", section));
  for (const auto& [key, value] : obj.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(fmt::format("unknown config key '{}{}'", section, key));
    it->second(value);
  }
}

std::vector<SaleRecord> load_sales(const PipelineConfig& c) {
  auto in = records::open_input(c.resolve(c.sales));
  return records::read_sales(in);
}

SizeTypeMap load_size_types(const PipelineConfig& c) {
  auto in = records::open_input(c.resolve(c.sizetypes));
  return SizeTypeMap(records::read_size_types(in));
}

NormalizationMap load_map(const std::filesystem::path& path) {
  auto in = records::open_input(path);
  return records::read_map(in);
}

std::vector<SaleRecord> in_window(std::span<const SaleRecord> sales, std::optional<Date> from, std::optional<Date> to) {
  std::vector<SaleRecord> out;
  for (const auto& s : sales) {
    if (from && s.timestamp < *from) continue;
    if (to && !(s.timestamp < *to)) continue;
    out.push_back(s);
  }
  return out;
}

SamplingConfig sampling(const PipelineConfig& c) {
  return SamplingConfig{c.max_cases, c.seed, c.eval_from, c.eval_to};
}

std::vector<Backend> solved_backends(Backend b) {
  if (b == Backend::Both) return {Backend::Qp, Backend::Gd};
  return {b};
}

const std::filesystem::path& map_path(const PipelineConfig& c, Backend b) {
  return b == Backend::Gd ? c.map_gd : c.map_qp;
}

json solve_info_json(const SolveInfo& info) {
  return json{{"backend", info.backend},
              {"status", std::string(to_string(info.status))},
              {"iterations", info.iterations},
              {"loss", info.loss},
              {"kkt",
               {{"stationarity", info.kkt.stationarity},
                {"feasibility", info.kkt.feasibility},
                {"complementarity", info.kkt.complementarity}}},
              {"wall_seconds", info.wall_seconds},
              {"gap_repair", info.gap_repair}};
}

json report_json(const EvalReport& r) {
  json j{{"n_cases", r.n_cases},     {"n_predicted", r.n_predicted}, {"n_scored", r.n_scored},
         {"n_correct", r.n_correct}, {"coverage", r.coverage},       {"accuracy", nullptr}};
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = records::open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace

std::filesystem::path PipelineConfig::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : out_dir / p;
}

void PipelineConfig::validate() const {
  if (!(problem.gap > 0.0)) throw ConfigError("gap must be > 0");
  if (!(problem.reg_coeff >= 0.0)) throw ConfigError("reg_coeff must be >= 0");
  if (!(clustering.beta_softmax > 0.0)) throw ConfigError("beta_softmax must be > 0");
  if (!(clustering.epsilon_std >= 0.0)) throw ConfigError("epsilon_std must be >= 0");
  if (clustering.max_clusters < 2) throw ConfigError("max_clusters must be >= 2");
  if (!(qp.tolerance > 0.0)) throw ConfigError("qp tolerance must be > 0");
  if (gd.learning_rates.empty()) throw ConfigError("gd learning_rates must not be empty");
  for (double lr : gd.learning_rates)
    if (!(lr > 0.0)) throw ConfigError("gd learning rates must be > 0");
  if (!(gd.alpha >= 0.0) || !(gd.beta_hinge >= 0.0)) throw ConfigError("gd alpha and beta_hinge must be >= 0");
  if (!(max_skip_fraction >= 0.0 && max_skip_fraction <= 1.0)) throw ConfigError("max_skip_fraction must be in [0, 1]");
  if (threads == 0) throw ConfigError("threads must be >= 1");
  synth.validate();
}

void apply_config_json(PipelineConfig& c, const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  auto path = [](std::filesystem::path& p, std::string_view key) {
    return [&p, key](const json& v) { p = get_as<std::string>(v, key); };
  };
  auto number = [](double& d, std::string_view key) { return [&d, key](const json& v) { d = get_as<double>(v, key); }; };
  auto count = [](std::size_t& n, std::string_view key) {
    return [&n, key](const json& v) { n = get_as<std::size_t>(v, key); };
  };
  auto flag = [](bool& b, std::string_view key) { return [&b, key](const json& v) { b = get_as<bool>(v, key); }; };
  auto date = [](std::optional<Date>& d, std::string_view key) {
    return [&d, key](const json& v) { d = parse_optional_date(get_as<std::string>(v, key)); };
  };

  std::map<std::string, std::function<void(const json&)>, std::less<>> qp{
      {"tolerance", number(c.qp.tolerance, "qp.tolerance")},
      {"max_iterations", count(c.qp.max_iterations, "qp.max_iterations")},
  };
  std::map<std::string, std::function<void(const json&)>, std::less<>> gd{
      {"alpha", number(c.gd.alpha, "gd.alpha")},
      {"beta_hinge", number(c.gd.beta_hinge, "gd.beta_hinge")},
      {"learning_rates", [&](const json& v) { c.gd.learning_rates = get_as<std::vector<double>>(v, "gd.learning_rates"); }},
      {"iterations_per_rate", count(c.gd.iterations_per_rate, "gd.iterations_per_rate")},
      {"beta1", number(c.gd.beta1, "gd.beta1")},
      {"beta2", number(c.gd.beta2, "gd.beta2")},
      {"epsilon", number(c.gd.epsilon, "gd.epsilon")},
      {"init_noise", number(c.gd.init_noise, "gd.init_noise")},
      {"clamp_final_gaps", flag(c.gd.clamp_final_gaps, "gd.clamp_final_gaps")},
  };
  std::map<std::string, std::function<void(const json&)>, std::less<>> synth{
      {"n_users", count(c.synth.n_users, "synth.n_users")},
      {"n_brands", count(c.synth.n_brands, "synth.n_brands")},
      {"profiles",
       [&](const json& v) {
         c.synth.profiles.clear();
         for (auto p : get_as<std::vector<std::size_t>>(v, "synth.profiles")) {
           if (p >= kNumBrandProfiles) throw ConfigError("unknown brand profile " + std::to_string(p));
           c.synth.profiles.push_back(static_cast<BrandProfile>(p));
         }
       }},
      {"latent_mean", number(c.synth.latent_mean, "synth.latent_mean")},
      {"latent_std", number(c.synth.latent_std, "synth.latent_std")},
      {"offset_min", number(c.synth.offset_min, "synth.offset_min")},
      {"offset_max", number(c.synth.offset_max, "synth.offset_max")},
      {"scale_min", number(c.synth.scale_min, "synth.scale_min")},
      {"scale_max", number(c.synth.scale_max, "synth.scale_max")},
      {"sessions_mean", number(c.synth.sessions_mean, "synth.sessions_mean")},
      {"purchases_mean", number(c.synth.purchases_mean, "synth.purchases_mean")},
      {"fit_noise_std", number(c.synth.fit_noise_std, "synth.fit_noise_std")},
      {"return_prob", number(c.synth.return_prob, "synth.return_prob")},
      {"products_per_type", count(c.synth.products_per_type, "synth.products_per_type")},
      {"start_date", [&](const json& v) { c.synth.start_date = get_as<std::string>(v, "synth.start_date"); }},
      {"n_months", count(c.synth.n_months, "synth.n_months")},
  };
  std::map<std::string, std::function<void(const json&)>, std::less<>> top{
      {"out_dir", path(c.out_dir, "out_dir")},
      {"sales",
       [&](const json& v) {
         c.sales = get_as<std::string>(v, "sales");
         c.sales_given = true;
       }},
      {"truth", path(c.truth, "truth")},
      {"truth_sizetypes", path(c.truth_sizetypes, "truth_sizetypes")},
      {"sizetypes", path(c.sizetypes, "sizetypes")},
      {"freq", path(c.freq, "freq")},
      {"map_qp", path(c.map_qp, "map_qp")},
      {"map_gd", path(c.map_gd, "map_gd")},
      {"reference", path(c.reference, "reference")},
      {"solve_report", path(c.solve_report, "solve_report")},
      {"eval_report", path(c.eval_report, "eval_report")},
      {"cases", path(c.cases, "cases")},
      {"beta_softmax", number(c.clustering.beta_softmax, "beta_softmax")},
      {"epsilon_std", number(c.clustering.epsilon_std, "epsilon_std")},
      {"max_clusters", count(c.clustering.max_clusters, "max_clusters")},
      {"gap", number(c.problem.gap, "gap")},
      {"reg_coeff", number(c.problem.reg_coeff, "reg_coeff")},
      {"include_same_type_pairs", flag(c.problem.include_same_type_pairs, "include_same_type_pairs")},
      {"backend", [&](const json& v) { c.backend = parse_backend(get_as<std::string>(v, "backend")); }},
      {"seed", [&](const json& v) { c.seed = get_as<std::uint64_t>(v, "seed"); }},
      {"max_skip_fraction", number(c.max_skip_fraction, "max_skip_fraction")},
      {"threads", [&](const json& v) { c.threads = get_as<unsigned>(v, "threads"); }},
      {"train_from", date(c.train_from, "train_from")},
      {"train_to", date(c.train_to, "train_to")},
      {"eval_from", date(c.eval_from, "eval_from")},
      {"eval_to", date(c.eval_to, "eval_to")},
      {"max_cases", count(c.max_cases, "max_cases")},
      {"abstain_cross_component", flag(c.abstain_cross_component, "abstain_cross_component")},
      {"verbose", flag(c.verbose, "verbose")},
      {"qp", [&](const json& v) { apply_object(v, "qp.", qp); }},
      {"gd", [&](const json& v) { apply_object(v, "gd.", gd); }},
      {"synth", [&](const json& v) { apply_object(v, "synth.", synth); }},
  };
  apply_object(doc, "", top);
}

// ---------------------------------------------------------------------------
// Commands

void cmd_synth(const PipelineConfig& c, std::ostream& log) {
  SynthConfig sc = c.synth;
  sc.seed = c.seed;
  SynthData data = generate(sc);
  {
    auto out = records::open_output(c.resolve(c.sales));
    records::write_sales(out, data.sales);
  }
  {
    auto out = records::open_output(c.resolve(c.truth));
    records::write_map(out, data.truth.map);
  }
  {
    auto out = records::open_output(c.resolve(c.truth_sizetypes));
    records::write_size_types(out, data.truth.size_types);
  }
  log << fmt::format("synth: {} sales from {} users over {} brands ({} size types) -> {}\n", data.sales.size(),
                     sc.n_users, sc.n_brands, data.truth.size_types.size(), c.resolve(c.sales).string());
}

SizeTypeInference infer_catalog(std::span<const SaleRecord> sales, const ClusteringParams& params) {
  std::map<std::string, std::set<std::string>> brand_sizes;
  for (const auto& s : sales) brand_sizes[s.brand].insert(s.raw_size);
  SizeTypeInference all;
  for (const auto& [brand, sizes] : brand_sizes) {
    std::vector<std::string> list(sizes.begin(), sizes.end());
    auto result = infer_size_types(list, brand, params);
    std::move(result.size_types.begin(), result.size_types.end(), std::back_inserter(all.size_types));
    std::move(result.defects.begin(), result.defects.end(), std::back_inserter(all.defects));
  }
  return all;
}

void cmd_infer_sizetypes(const PipelineConfig& c, std::ostream& log) {
  auto sales = load_sales(c);
  if (sales.empty()) throw DataError("no sales records in " + c.resolve(c.sales).string());
  auto result = infer_catalog(sales, c.clustering);
  for (const auto& d : result.defects) {
    log << fmt::format("warning: brand {}: cannot order '{}' against '{}'; split {} sizes into singletons\n", d.brand,
                       d.first, d.second, d.cluster.size());
  }
  auto out = records::open_output(c.resolve(c.sizetypes));
  records::write_size_types(out, result.size_types);
  log << fmt::format("infer-sizetypes: {} size types, {} partition defects -> {}\n", result.size_types.size(),
                     result.defects.size(), c.resolve(c.sizetypes).string());
}

void cmd_build_freq(const PipelineConfig& c, std::ostream& log) {
  auto sales = in_window(load_sales(c), c.train_from, c.train_to);
  SizeTypeMap map = load_size_types(c);
  BuildStats stats;
  FrequencyMatrix f = build_frequency_matrix(sales, map, &stats, c.threads);
  log << fmt::format("build-freq: {} records, {} returned, {} skipped (no size type), {} users, {} entries\n",
                     stats.records, stats.returned, stats.unresolved, stats.users, f.entries().size());
  if (stats.skip_fraction() > c.max_skip_fraction)
    throw DataError(fmt::format("{:.1f}% of kept records have no size type (limit {:.1f}%)",
                                100.0 * stats.skip_fraction(), 100.0 * c.max_skip_fraction));
  if (f.empty()) log << "warning: frequency matrix is empty\n";
  {
    auto out = records::open_output(c.resolve(c.freq));
    records::write_frequency_matrix(out, f);
  }
  if (c.block) {
    auto out = records::open_output(c.resolve(c.block_out));
    records::write_block(out, f, c.block->first, c.block->second);
  }
}

void cmd_normalize(const PipelineConfig& c, std::ostream& log) {
  c.validate();
  SizeTypeMap map = load_size_types(c);
  FrequencyMatrix f = [&] {
    auto in = records::open_input(c.resolve(c.freq));
    return records::read_frequency_matrix(in, map);
  }();
  if (f.empty() && map.size_types().empty()) throw DataError("nothing to normalize: no size types and no co-purchases");
  Problem problem(f, c.problem);

  json report{{"format", "sizenorm/solve_report/1"},
              {"backend", std::string(backend_name(c.backend))},
              {"problem",
               {{"variables", problem.num_variables()},
                {"edges", problem.edges().size()},
                {"components", problem.num_components()},
                {"gap", c.problem.gap},
                {"reg_coeff", c.problem.reg_coeff}}}};
  std::map<Backend, Solution> solutions;
  for (Backend b : solved_backends(c.backend)) {
    Solution sol;
    if (b == Backend::Qp) {
      sol = solve_qp(problem, c.qp);
    } else {
      GdOptions gd = c.gd;
      gd.seed = c.seed;
      sol = solve_gd(problem, gd);
    }
    if (sol.info.status != SolveStatus::Converged)
      log << fmt::format("warning: {} solver stopped after {} iterations without converging\n", sol.info.backend,
                         sol.info.iterations);
    log << fmt::format("normalize[{}]: loss {:.6g}, {} iterations, feasibility {:.2g}, {:.3f}s\n", sol.info.backend,
                       sol.info.loss, sol.info.iterations, sol.info.kkt.feasibility, sol.info.wall_seconds);
    auto out = records::open_output(c.resolve(map_path(c, b)));
    records::write_map(out, sol.map);
    report["solves"][sol.info.backend] = solve_info_json(sol.info);
    solutions.emplace(b, std::move(sol));
  }

  if (c.backend == Backend::Both) {
    const auto& qp = solutions.at(Backend::Qp);
    const auto& gd = solutions.at(Backend::Gd);
    std::vector<double> a(qp.x.data(), qp.x.data() + qp.x.size());
    std::vector<double> b(gd.x.data(), gd.x.data() + gd.x.size());
    json agreement{{"spearman", spearman(a, b)}};
    auto sales_path = c.resolve(c.sales);
    if (std::filesystem::exists(sales_path)) {
      auto sales = load_sales(c);
      auto cases = sample_test_cases(sales, sampling(c));
      PredictOptions po{c.abstain_cross_component};
      double agree = prediction_agreement(predict_all(qp.map, cases, po), predict_all(gd.map, cases, po));
      agreement["prediction_agreement"] = agree;
      agreement["cases"] = cases.size();
    }
    log << fmt::format("normalize: backend agreement {}\n", agreement.dump());
    report["agreement"] = agreement;
  }
  write_json(c.resolve(c.solve_report), report);
}

void cmd_evaluate(const PipelineConfig& c, std::ostream& log) {
  std::filesystem::path ref_path = c.resolve(c.reference.empty() ? c.truth : c.reference);
  if (!std::filesystem::exists(ref_path)) throw DataError("reference map not found: " + ref_path.string());
  NormalizationMap reference = load_map(ref_path);
  auto sales = load_sales(c);
  auto cases = sample_test_cases(sales, sampling(c));
  {
    auto out = records::open_output(c.resolve(c.cases));
    records::write_cases(out, cases);
  }
  PredictOptions po{c.abstain_cross_component};

  json report{{"format", "sizenorm/eval_report/1"}, {"n_cases", cases.size()}};
  auto run_one = [&](const std::string& name, const NormalizationMap& predictor) {
    auto predictions = predict_all(predictor, cases, po);
    EvalReport r = score(cases, predictions, reference);
    report["maps"][name] = report_json(r);
    auto out = records::open_output(c.resolve("traces_" + name + ".tsv"));
    records::write_traces(out, cases, r);
    log << fmt::format("evaluate[{}]: coverage {:.4f}, accuracy {}\n", name, r.coverage,
                       r.accuracy ? fmt::format("{:.4f}", *r.accuracy) : std::string("n/a"));
  };
  for (Backend b : solved_backends(c.backend)) run_one(std::string(backend_name(b)), load_map(c.resolve(map_path(c, b))));
  run_one("reference", reference);
  write_json(c.resolve(c.eval_report), report);
}

void cmd_pipeline(PipelineConfig c, std::ostream& log) {
  c.validate();
  if (!c.sales_given) {
    cmd_synth(c, log);
    Date start = parse_date(c.synth.start_date);
    std::chrono::year_month mid = std::chrono::year_month{start.year(), start.month()} +
                                  std::chrono::months{static_cast<int>(c.synth.n_months / 2)};
    Date split{mid.year(), mid.month(), std::chrono::day{1}};
    if (!c.train_to) c.train_to = split;
    if (!c.eval_from) c.eval_from = split;
  }
  cmd_infer_sizetypes(c, log);
  cmd_build_freq(c, log);
  cmd_normalize(c, log);
  cmd_evaluate(c, log);
}

// ---------------------------------------------------------------------------
// Argument parsing

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Size normalization from co-purchase data", "sizenorm"};
  app.require_subcommand(1);

  std::string config_path, seed_flag, backend_flag, out_dir_flag;
  bool verbose = false;
  std::string sales, sizetypes, freq, map_qp, map_gd, reference, train_from, train_to, eval_from, eval_to;
  std::optional<double> gap, reg_coeff;
  std::optional<std::size_t> max_cases, iterations_per_rate, users, brands;
  std::vector<std::string> block;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed_flag, "Global random seed");
  app.add_option("--backend", backend_flag, "qp, gd or both");
  app.add_option("--out-dir", out_dir_flag, "Directory for interchange files");
  app.add_flag("--verbose", verbose, "Verbose logging");
  app.add_option("--sales", sales, "Sales file");
  app.add_option("--sizetypes", sizetypes, "Size-type map file");
  app.add_option("--freq", freq, "Frequency matrix file");
  app.add_option("--map-qp", map_qp, "QP normalization map file");
  app.add_option("--map-gd", map_gd, "GD normalization map file");
  app.add_option("--reference", reference, "Reference normalization map");
  app.add_option("--train-from", train_from, "First training date (inclusive)");
  app.add_option("--train-to", train_to, "End of training window (exclusive)");
  app.add_option("--eval-from", eval_from, "First evaluation date (inclusive)");
  app.add_option("--eval-to", eval_to, "End of evaluation window (exclusive)");
  app.add_option("--gap", gap, "Minimum gap between adjacent sizes");
  app.add_option("--reg-coeff", reg_coeff, "Span regularizer coefficient");
  app.add_option("--max-cases", max_cases, "Maximum number of evaluation cases");
  app.add_option("--iterations-per-rate", iterations_per_rate, "Adam iterations per learning rate");
  app.add_option("--users", users, "Synthetic users");
  app.add_option("--brands", brands, "Synthetic brands");
  app.add_option("--block", block, "Export the frequency block between two size types")->expected(2);

  auto* synth = app.add_subcommand("synth", "Generate synthetic sales and a ground-truth map");
  auto* infer = app.add_subcommand("infer-sizetypes", "Partition and order every brand's sizes");
  auto* build = app.add_subcommand("build-freq", "Build the co-purchase frequency matrix");
  auto* normalize = app.add_subcommand("normalize", "Solve for normalized size values");
  auto* evaluate = app.add_subcommand("evaluate", "Score maps on sampled co-purchase test cases");
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage");
  for (auto* sub : {synth, infer, build, normalize, evaluate, pipeline}) sub->fallthrough();

  std::vector<const char*> argv{"sizenorm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  PipelineConfig c;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot read config " + config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      apply_config_json(c, ss.str());
    }
    if (!out_dir_flag.empty()) c.out_dir = out_dir_flag;
    if (!seed_flag.empty()) {
      try {
        c.seed = std::stoull(seed_flag);
      } catch (const std::exception&) {
        throw ConfigError("seed must be a nonnegative integer");
      }
    }
    if (!backend_flag.empty()) c.backend = parse_backend(backend_flag);
    if (verbose) c.verbose = true;
    if (!sales.empty()) {
      c.sales = sales;
      c.sales_given = true;
    }
    if (!sizetypes.empty()) c.sizetypes = sizetypes;
    if (!freq.empty()) c.freq = freq;
    if (!map_qp.empty()) c.map_qp = map_qp;
    if (!map_gd.empty()) c.map_gd = map_gd;
    if (!reference.empty()) c.reference = reference;
    if (!train_from.empty()) c.train_from = parse_optional_date(train_from);
    if (!train_to.empty()) c.train_to = parse_optional_date(train_to);
    if (!eval_from.empty()) c.eval_from = parse_optional_date(eval_from);
    if (!eval_to.empty()) c.eval_to = parse_optional_date(eval_to);
    if (gap) c.problem.gap = *gap;
    if (reg_coeff) c.problem.reg_coeff = *reg_coeff;
    if (max_cases) c.max_cases = *max_cases;
    if (iterations_per_rate) c.gd.iterations_per_rate = *iterations_per_rate;
    if (users) c.synth.n_users = *users;
    if (brands) c.synth.n_brands = *brands;
    if (!block.empty()) c.block = std::pair{block[0], block[1]};
    c.validate();

    std::ostream& log = err;
    if (c.verbose) {
      auto window = [](const std::optional<Date>& from, const std::optional<Date>& to) {
        return fmt::format("[{}, {})", from ? format_date(*from) : "-", to ? format_date(*to) : "-");
      };
      log << fmt::format("config: out_dir {}, backend {}, seed {}, gap {}, reg_coeff {}, train {}, eval {}\n",
                         c.out_dir.string(), backend_name(c.backend), c.seed, c.problem.gap, c.problem.reg_coeff,
                         window(c.train_from, c.train_to), window(c.eval_from, c.eval_to));
    }
    if (*synth) cmd_synth(c, log);
    if (*infer) cmd_infer_sizetypes(c, log);
    if (*build) cmd_build_freq(c, log);
    if (*normalize) cmd_normalize(c, log);
    if (*evaluate) cmd_evaluate(c, log);
    if (*pipeline) cmd_pipeline(c, log);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace sizenorm::cli
