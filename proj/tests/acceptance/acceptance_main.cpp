// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "oracles.hpp"
#include "sizenorm/cli.hpp"
#include "sizenorm/eval.hpp"
#include "sizenorm/optimize.hpp"
#include "sizenorm/records.hpp"
#include "sizenorm/stats.hpp"
#include "sizenorm/synth.hpp"

using namespace sizenorm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void require(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + what;
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Maps handed back by the solvers, checked together by the feasibility criterion.
struct ReturnedMap {
  std::string origin;
  Problem problem;
  NormalizationMap map;
};
std::vector<ReturnedMap> returned_maps;

void keep(const std::string& origin, const Problem& p, const NormalizationMap& m) {
  returned_maps.push_back({origin, p, m});
}

Outcome youth_toddler_partition() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  auto sizes = oracle::read_lines(oracle::fixture_path("youth_toddler_sizes.txt"));
  PatternGroup g{"KIDS", "", {}};
  for (const auto& s : sizes) g.members.push_back(tokenize(s));
  g.pattern = pattern_key(g.members.front());
  require(o, g.pattern == "NUMER|ALPHA|ALPHA", "pattern " + g.pattern);
  auto w = position_weights(g);
  const double q_hat[] = {0.17, 0.91, 0.91}, q[] = {0.0, 0.5, 0.5};
  for (int i = 0; i < 3; ++i) {
    require(o, std::abs(w.q_hat[i] - q_hat[i]) <= 0.005, fmt::format("q_hat[{}] = {}", i, w.q_hat[i]));
    require(o, std::abs(w.q[i] - q[i]) <= 0.01, fmt::format("q[{}] = {}", i, w.q[i]));
  }
  auto inferred = infer_size_types(sizes, "KIDS");
  std::set<std::set<std::string>> got, want;
  for (const auto& t : inferred.size_types) got.insert({t.sizes.begin(), t.sizes.end()});
  std::map<std::string, std::set<std::string>> by_tail;
  for (const auto& s : sizes) {
    auto t = tokenize(s);
    by_tail[t.tokens[1].text + t.tokens[2].text].insert(s);
  }
  for (const auto& [tail, members] : by_tail) want.insert(members);
  require(o, inferred.size_types.size() == 3, fmt::format("{} size types", inferred.size_types.size()));
  require(o, got == want, "partition differs from toddler-M / youth-M / youth-W");
  double elapsed = seconds_since(t0);
  require(o, elapsed < 1.0, fmt::format("took {:.3f}s", elapsed));
  o.detail = o.pass ? fmt::format("q_hat=[{:.4f}, {:.4f}, {:.4f}] q=[{:.4f}, {:.4f}, {:.4f}], 3 size types, {:.3f}s",
                                  w.q_hat[0], w.q_hat[1], w.q_hat[2], w.q[0], w.q[1], w.q[2], elapsed)
                    : o.detail;
  return o;
}

Outcome tokenizer_goldens() {
  Outcome o;
  auto texts = [](const TokenizedSize& t) {
    std::vector<std::string> v;
    for (const auto& tok : t.tokens) v.push_back(tok.text);
    return v;
  };
  require(o, tokenize("14P").pattern == std::vector{TokenKind::Numer, TokenKind::Alpha}, "14P pattern");
  require(o, tokenize("12.5").pattern == std::vector{TokenKind::Numer}, "12.5 pattern");
  require(o, texts(tokenize("12.5")) == std::vector<std::string>{"12.5"}, "12.5 tokens");
  require(o, texts(tokenize("EXTRA SMALL WIDE")) == std::vector<std::string>{"EXTRA SMALL", "WIDE"},
          "EXTRA SMALL WIDE tokens");
  if (o.pass) o.detail = "14P, 12.5 and EXTRA SMALL WIDE exact";
  return o;
}

Outcome mass_conservation() {
  Outcome o;
  SynthConfig cfg;
  cfg.n_users = 1000;
  cfg.seed = 101;
  auto data = generate(cfg);
  auto catalog = cli::infer_catalog(data.sales, {});
  SizeTypeMap map(catalog.size_types);
  auto f = build_frequency_matrix(data.sales, map);
  double expected = oracle::expected_total_mass(data.sales, map).value();
  double rel = std::abs(f.total_mass() - expected) / expected;
  require(o, rel <= 1e-6, fmt::format("relative mass error {}", rel));

  Rng rng(5);
  double worst = 0.0;
  for (int round = 0; round < 5; ++round) {
    auto shuffled = data.sales;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.index(i)]);
    auto g = build_frequency_matrix(shuffled, map);
    for (const auto& [pair, mass] : f.entries()) worst = std::max(worst, std::abs(mass - g.at(pair.first, pair.second)));
    for (const auto& [pair, mass] : g.entries()) worst = std::max(worst, std::abs(mass - f.at(pair.first, pair.second)));
  }
  require(o, worst <= 1e-9, fmt::format("permutation difference {}", worst));
  if (o.pass) o.detail = fmt::format("mass {} vs {} (rel {:.2g}), permutation difference {:.2g}", f.total_mass(), expected, rel, worst);
  return o;
}

Outcome qp_optimality() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst_gap = -INFINITY, worst_feas = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = oracle::random_tiny_instance(rng, 6);
    auto map = inst.size_type_map();
    Problem p(inst.frequency_matrix(map));
    auto sol = solve_qp(p);
    double grid = oracle::grid_search_loss(inst, 0.01, 0.4);
    std::vector<double> x(sol.x.data(), sol.x.data() + sol.x.size());
    double loss = inst.loss(x);
    worst_gap = std::max(worst_gap, loss - grid);
    worst_feas = std::max(worst_feas, sol.info.kkt.feasibility);
    require(o, loss <= grid + 1e-6, fmt::format("instance {}: qp {} > grid {}", trial, loss, grid));
    require(o, sol.info.kkt.feasibility <= 1e-6, fmt::format("instance {}: feasibility {}", trial, sol.info.kkt.feasibility));
    keep(fmt::format("qp tiny instance {}", trial), p, sol.map);
  }
  double elapsed = seconds_since(t0);
  require(o, elapsed < 60.0, fmt::format("took {:.1f}s", elapsed));
  if (o.pass)
    o.detail = fmt::format("100 instances, max(qp - grid) = {:.3g}, max feasibility {:.2g}, {:.1f}s", worst_gap,
                           worst_feas, elapsed);
  return o;
}

Outcome gd_gradient() {
  Outcome o;
  Rng rng(77);
  GdOptions opts;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = oracle::random_instance(rng, 10);
    auto map = inst.size_type_map();
    Problem p(inst.frequency_matrix(map));
    Eigen::VectorXd theta(10);
    for (const auto& t : p.types())
      for (std::size_t k = 0; k < t.count; ++k) {
        double v;
        do {
          v = std::log(rng.uniform(0.02, 0.6));
        } while (k > 0 && std::abs(std::exp(v) - p.params().gap) < 1e-3);  // keep away from the hinge kink
        theta[static_cast<Eigen::Index>(t.first + k)] = v;
      }
    Eigen::VectorXd g;
    gd_loss(p, theta, opts, &g);
    auto fd = oracle::central_difference([&](const Eigen::VectorXd& t) { return gd_loss(p, t, opts); }, theta, 1e-6);
    double rel = (g - fd).norm() / std::max(fd.norm(), 1e-300);
    worst = std::max(worst, rel);
    require(o, rel <= 1e-4, fmt::format("instance {}: relative error {}", trial, rel));
  }
  if (o.pass) o.detail = fmt::format("20 instances, max relative error {:.2g}", worst);
  return o;
}

// The 200-variable instance shared by the agreement and runtime criteria.
struct LargeInstance {
  std::vector<SaleRecord> sales;
  std::optional<Problem> problem;
  Solution qp, gd;
};

const LargeInstance& large_instance() {
  static LargeInstance inst = [] {
    LargeInstance li;
    SynthConfig cfg;
    using P = BrandProfile;
    cfg.profiles = {P::AlphaAndNumeric,  P::AlphaAbbreviated, P::NumericAndPetite, P::AlphaSpelledOut, P::HalfSizes,
                    P::Widths,           P::AlphaAndPlus,     P::AlphaAndNumeric,  P::AlphaAbbreviated, P::NumericAndPetite,
                    P::AlphaSpelledOut,  P::HalfSizes,        P::Widths,           P::AlphaAndPlus,     P::NumericAndPetite,
                    P::AlphaAndNumeric,  P::HalfSizes,        P::AlphaAbbreviated, P::AlphaAndPlus};
    cfg.n_brands = cfg.profiles.size();
    cfg.n_users = 20000;
    cfg.seed = 200;
    li.sales = generate(cfg).sales;
    SizeTypeMap map(cli::infer_catalog(li.sales, {}).size_types);
    li.problem.emplace(build_frequency_matrix(li.sales, map));
    li.qp = solve_qp(*li.problem);
    li.gd = solve_gd(*li.problem);
    keep("qp large instance", *li.problem, li.qp.map);
    keep("gd large instance", *li.problem, li.gd.map);
    return li;
  }();
  return inst;
}

Outcome backend_agreement() {
  Outcome o;
  const auto& li = large_instance();
  const auto& p = *li.problem;
  require(o, p.num_variables() == 200, fmt::format("{} variables", p.num_variables()));
  require(o, p.num_components() == 1, fmt::format("{} components", p.num_components()));
  std::vector<double> a(li.qp.x.data(), li.qp.x.data() + li.qp.x.size());
  std::vector<double> b(li.gd.x.data(), li.gd.x.data() + li.gd.x.size());
  double rho = spearman(a, b);
  require(o, rho >= 0.99, fmt::format("spearman {}", rho));
  auto cases = sample_test_cases(li.sales, SamplingConfig{5000, 9, {}, {}});
  require(o, cases.size() == 5000, fmt::format("{} cases", cases.size()));
  double agree = prediction_agreement(predict_all(li.qp.map, cases), predict_all(li.gd.map, cases));
  require(o, agree >= 0.95, fmt::format("prediction agreement {}", agree));
  if (o.pass)
    o.detail = fmt::format("{} variables, spearman {:.5f}, prediction agreement {:.4f} over {} cases", p.num_variables(),
                           rho, agree, cases.size());
  return o;
}

Outcome relative_runtime() {
  Outcome o;
  const auto& li = large_instance();
  require(o, li.gd.info.iterations == 120000, fmt::format("gd ran {} iterations", li.gd.info.iterations));
  require(o, li.qp.info.wall_seconds < li.gd.info.wall_seconds,
          fmt::format("qp {:.3f}s, gd {:.3f}s", li.qp.info.wall_seconds, li.gd.info.wall_seconds));
  if (o.pass)
    o.detail = fmt::format("qp {:.4f}s ({} iterations), gd {:.3f}s ({} iterations)", li.qp.info.wall_seconds,
                           li.qp.info.iterations, li.gd.info.wall_seconds, li.gd.info.iterations);
  return o;
}

Outcome synthetic_recovery() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  fs::path dir = fs::temp_directory_path() / "sizenorm_acceptance_recovery";
  fs::remove_all(dir);
  fs::create_directories(dir);
  cli::PipelineConfig c;
  c.out_dir = dir;
  std::ostringstream log;
  cli::cmd_pipeline(c, log);
  double elapsed = seconds_since(t0);

  auto learned = [&] {
    auto in = records::open_input(dir / c.map_qp);
    return records::read_map(in);
  }();
  auto truth = [&] {
    auto in = records::open_input(dir / c.truth);
    return records::read_map(in);
  }();
  std::set<std::size_t> components;
  for (const auto& [key, e] : learned.entries()) components.insert(e.component);
  double worst = 1.0;
  for (auto comp : components) {
    std::size_t matched = 0;
    double rho = map_spearman(learned, truth, comp, &matched);
    if (matched < 2) continue;
    worst = std::min(worst, rho);
    require(o, rho >= 0.95, fmt::format("component {}: spearman {}", comp, rho));
  }
  std::ifstream report_in(dir / c.eval_report);
  auto report = nlohmann::json::parse(report_in);
  double acc = report["maps"]["qp"]["accuracy"].get<double>();
  double ref = report["maps"]["reference"]["accuracy"].get<double>();
  require(o, std::abs(acc - ref) <= 0.05, fmt::format("accuracy {} vs truth map {}", acc, ref));
  require(o, elapsed < 600.0, fmt::format("took {:.1f}s", elapsed));

  SizeTypeMap map = [&] {
    auto in = records::open_input(dir / c.sizetypes);
    return SizeTypeMap(records::read_size_types(in));
  }();
  auto freq = [&] {
    auto in = records::open_input(dir / c.freq);
    return records::read_frequency_matrix(in, map);
  }();
  Problem p(freq, c.problem);
  keep("qp pipeline map", p, learned);
  keep("gd pipeline map", p, solve_gd(p).map);
  fs::remove_all(dir);
  if (o.pass)
    o.detail = fmt::format("{} component(s), min spearman {:.4f}, accuracy {:.4f} vs truth map {:.4f} on {} cases, {:.1f}s",
                           components.size(), worst, acc, ref, report["n_cases"].get<std::size_t>(), elapsed);
  return o;
}

Outcome feasibility_suite() {
  Outcome o;
  // A few small gd solves on top of the maps gathered so far.
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = oracle::random_tiny_instance(rng, 6);
    auto map = inst.size_type_map();
    Problem p(inst.frequency_matrix(map));
    GdOptions opts;
    opts.iterations_per_rate = 5000;
    keep(fmt::format("gd tiny instance {}", trial), p, solve_gd(p, opts).map);
  }
  double worst_gap = INFINITY, lowest = INFINITY;
  for (const auto& r : returned_maps) {
    const double gap = r.problem.params().gap;
    std::map<std::size_t, double> comp_min;
    for (const auto& t : r.problem.types()) {
      for (std::size_t k = 0; k < t.count; ++k) {
        const auto& key = r.problem.keys()[t.first + k];
        auto v = r.map.value(key);
        if (!v) {
          require(o, false, r.origin + ": missing " + key.raw_size);
          continue;
        }
        lowest = std::min(lowest, *v);
        require(o, *v >= -1e-9, fmt::format("{}: {} = {}", r.origin, key.raw_size, *v));
        std::size_t comp = r.map.entries().at(key).component;
        comp_min[comp] = comp_min.count(comp) ? std::min(comp_min[comp], *v) : *v;
        if (k > 0) {
          double d = *v - *r.map.value(r.problem.keys()[t.first + k - 1]);
          worst_gap = std::min(worst_gap, d);
          require(o, d >= gap - 1e-6, fmt::format("{}: gap {} below {}", r.origin, d, gap));
        }
      }
    }
    for (const auto& [comp, m] : comp_min) require(o, m == 0.0, fmt::format("{}: component {} minimum {}", r.origin, comp, m));
  }
  if (o.pass)
    o.detail = fmt::format("{} maps, smallest adjacent gap {:.9f}, smallest value {}", returned_maps.size(), worst_gap, lowest);
  return o;
}

Outcome evaluation_semantics() {
  Outcome o;
  NormalizationMap reference;
  reference.set({"B#0", "12"}, 3.0, 0);
  reference.set({"B#1", "12 Regular"}, 3.0, 0);
  reference.set({"B#1", "14 Regular"}, 3.4, 0);
  std::vector<TestCase> cases{TestCase{"u", "2017-01", "A", "M", "pa", "B", "pb", {"12", "12 Regular", "14 Regular"}, "12 Regular"}};
  std::vector<std::optional<std::string>> predicted{"12"};
  auto by_value = score(cases, predicted, reference, Correctness::ReferenceValue);
  auto by_string = score(cases, predicted, reference, Correctness::StringEquality);
  require(o, by_value.n_correct == 1 && by_value.accuracy == 1.0, "reference-value scoring marked it wrong");
  require(o, by_string.n_correct == 0 && by_string.accuracy == 0.0, "string scoring marked it right");
  if (o.pass) o.detail = "\"12\" for \"12 Regular\": correct by reference value, incorrect by string";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // The feasibility suite runs last so it sees every map the others produced.
  std::vector<Criterion> criteria{
      {1, "size-type partition of the youth/toddler sizes", youth_toddler_partition},
      {2, "tokenizer goldens", tokenizer_goldens},
      {3, "frequency mass conservation and permutation invariance", mass_conservation},
      {4, "qp optimality against grid search", qp_optimality},
      {5, "gd gradient against finite differences", gd_gradient},
      {6, "qp/gd agreement on a 200-variable instance", backend_agreement},
      {7, "qp faster than gd", relative_runtime},
      {8, "synthetic recovery", synthetic_recovery},
      {10, "reference-value scoring", evaluation_semantics},
      {9, "feasibility of every returned map", feasibility_suite},
  };
  std::map<int, std::string> lines;
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    lines[c.id] = fmt::format("{} criterion {:>2}: {}: {}", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail);
    std::cerr << "  finished criterion " << c.id << '\n';
  }
  for (const auto& [id, line] : lines) std::cout << line << '\n';
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
