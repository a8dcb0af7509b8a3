#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sizenorm/cli.hpp"
#include "sizenorm/error.hpp"

using namespace sizenorm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("sizenorm_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    CHECK(run({"--help"}) == cli::kOk);
    CHECK(run({}) == cli::kUsage);
    CHECK(run({"frobnicate"}) == cli::kUsage);
    CHECK(run({"synth", "--backend", "cplex"}) == cli::kUsage);
    CHECK(run({"normalize", "--gap", "0"}) == cli::kUsage);
  }

  TEST_CASE("config files") {
    TempDir dir("config");
    write(dir / "bad.json", R"({"gap": 0.1, "colour": "red"})");
    std::string err;
    CHECK(run({"synth", "--config", dir / "bad.json"}, &err) == cli::kUsage);
    CHECK(err.find("colour") != std::string::npos);
    write(dir / "typed.json", R"({"gap": "wide"})");
    CHECK(run({"synth", "--config", dir / "typed.json"}) == cli::kUsage);

    cli::PipelineConfig c;
    cli::apply_config_json(c, R"({"gap": 0.2, "gd": {"learning_rates": [0.5]}, "synth": {"n_users": 7},
                                  "train_to": "2017-05-01", "backend": "both"})");
    CHECK(c.problem.gap == 0.2);
    CHECK(c.gd.learning_rates == std::vector<double>{0.5});
    CHECK(c.synth.n_users == 7);
    CHECK(c.train_to == parse_date("2017-05-01"));
    CHECK(c.backend == cli::Backend::Both);
    CHECK_THROWS_AS(cli::apply_config_json(c, R"({"synth": {"users": 7}})"), ConfigError);
    CHECK_THROWS_AS(cli::apply_config_json(c, "{"), ConfigError);
  }

  TEST_CASE("flags override the config file") {
    TempDir dir("precedence");
    write(dir / "c.json", R"({"synth": {"n_users": 40, "n_brands": 3}})");
    REQUIRE(run({"synth", "--config", dir / "c.json", "--users", "25", "--out-dir", dir.path.string()}) == cli::kOk);
    std::ifstream in(dir / "sales.tsv");
    std::set<std::string> users, brands;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      users.insert(line.substr(0, line.find('\t')));
      auto rest = line.substr(line.find('\t') + 1);
      brands.insert(rest.substr(0, rest.find('\t')));
    }
    CHECK(users.size() == 25);
    CHECK(brands.size() == 3);
  }

  TEST_CASE("missing input is a data error") {
    TempDir dir("missing");
    CHECK(run({"infer-sizetypes", "--out-dir", dir.path.string()}) == cli::kData);
    CHECK(run({"evaluate", "--out-dir", dir.path.string()}) == cli::kData);
  }

  TEST_CASE("stages compose and rerun identically") {
    TempDir dir("stages");
    std::vector<std::string> common{"--out-dir", dir.path.string(), "--users", "600", "--seed", "3"};
    auto stage = [&](std::string name, std::vector<std::string> extra = {}) {
      std::vector<std::string> args{std::move(name)};
      args.insert(args.end(), common.begin(), common.end());
      args.insert(args.end(), extra.begin(), extra.end());
      return run(args);
    };
    REQUIRE(stage("synth") == cli::kOk);
    REQUIRE(stage("infer-sizetypes") == cli::kOk);
    REQUIRE(stage("build-freq", {"--block", "BRAND01#0", "BRAND01#1"}) == cli::kOk);
    REQUIRE(stage("normalize", {"--backend", "both", "--iterations-per-rate", "500"}) == cli::kOk);
    REQUIRE(stage("evaluate", {"--backend", "both"}) == cli::kOk);
    for (const char* f : {"sales.tsv", "truth_map.tsv", "sizetypes.tsv", "freq.tsv", "block.tsv", "map_qp.tsv",
                          "map_gd.tsv", "solve_report.json", "eval_report.json", "cases.tsv", "traces_qp.tsv"})
      CHECK(fs::exists(dir.path / f));
    auto report = nlohmann::json::parse(slurp(dir / "eval_report.json"));
    CHECK(report["maps"].contains("qp"));
    CHECK(report["maps"].contains("gd"));
    CHECK(report["maps"]["reference"]["accuracy"].get<double>() > 0.0);
    auto solve = nlohmann::json::parse(slurp(dir / "solve_report.json"));
    CHECK(solve["agreement"]["spearman"].get<double>() > 0.9);

    auto map_before = slurp(dir / "map_qp.tsv");
    auto eval_before = slurp(dir / "eval_report.json");
    REQUIRE(stage("normalize") == cli::kOk);
    REQUIRE(stage("evaluate") == cli::kOk);
    CHECK(slurp(dir / "map_qp.tsv") == map_before);
    CHECK(nlohmann::json::parse(slurp(dir / "eval_report.json"))["maps"]["qp"] ==
          nlohmann::json::parse(eval_before)["maps"]["qp"]);
  }

  TEST_CASE("unknown block size type") {
    TempDir dir("block");
    std::vector<std::string> common{"--out-dir", dir.path.string(), "--users", "100"};
    auto with = [&](std::vector<std::string> a) {
      a.insert(a.end(), common.begin(), common.end());
      return a;
    };
    REQUIRE(run(with({"synth"})) == cli::kOk);
    REQUIRE(run(with({"infer-sizetypes"})) == cli::kOk);
    CHECK(run(with({"build-freq", "--block", "BRAND01#0", "NOPE#9"})) == cli::kData);
  }

  TEST_CASE("too many unresolved sizes") {
    TempDir dir("skips");
    write(dir / "sales.tsv",
          "#sizenorm/sales/1\tuser_id\tbrand\traw_size\tproduct_id\ttimestamp\treturned\n"
          "u1\tA\tM\tp1\t2017-01-01\t0\n"
          "u1\tB\t4\tp2\t2017-01-01\t0\n"
          "u2\tC\tL\tp3\t2017-01-01\t0\n");
    write(dir / "sizetypes.tsv", "#sizenorm/sizetypes/1\tbrand\traw_size\tsize_type_id\tsorted_index\nA\tM\tA#0\t0\n");
    std::string err;
    CHECK(run({"build-freq", "--out-dir", dir.path.string()}, &err) == cli::kData);
    CHECK(err.find("no size type") != std::string::npos);
  }

  TEST_CASE("pipeline with defaults on a small population") {
    TempDir dir("pipeline");
    CHECK(run({"pipeline", "--out-dir", dir.path.string(), "--users", "800"}) == cli::kOk);
    auto report = nlohmann::json::parse(slurp(dir / "eval_report.json"));
    CHECK(report["n_cases"].get<std::size_t>() > 0);
    CHECK(report["maps"]["qp"]["coverage"].get<double>() > 0.9);
  }
}
