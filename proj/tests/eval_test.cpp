#include <doctest.h>

#include <set>

#include "sizenorm/eval.hpp"
#include "sizenorm/stats.hpp"
#include "sizenorm/synth.hpp"

using namespace sizenorm;

namespace {

SaleRecord sale(std::string user, std::string brand, std::string size, std::string product, std::string date,
                bool returned = false) {
  return SaleRecord{std::move(user), std::move(brand), std::move(size), std::move(product), parse_date(date), returned};
}

NormalizationMap learned() {
  NormalizationMap m;
  m.set({"A#0", "S"}, 0.0, 0);
  m.set({"A#0", "M"}, 0.5, 0);
  m.set({"A#0", "L"}, 1.0, 0);
  m.set({"B#0", "2"}, 0.25, 0);
  m.set({"B#0", "4"}, 0.75, 0);
  m.set({"B#0", "6"}, 1.5, 0);
  m.set({"C#0", "1"}, 0.5, 1);
  return m;
}

TestCase case_of(std::string a_brand, std::string a_size, std::string b_brand, std::vector<std::string> available,
                 std::string actual) {
  return TestCase{"u", "2017-01", std::move(a_brand), std::move(a_size), "pa", std::move(b_brand), "pb",
                  std::move(available), std::move(actual)};
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("nearest value wins") {
    auto m = learned();
    CHECK(predict(m, case_of("A", "L", "B", {"2", "4", "6"}, "4")) == "4");
    CHECK(predict(m, case_of("A", "L", "B", {"6"}, "6")) == "6");
    CHECK(predict(m, case_of("A", "S", "B", {"2", "4", "6"}, "2")) == "2");
    CHECK(predict(m, case_of("A", "S", "B", {"4", "6"}, "4")) == "4");
  }

  TEST_CASE("ties go to the smaller value") {
    auto m = learned();
    CHECK(predict(m, case_of("A", "M", "B", {"2", "4"}, "2")) == "2");  // 0.25 and 0.75 around 0.5
    CHECK(predict(m, case_of("A", "M", "B", {"4", "2"}, "2")) == "2");
  }

  TEST_CASE("abstention") {
    auto m = learned();
    CHECK_FALSE(predict(m, case_of("A", "XL", "B", {"2"}, "2")));
    CHECK_FALSE(predict(m, case_of("A", "M", "B", {"8"}, "8")));
    CHECK(predict(m, case_of("A", "M", "C", {"1"}, "1")) == "1");
    CHECK_FALSE(predict(m, case_of("A", "M", "C", {"1"}, "1"), PredictOptions{true}));
  }

  TEST_CASE("reference value equality versus string equality") {
    NormalizationMap reference;
    reference.set({"B#0", "12"}, 5.0, 0);
    reference.set({"B#1", "12 Regular"}, 5.0, 0);
    reference.set({"B#1", "14 Regular"}, 6.0, 0);
    std::vector<TestCase> cases{case_of("A", "M", "B", {"12", "12 Regular", "14 Regular"}, "12 Regular")};
    std::vector<std::optional<std::string>> predicted{"12"};
    auto by_value = score(cases, predicted, reference);
    CHECK(by_value.n_correct == 1);
    CHECK(by_value.accuracy == 1.0);
    auto by_string = score(cases, predicted, reference, Correctness::StringEquality);
    CHECK(by_string.n_correct == 0);
    CHECK(by_string.accuracy == 0.0);
  }

  TEST_CASE("coverage and accuracy bookkeeping") {
    auto m = learned();
    std::vector<TestCase> cases{case_of("A", "L", "B", {"2", "4", "6"}, "4"), case_of("A", "S", "B", {"2", "4"}, "4"),
                                case_of("Z", "S", "B", {"2"}, "2")};
    auto r = evaluate(m, cases, m);
    CHECK(r.n_cases == 3);
    CHECK(r.n_predicted == 2);
    CHECK(r.n_scored == 2);
    CHECK(r.n_correct == 1);
    CHECK(r.coverage == doctest::Approx(2.0 / 3.0));
    CHECK(*r.accuracy == doctest::Approx(0.5));
    REQUIRE(r.traces.size() == 3);
    CHECK_FALSE(r.traces[2].predicted);
  }

  TEST_CASE("no scored predictions leaves accuracy absent") {
    auto m = learned();
    std::vector<TestCase> cases{case_of("Z", "S", "B", {"2"}, "2")};
    auto r = evaluate(m, cases, m);
    CHECK(r.coverage == 0.0);
    CHECK_FALSE(r.accuracy);
    CHECK_FALSE(evaluate(m, std::vector<TestCase>{}, m).accuracy);
  }

  TEST_CASE("sampling draws one case per user and month") {
    std::vector<SaleRecord> sales{
        sale("u1", "A", "M", "a1", "2017-01-03"), sale("u1", "B", "4", "b1", "2017-01-20"),
        sale("u1", "B", "6", "b2", "2017-01-21"), sale("u1", "A", "L", "a1", "2017-02-02"),
        sale("u1", "B", "6", "b1", "2017-02-09"), sale("u2", "A", "S", "a1", "2017-01-01", true),
        sale("u2", "B", "2", "b1", "2017-01-02"), sale("u3", "A", "S", "a1", "2017-01-05"),
        sale("u3", "A", "S", "a1", "2017-01-06"),
    };
    auto cases = sample_test_cases(sales, SamplingConfig{0, 1, {}, {}});
    REQUIRE(cases.size() == 2);  // u1 twice; u2 only has one kept sale; u3 bought one product
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& c : cases) {
      CHECK(seen.insert({c.user_id, c.month}).second);
      CHECK(c.a_product != c.b_product);
      CHECK(std::find(c.b_available.begin(), c.b_available.end(), c.b_actual) != c.b_available.end());
    }
    auto b1 = std::find_if(cases.begin(), cases.end(), [](const TestCase& c) { return c.b_product == "b1"; });
    if (b1 != cases.end()) CHECK(b1->b_available == std::vector<std::string>{"2", "4", "6"});

    auto feb = sample_test_cases(sales, SamplingConfig{0, 1, parse_date("2017-02-01"), {}});
    REQUIRE(feb.size() == 1);
    CHECK(feb[0].month == "2017-02");
  }

  TEST_CASE("sampling is deterministic and capped") {
    SynthConfig cfg;
    cfg.n_users = 500;
    auto data = generate(cfg);
    auto a = sample_test_cases(data.sales, SamplingConfig{50, 9, {}, {}});
    auto b = sample_test_cases(data.sales, SamplingConfig{50, 9, {}, {}});
    REQUIRE(a.size() == 50);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].user_id == b[i].user_id);
      CHECK(a[i].b_actual == b[i].b_actual);
    }
  }

  TEST_CASE("agreement and rank correlation") {
    std::vector<std::optional<std::string>> a{"1", "2", std::nullopt, "4"}, b{"1", "3", std::nullopt, "4"};
    CHECK(prediction_agreement(a, b) == doctest::Approx(0.75));
    CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
    // Ties take average ranks: ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
    CHECK(spearman(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4}) ==
          doctest::Approx(0.9486832980505138));
    auto m = learned();
    std::size_t matched = 0;
    CHECK(map_spearman(m, m, 0, &matched) == doctest::Approx(1.0));
    CHECK(matched == 6);
  }
}
