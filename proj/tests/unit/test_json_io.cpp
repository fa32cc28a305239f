#include <doctest.h>

#include "fragmentor/errors.hpp"
#include "fragmentor/json_io.hpp"
#include "support.hpp"

using namespace fragmentor;
using testkit::mask;
using testkit::part;

TEST_CASE("rate family round trip with integer labels") {
  const Json in = Json::parse(R"({"sites": [3, 1, 2],
    "rates": [{"partition": [[3], [1, 2]], "rate": 0.5}, {"partition": [[3], [1], [2]], "rate": 1.25}]})");
  const RateFamilyInput r = rate_family_from_json(in);
  CHECK(r.labels.numeric);
  CHECK(r.rates.size() == 2);
  for (const RateEntry& e : r.rates.entries()) {
    CHECK(e.rate == (e.partition == part({{0}, {1, 2}}) ? 0.5 : 1.25));
  }
  const Json out = rate_family_to_json(r.rates, r.labels);
  CHECK(out.at("sites") == Json::parse("[3,1,2]"));
  const RateFamilyInput again = rate_family_from_json(out);
  CHECK(again.rates.total() == 1.75);
}

TEST_CASE("string labels") {
  const Json in = Json::parse(R"({"sites": ["a", "b"], "rates": [{"partition": [["b"], ["a"]], "rate": 2}]})");
  const RateFamilyInput r = rate_family_from_json(in);
  CHECK_FALSE(r.labels.numeric);
  CHECK(r.labels.partition(r.rates.entries()[0].partition) == Json::parse(R"([["a"],["b"]])"));
  CHECK(r.labels.atom_from(Json::parse(R"(["b"])")) == mask({1}));
}

TEST_CASE("malformed rate families are rejected") {
  const char* bad[] = {
      R"({"rates": []})",
      R"({"sites": [1, 2]})",
      R"({"sites": [1, 1], "rates": [{"partition": [[1], [1]], "rate": 1}]})",
      R"({"sites": [1, 2], "rates": [{"partition": [[1], [2]], "rate": -1}]})",
      R"({"sites": [1, 2], "rates": [{"partition": [[1], [2]], "rate": 0}]})",
      R"({"sites": [1, 2], "rates": [{"partition": [[1, 2]], "rate": 1}]})",
      R"({"sites": [1, 2], "rates": [{"partition": [[1], [3]], "rate": 1}]})",
      R"({"sites": [1, 2], "rates": [{"partition": [[1]], "rate": 1}]})",
      R"({"sites": [1, 2], "rates": [{"partition": [[1], [2]], "rate": "x"}]})",
      R"({"sites": [1, 2], "rates": [{"partition": [[1], [2]], "rate": 1}, {"partition": [[2], [1]], "rate": 1}]})",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(rate_family_from_json(Json::parse(text)), ValidationError);
  }
  CHECK_THROWS_AS(parse_json("{", "model"), ValidationError);
  CHECK_THROWS_AS(read_json_file("/nonexistent/model.json"), ValidationError);
}

TEST_CASE("measures") {
  const RateFamilyInput r = rate_family_from_json(
      Json::parse(R"({"sites": [1, 2], "rates": [{"partition": [[1], [2]], "rate": 1}]})"));
  const Measure mu = measure_from_json(
      Json::parse(R"({"sizes": {"2": 3, "1": 2}, "weights": [0.1, 0.1, 0.1, 0.2, 0.2, 0.3]})"), r.labels);
  CHECK(mu.spec().sizes == std::vector<int>{2, 3});
  const Json back = measure_to_json(mu, r.labels);
  const Measure mu2 = measure_from_json(back, r.labels);
  CHECK(mu2.weights()[5] == 0.3);
  CHECK_THROWS_AS(measure_from_json(Json::parse(R"({"sizes": {"1": 2}, "weights": [0.5, 0.5]})"), r.labels),
                  ValidationError);
  CHECK_THROWS_AS(
      measure_from_json(Json::parse(R"({"sizes": {"1": 2, "2": 2}, "weights": [0.5, 0.5, 0.5]})"), r.labels),
      ValidationError);
  CHECK_THROWS_AS(
      measure_from_json(Json::parse(R"({"sizes": {"1": 2, "2": 2}, "weights": [0.5, 0.5, 0.5, 0.5]})"), r.labels),
      ValidationError);
}
