#include "cotpi/errors.hpp"
#include "cotpi/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

using namespace cotpi;

namespace {

ObservationTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_observations(in);
}

long schema_line(const std::string& text) {
  try {
    parse(text);
  } catch (const SchemaError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("read_observations") {
  SUBCASE("columns in any order, CRLF endings") {
    const auto t = parse("z_1,w,y_1\r\n0.5,0,1.0\r\n0.25,1,2.0\r\n1.0,0,3\r\n");
    CHECK(t.data.y0.rows() == 2);
    CHECK(t.data.y1.rows() == 1);
    CHECK(t.data.z0(1, 0) == 1.0);
    CHECK(t.data.y1(0, 0) == 2.0);
    CHECK_FALSE(t.weights0);
  }
  SUBCASE("weights are normalized per group") {
    const auto t = parse("w,y_1,z_1,weight\n0,1,0,1\n0,2,1,3\n1,5,0,2\n");
    REQUIRE(t.weights0);
    CHECK((*t.weights0)(0) == 0.25);
    CHECK((*t.weights0)(1) == 0.75);
    CHECK((*t.weights1)(0) == 1.0);
    const auto p = prepare_table(t);
    CHECK(p.sample0.weights(1) == 0.75);
  }
  SUBCASE("schema errors carry the line") {
    CHECK(schema_line("w,y_1,z_1\n0,1,0\n1,nan,0\n") == 3);
    CHECK(schema_line("w,y_1,z_1\n0,1,0\n1,abc,0\n") == 3);
    CHECK(schema_line("w,y_1,z_1\n0,1\n") == 2);
    CHECK(schema_line("w,y_1,z_1\n2,1,0\n") == 2);
    CHECK(schema_line("w,y_1\n0,1\n") == 1);
    CHECK(schema_line("w,y_2,z_1\n0,1,0\n") == 1);
    CHECK(schema_line("w,y_1,z_1,extra\n0,1,0,0\n") == 1);
    CHECK_THROWS_AS(parse(""), SchemaError);
  }
  SUBCASE("missing group") {
    CHECK_THROWS_AS(prepare_table(parse("w,y_1,z_1\n0,1,0\n")), InputError);
  }
}

TEST_CASE("file estimate examples") {
  SUBCASE("single-cell toy matches a hand-computed OT") {
    // Controls {0, 1}, treated {0, 3}: the identity pairing costs (0 + 2) / 2.
    const auto t = parse("w,y_1,z_1\n0,0,0.1\n0,1,0.2\n1,0,0.3\n1,3,0.4\n");
    const auto p = prepare_table(t);
    EstimatorConfig cfg;
    cfg.c = 1e-9;
    const auto est = estimate(p.sample0, p.sample1, CostSpec::absolute(), cfg);
    CHECK(*est.lower == doctest::Approx(1.0));
    CHECK(*est.upper == doctest::Approx(2.0));
  }
  SUBCASE("identical groups") {
    const auto t = parse("w,y_1,z_1\n0,0.5,1\n0,1.5,2\n0,-1,3\n1,0.5,1\n1,1.5,2\n1,-1,3\n");
    const auto p = prepare_table(t);
    const auto est = estimate(p.sample0, p.sample1, CostSpec::absolute(), EstimatorConfig{});
    CHECK(*est.lower == doctest::Approx(0.0));
  }
}

TEST_CASE("observation round trip") {
  RunConfig cfg;
  cfg.model = "c";
  const auto draw = draw_setting(cfg, 40, 0.0, 3);
  std::stringstream s;
  write_observations(s, draw.data);
  const auto back = read_observations(s);
  CHECK(back.data.y0 == draw.data.y0);
  CHECK(back.data.z1 == draw.data.z1);
}

TEST_CASE("result rows round trip") {
  ResultRow a;
  a.model = "b";
  a.design = "bernoulli";
  a.n0 = 300;
  a.n1 = 300;
  a.total = 600;
  a.c = 0.6;
  a.r = 1.0 / 3.0;
  a.lower = 1.0 / 7.0;
  a.oracle = 1.92;
  a.relative_error = std::abs(a.lower.value() - 1.92) / 1.92;
  a.wall_ms = 0.1234567890123;
  a.seed = 18446744073709551615ULL;
  ResultRow b = a;
  b.repetition = 1;
  b.lower.reset();
  b.upper = -2.5e-300;
  std::stringstream s;
  write_results(s, {a, b});
  const auto rows = read_results(s);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == a);
  CHECK(rows[1] == b);
  std::istringstream bad("model,oops\n");
  CHECK_THROWS_AS(read_results(bad), SchemaError);
}

TEST_CASE("RunConfig") {
  RunConfig cfg;
  std::istringstream text("# desk run\nmodel = c\nsizes=100, 500\npreset=desk\n\nc=0.6,1.0\n");
  cfg.apply(parse_config_text(text));
  CHECK(cfg.model == "c");
  CHECK(cfg.sizes == std::vector<std::size_t>{100, 500});
  CHECK(cfg.reps == 50);
  CHECK(cfg.c_values == std::vector<double>{0.6, 1.0});
  CHECK_THROWS_AS(cfg.set("colour", "red"), ConfigError);
  CHECK_THROWS_AS(cfg.set("reps", "many"), ConfigError);
  CHECK_THROWS_AS(cfg.set("design", "cluster"), ConfigError);
  cfg.reps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  std::istringstream broken("model c\n");
  CHECK_THROWS_AS(parse_config_text(broken), ConfigError);

  ::setenv("COTPI_JOBS", "3", 1);
  const auto env = environment_overrides({"jobs", "seed"});
  CHECK(env.at("jobs") == "3");
  CHECK(env.count("seed") == 0);
  ::unsetenv("COTPI_JOBS");
}

TEST_CASE("mean_and_sem") {
  const auto [m, s] = mean_and_sem({1.0, 2.0, 3.0, 4.0});
  CHECK(m == 2.5);
  CHECK(*s == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK_FALSE(mean_and_sem({1.0}).second);
}

TEST_CASE("run_benchmark") {
  RunConfig cfg;
  cfg.model = "b";
  cfg.n0 = 120;
  cfg.n1 = 100;
  cfg.c_values = {0.6, 1.0};
  cfg.reps = 12;
  cfg.seed = 5;

  SUBCASE("independent of the thread count") {
    cfg.jobs = 1;
    const auto serial = run_benchmark(cfg);
    cfg.jobs = 8;
    const auto parallel = run_benchmark(cfg);
    REQUIRE(serial.rows.size() == 24);
    for (std::size_t k = 0; k < serial.rows.size(); ++k) {
      CHECK(serial.rows[k].lower == parallel.rows[k].lower);
      CHECK(serial.rows[k].seed == parallel.rows[k].seed);
    }
    REQUIRE(serial.summary.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::abs(*serial.summary[k].mean_relative_error -
                     *parallel.summary[k].mean_relative_error) <= 1e-12);
    }
    // Common random numbers across c.
    CHECK(serial.rows[0].seed == serial.rows[12].seed);
    CHECK(serial.rows[0].n0 == 120);
  }
  SUBCASE("single repetition has no SEM") {
    cfg.reps = 1;
    const auto r = run_benchmark(cfg);
    CHECK_FALSE(r.summary[0].sem_relative_error);
    CHECK(r.summary[0].mean_relative_error);
  }
  SUBCASE("no oracle for other costs") {
    cfg.cost = "absolute";
    const auto r = run_benchmark(cfg);
    CHECK_FALSE(r.notices.empty());
    CHECK_FALSE(r.summary[0].mean_relative_error);
    CHECK_FALSE(r.rows[0].relative_error);
    std::ostringstream out;
    write_summary(out, r);
    CHECK(out.str().find("note:") != std::string::npos);
  }
  SUBCASE("covariate-dependent and shift designs run") {
    cfg.n0 = 0;
    cfg.n1 = 0;
    cfg.sizes = {300};
    cfg.design = "covariate_dependent";
    const auto known = run_benchmark(cfg);
    cfg.propensity = "fit";
    const auto fitted = run_benchmark(cfg);
    CHECK(known.rows[0].total == 300);
    CHECK(known.rows[0].lower != fitted.rows[0].lower);
    cfg.design = "shift";
    cfg.etas = {0.0, 0.1};
    const auto shifted = run_benchmark(cfg);
    CHECK(shifted.summary.size() == 4);
  }
}
