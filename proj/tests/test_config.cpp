#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kecho/config.hpp"
#include "kecho/errors.hpp"
#include "kecho/experiments.hpp"

using namespace kecho;
namespace fs = std::filesystem;

TEST_SUITE("config") {
  TEST_CASE("units and lists") {
    CHECK(parse_duration("3ns") == doctest::Approx(3e-9).epsilon(1e-15));
    CHECK(parse_duration("2.5 us") == doctest::Approx(2.5e-6).epsilon(1e-15));
    CHECK(parse_duration("1e-9") == 1e-9);
    CHECK(parse_length("100um") == doctest::Approx(1e-4).epsilon(1e-15));
    CHECK_THROWS_AS(parse_duration("3 parsecs"), ConfigError);
    CHECK(parse_int_list("16..128") == std::vector<int>{16, 32, 64, 128});
    CHECK(parse_int_list("10, 20,40") == std::vector<int>{10, 20, 40});
    CHECK(parse_double_list("1,10,100") == std::vector<double>{1, 10, 100});
    CHECK_THROWS_AS(parse_int_list("3,x"), ConfigError);
  }

  TEST_CASE("key-value text") {
    const Settings s = parse_key_value("# comment\nkind = scan-eps\nN=50  # trailing\n\nphi_d = 0.5\n");
    CHECK(s.at("kind") == "scan-eps");
    CHECK(s.at("N") == "50");
    const RunConfig c = make_config(s);
    CHECK(c.kind == ExperimentKind::ScanEps);
    CHECK(c.N == std::vector<int>{50});
    CHECK(*c.phi_d == 0.5);
    CHECK_THROWS_AS(parse_key_value("just words"), ConfigError);
  }

  TEST_CASE("unknown keys, bad values and conflicting spellings") {
    CHECK_THROWS_AS(make_config({{"kind", "echo"}, {"colour", "blue"}}), ConfigError);
    CHECK_THROWS_AS(make_config({{"kind", "echoes"}}), ConfigError);
    CHECK_THROWS_AS(make_config({{"N", "ten"}}), ConfigError);
    CHECK_THROWS_AS(make_config({{"tau_p", "1us"}, {"tau_p_us", "1"}}), ConfigError);
    CHECK(*make_config({{"tau_p_us", "1.5"}}).tau_p == doctest::Approx(1.5e-6).epsilon(1e-15));
    CHECK(make_config({{"V0_over_hbar_kappa2", "10"}}).gamma == std::vector<double>{10});
  }

  TEST_CASE("kind-specific validation") {
    RunConfig c;
    c.kind = ExperimentKind::Echo;
    c.N = {10};
    CHECK_THROWS_AS(validate(c), ConfigError);  // no phi_d
    c.phi_d = 0.5;
    CHECK_NOTHROW(validate(c));
    c.points = 8;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.points = 64;
    c.kind = ExperimentKind::FitScaling;
    c.N = {10, 20};
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.kind = ExperimentKind::FiniteScan;
    c.N = {16};
    c.gamma = {10};
    CHECK_THROWS_AS(validate(c), ConfigError);  // no tau_p
    c.tau_p = 1e-6;
    CHECK_NOTHROW(validate(c));
    c.kind = ExperimentKind::ScanP0;
    c.sigma = 1e-4;
    CHECK_THROWS_AS(validate(c), ConfigError);
  }

  TEST_CASE("canonical settings round trip") {
    RunConfig c;
    c.kind = ExperimentKind::TauMinSweep;
    c.N = {16, 32, 64};
    c.gamma = {1, 10.5};
    c.eps = 1.0 / 3.0 * 1e-9;
    c.range = std::make_pair(-0.1, 0.2);
    c.sigma = 1e-4;
    const Settings s = to_settings(c);
    CHECK(to_settings(make_config(s)) == s);
  }

  TEST_CASE("sidecar reproduces the CSV byte for byte") {
    RunConfig c;
    c.kind = ExperimentKind::ScanEps;
    c.N = {12};
    c.phi_d = 0.7;
    c.eps = 0.0;
    c.points = 40;
    c.out = "unused";
    const ExperimentResult a = compute(c);
    const RunConfig back = make_config(parse_json_settings(sidecar_json(c, a)));
    CHECK(to_csv(compute(back).table) == to_csv(a.table));
  }

  TEST_CASE("csv layout") {
    Table t;
    t.columns = {"eps_s", "I"};
    t.rows = {{1e-9, 0.5}, {0.0, 1.0}};
    CHECK(to_csv(t) == "eps_s,I\r\n1.0000000000000001e-09,0.5\r\n0,1\r\n");
  }

  TEST_CASE("nothing is written when validation fails") {
    const fs::path dir = fs::temp_directory_path() / "kecho_config_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    RunConfig c;
    c.kind = ExperimentKind::Echo;
    c.N = {10};
    c.out = (dir / "bad").string();
    CHECK_THROWS_AS(run(c), ConfigError);
    CHECK(fs::is_empty(dir));
    c.phi_d = 0.5;
    c.out = (dir / "missing" / "sub" / "x").string();
    CHECK_THROWS_AS(run(c), IoError);
    c.out = (dir / "good.csv").string();
    const OutputPaths p = run(c);
    CHECK(p.csv == (dir / "good.csv").string());
    CHECK(fs::exists(dir / "good.json"));
    fs::remove_all(dir);
  }

  TEST_CASE("echo through the experiment layer") {
    RunConfig c;
    c.kind = ExperimentKind::Echo;
    c.N = {50};
    c.phi_d = 0.5;
    const ExperimentResult r = compute(c);
    REQUIRE(r.metrics.front().first == "I");
    CHECK(std::abs(r.metrics.front().second - 1.0) < 1e-10);
  }

  TEST_CASE("momentum history has 2N rows") {
    RunConfig c;
    c.kind = ExperimentKind::MomentumHistory;
    c.N = {50};
    c.phi_d = 0.5;
    c.eps = 3e-9;
    const ExperimentResult r = compute(c);
    CHECK(r.table.rows.size() == 100);
    CHECK(r.table.columns.size() == r.table.rows.front().size());
  }
}
