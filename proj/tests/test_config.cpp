#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "usdr/config.hpp"
#include "usdr/errors.hpp"

using namespace usdr;

TEST_CASE("config parsing: comments, whitespace, types") {
  const auto cfg = Config::from_string(R"(
# a comment
probe.element_count = 128   # trailing comment
pulse.center_frequency = 5.208e6
flag.on = true
name = hello world
)");
  CHECK(cfg.get_int("probe.element_count", 0) == 128);
  CHECK(cfg.get_double("pulse.center_frequency", 0) == doctest::Approx(5.208e6));
  CHECK(cfg.get_bool("flag.on", false));
  CHECK(cfg.get_string("name", "") == "hello world");
  CHECK(cfg.get_int("missing", 7) == 7);
  CHECK_THROWS_AS(cfg.require_string("missing"), ValidationError);
}

TEST_CASE("config parsing errors") {
  CHECK_THROWS_AS(Config::from_string("no equals sign here"), ValidationError);
  CHECK_THROWS_AS(Config::from_string("= value"), ValidationError);
  const auto cfg = Config::from_string("x = notanumber");
  CHECK_THROWS_AS(cfg.get_double("x", 0), ValidationError);
  const auto cfg2 = Config::from_string("x = 1.5");
  CHECK_THROWS_AS(cfg2.get_int("x", 0), ValidationError);
}

TEST_CASE("defaults reproduce the standard acquisition") {
  const Config cfg; // empty
  const auto probe = probe_from_config(cfg);
  const auto acq = acquisition_from_config(cfg);
  const auto grid = grid_from_config(cfg);
  const auto pulse = pulse_from_config(cfg);
  CHECK(probe.element_count == 128);
  CHECK(probe.pitch == doctest::Approx(0.30e-3));
  CHECK(acq.sampling_rate == doctest::Approx(20.8e6));
  CHECK(pulse.center_frequency == doctest::Approx(5.208e6));
  CHECK(pulse.bandwidth_ratio == doctest::Approx(0.67));
  CHECK(grid.x_min == doctest::Approx(-18e-3));
  CHECK(grid.x_max == doctest::Approx(18e-3));
  CHECK(grid.z_min == doctest::Approx(10e-3));
  CHECK(grid.z_max == doctest::Approx(46e-3));
  CHECK(grid.nx == 64);
  CHECK(grid.nz == 64);
}

TEST_CASE("canonical text is sorted and stable") {
  const auto a = Config::from_string("b = 2\na = 1\n");
  const auto b = Config::from_string("a = 1\nb = 2\n");
  CHECK(a.canonical_text() == b.canonical_text());
  CHECK(a.canonical_text() == "a = 1\nb = 2\n");
}

TEST_CASE("prefix listing") {
  const auto cfg = Config::from_string(R"(
region.a.kind = roi
region.b.kind = lesion
other.key = 1
)");
  const auto keys = cfg.keys_with_prefix("region");
  REQUIRE(keys.size() == 2);
  CHECK(keys[0] == "a.kind");
  CHECK(keys[1] == "b.kind");
}
