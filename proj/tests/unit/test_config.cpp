#include "opengraph/config.hpp"

#include "support.hpp"

#include <fstream>

using namespace opengraph;

TEST_CASE("defaults validate and round trip through text") {
  const RunConfig c;
  CHECK_NOTHROW(c.validate());
  const RunConfig back = RunConfig::parse(c.to_text());
  for (const auto& key : RunConfig::keys()) CHECK(back.get(key) == c.get(key));
  CHECK(RunConfig::keys().size() >= 20);
}

TEST_CASE("parse key = value with comments") {
  const auto c = RunConfig::parse(
      "# header\n"
      "lane.radius = 7.5   # trailing comment\n"
      "\n"
      "  association.threshold=0.4\n"
      "eval.ignore_unlabeled = yes\r\n"
      "projection.denoise_min_pts = 6\n");
  CHECK(c.lane.radius == 7.5);
  CHECK(c.association.weights.threshold == 0.4);
  CHECK(c.eval_ignore_unlabeled);
  CHECK(c.projection.denoise_min_pts == 6);
  CHECK(c.get("lane.radius") == "7.5");
}

TEST_CASE("bad keys and values") {
  RunConfig c;
  CHECK_THROWS_AS(c.set("lane.radiu", "1"), InvalidArgument);
  CHECK_THROWS_AS(c.set("lane.radius", "abc"), InvalidArgument);
  CHECK_THROWS_AS(c.set("lane.radius", "1.5m"), InvalidArgument);
  CHECK_THROWS_AS(c.set("lane.cluster_min_pts", "-2"), InvalidArgument);
  CHECK_THROWS_AS(c.set("eval.ignore_unlabeled", "maybe"), InvalidArgument);
  CHECK_THROWS_AS(c.get("nope"), InvalidArgument);
  CHECK_THROWS_WITH_AS(RunConfig::parse("lane.radius 3\n"), doctest::Contains("line 1"), InvalidArgument);
  CHECK_THROWS_WITH_AS(RunConfig::parse("# c\n\nfoo = 1\n"), doctest::Contains("foo"), InvalidArgument);
}

TEST_CASE("validate catches out-of-range values") {
  RunConfig c;
  c.set("eval.radius", "0");
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = RunConfig{};
  c.set("ingest.rotation_tolerance", "-1");
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = RunConfig{};
  c.set("hierarchy.voxel", "0");
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = RunConfig{};
  c.set("lane.radius", "0");
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("load from file") {
  testing::TempDir dir("config");
  {
    std::ofstream out(dir / "run.cfg");
    out << "hierarchy.adjacency_gap = 0.75\n";
  }
  CHECK(RunConfig::load(dir / "run.cfg").hierarchy.adjacency_gap == 0.75);
  CHECK_THROWS_AS(RunConfig::load(dir / "missing.cfg"), DataError);
}
