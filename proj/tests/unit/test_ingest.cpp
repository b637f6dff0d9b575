#include "opengraph/ingest.hpp"

#include "support.hpp"

#include <Eigen/Geometry>

#include <fstream>

using namespace opengraph;
using namespace opengraph::ingest;

namespace {

Manifest small_manifest() {
  Manifest m;
  m.embedding_dim = 2;
  m.image_width = 4;
  m.image_height = 3;
  return m;
}

SensorCalibration small_calibration() {
  SensorCalibration c;
  c.image_width = 4;
  c.image_height = 3;
  c.camera_projection << 2, 0, 2, 0, 0, 2, 1, 0, 0, 0, 1, 0;
  c.lidar_to_camera << 0, -1, 0, 0.1, 0, 0, -1, 0.2, 1, 0, 0, 0.3, 0, 0, 0, 1;
  return c;
}

void write_line(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

Detection full_detection(const std::string& caption, double a, double b) {
  Detection d;
  d.mask = Bitmask(4, 3);
  d.mask.set(1, 1);
  d.mask.set(2, 1);
  d.caption = caption;
  d.embedding = Eigen::Vector2d(a, b);
  return d;
}

/// A three-frame sequence with frames 0, 1 and 2.
void write_sequence(const std::filesystem::path& dir, int frames = 3) {
  write_manifest(dir / "manifest.json", small_manifest());
  write_calibration(dir / "calib.txt", small_calibration());
  std::vector<Pose> poses;
  for (int i = 0; i < frames; ++i) poses.push_back(Pose::from_rotation_translation(Eigen::Matrix3d::Identity(), Vec3(i, 0, 0)));
  write_poses(dir / "poses.txt", poses);
  for (int i = 0; i < frames; ++i) {
    PointCloud cloud;
    cloud.points = {{1, 0, 0}, {2, 0.5, 0}};
    write_cloud(dir / "velodyne" / (frame_stem(i) + ".bin"), cloud);
    const std::vector<Detection> dets{full_detection("a red car", 3, 4)};
    write_frame_detections(dir / "detections" / (frame_stem(i) + ".jsonl"), dets);
  }
}

}  // namespace

TEST_CASE("rle round trip and validation") {
  Bitmask m(5, 4);
  m.set(0, 0);
  m.set(4, 0);
  m.set(1, 2);
  m.set(2, 2);
  m.set(4, 3);
  const auto counts = rle_encode(m);
  CHECK(counts.front() == 0);  // starts with an empty background run
  CHECK(rle_decode(counts, 5, 4) == m);

  const Bitmask empty(3, 3);
  CHECK(rle_encode(empty) == std::vector<std::uint32_t>{9});
  CHECK(rle_decode(rle_encode(empty), 3, 3) == empty);

  const std::vector<std::uint32_t> short_runs{2, 3};
  CHECK_THROWS_AS(rle_decode(short_runs, 3, 3), FrameRejected);
  const std::vector<std::uint32_t> long_runs{2, 8};
  CHECK_THROWS_AS(rle_decode(long_runs, 3, 3), FrameRejected);
}

TEST_CASE("base64") {
  const std::vector<std::uint8_t> bytes{0, 1, 2, 250, 251, 252, 7};
  for (std::size_t n = 0; n <= bytes.size(); ++n) {
    const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<long>(n));
    CHECK(base64_decode(base64_encode(part)) == part);
  }
  const std::string man = "Man";
  CHECK(base64_encode(std::vector<std::uint8_t>(man.begin(), man.end())) == "TWFu");
  CHECK_THROWS_AS(base64_decode("T!Fu"), DataError);
}

TEST_CASE("poses: 12 row-major floats with an implied bottom row") {
  testing::TempDir dir("poses");
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.3, Vec3(0.2, 0.5, 1).normalized()).toRotationMatrix();
  const Pose p = Pose::from_rotation_translation(r, Vec3(1.5, -2.25, 3));
  write_poses(dir / "poses.txt", std::vector<Pose>{p});
  const auto loaded = load_poses(dir / "poses.txt");
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].transform == p.transform);
  CHECK(loaded[0].transform.row(3) == Eigen::RowVector4d(0, 0, 0, 1));

  write_line(dir / "bad.txt", "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0\n");
  CHECK_THROWS_WITH_AS(load_poses(dir / "bad.txt"), doctest::Contains("line 2"), DataError);

  Pose skew = p;
  skew.transform(0, 1) += 1e-3;
  CHECK_THROWS_AS(skew.validate(), DataError);
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("calibration round trip and orthonormality") {
  testing::TempDir dir("calib");
  const auto c = small_calibration();
  write_calibration(dir / "calib.txt", c);
  const auto loaded = load_calibration(dir / "calib.txt", small_manifest());
  CHECK(loaded.camera_projection == c.camera_projection);
  CHECK(loaded.lidar_to_camera == c.lidar_to_camera);
  CHECK_NOTHROW(loaded.validate());

  auto bent = c;
  bent.lidar_to_camera(0, 0) = 1e-3;
  CHECK_THROWS_AS(bent.validate(), DataError);

  write_line(dir / "odd.txt", "P2: 1 2 3\nTr: 1 0 0 0 0 1 0 0 0 0 1 0\n");
  CHECK_THROWS_AS(load_calibration(dir / "odd.txt", small_manifest()), DataError);
  write_line(dir / "no_tr.txt", "P2: 1 0 0 0 0 1 0 0 0 0 1 0\n");
  CHECK_THROWS_WITH_AS(load_calibration(dir / "no_tr.txt", small_manifest()), doctest::Contains("Tr"), DataError);
}

TEST_CASE("clouds: binary and ascii") {
  testing::TempDir dir("cloud");
  PointCloud c;
  c.points = {{0.5, -1.25, 2}, {3, 4, 5}};
  c.intensity = {0.25f, 1.0f};
  write_cloud(dir / "a.bin", c);
  const auto loaded = load_cloud(dir / "a.bin");
  CHECK(loaded.points == c.points);
  CHECK(loaded.intensity == c.intensity);

  write_line(dir / "a.xyz", "# comment\n1 2 3\n4 5 6\n");
  CHECK(load_cloud(dir / "a.xyz").points == Points3{{1, 2, 3}, {4, 5, 6}});
  write_line(dir / "bad.xyz", "1 2\n");
  CHECK_THROWS_AS(load_cloud(dir / "bad.xyz"), DataError);
  write_line(dir / "odd.bin", "123");
  CHECK_THROWS_AS(load_cloud(dir / "odd.bin"), DataError);
}

TEST_CASE("detections: normalisation, rejection and round trip") {
  testing::TempDir dir("det");
  const Manifest m = small_manifest();

  write_line(dir / "empty.jsonl", "");
  CHECK(load_frame_detections(dir / "empty.jsonl", m).detections.empty());

  const std::vector<Detection> one{full_detection("a red car", 3, 4)};
  write_frame_detections(dir / "one.jsonl", one);
  const auto loaded = load_frame_detections(dir / "one.jsonl", m);
  REQUIRE(loaded.detections.size() == 1);
  CHECK(loaded.detections[0].embedding[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(loaded.detections[0].embedding[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(loaded.detections[0].mask == one[0].mask);
  CHECK(loaded.detections[0].caption == "a red car");

  // Writing the normalised record and reading it again is bit-stable.
  write_frame_detections(dir / "again.jsonl", loaded.detections);
  const auto again = load_frame_detections(dir / "again.jsonl", m);
  CHECK(again.detections[0].embedding == loaded.detections[0].embedding);

  Detection blank = full_detection("tree", 1, 0);
  blank.mask = Bitmask(4, 3);
  Detection zero = full_detection("tree", 0, 0);
  const std::vector<Detection> bad{blank, zero, full_detection("pole", 0, 2)};
  write_frame_detections(dir / "bad.jsonl", bad);
  const auto filtered = load_frame_detections(dir / "bad.jsonl", m);
  CHECK(filtered.detections.size() == 1);
  CHECK(filtered.warnings.size() == 2);

  write_line(dir / "short.jsonl",
             R"({"caption":"x","embedding":[1,0],"mask":{"width":4,"height":3,"counts":"AQAAAA=="}})" "\n");
  CHECK_THROWS_AS(load_frame_detections(dir / "short.jsonl", m), FrameRejected);
  write_line(dir / "dim.jsonl",
             R"({"caption":"x","embedding":[1,0,0],"mask":{"width":4,"height":3,"counts":"DAAAAA=="}})" "\n");
  CHECK_THROWS_AS(load_frame_detections(dir / "dim.jsonl", m), DataError);
}

TEST_CASE("manifest round trip") {
  testing::TempDir dir("manifest");
  Manifest m = small_manifest();
  m.embedder = "hash";
  m.class_list.push_back({"car", Embedding(Eigen::Vector2d(1, 0)), std::array<std::uint8_t, 3>{1, 2, 3}});
  m.class_list.push_back({"tree", std::nullopt, std::nullopt});
  write_manifest(dir / "manifest.json", m);
  const auto loaded = load_manifest(dir / "manifest.json");
  CHECK(loaded.embedding_dim == 2);
  CHECK(loaded.embedder == "hash");
  REQUIRE(loaded.class_list.size() == 2);
  CHECK(*loaded.class_list[0].embedding == *m.class_list[0].embedding);
  CHECK(!loaded.class_list[1].embedding);
}

TEST_CASE("load_sequence") {
  SUBCASE("empty directory") {
    testing::TempDir dir("empty");
    CHECK_THROWS_WITH_AS(load_sequence(dir.path()), doctest::Contains("no frames found"), DataError);
  }
  SUBCASE("three frames") {
    testing::TempDir dir("three");
    write_sequence(dir.path());
    auto stream = load_sequence(dir.path());
    std::vector<std::int64_t> seen;
    while (auto f = stream.next()) {
      seen.push_back(f->index);
      CHECK(f->pose.translation().x() == static_cast<double>(f->index));
      CHECK(f->detections.size() == 1);
    }
    CHECK(seen == std::vector<std::int64_t>{0, 1, 2});
    CHECK(stream.warnings().empty());
  }
  SUBCASE("incomplete frames are skipped with a warning") {
    testing::TempDir dir("partial");
    write_sequence(dir.path());
    std::filesystem::remove(dir / "detections" / "000001.jsonl");
    PointCloud c;
    c.points = {{1, 1, 1}};
    write_cloud(dir / "velodyne" / "000007.bin", c);  // no pose, no detections
    auto stream = load_sequence(dir.path());
    std::size_t n = 0;
    while (stream.next()) ++n;
    CHECK(n == 2);
    CHECK(stream.skipped_frames() == 2);
    CHECK(stream.warnings().size() == 2);
  }
  SUBCASE("a bad mask rejects only its frame") {
    testing::TempDir dir("reject");
    write_sequence(dir.path());
    write_line(dir / "detections" / "000002.jsonl",
               R"({"caption":"x","embedding":[1,0],"mask":{"width":5,"height":3,"counts":"DwAAAA=="}})" "\n");
    auto stream = load_sequence(dir.path());
    std::size_t n = 0;
    while (stream.next()) ++n;
    CHECK(n == 2);
    CHECK(stream.skipped_frames() == 1);
  }
  SUBCASE("dynamic flags") {
    testing::TempDir dir("dyn");
    write_sequence(dir.path(), 1);
    write_dynamic_flags(dir / "dynamic" / "000000.flags", std::vector<std::uint8_t>{0, 1});
    auto stream = load_sequence(dir.path());
    const auto f = stream.next();
    REQUIRE(f);
    CHECK(f->cloud.dynamic == std::vector<std::uint8_t>{0, 1});
  }
  SUBCASE("camera-frame poses are converted") {
    testing::TempDir dir("camposes");
    write_sequence(dir.path(), 1);
    IngestConfig cfg;
    cfg.poses_in_camera_frame = true;
    auto stream = load_sequence(dir.path(), cfg);
    const auto f = stream.next();
    REQUIRE(f);
    const Eigen::Matrix4d expected =
        Pose::from_rotation_translation(Eigen::Matrix3d::Identity(), Vec3::Zero()).transform *
        small_calibration().lidar_to_camera;
    CHECK((f->pose.transform - expected).norm() < 1e-12);
  }
  SUBCASE("a malformed pose line is fatal") {
    testing::TempDir dir("badpose");
    write_sequence(dir.path());
    write_line(dir / "poses.txt", "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1 x\n");
    CHECK_THROWS_WITH_AS(load_sequence(dir.path()), doctest::Contains("line 2"), DataError);
  }
}
