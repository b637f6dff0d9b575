#include "opengraph/ingest.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace opengraph::ingest {

using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double failed");
  return std::string(buf, end);
}

std::vector<double> parse_doubles(std::string_view text) {
  std::vector<double> values;
  std::istringstream ss{std::string(text)};
  std::string token;
  while (ss >> token) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw DataError("not a number: '" + token + "'");
    }
    values.push_back(v);
  }
  return values;
}

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

/// Unit vectors are kept bit-for-bit so a write/read cycle is stable.
Embedding normalized_embedding(const Embedding& v) {
  const double n2 = v.squaredNorm();
  if (std::abs(n2 - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return v;
  return v / std::sqrt(n2);
}

std::optional<std::int64_t> parse_index(const fs::path& file) {
  const std::string stem = file.stem().string();
  std::int64_t idx = 0;
  auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), idx);
  if (ec != std::errc() || ptr != stem.data() + stem.size() || idx < 0) return std::nullopt;
  return idx;
}

}  // namespace

void check_rotation(const Eigen::Matrix3d& r, double tolerance, std::string_view what) {
  if (!r.allFinite()) throw DataError(std::string(what) + ": non-finite rotation");
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double det = r.determinant();
  if (ortho > tolerance || std::abs(det - 1.0) > tolerance) {
    std::ostringstream msg;
    msg << what << ": rotation is not orthonormal with det +1 (|R^T R - I| = " << ortho
        << ", det = " << det << ")";
    throw DataError(msg.str());
  }
}

void SensorCalibration::validate(double rotation_tolerance) const {
  if (image_width <= 0 || image_height <= 0) {
    throw DataError("calibration: image size must be positive");
  }
  if (!camera_projection.allFinite() || !lidar_to_camera.allFinite()) {
    throw DataError("calibration: non-finite entries");
  }
  check_rotation(lidar_to_camera.topLeftCorner<3, 3>(), rotation_tolerance, "calibration Tr");
}

Pose Pose::from_row_major(std::span<const double, 12> values) {
  Pose p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) p.transform(r, c) = values[r * 4 + c];
  }
  p.transform.row(3) << 0.0, 0.0, 0.0, 1.0;
  return p;
}

Pose Pose::from_rotation_translation(const Eigen::Matrix3d& r, const Vec3& t) {
  Pose p;
  p.transform.topLeftCorner<3, 3>() = r;
  p.transform.topRightCorner<3, 1>() = t;
  return p;
}

void Pose::validate(double rotation_tolerance) const {
  if (!translation().allFinite()) throw DataError("pose: non-finite translation");
  check_rotation(rotation(), rotation_tolerance, "pose");
}

void PointCloud::validate() const {
  for (const Vec3& p : points) {
    if (!p.allFinite()) throw DataError("point cloud: non-finite coordinate");
  }
  if (!dynamic.empty() && dynamic.size() != points.size()) {
    throw DataError("point cloud: dynamic flag count does not match point count");
  }
  if (!intensity.empty() && intensity.size() != points.size()) {
    throw DataError("point cloud: intensity count does not match point count");
  }
}

std::size_t Bitmask::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

// ---------------------------------------------------------------------------
// RLE / base64

std::vector<std::uint32_t> rle_encode(const Bitmask& mask) {
  std::vector<std::uint32_t> counts;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t b : mask.bits) {
    const std::uint8_t bit = b ? 1 : 0;
    if (bit != current) {
      counts.push_back(run);
      run = 0;
      current = bit;
    }
    ++run;
  }
  counts.push_back(run);
  return counts;
}

Bitmask rle_decode(std::span<const std::uint32_t> counts, int width, int height) {
  if (width <= 0 || height <= 0) throw FrameRejected("mask: non-positive size");
  Bitmask mask(width, height);
  const std::uint64_t total = static_cast<std::uint64_t>(width) * height;
  std::uint64_t pos = 0;
  std::uint8_t bit = 0;
  for (std::uint32_t run : counts) {
    if (pos + run > total) break;
    if (bit) std::fill_n(mask.bits.begin() + static_cast<std::ptrdiff_t>(pos), run, 1);
    pos += run;
    bit ^= 1;
  }
  std::uint64_t sum = 0;
  for (std::uint32_t run : counts) sum += run;
  if (sum != total) {
    std::ostringstream msg;
    msg << "mask RLE covers " << sum << " pixels, expected " << total;
    throw FrameRejected(msg.str());
  }
  return mask;
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += kB64[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw DataError("base64: length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
      } else {
        if (pad) throw DataError("base64: data after padding");
        v[k] = value(c);
        if (v[k] < 0) throw DataError("base64: invalid character");
      }
    }
    const std::uint32_t word = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<std::uint8_t>(word >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(word >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(word));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Readers

Manifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing manifest: " + path.string());
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  Manifest m;
  try {
    m.embedding_dim = j.at("embedding_dim").get<int>();
    m.image_width = j.at("image_width").get<int>();
    m.image_height = j.at("image_height").get<int>();
    m.embedder = j.value("embedder", std::string());
    if (j.contains("class_list")) {
      for (const json& c : j.at("class_list")) {
        ClassEntry entry;
        if (c.is_string()) {
          entry.name = c.get<std::string>();
        } else {
          entry.name = c.at("name").get<std::string>();
          if (c.contains("embedding")) {
            const auto values = c.at("embedding").get<std::vector<double>>();
            entry.embedding = Eigen::Map<const Embedding>(values.data(),
                                                          static_cast<Eigen::Index>(values.size()));
          }
          if (c.contains("color")) entry.color = c.at("color").get<std::array<std::uint8_t, 3>>();
        }
        m.class_list.push_back(std::move(entry));
      }
    }
  } catch (const json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  if (m.embedding_dim <= 0) throw DataError("manifest.json: embedding_dim must be positive");
  if (m.image_width <= 0 || m.image_height <= 0) {
    throw DataError("manifest.json: image size must be positive");
  }
  for (const ClassEntry& c : m.class_list) {
    if (c.embedding && c.embedding->size() != m.embedding_dim) {
      throw DataError("manifest.json: class '" + c.name + "' embedding has wrong dimension");
    }
  }
  return m;
}

SensorCalibration load_calibration(const fs::path& path, const Manifest& manifest) {
  if (!fs::exists(path)) throw DataError("missing calibration file: " + path.string());
  std::istringstream in(read_text(path));
  std::optional<std::vector<double>> p2, tr;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string label = line.substr(0, colon);
    if (label != "P2" && label != "Tr") continue;
    std::vector<double> values;
    try {
      values = parse_doubles(std::string_view(line).substr(colon + 1));
    } catch (const DataError& e) {
      throw DataError("calib.txt line " + std::to_string(line_no) + ": " + e.what());
    }
    if (values.size() != 12) {
      throw DataError("calib.txt line " + std::to_string(line_no) + ": expected 12 values for " +
                      label + ", found " + std::to_string(values.size()));
    }
    (label == "P2" ? p2 : tr) = std::move(values);
  }
  if (!p2) throw DataError("calib.txt: missing P2");
  if (!tr) throw DataError("calib.txt: missing Tr");

  SensorCalibration calib;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      calib.camera_projection(r, c) = (*p2)[r * 4 + c];
      calib.lidar_to_camera(r, c) = (*tr)[r * 4 + c];
    }
  }
  calib.lidar_to_camera.row(3) << 0.0, 0.0, 0.0, 1.0;
  calib.image_width = manifest.image_width;
  calib.image_height = manifest.image_height;
  return calib;
}

std::vector<Pose> load_poses(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing pose file: " + path.string());
  std::istringstream in(read_text(path));
  std::vector<Pose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> values;
    try {
      values = parse_doubles(line);
    } catch (const DataError& e) {
      throw DataError("poses.txt line " + std::to_string(line_no) + ": " + e.what());
    }
    if (values.size() != 12) {
      throw DataError("poses.txt line " + std::to_string(line_no) + ": expected 12 values, found " +
                      std::to_string(values.size()));
    }
    poses.push_back(Pose::from_row_major(std::span<const double, 12>(values.data(), 12)));
  }
  return poses;
}

PointCloud load_cloud(const fs::path& path) {
  PointCloud cloud;
  const std::string ext = path.extension().string();
  if (ext == ".txt" || ext == ".xyz") {
    std::istringstream in(read_text(path));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
      std::vector<double> v;
      try {
        v = parse_doubles(line);
      } catch (const DataError& e) {
        throw DataError(path.filename().string() + " line " + std::to_string(line_no) + ": " +
                        e.what());
      }
      if (v.size() != 3 && v.size() != 4) {
        throw DataError(path.filename().string() + " line " + std::to_string(line_no) +
                        ": expected 3 or 4 values");
      }
      cloud.points.emplace_back(v[0], v[1], v[2]);
      if (v.size() == 4) cloud.intensity.push_back(static_cast<float>(v[3]));
    }
    if (!cloud.intensity.empty() && cloud.intensity.size() != cloud.points.size()) {
      throw DataError(path.filename().string() + ": intensity present on some lines only");
    }
  } else {
    const std::vector<std::uint8_t> bytes = read_bytes(path);
    if (bytes.size() % 16 != 0) {
      throw DataError(path.filename().string() + ": size is not a multiple of 16 bytes");
    }
    const std::size_t n = bytes.size() / 16;
    cloud.points.reserve(n);
    cloud.intensity.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      float rec[4];
      std::memcpy(rec, bytes.data() + i * 16, 16);
      cloud.points.emplace_back(rec[0], rec[1], rec[2]);
      cloud.intensity.push_back(rec[3]);
    }
  }
  cloud.validate();
  return cloud;
}

std::vector<std::uint8_t> load_dynamic_flags(const fs::path& path) { return read_bytes(path); }

DetectionFile load_frame_detections(const fs::path& path, const Manifest& manifest) {
  DetectionFile out;
  std::istringstream in(read_text(path));
  std::string line;
  int line_no = 0;
  const std::string name = path.filename().string();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = name + " line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FrameRejected(where + ": " + e.what());
    }

    Detection det;
    std::vector<double> emb;
    int w = 0, h = 0;
    std::string counts_b64;
    try {
      det.caption = j.at("caption").get<std::string>();
      emb = j.at("embedding").get<std::vector<double>>();
      const json& mask = j.at("mask");
      w = mask.at("width").get<int>();
      h = mask.at("height").get<int>();
      counts_b64 = mask.at("counts").get<std::string>();
    } catch (const json::exception& e) {
      throw FrameRejected(where + ": " + e.what());
    }

    if (static_cast<int>(emb.size()) != manifest.embedding_dim) {
      throw DataError(where + ": embedding dimension " + std::to_string(emb.size()) +
                      " does not match manifest embedding_dim " +
                      std::to_string(manifest.embedding_dim));
    }
    if (w != manifest.image_width || h != manifest.image_height) {
      throw FrameRejected(where + ": mask size " + std::to_string(w) + "x" + std::to_string(h) +
                          " does not match image size");
    }
    const std::vector<std::uint8_t> raw = base64_decode(counts_b64);
    if (raw.size() % 4 != 0) throw FrameRejected(where + ": RLE payload is not uint32 aligned");
    std::vector<std::uint32_t> counts(raw.size() / 4);
    std::memcpy(counts.data(), raw.data(), raw.size());
    try {
      det.mask = rle_decode(counts, w, h);
    } catch (const FrameRejected& e) {
      throw FrameRejected(where + ": " + e.what());
    }

    if (det.caption.empty()) {
      out.warnings.push_back(where + ": empty caption, detection rejected");
      continue;
    }
    if (det.mask.count() == 0) {
      out.warnings.push_back(where + ": mask covers 0 pixels, detection rejected");
      continue;
    }
    det.embedding = Eigen::Map<const Embedding>(emb.data(), static_cast<Eigen::Index>(emb.size()));
    if (!det.embedding.allFinite()) {
      out.warnings.push_back(where + ": non-finite embedding, detection rejected");
      continue;
    }
    if (det.embedding.squaredNorm() == 0.0) {
      out.warnings.push_back(where + ": zero-norm embedding, detection rejected");
      continue;
    }
    det.embedding = normalized_embedding(det.embedding);
    out.detections.push_back(std::move(det));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Writers

void write_manifest(const fs::path& path, const Manifest& m) {
  json j;
  j["embedding_dim"] = m.embedding_dim;
  j["image_width"] = m.image_width;
  j["image_height"] = m.image_height;
  if (!m.embedder.empty()) j["embedder"] = m.embedder;
  if (!m.class_list.empty()) {
    json classes = json::array();
    for (const ClassEntry& c : m.class_list) {
      if (!c.embedding && !c.color) {
        classes.push_back(c.name);
        continue;
      }
      json e{{"name", c.name}};
      if (c.embedding) e["embedding"] = std::vector<double>(c.embedding->begin(), c.embedding->end());
      if (c.color) e["color"] = *c.color;
      classes.push_back(std::move(e));
    }
    j["class_list"] = std::move(classes);
  }
  open_out(path) << j.dump(2) << "\n";
}

void write_calibration(const fs::path& path, const SensorCalibration& calib) {
  auto out = open_out(path);
  out << "P2:";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) out << ' ' << format_double(calib.camera_projection(r, c));
  }
  out << "\nTr:";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) out << ' ' << format_double(calib.lidar_to_camera(r, c));
  }
  out << "\n";
}

void write_poses(const fs::path& path, std::span<const Pose> poses) {
  auto out = open_out(path);
  for (const Pose& p : poses) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) out << (r || c ? " " : "") << format_double(p.transform(r, c));
    }
    out << "\n";
  }
}

void write_cloud(const fs::path& path, const PointCloud& cloud) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(cloud.points.size() * 16);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    append_le(bytes, static_cast<float>(p.x()));
    append_le(bytes, static_cast<float>(p.y()));
    append_le(bytes, static_cast<float>(p.z()));
    append_le(bytes, cloud.intensity.empty() ? 0.0f : cloud.intensity[i]);
  }
  auto out = open_out(path, true);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_dynamic_flags(const fs::path& path, std::span<const std::uint8_t> flags) {
  auto out = open_out(path, true);
  out.write(reinterpret_cast<const char*>(flags.data()), static_cast<std::streamsize>(flags.size()));
}

void write_frame_detections(const fs::path& path, std::span<const Detection> detections) {
  auto out = open_out(path);
  for (const Detection& d : detections) {
    const std::vector<std::uint32_t> counts = rle_encode(d.mask);
    std::vector<std::uint8_t> raw;
    raw.reserve(counts.size() * 4);
    for (std::uint32_t c : counts) append_le(raw, c);
    json j;
    j["caption"] = d.caption;
    j["embedding"] = std::vector<double>(d.embedding.begin(), d.embedding.end());
    j["mask"] = {{"width", d.mask.width}, {"height", d.mask.height}, {"counts", base64_encode(raw)}};
    out << j.dump() << "\n";
  }
}

std::string frame_stem(std::int64_t index) {
  std::ostringstream ss;
  ss << std::setw(6) << std::setfill('0') << index;
  return ss.str();
}

// ---------------------------------------------------------------------------
// Sequence

FrameStream::FrameStream(fs::path root, Manifest manifest, SensorCalibration calibration,
                         std::vector<Pose> trajectory, std::vector<FrameFiles> frames,
                         std::vector<std::string> warnings, std::size_t skipped_frames,
                         IngestConfig config)
    : root_(std::move(root)),
      manifest_(std::move(manifest)),
      calibration_(std::move(calibration)),
      trajectory_(std::move(trajectory)),
      frames_(std::move(frames)),
      warnings_(std::move(warnings)),
      config_(config),
      skipped_frames_(skipped_frames) {}

FrameRecord FrameStream::load(const FrameFiles& files) {
  FrameRecord rec;
  rec.index = files.index;
  rec.cloud = load_cloud(files.cloud);
  if (files.dynamic) {
    rec.cloud.dynamic = load_dynamic_flags(*files.dynamic);
    if (rec.cloud.dynamic.size() != rec.cloud.points.size()) {
      throw FrameRejected("dynamic flag count does not match point count");
    }
  }
  rec.pose = trajectory_.at(static_cast<std::size_t>(files.index));
  DetectionFile dets = load_frame_detections(files.detections, manifest_);
  for (std::string& w : dets.warnings) warnings_.push_back(std::move(w));
  rec.detections = std::move(dets.detections);
  return rec;
}

std::optional<FrameRecord> FrameStream::next() {
  while (cursor_ < frames_.size()) {
    const FrameFiles& files = frames_[cursor_++];
    try {
      return load(files);
    } catch (const FrameRejected& e) {
      ++skipped_frames_;
      warnings_.push_back("frame " + std::to_string(files.index) + " rejected: " + e.what());
    }
  }
  return std::nullopt;
}

FrameStream load_sequence(const fs::path& data_dir, const IngestConfig& config) {
  if (!fs::is_directory(data_dir)) throw DataError("not a directory: " + data_dir.string());

  std::map<std::int64_t, FrameFiles> found;
  std::map<std::int64_t, int> parts;
  auto scan = [&](const fs::path& dir, auto&& accept) {
    if (!fs::is_directory(dir)) return;
    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file()) entries.push_back(e.path());
    }
    std::sort(entries.begin(), entries.end());
    for (const fs::path& p : entries) {
      if (auto idx = parse_index(p)) accept(*idx, p);
    }
  };
  scan(data_dir / "velodyne", [&](std::int64_t idx, const fs::path& p) {
    const std::string ext = p.extension().string();
    if (ext != ".bin" && ext != ".txt" && ext != ".xyz") return;
    found[idx].index = idx;
    if (found[idx].cloud.empty()) {
      found[idx].cloud = p;
      parts[idx] |= 1;
    }
  });
  scan(data_dir / "detections", [&](std::int64_t idx, const fs::path& p) {
    if (p.extension() != ".jsonl") return;
    found[idx].index = idx;
    found[idx].detections = p;
    parts[idx] |= 2;
  });
  if (found.empty()) throw DataError("no frames found in " + data_dir.string());

  Manifest manifest = load_manifest(data_dir / "manifest.json");
  SensorCalibration calib = load_calibration(data_dir / "calib.txt", manifest);
  calib.validate(config.rotation_tolerance);
  std::vector<Pose> poses = load_poses(data_dir / "poses.txt");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (config.poses_in_camera_frame) {
      poses[i].transform = poses[i].transform * calib.lidar_to_camera;
    }
    try {
      poses[i].validate(config.rotation_tolerance);
    } catch (const DataError& e) {
      throw DataError("poses.txt line " + std::to_string(i + 1) + ": " + e.what());
    }
  }

  std::vector<std::string> warnings;
  std::vector<FrameFiles> frames;
  std::size_t skipped = 0;
  for (auto& [idx, files] : found) {
    std::string missing;
    if (!(parts[idx] & 1)) missing += " cloud";
    if (!(parts[idx] & 2)) missing += " detections";
    if (static_cast<std::size_t>(idx) >= poses.size()) missing += " pose";
    if (!missing.empty()) {
      warnings.push_back("frame " + std::to_string(idx) + " skipped, missing:" + missing);
      ++skipped;
      continue;
    }
    const fs::path flags = data_dir / "dynamic" / (files.cloud.stem().string() + ".flags");
    if (fs::exists(flags)) files.dynamic = flags;
    frames.push_back(std::move(files));
  }
  if (frames.empty()) throw DataError("no frames found in " + data_dir.string());

  return FrameStream(data_dir, std::move(manifest), std::move(calib), std::move(poses),
                     std::move(frames), std::move(warnings), skipped, config);
}

}  // namespace opengraph::ingest
