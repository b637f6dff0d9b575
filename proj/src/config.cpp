#include "opengraph/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace opengraph {

namespace {

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    throw InvalidArgument("config: " + std::string(key) + " expects a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InvalidArgument("config: " + std::string(key) + " expects a non-negative integer, got '" +
                          std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("config: " + std::string(key) + " expects true/false, got '" + std::string(v) + "'");
}

std::string format(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::function<void(RunConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Member>
Field real(Member member) {
  return {[member](RunConfig& c, std::string_view k, std::string_view v) { member(c) = parse_double(k, v); },
          [member](const RunConfig& c) { return format(member(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field count(Member member) {
  return {[member](RunConfig& c, std::string_view k, std::string_view v) { member(c) = parse_size(k, v); },
          [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field flag(Member member) {
  return {[member](RunConfig& c, std::string_view k, std::string_view v) { member(c) = parse_bool(k, v); },
          [member](const RunConfig& c) {
            return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false");
          }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"ingest.rotation_tolerance", real([](RunConfig& c) -> double& { return c.ingest.rotation_tolerance; })},
      {"ingest.poses_in_camera_frame",
       flag([](RunConfig& c) -> bool& { return c.ingest.poses_in_camera_frame; })},
      {"projection.denoise_eps", real([](RunConfig& c) -> double& { return c.projection.denoise_eps; })},
      {"projection.denoise_min_pts",
       count([](RunConfig& c) -> std::size_t& { return c.projection.denoise_min_pts; })},
      {"projection.min_object_points",
       count([](RunConfig& c) -> std::size_t& { return c.projection.min_object_points; })},
      {"association.geometry_weight",
       real([](RunConfig& c) -> double& { return c.association.weights.geometry; })},
      {"association.caption_weight",
       real([](RunConfig& c) -> double& { return c.association.weights.caption; })},
      {"association.feature_weight",
       real([](RunConfig& c) -> double& { return c.association.weights.feature; })},
      {"association.threshold", real([](RunConfig& c) -> double& { return c.association.weights.threshold; })},
      {"association.gating_radius", real([](RunConfig& c) -> double& { return c.association.gating_radius; })},
      {"lane.radius", real([](RunConfig& c) -> double& { return c.lane.radius; })},
      {"lane.disfluency_threshold", real([](RunConfig& c) -> double& { return c.lane.disfluency_threshold; })},
      {"lane.breakpoint_tolerance", real([](RunConfig& c) -> double& { return c.lane.breakpoint_tolerance; })},
      {"lane.cluster_eps", real([](RunConfig& c) -> double& { return c.lane.cluster_eps; })},
      {"lane.cluster_min_pts", count([](RunConfig& c) -> std::size_t& { return c.lane.cluster_min_pts; })},
      {"lane.node_radius", real([](RunConfig& c) -> double& { return c.lane.node_radius; })},
      {"lane.smoothing_window", count([](RunConfig& c) -> std::size_t& { return c.lane.smoothing_window; })},
      {"lane.max_step", real([](RunConfig& c) -> double& { return c.lane.max_step; })},
      {"hierarchy.voxel", real([](RunConfig& c) -> double& { return c.hierarchy.voxel; })},
      {"hierarchy.adjacency_gap", real([](RunConfig& c) -> double& { return c.hierarchy.adjacency_gap; })},
      {"hierarchy.contact_tolerance",
       real([](RunConfig& c) -> double& { return c.hierarchy.contact_tolerance; })},
      {"eval.radius", real([](RunConfig& c) -> double& { return c.eval_radius; })},
      {"eval.ignore_unlabeled", flag([](RunConfig& c) -> bool& { return c.eval_ignore_unlabeled; })},
  };
  return table;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw InvalidArgument("config: unknown key '" + std::string(key) + "'");
  it->second.set(*this, key, trim(value));
}

std::string RunConfig::get(std::string_view key) const {
  const auto it = fields().find(key);
  if (it == fields().end()) throw InvalidArgument("config: unknown key '" + std::string(key) + "'");
  return it->second.get(*this);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) out.push_back(k);
    return out;
  }();
  return names;
}

void RunConfig::validate() const {
  if (!(ingest.rotation_tolerance > 0.0)) throw InvalidArgument("config: ingest.rotation_tolerance must be positive");
  projection.validate();
  association.validate();
  lane.validate();
  hierarchy.validate();
  if (!(eval_radius > 0.0)) throw InvalidArgument("config: eval.radius must be positive");
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(*this) + "\n";
  return out;
}

LogLevel log_level() {
  const char* env = std::getenv("OPENGRAPH_LOG_LEVEL");
  if (!env) return LogLevel::warn;
  const std::string_view v(env);
  if (v == "error") return LogLevel::error;
  if (v == "info") return LogLevel::info;
  if (v == "debug") return LogLevel::debug;
  return LogLevel::warn;
}

void log(LogLevel level, std::string_view message) {
  static const LogLevel threshold = log_level();
  if (level > threshold) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace opengraph
