#pragma once

#include "opengraph/hierarchy.hpp"
#include "opengraph/ingest.hpp"
#include "opengraph/lane_graph.hpp"
#include "opengraph/object_map.hpp"
#include "opengraph/projection.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace opengraph {

/// Every tunable of a run. Text form: one `key = value` per line, `#` starts
/// a comment, keys as listed by RunConfig::keys().
struct RunConfig {
  ingest::IngestConfig ingest;
  projection::ProjectionConfig projection;
  mapping::AssociationConfig association;
  lanes::DisfluencyConfig lane;
  hierarchy::HierarchyConfig hierarchy;
  double eval_radius = 0.2;
  bool eval_ignore_unlabeled = false;

  /// Throws InvalidArgument for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  /// Checks every module's preconditions.
  void validate() const;

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);
  std::string to_text() const;
};

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

/// From OPENGRAPH_LOG_LEVEL (error|warn|info|debug); warn when unset.
LogLevel log_level();
void log(LogLevel level, std::string_view message);

}  // namespace opengraph
