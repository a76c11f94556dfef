#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "rim/pipeline.hpp"

namespace rim {

/// TOML-style key/value blocks:
///   # comment
///   [tracker]
///   iou_min = 0.3
///   class_vote = "mode"
/// Values are kept as written, minus surrounding quotes.
struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;
};

/// Throws InvalidArgument naming the line on syntax errors.
ConfigFile parse_config(std::string_view text);
ConfigFile load_config(const std::filesystem::path& path);

/// Sections: [hough] [tracker] [size] [svm] [pipeline]. Unknown sections or
/// keys and unparsable values throw InvalidArgument.
void apply_config(const ConfigFile& file, PipelineConfig& cfg);

}  // namespace rim
