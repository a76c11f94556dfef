#include "rim/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "rim/errors.hpp"

namespace rim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InvalidArgument(key + ": expected a number, got \"" + v + "\"");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw InvalidArgument(key + ": expected an integer, got \"" + v + "\"");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw InvalidArgument(key + ": expected true or false, got \"" + v + "\"");
}

}  // namespace

ConfigFile parse_config(std::string_view text) {
  ConfigFile out;
  std::istringstream in{std::string(text)};
  std::string raw, section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    auto fail = [&](const std::string& what) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": " + what);
    };
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      out.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of a section");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (!value.empty() && value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') fail("unterminated string");
      value = value.substr(1, value.size() - 2);
    }
    out.sections[section][key] = value;
  }
  return out;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_config(const ConfigFile& file, PipelineConfig& cfg) {
  using Setter = std::function<void(const std::string& key, const std::string& value)>;
  auto num = [](double& field) -> Setter { return [&field](auto& k, auto& v) { field = to_double(k, v); }; };
  auto integer = [](int& field) -> Setter {
    return [&field](auto& k, auto& v) { field = static_cast<int>(to_int(k, v)); };
  };
  auto flag = [](bool& field) -> Setter { return [&field](auto& k, auto& v) { field = to_bool(k, v); }; };
  auto text = [](std::string& field) -> Setter { return [&field](auto&, auto& v) { field = v; }; };
  auto path = [](std::filesystem::path& field) -> Setter { return [&field](auto&, auto& v) { field = v; }; };

  HoughConfig& h = cfg.wheels.hough;
  TrackerConfig& t = cfg.tracker;
  const std::map<std::string, std::map<std::string, Setter>> table{
      {"hough",
       {{"r_min", num(h.r_min)},
        {"r_max", num(h.r_max)},
        {"edge_threshold", num(h.edge_threshold)},
        {"accumulator_threshold", num(h.accumulator_threshold)},
        {"nms_center_dist", num(h.nms_center_dist)},
        {"nms_radius_dist", num(h.nms_radius_dist)},
        {"max_results", integer(h.max_results)},
        {"downscale", integer(cfg.wheels.downscale)},
        {"blur_sigma", num(cfg.wheels.blur_sigma)}}},
      {"tracker",
       {{"iou_min", num(t.iou_min)},
        {"max_missed", integer(t.max_missed)},
        {"min_hits", integer(t.min_hits)},
        {"class_vote",
         [&t](auto& k, auto& v) {
           if (v == "median") t.class_vote = ClassVote::median;
           else if (v == "mode") t.class_vote = ClassVote::mode;
           else throw InvalidArgument(k + ": expected median or mode, got \"" + v + "\"");
         }},
        {"diameter_tolerance", num(t.diameter_tolerance)},
        {"link_window", num(t.link_window)},
        {"front_is_right", flag(t.front_is_right)}}},
      {"size",
       {{"spacing", num(cfg.raycast.spacing)},
        {"rays_per_edge", integer(cfg.raycast.rays_per_edge)},
        {"layout",
         [&cfg](auto& k, auto& v) {
           if (v == "fan") cfg.raycast.layout = RayLayout::fan;
           else if (v == "parallel") cfg.raycast.layout = RayLayout::parallel;
           else throw InvalidArgument(k + ": expected fan or parallel, got \"" + v + "\"");
         }},
        {"diameter_mm", num(cfg.pitch.diameter_mm)},
        {"bolt_count", integer(cfg.pitch.bolt_count)},
        {"blur_sigma", num(cfg.contour_blur)}}},
      {"svm",
       {{"model", path(cfg.model)},
        {"c", num(cfg.svm.c)},
        {"epochs", integer(cfg.svm.epochs)},
        {"seed", [&cfg](auto& k, auto& v) { cfg.svm.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
        {"orientations", integer(cfg.hog.orientations)},
        {"cell", integer(cfg.hog.cell)},
        {"block", integer(cfg.hog.block)},
        {"block_stride", integer(cfg.hog.block_stride)},
        {"signed", flag(cfg.hog.signed_gradients)}}},
      {"pipeline",
       {{"camera_a", path(cfg.camera_a)},
        {"camera_b", path(cfg.camera_b)},
        {"cars", path(cfg.cars)},
        {"wheel_source", text(cfg.wheel_source)},
        {"wheels_a", path(cfg.wheels_a)},
        {"wheels_b", path(cfg.wheels_b)},
        {"class_source", text(cfg.class_source)},
        {"classes", path(cfg.classes)},
        {"bolt_source", text(cfg.bolt_source)},
        {"bolts_a", path(cfg.bolts_a)},
        {"bolts_b", path(cfg.bolts_b)},
        {"crop_side", integer(cfg.crop_side)},
        {"verdicts", path(cfg.verdicts)},
        {"summary", path(cfg.summary)},
        {"tracks", path(cfg.tracks)},
        {"debug_overlay", path(cfg.debug_overlay)},
        {"latency_budget_ms", num(cfg.latency_budget_ms)}}},
  };

  for (const auto& [section, entries] : file.sections) {
    auto sit = table.find(section);
    if (sit == table.end()) throw InvalidArgument("config: unknown section [" + section + "]");
    for (const auto& [key, value] : entries) {
      auto kit = sit->second.find(key);
      if (kit == sit->second.end()) throw InvalidArgument("config: unknown key " + section + "." + key);
      kit->second(section + "." + key, value);
    }
  }
}

}  // namespace rim
