#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiernav/geometry.hpp"

namespace hiernav {

/// In-memory JSONL event log; every event carries "t" (sim seconds) and "event".
class Trace {
 public:
  void add(double t, std::string_view event, nlohmann::json fields = nlohmann::json::object());
  const std::vector<nlohmann::json>& events() const { return events_; }
  std::size_t count(std::string_view event) const;
  /// One compact JSON object per line.
  std::string to_jsonl() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<nlohmann::json> events_;
};

nlohmann::json point_json(Vec2 p);
nlohmann::json points_json(const std::vector<Vec2>& pts);
nlohmann::json rect_json(const Rect& r);

/// Parses a JSONL document; throws Parse.
std::vector<nlohmann::json> parse_jsonl(std::string_view text);

}  // namespace hiernav
