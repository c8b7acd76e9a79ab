#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiernav/geometry.hpp"

namespace hiernav {

enum class InstructionKind { Text, Image, Position };

/// A navigation goal: a text description, an image (named by the object it
/// depicts), or a metric position. Exactly one payload is meaningful.
struct Instruction {
  InstructionKind kind = InstructionKind::Text;
  std::string target_label;                 // Text
  std::optional<std::string> region_label;  // Text, optional
  std::string embedding_seed;               // Image: object id
  Vec2 position;                            // Position

  static Instruction text(std::string target, std::optional<std::string> region = std::nullopt);
  static Instruction image(std::string object_id);
  static Instruction at(Vec2 p);
};

nlohmann::json to_json(const Instruction& i);
Instruction instruction_from_json(const nlohmann::json& j);
std::string describe(const Instruction& i);

struct Room {
  std::string id;
  std::string label;
  Rect rect;
};

struct Door {
  std::string id;
  std::array<std::string, 2> connects;
  Vec2 position;
  double width_m = 0.9;
};

struct SceneObject {
  std::string id;
  std::string label;
  std::string room;
  Rect rect;
  bool blocking = false;
};

struct DynamicObstacle {
  Rect rect;
  bool spawn_after_mapping = true;
};

struct Scenario {
  std::string name;
  double cell_size_m = 0.1;
  Vec2 bounds_m;
  std::vector<Room> rooms;
  std::vector<Door> doors;
  std::vector<SceneObject> objects;
  std::vector<DynamicObstacle> dynamic_obstacles;
  Pose2 start;
  std::vector<Instruction> tasks;

  const Room* find_room(std::string_view id) const;
  const Room* find_room_by_label(std::string_view label) const;
  const SceneObject* find_object(std::string_view id) const;
  /// Room whose rectangle contains p (closed), preferring strict containment.
  const Room* room_at(Vec2 p) const;
};

/// Checks every schema invariant; throws Error(Validation) naming the
/// violated invariant and the offending id.
void validate(const Scenario& s);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& s);

/// Parses and validates a scenario document.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
/// Stable serialization (sorted keys, two-space indent, trailing newline).
std::string dump_scenario(const Scenario& s);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

struct GeneratorParams {
  int n_rooms = 5;
  double room_size_min_m = 4.0;
  double room_size_max_m = 6.0;
  std::uint64_t seed = 0;
  double extra_door_prob = 0.25;
  double robot_radius_m = 0.2;
  double door_width_m = 0.9;
  double object_size_m = 1.0;
};

/// Object labels used by the generator.
const std::vector<std::string>& object_labels();

/// Deterministic multi-room scenario: rooms on a grid skeleton, a spanning
/// tree of doors plus optional extra doors, one labeled object per room and
/// one text task per non-start room.
Scenario generate_scenario(const GeneratorParams& params);

}  // namespace hiernav
