#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pose_adapt/pose.hpp"

namespace pose_adapt {

// Shortest decimal that parses back to the same double.
std::string format_double(double value);

// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

struct PoseRecord {
  Pose3D pred;
  std::optional<Pose3D> gt;
};

// One line of the pose file:
//   {"pred": [[x,y,z] x17], "gt": [[x,y,z] x17], "frame": "camera"|"pelvis_rooted"}
nlohmann::json pose_record_to_json(const PoseRecord& record);
PoseRecord pose_record_from_json(const nlohmann::json& doc);

nlohmann::json coords_to_json(const JointCoords& coords);
JointCoords coords_from_json(const nlohmann::json& doc);

std::string format_pose_records(std::span<const PoseRecord> records);
std::vector<PoseRecord> parse_pose_records(std::string_view text);

std::vector<PoseRecord> read_pose_file(const std::filesystem::path& path);
void write_pose_file(const std::filesystem::path& path, std::span<const PoseRecord> records);

}  // namespace pose_adapt
