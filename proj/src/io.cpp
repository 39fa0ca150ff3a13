#include "pose_adapt/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "pose_adapt/error.hpp"

namespace pose_adapt {

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename failed: " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json coords_to_json(const JointCoords& coords) {
  nlohmann::json arr = nlohmann::json::array();
  for (int j = 0; j < kJointCount; ++j) {
    arr.push_back({coords(0, j), coords(1, j), coords(2, j)});
  }
  return arr;
}

JointCoords coords_from_json(const nlohmann::json& doc) {
  if (!doc.is_array() || doc.size() != kJointCount) {
    throw Error(ErrorCode::ParseError, "pose must have exactly 17 joints");
  }
  JointCoords coords;
  for (int j = 0; j < kJointCount; ++j) {
    const auto& p = doc[static_cast<std::size_t>(j)];
    if (!p.is_array() || p.size() != 3) {
      throw Error(ErrorCode::ParseError, "joint must be an [x, y, z] triple");
    }
    for (int a = 0; a < 3; ++a) {
      const auto& v = p[static_cast<std::size_t>(a)];
      if (!v.is_number()) throw Error(ErrorCode::ParseError, "joint coordinate is not a number");
      coords(a, j) = v.get<double>();
    }
  }
  if (!coords.allFinite()) throw Error(ErrorCode::ParseError, "non-finite coordinate");
  return coords;
}

nlohmann::json pose_record_to_json(const PoseRecord& record) {
  nlohmann::json doc;
  doc["pred"] = coords_to_json(record.pred.coords);
  if (record.gt) doc["gt"] = coords_to_json(record.gt->coords);
  doc["frame"] = std::string(to_string(record.pred.frame));
  return doc;
}

PoseRecord pose_record_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("pred")) {
    throw Error(ErrorCode::ParseError, "pose record needs a \"pred\" field");
  }
  Frame frame = Frame::Camera;
  if (doc.contains("frame")) {
    if (!doc["frame"].is_string()) throw Error(ErrorCode::ParseError, "frame must be a string");
    frame = frame_from_string(doc["frame"].get<std::string>());
  }
  PoseRecord record;
  record.pred = Pose3D::from_coords(coords_from_json(doc["pred"]), frame);
  if (doc.contains("gt") && !doc["gt"].is_null()) {
    record.gt = Pose3D::from_coords(coords_from_json(doc["gt"]), frame);
  }
  return record;
}

std::string format_pose_records(std::span<const PoseRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += pose_record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<PoseRecord> parse_pose_records(std::string_view text) {
  std::vector<PoseRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      records.push_back(pose_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<PoseRecord> read_pose_file(const std::filesystem::path& path) {
  return parse_pose_records(read_file(path));
}

void write_pose_file(const std::filesystem::path& path, std::span<const PoseRecord> records) {
  write_file_atomic(path, format_pose_records(records));
}

}  // namespace pose_adapt
