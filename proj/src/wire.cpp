#include "specwalk/wire.hpp"

#include "specwalk/errors.hpp"

#include <json.hpp>

namespace specwalk::wire {

using nlohmann::json;

std::string encode_classify_request(std::uint64_t id, const PointCloud& cloud) {
  json points = json::array();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    points.push_back({p.x(), p.y(), p.z()});
  }
  return json{{"id", id}, {"op", "classify"}, {"points", std::move(points)}}.dump();
}

std::string encode_info_request() { return json{{"id", 0}, {"op", "info"}}.dump(); }

std::string encode_label_response(std::uint64_t id, Label label) {
  return json{{"id", id}, {"label", label}}.dump();
}

std::string encode_error_response(std::uint64_t id, const std::string& message) {
  return json{{"id", id}, {"error", message}}.dump();
}

std::string encode_info_response(std::uint64_t id, int classes, const std::string& name) {
  return json{{"classes", classes}, {"id", id}, {"name", name}}.dump();
}

namespace {

json parse_line(const std::string& line) {
  if (line.find('\n') != std::string::npos) throw ProtocolError("embedded newline in protocol message");
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("protocol message is not a JSON object");
  return j;
}

std::uint64_t read_id(const json& j) {
  const auto it = j.find("id");
  if (it == j.end() || !it->is_number_unsigned()) throw ProtocolError("missing or non-integer \"id\"");
  return it->get<std::uint64_t>();
}

}  // namespace

Request decode_request(const std::string& line, std::uint64_t* id_hint) {
  const json j = parse_line(line);
  Request req;
  req.id = read_id(j);
  if (id_hint) *id_hint = req.id;
  const auto op = j.find("op");
  if (op == j.end() || !op->is_string()) throw ProtocolError("missing \"op\"");
  if (*op == "info") {
    req.op = Op::kInfo;
    return req;
  }
  if (*op != "classify") throw ProtocolError("unknown op " + op->dump());
  req.op = Op::kClassify;
  const auto pts = j.find("points");
  if (pts == j.end() || !pts->is_array() || pts->empty()) throw ProtocolError("\"points\" must be a nonempty array");
  Points points(static_cast<Eigen::Index>(pts->size()), 3);
  Eigen::Index r = 0;
  for (const auto& p : *pts) {
    if (!p.is_array() || p.size() != 3) throw ProtocolError("each point must be [x, y, z]");
    for (int c = 0; c < 3; ++c) {
      if (!p[c].is_number()) throw ProtocolError("point coordinate is not a number");
      points(r, c) = p[c].get<double>();
    }
    ++r;
  }
  try {
    req.points = PointCloud(std::move(points));
  } catch (const InvalidArgument& e) {
    throw ProtocolError(e.what());
  }
  return req;
}

Response decode_response(const std::string& line) {
  const json j = parse_line(line);
  Response resp;
  resp.id = read_id(j);
  for (const auto& [key, value] : j.items()) {
    if (key == "id") continue;
    if (key == "label" && value.is_number_integer()) {
      resp.label = value.get<Label>();
    } else if (key == "error" && value.is_string()) {
      resp.error = value.get<std::string>();
    } else if (key == "classes" && value.is_number_integer()) {
      resp.classes = value.get<int>();
    } else if (key == "name" && value.is_string()) {
      resp.name = value.get<std::string>();
    } else {
      throw ProtocolError("unexpected response field \"" + key + "\"");
    }
  }
  const bool is_label = resp.label.has_value();
  const bool is_error = resp.error.has_value();
  const bool is_info = resp.classes.has_value();
  if (is_label + is_error + is_info != 1) throw ProtocolError("response must carry exactly one of label, error, classes");
  if (resp.name && !is_info) throw ProtocolError("\"name\" only allowed in info responses");
  return resp;
}

}  // namespace specwalk::wire
