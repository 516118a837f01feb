#pragma once

#include "specwalk/oracle.hpp"
#include "specwalk/point_cloud.hpp"

#include <cstdint>
#include <optional>
#include <string>

// Oracle wire protocol: newline-delimited JSON over TCP, one object per line.
//
//   request   {"id": <uint64>, "op": "classify", "points": [[x,y,z], ...]}
//   response  {"id": <uint64>, "label": <int>}  |  {"id": <uint64>, "error": "<message>"}
//   handshake {"id": 0, "op": "info"}  ->  {"id": 0, "classes": <int>, "name": "<model>"}
//
// Encoders emit compact JSON with keys in lexicographic order and no trailing
// newline. Responses carrying any other field (scores, logits, ...) are
// rejected by the decoder.
namespace specwalk::wire {

enum class Op { kClassify, kInfo };

struct Request {
  std::uint64_t id = 0;
  Op op = Op::kClassify;
  std::optional<PointCloud> points;
};

struct Response {
  std::uint64_t id = 0;
  std::optional<Label> label;
  std::optional<std::string> error;
  std::optional<int> classes;
  std::optional<std::string> name;
};

std::string encode_classify_request(std::uint64_t id, const PointCloud& cloud);
std::string encode_info_request();
std::string encode_label_response(std::uint64_t id, Label label);
std::string encode_error_response(std::uint64_t id, const std::string& message);
std::string encode_info_response(std::uint64_t id, int classes, const std::string& name);

// Throws ProtocolError; `id_hint` receives the request id whenever it could be read.
Request decode_request(const std::string& line, std::uint64_t* id_hint = nullptr);
Response decode_response(const std::string& line);

}  // namespace specwalk::wire
