#include "specwalk/io.hpp"

#include "specwalk/errors.hpp"
#include "specwalk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

namespace specwalk {
namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

// Strips comments and surrounding whitespace.
std::string clean(std::string line) {
  if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
  const auto b = line.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

PointCloud parse_xyz(std::istream& in) {
  std::vector<std::array<double, 3>> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = clean(line);
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::array<double, 3> p{};
    std::string extra;
    if (!(fields >> p[0] >> p[1] >> p[2]) || (fields >> extra))
      throw ParseError("expected three numeric fields", line_no);
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
      throw ParseError("non-finite coordinate", line_no);
    pts.push_back(p);
  }
  if (pts.empty()) throw DataError("XYZ input contains no points");
  Points out(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) << pts[i][0], pts[i][1], pts[i][2];
  }
  return PointCloud(std::move(out));
}

PointCloud read_xyz(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_xyz(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

void write_xyz(const std::string& path, const PointCloud& cloud) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write " + path);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    std::fprintf(f, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
  }
  if (std::fclose(f) != 0) throw DataError("error writing " + path);
}

TriangleMesh parse_off(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++line_no;
      auto c = clean(line);
      if (!c.empty()) return c;
    }
    throw ParseError("unexpected end of OFF data", line_no);
  };

  std::string header = next();
  if (header.rfind("OFF", 0) != 0) throw ParseError("missing OFF header", line_no);
  // Some exporters glue the counts onto the header ("OFF490 518 0").
  std::string counts = clean(header.substr(3));
  if (counts.empty()) counts = next();
  std::istringstream cs(counts);
  long nv = -1, nf = -1;
  if (!(cs >> nv >> nf) || nv < 0 || nf < 0) throw ParseError("invalid OFF element counts", line_no);

  TriangleMesh mesh;
  mesh.vertices.resize(nv, 3);
  for (long v = 0; v < nv; ++v) {
    std::istringstream ls(next());
    double x, y, z;
    if (!(ls >> x >> y >> z)) throw ParseError("invalid OFF vertex", line_no);
    mesh.vertices.row(v) << x, y, z;
  }
  for (long f = 0; f < nf; ++f) {
    std::istringstream ls(next());
    long k = 0;
    if (!(ls >> k) || k < 3) throw ParseError("OFF face needs at least 3 vertices", line_no);
    std::vector<std::size_t> idx(static_cast<std::size_t>(k));
    for (auto& i : idx) {
      long v = -1;
      if (!(ls >> v) || v < 0 || v >= nv) throw ParseError("OFF face index out of range", line_no);
      i = static_cast<std::size_t>(v);
    }
    for (std::size_t j = 1; j + 1 < idx.size(); ++j) mesh.triangles.push_back({idx[0], idx[j], idx[j + 1]});
  }
  return mesh;
}

TriangleMesh read_off(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_off(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_surface: need at least one sample");
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double total = 0.0;
  auto vertex = [&](std::size_t i) -> Vec3 { return mesh.vertices.row(static_cast<Eigen::Index>(i)).transpose(); };
  for (const auto& t : mesh.triangles) {
    total += 0.5 * (vertex(t[1]) - vertex(t[0])).cross(vertex(t[2]) - vertex(t[0])).norm();
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw DataError("mesh has zero surface area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Points out(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = unit(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& t = mesh.triangles[static_cast<std::size_t>(it - cumulative.begin())];
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    const Vec3 p = (1.0 - r1) * vertex(t[0]) + r1 * (1.0 - r2) * vertex(t[1]) + r1 * r2 * vertex(t[2]);
    out.row(static_cast<Eigen::Index>(i)) = p.transpose();
  }
  return PointCloud(std::move(out));
}

PointCloud read_off_and_sample(const std::string& path, std::size_t n, std::uint64_t seed) {
  return normalize_unit_ball(sample_surface(read_off(path), n, seed));
}

}  // namespace specwalk
