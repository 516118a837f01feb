#pragma once

#include "specwalk/point_cloud.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace specwalk {

// XYZ text: one "x y z" point per line, whitespace separated; blank lines and
// lines starting with '#' are skipped. Written with 17 significant digits so
// a write/read round trip is bit-exact.
PointCloud parse_xyz(std::istream& in);
PointCloud read_xyz(const std::string& path);
void write_xyz(const std::string& path, const PointCloud& cloud);

struct TriangleMesh {
  Points vertices;
  std::vector<std::array<std::size_t, 3>> triangles;
};

// OFF mesh; polygons are fan-triangulated, per-face colors are ignored.
TriangleMesh parse_off(std::istream& in);
TriangleMesh read_off(const std::string& path);

// n points uniformly distributed over the surface area. Throws DataError for a
// mesh with zero total area.
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);
// sample_surface followed by normalize_unit_ball.
PointCloud read_off_and_sample(const std::string& path, std::size_t n, std::uint64_t seed);

}  // namespace specwalk
