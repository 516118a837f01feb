#pragma once

#include "specwalk/attack.hpp"
#include "specwalk/oracle.hpp"
#include "specwalk/point_cloud.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace specwalk {

struct ManifestEntry {
  std::string id;
  std::string path;  // relative to the manifest directory unless absolute
  Label label = 0;
  std::string class_name;
};

// JSON manifest:
//   {"class_count": C, "sample_points": n, "normalize": true, "sample_seed": s,
//    "entries": [{"id": ..., "path": ..., "label": ..., "class_name": ...}, ...]}
// Entries ending in .off are surface-sampled with sample_points points.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int class_count = 0;
  std::size_t sample_points = 1024;
  bool normalize = true;
  std::uint64_t sample_seed = 0;
  std::string base_dir;

  void validate() const;
  // Entry index by id, or by decimal position when no id matches.
  std::size_t find(const std::string& id_or_index) const;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

struct Dataset {
  DatasetManifest manifest;
  std::vector<PointCloud> clouds;  // parallel to manifest.entries

  Label label(std::size_t i) const { return manifest.entries[i].label; }
  std::size_t size() const { return clouds.size(); }
};

Dataset load_dataset(const DatasetManifest& manifest);
Dataset load_dataset(const std::string& manifest_path);

// Index-wise mean of each class's clouds, renormalized. Meaningful when members
// of a class share point correspondence (true for synthetic datasets).
std::vector<Prototype> class_prototypes(const Dataset& dataset);

// At most `count` clouds from distinct classes other than the source's,
// chosen with a generator seeded by (seed, source index).
std::vector<LabeledCloud> select_targets(const Dataset& dataset, std::size_t source_index, std::size_t count,
                                         std::uint64_t seed);

// Parametric shape families available to the synthetic generator.
const std::vector<std::string>& synthetic_families();

// classes x per_class clouds of n points, written as XYZ files plus
// manifest.json under out_dir. Members of one class share the surface
// parameterization and differ by seeded per-axis scaling and point jitter.
DatasetManifest gen_synthetic_dataset(int classes, std::size_t per_class, std::size_t n, std::uint64_t seed,
                                      const std::string& out_dir);

}  // namespace specwalk
