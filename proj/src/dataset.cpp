#include "specwalk/dataset.hpp"

#include "specwalk/errors.hpp"
#include "specwalk/geometry.hpp"
#include "specwalk/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

namespace specwalk {

namespace fs = std::filesystem;
using nlohmann::json;

void DatasetManifest::validate() const {
  if (class_count < 2) throw DataError("manifest: class_count must be >= 2");
  if (sample_points < 8) throw DataError("manifest: sample_points must be >= 8");
  if (entries.empty()) throw DataError("manifest: no entries");
  std::vector<bool> present(static_cast<std::size_t>(class_count), false);
  for (const auto& e : entries) {
    if (e.label < 0 || e.label >= class_count)
      throw DataError("manifest: entry '" + e.id + "' label outside [0, class_count)");
    present[static_cast<std::size_t>(e.label)] = true;
  }
  if (std::find(present.begin(), present.end(), false) != present.end())
    throw DataError("manifest: labels are not dense in [0, class_count)");
}

std::size_t DatasetManifest::find(const std::string& id_or_index) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].id == id_or_index) return i;
  }
  try {
    std::size_t used = 0;
    const auto idx = std::stoul(id_or_index, &used);
    if (used == id_or_index.size() && idx < entries.size()) return idx;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("no manifest entry with id '" + id_or_index + "'");
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  json j;
  try {
    in >> j;
    DatasetManifest m;
    m.class_count = j.at("class_count").get<int>();
    m.sample_points = j.value("sample_points", std::size_t{1024});
    m.normalize = j.value("normalize", true);
    m.sample_seed = j.value("sample_seed", std::uint64_t{0});
    for (const auto& e : j.at("entries")) {
      m.entries.push_back({e.at("id").get<std::string>(), e.at("path").get<std::string>(), e.at("label").get<Label>(),
                           e.value("class_name", std::string{})});
    }
    m.base_dir = fs::path(path).parent_path().string();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw DataError("manifest " + path + ": " + e.what());
  }
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"id", e.id}, {"path", e.path}, {"label", e.label}, {"class_name", e.class_name}});
  }
  const json j{{"class_count", manifest.class_count},
               {"sample_points", manifest.sample_points},
               {"normalize", manifest.normalize},
               {"sample_seed", manifest.sample_seed},
               {"entries", std::move(entries)}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path);
  out << j.dump(2) << '\n';
}

Dataset load_dataset(const DatasetManifest& manifest) {
  manifest.validate();
  Dataset d{manifest, {}};
  d.clouds.reserve(manifest.entries.size());
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    const fs::path p = fs::path(e.path).is_absolute() ? fs::path(e.path) : fs::path(manifest.base_dir) / e.path;
    PointCloud cloud = p.extension() == ".off"
                           ? sample_surface(read_off(p.string()), manifest.sample_points, manifest.sample_seed + i)
                           : read_xyz(p.string());
    if (manifest.normalize) cloud = normalize_unit_ball(cloud);
    d.clouds.push_back(std::move(cloud));
  }
  return d;
}

Dataset load_dataset(const std::string& manifest_path) { return load_dataset(load_manifest(manifest_path)); }

std::vector<Prototype> class_prototypes(const Dataset& dataset) {
  std::map<Label, std::pair<Points, std::size_t>> sums;
  const auto n = dataset.clouds.front().size();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.clouds[i].size() != n) throw DataError("class_prototypes: clouds differ in point count");
    auto [it, inserted] = sums.try_emplace(dataset.label(i), Points::Zero(static_cast<Eigen::Index>(n), 3), 0);
    it->second.first += dataset.clouds[i].points();
    ++it->second.second;
  }
  std::vector<Prototype> out;
  for (auto& [label, acc] : sums) {
    out.push_back({label, normalize_unit_ball(PointCloud(Points(acc.first / static_cast<double>(acc.second))))});
  }
  return out;
}

std::vector<LabeledCloud> select_targets(const Dataset& dataset, std::size_t source_index, std::size_t count,
                                         std::uint64_t seed) {
  const Label y_true = dataset.label(source_index);
  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.label(i) != y_true) by_class[dataset.label(i)].push_back(i);
  }
  std::vector<Label> labels;
  for (const auto& [label, members] : by_class) labels.push_back(label);
  std::mt19937_64 rng(seed * 0x100000001b3ULL + source_index);
  std::shuffle(labels.begin(), labels.end(), rng);
  if (labels.size() > count) labels.resize(count);
  std::vector<LabeledCloud> out;
  for (const Label label : labels) {
    const auto& members = by_class[label];
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    out.push_back({dataset.clouds[members[pick(rng)]], label});
  }
  return out;
}

// ---- synthetic shapes -------------------------------------------------------------

namespace {

constexpr double kPi = std::numbers::pi;

// Area-weighted choice among surface pieces using parameter a in [0, 1).
std::size_t piece(double a, std::initializer_list<double> areas) {
  double total = 0.0;
  for (const double x : areas) total += x;
  double acc = 0.0;
  std::size_t i = 0;
  for (const double x : areas) {
    acc += x / total;
    if (a < acc) return i;
    ++i;
  }
  return areas.size() - 1;
}

Vec3 disc(double b, double c, double radius, double z) {
  const double r = radius * std::sqrt(b);
  return {r * std::cos(2 * kPi * c), r * std::sin(2 * kPi * c), z};
}

// Point on a unit-scale surface of the family from three uniform parameters.
Vec3 family_point(std::size_t family, double a, double b, double c) {
  switch (family) {
    case 0: {  // sphere
      const double z = 1.0 - 2.0 * a;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      return {r * std::cos(2 * kPi * b), r * std::sin(2 * kPi * b), z};
    }
    case 1: {  // box 2.0 x 1.4 x 1.0
      const double ex = 1.0, ey = 0.7, ez = 0.5;
      const auto f = piece(a, {ey * ez, ey * ez, ex * ez, ex * ez, ex * ey, ex * ey});
      const double u = 2 * b - 1, v = 2 * c - 1;
      switch (f) {
        case 0: return {ex, ey * u, ez * v};
        case 1: return {-ex, ey * u, ez * v};
        case 2: return {ex * u, ey, ez * v};
        case 3: return {ex * u, -ey, ez * v};
        case 4: return {ex * u, ey * v, ez};
        default: return {ex * u, ey * v, -ez};
      }
    }
    case 2: {  // cylinder radius 0.5, height 1.6
      const double r = 0.5, h = 0.8;
      const auto f = piece(a, {2 * kPi * r * 2 * h, kPi * r * r, kPi * r * r});
      if (f == 0) return {r * std::cos(2 * kPi * b), r * std::sin(2 * kPi * b), h * (2 * c - 1)};
      return disc(b, c, r, f == 1 ? h : -h);
    }
    case 3: {  // cone base radius 0.8, height 1.6
      const double r = 0.8, h = 1.6;
      const double slant = std::sqrt(r * r + h * h);
      const auto f = piece(a, {kPi * r * slant, kPi * r * r});
      if (f == 1) return disc(b, c, r, -0.5 * h);
      const double t = std::sqrt(b);  // uniform on the lateral surface
      return {t * r * std::cos(2 * kPi * c), t * r * std::sin(2 * kPi * c), 0.5 * h - t * h};
    }
    case 4: {  // torus R=0.8, r=0.3 (rejection-free approximate area weighting)
      const double big = 0.8, small = 0.3;
      const double theta = 2 * kPi * b;
      const double phi = 2 * kPi * c;
      return {(big + small * std::cos(phi)) * std::cos(theta), (big + small * std::cos(phi)) * std::sin(theta),
              small * std::sin(phi)};
    }
    case 5: {  // prolate ellipsoid 1.0 x 0.35 x 0.35
      const double z = 1.0 - 2.0 * a;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      return {z, 0.35 * r * std::cos(2 * kPi * b), 0.35 * r * std::sin(2 * kPi * b)};
    }
    case 6: {  // square pyramid, base half-width 0.8 at z=-0.6, apex at z=0.9
      const double w = 0.8, zb = -0.6, za = 0.9;
      const double slant = std::sqrt(w * w + (za - zb) * (za - zb));
      const auto f = piece(a, {4 * w * w, w * slant, w * slant, w * slant, w * slant});
      if (f == 0) return {w * (2 * b - 1), w * (2 * c - 1), zb};
      // Triangle (base corner p, base corner q, apex) via square-root barycentrics.
      const double s = std::sqrt(b);
      const double corners[4][2] = {{w, w}, {-w, w}, {-w, -w}, {w, -w}};
      const auto& p = corners[f - 1];
      const auto& q = corners[f % 4];
      const Vec3 P{p[0], p[1], zb}, Q{q[0], q[1], zb}, A{0, 0, za};
      return (1 - s) * A + s * (1 - c) * P + s * c * Q;
    }
    case 7: {  // flat disc with a rim: radius 1.0 plate, thickness 0.1
      const double r = 1.0, h = 0.05;
      const auto f = piece(a, {kPi * r * r, kPi * r * r, 2 * kPi * r * 2 * h});
      if (f == 2) return {r * std::cos(2 * kPi * b), r * std::sin(2 * kPi * b), h * (2 * c - 1)};
      return disc(b, c, r, f == 0 ? h : -h);
    }
    default:
      throw InvalidArgument("unknown synthetic family");
  }
}

}  // namespace

const std::vector<std::string>& synthetic_families() {
  static const std::vector<std::string> names = {"sphere", "box",       "cylinder", "cone",
                                                 "torus",  "ellipsoid", "pyramid",  "plate"};
  return names;
}

DatasetManifest gen_synthetic_dataset(int classes, std::size_t per_class, std::size_t n, std::uint64_t seed,
                                      const std::string& out_dir) {
  const auto& names = synthetic_families();
  if (classes < 2) throw InvalidArgument("gen_synthetic_dataset: need at least 2 classes");
  if (static_cast<std::size_t>(classes) > names.size())
    throw InvalidArgument("gen_synthetic_dataset: only " + std::to_string(names.size()) + " shape families available");
  if (per_class < 1) throw InvalidArgument("gen_synthetic_dataset: per_class must be >= 1");
  if (n < 8) throw InvalidArgument("gen_synthetic_dataset: need at least 8 points per cloud");
  fs::create_directories(out_dir);

  DatasetManifest manifest;
  manifest.class_count = classes;
  manifest.sample_points = n;
  manifest.normalize = true;
  manifest.base_dir = out_dir;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.01);
  std::uniform_real_distribution<double> scale(0.9, 1.1);

  for (int cls = 0; cls < classes; ++cls) {
    const auto family = static_cast<std::size_t>(cls);
    // Shared surface parameters give members of a class index correspondence.
    std::mt19937_64 param_rng(seed * 1000003ULL + family);
    std::vector<std::array<double, 3>> params(n);
    for (auto& p : params) p = {unit(param_rng), unit(param_rng), unit(param_rng)};

    for (std::size_t m = 0; m < per_class; ++m) {
      std::mt19937_64 rng(seed * 1000003ULL + 7919ULL * (family + 1) + m * 104729ULL + 1);
      const Vec3 axis_scale{scale(rng), scale(rng), scale(rng)};
      Points pts(static_cast<Eigen::Index>(n), 3);
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3 p = family_point(family, params[i][0], params[i][1], params[i][2]).cwiseProduct(axis_scale);
        pts.row(static_cast<Eigen::Index>(i)) << p.x() + jitter(rng), p.y() + jitter(rng), p.z() + jitter(rng);
      }
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%03zu", names[family].c_str(), m);
      const std::string file = std::string(id) + ".xyz";
      write_xyz((fs::path(out_dir) / file).string(), normalize_unit_ball(PointCloud(std::move(pts))));
      manifest.entries.push_back({id, file, cls, names[family]});
    }
  }
  save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

}  // namespace specwalk
