#include "specwalk/config.hpp"

#include "specwalk/errors.hpp"
#include "specwalk/hash.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace specwalk {
namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidArgument("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw InvalidArgument("config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidArgument("config: '" + key + "' expects true/false, got '" + v + "'");
}

const char* name(LaplacianWeighting w) { return w == LaplacianWeighting::kGaussian ? "gaussian" : "unweighted"; }

const char* name(GenerationStrategy g) {
  switch (g) {
    case GenerationStrategy::kCoordinateFusion: return "coordinate_fusion";
    case GenerationStrategy::kRandomPerturbation: return "random_perturbation";
    default: return "spectrum_fusion";
  }
}

const char* name(WalkMode m) {
  switch (m) {
    case WalkMode::kCoordinateOnly: return "coordinate";
    case WalkMode::kSpectrumOnly: return "spectrum";
    default: return "joint";
  }
}

struct Field {
  std::string key;
  std::function<std::string(const AttackConfig&)> get;
  std::function<void(AttackConfig&, const std::string&)> set;
};

template <typename T>
Field size_field(const char* key, T AttackConfig::*member) {
  return {key, [member](const AttackConfig& c) { return std::to_string(c.*member); },
          [member, key](AttackConfig& c, const std::string& v) { c.*member = static_cast<T>(to_uint(key, v)); }};
}

Field double_field(const char* key, double AttackConfig::*member) {
  return {key, [member](const AttackConfig& c) { return fmt_double(c.*member); },
          [member, key](AttackConfig& c, const std::string& v) { c.*member = to_double(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      size_field("k_neighbors", &AttackConfig::k_neighbors),
      double_field("alpha_low", &AttackConfig::alpha_low),
      double_field("alpha_high", &AttackConfig::alpha_high),
      double_field("alpha_step", &AttackConfig::alpha_step),
      double_field("alpha_floor", &AttackConfig::alpha_floor),
      double_field("gamma1", &AttackConfig::gamma1),
      double_field("gamma2", &AttackConfig::gamma2),
      double_field("epsilon", &AttackConfig::epsilon),
      size_field("band_cutoff", &AttackConfig::band_cutoff),
      size_field("mc_samples", &AttackConfig::mc_samples),
      double_field("mc_sigma_scale", &AttackConfig::mc_sigma_scale),
      size_field("rounds", &AttackConfig::rounds),
      double_field("xi_spe", &AttackConfig::xi_spe),
      double_field("binary_search_tol", &AttackConfig::binary_search_tol),
      size_field("walk_retry_limit", &AttackConfig::walk_retry_limit),
      double_field("stall_rel_tol", &AttackConfig::stall_rel_tol),
      size_field("rng_seed", &AttackConfig::rng_seed),
      size_field("target_count", &AttackConfig::target_count),
      {"symmetric_chamfer", [](const AttackConfig& c) { return std::string(c.symmetric_chamfer ? "true" : "false"); },
       [](AttackConfig& c, const std::string& v) { c.symmetric_chamfer = to_bool("symmetric_chamfer", v); }},
      {"laplacian_weighting", [](const AttackConfig& c) { return std::string(name(c.laplacian_weighting)); },
       [](AttackConfig& c, const std::string& v) {
         if (v == "unweighted") c.laplacian_weighting = LaplacianWeighting::kUnweighted;
         else if (v == "gaussian") c.laplacian_weighting = LaplacianWeighting::kGaussian;
         else throw InvalidArgument("config: laplacian_weighting must be unweighted|gaussian");
       }},
      {"generation", [](const AttackConfig& c) { return std::string(name(c.generation)); },
       [](AttackConfig& c, const std::string& v) {
         if (v == "spectrum_fusion") c.generation = GenerationStrategy::kSpectrumFusion;
         else if (v == "coordinate_fusion") c.generation = GenerationStrategy::kCoordinateFusion;
         else if (v == "random_perturbation") c.generation = GenerationStrategy::kRandomPerturbation;
         else throw InvalidArgument("config: generation must be spectrum_fusion|coordinate_fusion|random_perturbation");
       }},
      {"walk_mode", [](const AttackConfig& c) { return std::string(name(c.walk_mode)); },
       [](AttackConfig& c, const std::string& v) {
         if (v == "joint") c.walk_mode = WalkMode::kJoint;
         else if (v == "coordinate") c.walk_mode = WalkMode::kCoordinateOnly;
         else if (v == "spectrum") c.walk_mode = WalkMode::kSpectrumOnly;
         else throw InvalidArgument("config: walk_mode must be joint|coordinate|spectrum");
       }},
      size_field("probe_threads", &AttackConfig::probe_threads),
  };
  return all;
}

}  // namespace

void AttackConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(alpha_low) || !unit(alpha_high) || !unit(alpha_floor))
    throw InvalidArgument("config: fusion weights must lie in [0, 1]");
  if (!(alpha_step > 0.0 && alpha_step <= 1.0)) throw InvalidArgument("config: alpha_step must lie in (0, 1]");
  if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0)) throw InvalidArgument("config: gamma weights must be nonnegative");
  if (!(epsilon > 0.0)) throw InvalidArgument("config: epsilon must be positive");
  if (k_neighbors < 1) throw InvalidArgument("config: k_neighbors must be >= 1");
  if (band_cutoff < 1) throw InvalidArgument("config: band_cutoff must be >= 1");
  if (mc_samples < 1) throw InvalidArgument("config: mc_samples must be >= 1");
  if (!(mc_sigma_scale > 0.0)) throw InvalidArgument("config: mc_sigma_scale must be positive");
  if (rounds < 1) throw InvalidArgument("config: rounds must be >= 1");
  if (!(xi_spe > 0.0)) throw InvalidArgument("config: xi_spe must be positive");
  if (!(binary_search_tol > 0.0 && binary_search_tol < 1.0))
    throw InvalidArgument("config: binary_search_tol must lie in (0, 1)");
  if (!(stall_rel_tol >= 0.0 && stall_rel_tol < 1.0)) throw InvalidArgument("config: stall_rel_tol must lie in [0, 1)");
  if (target_count < 1) throw InvalidArgument("config: target_count must be >= 1");
  if (probe_threads < 1) throw InvalidArgument("config: probe_threads must be >= 1");
}

void AttackConfig::validate_for(std::size_t point_count) const {
  validate();
  if (band_cutoff >= point_count)
    throw InvalidArgument("config: band_cutoff " + std::to_string(band_cutoff) + " must be below the point count " +
                          std::to_string(point_count));
  if (k_neighbors >= point_count) throw InvalidArgument("config: k_neighbors must be below the point count");
}

std::string serialize_config(const AttackConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

AttackConfig parse_config(const std::string& text) {
  std::map<std::string, const Field*> by_key;
  for (const auto& f : fields()) by_key[f.key] = &f;
  AttackConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected 'key = value'", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw ParseError("config: unknown key '" + key + "'", line_no);
    if (!seen.insert(key).second) throw ParseError("config: repeated key '" + key + "'", line_no);
    try {
      it->second->set(config, value);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  config.validate();
  return config;
}

AttackConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_hash(const AttackConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(Fnv1a().update(serialize_config(config)).digest()));
  return buf;
}

}  // namespace specwalk
