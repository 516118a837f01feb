#pragma once

#include "specwalk/spectral.hpp"

#include <cstddef>
#include <cstdint>
#include <string>

namespace specwalk {

enum class GenerationStrategy {
  kSpectrumFusion,      // blend GFT coefficients of source and target
  kCoordinateFusion,    // blend coordinates index-wise
  kRandomPerturbation,  // Gaussian noise on the source, growing with the schedule
};

enum class WalkMode {
  kJoint,           // coordinate walks, spectrum walk whenever one stalls
  kCoordinateOnly,
  kSpectrumOnly,
};

// Every hyperparameter of one attack run. Defaults are the reference settings.
struct AttackConfig {
  std::size_t k_neighbors = 10;
  double alpha_low = 0.85;
  double alpha_high = 0.2;
  double alpha_step = 0.05;
  double alpha_floor = 0.0;
  double gamma1 = 2.0;
  double gamma2 = 0.5;
  double epsilon = 0.16;
  std::size_t band_cutoff = 32;
  std::size_t mc_samples = 50;
  double mc_sigma_scale = 1.0;
  std::size_t rounds = 200;
  double xi_spe = 5.0;
  double binary_search_tol = 1e-3;
  std::size_t walk_retry_limit = 10;
  double stall_rel_tol = 1e-6;
  std::uint64_t rng_seed = 0;
  std::size_t target_count = 10;

  bool symmetric_chamfer = false;
  LaplacianWeighting laplacian_weighting = LaplacianWeighting::kUnweighted;
  GenerationStrategy generation = GenerationStrategy::kSpectrumFusion;
  WalkMode walk_mode = WalkMode::kJoint;
  std::size_t probe_threads = 1;

  // Range checks that do not depend on the cloud; throws InvalidArgument.
  void validate() const;
  // Also checks band_cutoff and k_neighbors against the point count.
  void validate_for(std::size_t point_count) const;
};

// Flat "key = value" text, one field per line in declaration order. Parsing
// accepts '#' comments and blank lines; unknown or repeated keys are errors.
std::string serialize_config(const AttackConfig& config);
AttackConfig parse_config(const std::string& text);
AttackConfig load_config(const std::string& path);
// FNV-1a of serialize_config, as 16 hex digits.
std::string config_hash(const AttackConfig& config);

}  // namespace specwalk
