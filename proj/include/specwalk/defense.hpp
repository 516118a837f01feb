#pragma once

#include "specwalk/oracle.hpp"
#include "specwalk/point_cloud.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>

namespace specwalk {

enum class DefenseKind { kSor, kSrs };

struct DefenseConfig {
  DefenseKind kind = DefenseKind::kSor;
  std::size_t sor_k = 2;
  double sor_alpha = 1.1;
  double srs_drop_ratio = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

// Statistical outlier removal: drops points whose mean distance to their k
// nearest neighbors exceeds mean + alpha * stddev over the cloud. Survivors
// keep their relative order. Throws DefenseAnnihilated if nothing survives.
PointCloud sor_filter(const PointCloud& cloud, std::size_t k, double alpha);

// Simple random sampling: drops exactly floor(drop_ratio * n) points chosen
// uniformly without replacement from a generator seeded with `seed`.
PointCloud srs_filter(const PointCloud& cloud, double drop_ratio, std::uint64_t seed);

// Seed for one evaluated cloud: hash of its coordinate bytes mixed with the run seed.
std::uint64_t cloud_seed(const PointCloud& cloud, std::uint64_t run_seed);

// Applies the defense to every input before delegating to `inner`.
class DefendedOracle final : public HardLabelOracle {
 public:
  DefendedOracle(std::shared_ptr<HardLabelOracle> inner, DefenseConfig config);
  int class_count() const override { return inner_->class_count(); }
  Concurrency concurrency() const override { return inner_->concurrency(); }
  PointCloud purify(const PointCloud& cloud) const;

 protected:
  Label do_classify(const PointCloud& cloud) override;

 private:
  std::shared_ptr<HardLabelOracle> inner_;
  DefenseConfig config_;
};

std::shared_ptr<HardLabelOracle> defended_oracle(std::shared_ptr<HardLabelOracle> inner, DefenseConfig config);

}  // namespace specwalk
