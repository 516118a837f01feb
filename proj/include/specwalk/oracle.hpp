#pragma once

#include "specwalk/geometry.hpp"
#include "specwalk/point_cloud.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace specwalk {

using Label = int;

enum class Concurrency {
  kConcurrent,  // classify may be called from several threads at once
  kSerial,      // callers must serialize classify
};

// Counts classify calls that returned a label, optionally capped by a budget.
class QueryLedger {
 public:
  QueryLedger() = default;
  explicit QueryLedger(std::uint64_t budget) : budget_(budget) {}

  std::uint64_t total_queries() const { return total_.load(std::memory_order_relaxed); }
  std::optional<std::uint64_t> budget() const { return budget_; }

  // Reserves one query; throws BudgetExhausted when the budget is spent.
  void acquire();
  // Returns a reservation whose query did not produce a label.
  void release() { total_.fetch_sub(1, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> total_{0};
  std::optional<std::uint64_t> budget_;
};

// A classifier observable only through its predicted label.
class HardLabelOracle {
 public:
  HardLabelOracle() = default;
  explicit HardLabelOracle(std::uint64_t budget) : ledger_(budget) {}
  HardLabelOracle(const HardLabelOracle&) = delete;
  HardLabelOracle& operator=(const HardLabelOracle&) = delete;
  virtual ~HardLabelOracle() = default;

  Label classify(const PointCloud& cloud);
  virtual int class_count() const = 0;
  virtual Concurrency concurrency() const { return Concurrency::kConcurrent; }
  const QueryLedger& ledger() const { return ledger_; }

 protected:
  virtual Label do_classify(const PointCloud& cloud) = 0;

 private:
  QueryLedger ledger_;
};

// +1 when the oracle's label differs from y_true, -1 otherwise. One query.
int indicator(HardLabelOracle& oracle, const PointCloud& cloud, Label y_true);

class ConstantOracle final : public HardLabelOracle {
 public:
  ConstantOracle(Label label, int classes);
  int class_count() const override { return classes_; }

 protected:
  Label do_classify(const PointCloud&) override { return label_; }

 private:
  Label label_;
  int classes_;
};

struct Prototype {
  Label label;
  PointCloud cloud;
};

// Label of the prototype with the smallest one-directional chamfer distance
// from the input; ties go to the lower label.
class NearestCentroidOracle final : public HardLabelOracle {
 public:
  explicit NearestCentroidOracle(const std::vector<Prototype>& prototypes);
  int class_count() const override { return classes_; }
  // Chamfer distance from the input to every prototype, in prototype order.
  std::vector<double> distances(const PointCloud& cloud) const;
  std::size_t prototype_count() const { return prototypes_.size(); }

 protected:
  Label do_classify(const PointCloud& cloud) override;

 private:
  std::vector<std::pair<Label, ReferenceCloud>> prototypes_;
  int classes_;
};

// 1 if <flat(cloud), normal> + offset > 0, else 0.
class LinearOracle final : public HardLabelOracle {
 public:
  LinearOracle(FlatVector normal, double offset);
  int class_count() const override { return 2; }
  double decision_value(const PointCloud& cloud) const;
  const FlatVector& normal() const { return normal_; }

 protected:
  Label do_classify(const PointCloud& cloud) override;

 private:
  FlatVector normal_;
  double offset_;
};

// Transparent wrapper that refuses queries beyond `budget`.
class BudgetedOracle final : public HardLabelOracle {
 public:
  BudgetedOracle(std::shared_ptr<HardLabelOracle> inner, std::uint64_t budget);
  int class_count() const override { return inner_->class_count(); }
  Concurrency concurrency() const override { return inner_->concurrency(); }

 protected:
  Label do_classify(const PointCloud& cloud) override { return inner_->classify(cloud); }

 private:
  std::shared_ptr<HardLabelOracle> inner_;
};

std::shared_ptr<HardLabelOracle> with_budget(std::shared_ptr<HardLabelOracle> oracle, std::uint64_t budget);

}  // namespace specwalk
