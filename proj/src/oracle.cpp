#include "specwalk/oracle.hpp"

#include "specwalk/errors.hpp"

#include <algorithm>
#include <limits>

namespace specwalk {

void QueryLedger::acquire() {
  auto current = total_.load(std::memory_order_relaxed);
  do {
    if (budget_ && current >= *budget_) throw BudgetExhausted(*budget_);
  } while (!total_.compare_exchange_weak(current, current + 1, std::memory_order_relaxed));
}

Label HardLabelOracle::classify(const PointCloud& cloud) {
  ledger_.acquire();
  try {
    return do_classify(cloud);
  } catch (...) {
    ledger_.release();
    throw;
  }
}

int indicator(HardLabelOracle& oracle, const PointCloud& cloud, Label y_true) {
  return oracle.classify(cloud) != y_true ? 1 : -1;
}

ConstantOracle::ConstantOracle(Label label, int classes) : label_(label), classes_(classes) {
  if (classes < 1 || label < 0 || label >= classes) throw InvalidArgument("ConstantOracle: label outside [0, classes)");
}

NearestCentroidOracle::NearestCentroidOracle(const std::vector<Prototype>& prototypes) {
  if (prototypes.size() < 2) throw InvalidArgument("NearestCentroidOracle: need at least 2 prototypes");
  const auto n = prototypes.front().cloud.size();
  Label max_label = 0;
  for (const auto& p : prototypes) {
    if (p.label < 0) throw InvalidArgument("NearestCentroidOracle: negative label");
    if (p.cloud.size() != n) throw InvalidArgument("NearestCentroidOracle: prototypes differ in point count");
    max_label = std::max(max_label, p.label);
  }
  std::vector<Prototype> sorted = prototypes;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Prototype& a, const Prototype& b) { return a.label < b.label; });
  prototypes_.reserve(sorted.size());
  for (auto& p : sorted) prototypes_.emplace_back(p.label, ReferenceCloud(std::move(p.cloud)));
  classes_ = max_label + 1;
}

std::vector<double> NearestCentroidOracle::distances(const PointCloud& cloud) const {
  std::vector<double> d;
  d.reserve(prototypes_.size());
  for (const auto& [label, ref] : prototypes_) d.push_back(ref.chamfer_from(cloud));
  return d;
}

Label NearestCentroidOracle::do_classify(const PointCloud& cloud) {
  Label best_label = prototypes_.front().first;
  double best = std::numeric_limits<double>::infinity();
  // Prototypes are sorted by label, so strict < keeps the lower label on ties.
  for (const auto& [label, ref] : prototypes_) {
    const double d = ref.chamfer_from(cloud);
    if (d < best) {
      best = d;
      best_label = label;
    }
  }
  return best_label;
}

LinearOracle::LinearOracle(FlatVector normal, double offset) : normal_(std::move(normal)), offset_(offset) {
  if (normal_.size() == 0 || normal_.size() % 3 != 0 || !(normal_.norm() > 0.0))
    throw InvalidArgument("LinearOracle: normal must be a nonzero 3n-vector");
}

double LinearOracle::decision_value(const PointCloud& cloud) const {
  if (cloud.flat().size() != normal_.size()) throw InvalidArgument("LinearOracle: cloud size does not match normal");
  return cloud.flat().dot(normal_) + offset_;
}

Label LinearOracle::do_classify(const PointCloud& cloud) { return decision_value(cloud) > 0.0 ? 1 : 0; }

BudgetedOracle::BudgetedOracle(std::shared_ptr<HardLabelOracle> inner, std::uint64_t budget)
    : HardLabelOracle(budget), inner_(std::move(inner)) {
  if (!inner_) throw InvalidArgument("BudgetedOracle: null inner oracle");
  if (budget == 0) throw InvalidArgument("BudgetedOracle: budget must be positive");
}

std::shared_ptr<HardLabelOracle> with_budget(std::shared_ptr<HardLabelOracle> oracle, std::uint64_t budget) {
  return std::make_shared<BudgetedOracle>(std::move(oracle), budget);
}

}  // namespace specwalk
