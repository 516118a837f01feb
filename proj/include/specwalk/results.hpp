#pragma once

#include "specwalk/attack.hpp"
#include "specwalk/config.hpp"
#include "specwalk/dataset.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace specwalk {

// One JSONL line per attack run.
struct ResultRecord {
  std::string source_id;
  Label y_true = 0;
  Label adv_label = -1;
  bool success = false;
  double hausdorff = 0.0;
  double chamfer = 0.0;
  double l2_norm = 0.0;
  double max_deviation = 0.0;
  double combined = 0.0;
  std::uint64_t queries = 0;
  std::size_t rounds_executed = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  bool constraint_violated = false;
  bool truncated = false;
  std::string error;  // set when the run aborted
};

ResultRecord make_record(const std::string& source_id, Label y_true, const AttackResult& result,
                         const AttackConfig& config);
std::string to_json_line(const ResultRecord& record);
ResultRecord parse_json_line(const std::string& line);
void append_jsonl(const std::string& path, const ResultRecord& record);
std::vector<ResultRecord> read_jsonl(const std::string& path);

using OracleFactory = std::function<std::shared_ptr<HardLabelOracle>()>;

struct BatchItem {
  std::size_t source_index = 0;
  std::uint64_t seed = 0;
  std::optional<AttackResult> result;
  std::string error;
  int error_code = 0;  // CLI exit-code class of the error, 0 on success
};

// Attacks each listed source with its own oracle from the factory. Run i uses
// rng_seed + source index. `on_done` is called under a lock, in completion
// order, so it can append to a shared file.
std::vector<BatchItem> run_attack_batch(const Dataset& dataset, const std::vector<std::size_t>& sources,
                                        const OracleFactory& factory, const AttackConfig& config,
                                        std::size_t workers = 1,
                                        const std::function<void(const BatchItem&)>& on_done = {});

struct BatchSummary {
  std::size_t runs = 0;
  std::size_t successes = 0;
  double asr = 0.0;  // percent
  double mean_hausdorff = 0.0;
  double mean_chamfer = 0.0;
  double mean_l2 = 0.0;
  double median_combined = 0.0;
  double mean_queries = 0.0;
};

// Distance means are over successful runs.
BatchSummary summarize(const std::vector<BatchItem>& items);

// Maps an exception to the CLI exit-code class: 1 usage, 2 data, 3 oracle, 4 budget.
int error_code_of(const std::exception& e);

}  // namespace specwalk
