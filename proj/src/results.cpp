#include "specwalk/results.hpp"

#include "specwalk/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

namespace specwalk {

using nlohmann::json;

ResultRecord make_record(const std::string& source_id, Label y_true, const AttackResult& result,
                         const AttackConfig& config) {
  ResultRecord r;
  r.source_id = source_id;
  r.y_true = y_true;
  r.adv_label = result.adv_label;
  r.success = result.success;
  r.hausdorff = result.metrics.hausdorff;
  r.chamfer = result.metrics.chamfer;
  r.l2_norm = result.metrics.l2_norm;
  r.max_deviation = result.metrics.max_deviation;
  r.combined = result.metrics.combined;
  r.queries = result.queries_used;
  r.rounds_executed = result.rounds_executed;
  r.seed = config.rng_seed;
  r.config_hash = config_hash(config);
  r.constraint_violated = result.constraint_violated;
  r.truncated = result.truncated;
  return r;
}

std::string to_json_line(const ResultRecord& r) {
  json j{{"source_id", r.source_id},
         {"y_true", r.y_true},
         {"adv_label", r.adv_label},
         {"success", r.success},
         {"D_h", r.hausdorff},
         {"D_c", r.chamfer},
         {"D_norm", r.l2_norm},
         {"max_deviation", r.max_deviation},
         {"D", r.combined},
         {"queries", r.queries},
         {"rounds_executed", r.rounds_executed},
         {"seed", r.seed},
         {"config_hash", r.config_hash},
         {"constraint_violated", r.constraint_violated},
         {"truncated", r.truncated}};
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

ResultRecord parse_json_line(const std::string& line) {
  try {
    const auto j = json::parse(line);
    ResultRecord r;
    r.source_id = j.at("source_id").get<std::string>();
    r.y_true = j.at("y_true").get<Label>();
    r.adv_label = j.at("adv_label").get<Label>();
    r.success = j.at("success").get<bool>();
    r.hausdorff = j.at("D_h").get<double>();
    r.chamfer = j.at("D_c").get<double>();
    r.l2_norm = j.at("D_norm").get<double>();
    r.max_deviation = j.at("max_deviation").get<double>();
    r.combined = j.value("D", 0.0);
    r.queries = j.at("queries").get<std::uint64_t>();
    r.rounds_executed = j.at("rounds_executed").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.constraint_violated = j.value("constraint_violated", false);
    r.truncated = j.value("truncated", false);
    r.error = j.value("error", std::string{});
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad result record: ") + e.what());
  }
}

void append_jsonl(const std::string& path, const ResultRecord& record) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot append to " + path);
  out << to_json_line(record) << '\n';
}

std::vector<ResultRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<ResultRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_json_line(line));
  }
  return out;
}

int error_code_of(const std::exception& e) {
  if (dynamic_cast<const BudgetExhausted*>(&e)) return 4;
  if (dynamic_cast<const OracleError*>(&e)) return 3;
  if (dynamic_cast<const InvalidArgument*>(&e)) return 1;
  return 2;
}

std::vector<BatchItem> run_attack_batch(const Dataset& dataset, const std::vector<std::size_t>& sources,
                                        const OracleFactory& factory, const AttackConfig& config, std::size_t workers,
                                        const std::function<void(const BatchItem&)>& on_done) {
  std::vector<BatchItem> items(sources.size());
  std::atomic<std::size_t> next{0};
  std::mutex done_mutex;

  auto worker = [&] {
    std::shared_ptr<HardLabelOracle> oracle;
    for (std::size_t k = next++; k < sources.size(); k = next++) {
      auto& item = items[k];
      item.source_index = sources[k];
      AttackConfig run_config = config;
      run_config.rng_seed = config.rng_seed + sources[k];
      item.seed = run_config.rng_seed;
      try {
        if (!oracle) oracle = factory();
        const auto targets = select_targets(dataset, sources[k], config.target_count, config.rng_seed);
        item.result = run_attack(dataset.clouds[sources[k]], dataset.label(sources[k]), targets, *oracle, run_config);
      } catch (const std::exception& e) {
        item.error = e.what();
        item.error_code = error_code_of(e);
        // A connection may be unusable after an oracle failure.
        if (item.error_code == 3) oracle.reset();
      }
      if (on_done) {
        std::lock_guard lock(done_mutex);
        on_done(item);
      }
    }
  };

  const auto n_workers = std::max<std::size_t>(1, std::min(workers, sources.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return items;
}

BatchSummary summarize(const std::vector<BatchItem>& items) {
  BatchSummary s;
  std::vector<double> combined;
  double queries = 0.0;
  for (const auto& item : items) {
    ++s.runs;
    if (!item.result) continue;
    queries += static_cast<double>(item.result->queries_used);
    if (!item.result->success) continue;
    ++s.successes;
    s.mean_hausdorff += item.result->metrics.hausdorff;
    s.mean_chamfer += item.result->metrics.chamfer;
    s.mean_l2 += item.result->metrics.l2_norm;
    combined.push_back(item.result->metrics.combined);
  }
  if (s.runs > 0) {
    s.asr = 100.0 * static_cast<double>(s.successes) / static_cast<double>(s.runs);
    s.mean_queries = queries / static_cast<double>(s.runs);
  }
  if (s.successes > 0) {
    const auto k = static_cast<double>(s.successes);
    s.mean_hausdorff /= k;
    s.mean_chamfer /= k;
    s.mean_l2 /= k;
    std::sort(combined.begin(), combined.end());
    const auto m = combined.size();
    s.median_combined = m % 2 ? combined[m / 2] : 0.5 * (combined[m / 2 - 1] + combined[m / 2]);
  }
  return s;
}

}  // namespace specwalk
