#include "specwalk/cli.hpp"

#include "specwalk/attack.hpp"
#include "specwalk/config.hpp"
#include "specwalk/dataset.hpp"
#include "specwalk/defense.hpp"
#include "specwalk/errors.hpp"
#include "specwalk/io.hpp"
#include "specwalk/remote.hpp"
#include "specwalk/results.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace specwalk {
namespace {

namespace fs = std::filesystem;

struct OracleOptions {
  std::string spec = "centroid";
  int timeout_ms = 10000;
  int retries = 0;
  std::uint64_t budget = 0;  // 0: unlimited
};

void add_oracle_options(CLI::App* cmd, OracleOptions& o) {
  cmd->add_option("--oracle", o.spec, "centroid or remote:HOST:PORT")->capture_default_str();
  cmd->add_option("--timeout-ms", o.timeout_ms, "remote oracle timeout")->capture_default_str();
  cmd->add_option("--retries", o.retries, "remote oracle reconnect attempts")->capture_default_str();
  cmd->add_option("--budget", o.budget, "per-run query budget, 0 for none")->capture_default_str();
}

OracleFactory make_factory(const OracleOptions& o, const Dataset& dataset) {
  std::shared_ptr<HardLabelOracle> centroid;
  std::optional<Endpoint> endpoint;
  if (o.spec == "centroid") {
    centroid = std::make_shared<NearestCentroidOracle>(class_prototypes(dataset));
  } else if (o.spec.rfind("remote:", 0) == 0) {
    endpoint = parse_endpoint(o.spec.substr(7));
  } else {
    throw InvalidArgument("unknown oracle '" + o.spec + "'");
  }
  return [=]() -> std::shared_ptr<HardLabelOracle> {
    std::shared_ptr<HardLabelOracle> oracle = centroid;
    if (endpoint) oracle = std::make_shared<RemoteOracle>(*endpoint, std::chrono::milliseconds(o.timeout_ms), o.retries);
    return o.budget > 0 ? with_budget(oracle, o.budget) : oracle;
  };
}

AttackConfig load_attack_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  // Overrides replace lines of the file that set the same key.
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("override must be key=value: " + kv);
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    const auto key = trim(kv.substr(0, eq));
    std::istringstream lines(text);
    std::string line, kept;
    while (std::getline(lines, line)) {
      const auto leq = line.find('=');
      if (leq != std::string::npos && line.find('#') != 0 && trim(line.substr(0, leq)) == key) continue;
      kept += line + "\n";
    }
    text = kept + key + " = " + trim(kv.substr(eq + 1)) + "\n";
  }
  auto cfg = parse_config(text);
  cfg.validate();
  return cfg;
}

std::string adv_path_for(const std::string& dir, const std::string& source_id) {
  return (fs::path(dir) / (source_id + ".adv.xyz")).string();
}

std::string out_dir_of(const std::string& out) {
  auto dir = fs::path(out).parent_path();
  return dir.empty() ? std::string(".") : dir.string();
}

ResultRecord record_of(const Dataset& dataset, const BatchItem& item, const AttackConfig& cfg) {
  const auto& id = dataset.manifest.entries[item.source_index].id;
  AttackConfig run_cfg = cfg;
  run_cfg.rng_seed = item.seed;
  if (item.result) return make_record(id, dataset.label(item.source_index), *item.result, run_cfg);
  ResultRecord r;
  r.source_id = id;
  r.y_true = dataset.label(item.source_index);
  r.seed = item.seed;
  r.config_hash = config_hash(run_cfg);
  r.error = item.error;
  return r;
}

int item_exit_code(const BatchItem& item) {
  if (item.error_code != 0) return item.error_code;
  if (item.result && item.result->truncated && !item.result->final_verified) return 4;
  return 0;
}

void print_summary(std::ostream& os, const std::string& label, const BatchSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %6zu %8.1f%% %12.6f %12.6f %12.6f %12.6f %10.1f\n", label.c_str(), s.runs,
                s.asr, s.mean_hausdorff, s.mean_chamfer, s.mean_l2, s.median_combined, s.mean_queries);
  os << buf;
}

void print_summary_header(std::ostream& os) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %6s %9s %12s %12s %12s %12s %10s\n", "oracle", "runs", "ASR", "D_h", "D_c",
                "D_norm", "median_D", "queries");
  os << buf;
}

std::vector<std::size_t> pick_sources(const Dataset& dataset, std::size_t limit) {
  std::vector<std::size_t> all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (limit == 0 || limit >= all.size()) return all;
  // Spread the subset over classes: round-robin by label.
  std::vector<std::vector<std::size_t>> by_class(dataset.manifest.class_count);
  for (auto i : all) by_class[dataset.label(i)].push_back(i);
  std::vector<std::size_t> out;
  for (std::size_t r = 0; out.size() < limit; ++r) {
    for (auto& members : by_class) {
      if (r < members.size() && out.size() < limit) out.push_back(members[r]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

DefenseConfig parse_defense(const std::string& kind, const std::string& params, std::uint64_t seed) {
  DefenseConfig d;
  if (kind == "sor") d.kind = DefenseKind::kSor;
  else if (kind == "srs") d.kind = DefenseKind::kSrs;
  else throw InvalidArgument("unknown defense '" + kind + "'");
  d.seed = seed;
  std::istringstream ss(params);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("defense params must be key=value: " + item);
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    try {
      if (key == "k") d.sor_k = std::stoul(value);
      else if (key == "alpha") d.sor_alpha = std::stod(value);
      else if (key == "ratio") d.srs_drop_ratio = std::stod(value);
      else throw InvalidArgument("unknown defense param '" + key + "'");
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad defense param value: " + item);
    }
  }
  d.validate();
  return d;
}

// ---- subcommands ----------------------------------------------------------------

struct GenArgs {
  int classes = 5;
  std::size_t per_class = 25;
  std::size_t points = 256;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  const auto manifest = gen_synthetic_dataset(a.classes, a.per_class, a.points, a.seed, a.out);
  std::cout << "wrote " << manifest.entries.size() << " clouds to " << a.out << "\n";
  return 0;
}

struct AttackArgs {
  std::string manifest;
  std::string source_id;
  std::string config;
  std::vector<std::string> set;
  std::string out = "results.jsonl";
  OracleOptions oracle;
};

int cmd_attack(const AttackArgs& a) {
  const auto dataset = load_dataset(a.manifest);
  const auto cfg = load_attack_config(a.config, a.set);
  const auto index = dataset.manifest.find(a.source_id);
  const auto factory = make_factory(a.oracle, dataset);
  const auto items = run_attack_batch(dataset, {index}, factory, cfg, 1);
  const auto& item = items.front();
  append_jsonl(a.out, record_of(dataset, item, cfg));
  if (item.result) {
    const auto& r = *item.result;
    const auto path = adv_path_for(out_dir_of(a.out), dataset.manifest.entries[index].id);
    write_xyz(path, r.adversarial_cloud);
    std::printf("%s success=%d adv_label=%d D_h=%.6g D_c=%.6g D_norm=%.6g queries=%llu\n",
                dataset.manifest.entries[index].id.c_str(), r.success ? 1 : 0, r.adv_label, r.metrics.hausdorff,
                r.metrics.chamfer, r.metrics.l2_norm, static_cast<unsigned long long>(r.queries_used));
  } else {
    std::cerr << "error: " << item.error << "\n";
  }
  return item_exit_code(item);
}

struct BatchArgs {
  std::string manifest;
  std::string config;
  std::vector<std::string> set;
  std::string out = "results.jsonl";
  std::size_t workers = 1;
  std::size_t limit = 0;
  bool write_clouds = true;
  OracleOptions oracle;
};

int cmd_batch(const BatchArgs& a) {
  const auto dataset = load_dataset(a.manifest);
  const auto cfg = load_attack_config(a.config, a.set);
  const auto factory = make_factory(a.oracle, dataset);
  const auto dir = out_dir_of(a.out);
  const auto items = run_attack_batch(dataset, pick_sources(dataset, a.limit), factory, cfg, a.workers,
                                      [&](const BatchItem& item) {
                                        append_jsonl(a.out, record_of(dataset, item, cfg));
                                        if (item.result && a.write_clouds) {
                                          write_xyz(adv_path_for(dir, dataset.manifest.entries[item.source_index].id),
                                                    item.result->adversarial_cloud);
                                        }
                                        if (!item.error.empty()) std::cerr << "error: " << item.error << "\n";
                                      });
  print_summary_header(std::cout);
  print_summary(std::cout, a.oracle.spec, summarize(items));
  int code = 0;
  for (const auto& item : items) code = std::max(code, item_exit_code(item));
  return code;
}

struct DefendArgs {
  std::string manifest;
  std::string adv_dir;
  std::string defense = "sor";
  std::string params;
  std::uint64_t seed = 0;
  std::string out = "defense.jsonl";
  OracleOptions oracle;
};

int cmd_defend(const DefendArgs& a) {
  const auto dataset = load_dataset(a.manifest);
  const auto dcfg = parse_defense(a.defense, a.params, a.seed);
  const auto base = make_factory(a.oracle, dataset)();
  DefendedOracle defended(base, dcfg);
  std::size_t count = 0, fooled_plain = 0, fooled_defended = 0;
  std::ofstream out(a.out, std::ios::app);
  if (!out) throw DataError("cannot append to " + a.out);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& id = dataset.manifest.entries[i].id;
    const auto path = adv_path_for(a.adv_dir, id);
    if (!fs::exists(path)) continue;
    const auto adv = read_xyz(path);
    const Label plain = base->classify(adv);
    Label guarded = -1;
    std::string error;
    try {
      guarded = defended.classify(adv);
    } catch (const DefenseAnnihilated& e) {
      error = e.what();
    }
    const bool ok_plain = plain != dataset.label(i);
    const bool ok_defended = guarded >= 0 && guarded != dataset.label(i);
    ++count;
    fooled_plain += ok_plain;
    fooled_defended += ok_defended;
    nlohmann::json rec{{"source_id", id},
                       {"y_true", dataset.label(i)},
                       {"defense", a.defense},
                       {"params", a.params},
                       {"label_undefended", plain},
                       {"label_defended", guarded},
                       {"success_undefended", ok_plain},
                       {"success_defended", ok_defended}};
    if (!error.empty()) rec["error"] = error;
    out << rec.dump() << "\n";
  }
  if (count == 0) throw DataError("no adversarial clouds found in " + a.adv_dir);
  const auto pct = [&](std::size_t k) { return 100.0 * static_cast<double>(k) / static_cast<double>(count); };
  std::printf("%-10s %-20s %6s %14s %14s\n", "defense", "params", "clouds", "ASR_undefended", "ASR_defended");
  std::printf("%-10s %-20s %6zu %13.1f%% %13.1f%%\n", a.defense.c_str(), a.params.empty() ? "-" : a.params.c_str(),
              count, pct(fooled_plain), pct(fooled_defended));
  return 0;
}

struct AblateArgs {
  std::string manifest;
  std::string config;
  std::vector<std::string> set;
  std::string sweep = "rounds";
  std::vector<std::string> values;
  std::string out = "ablation.csv";
  std::size_t workers = 1;
  std::size_t limit = 0;
  OracleOptions oracle;
};

std::vector<std::string> default_grid(const std::string& sweep) {
  if (sweep == "rounds") return {"50", "100", "150", "200"};
  if (sweep == "mc-samples") return {"10", "30", "50"};
  if (sweep == "alpha") return {"0.85:0.2", "0.7:0.2", "0.85:0.5", "1:0.2"};
  if (sweep == "generation") return {"spectrum_fusion", "coordinate_fusion", "random_perturbation"};
  if (sweep == "walking") return {"joint", "coordinate", "spectrum"};
  throw InvalidArgument("unknown sweep '" + sweep + "'");
}

std::vector<std::string> overrides_for(const std::string& sweep, const std::string& value) {
  if (sweep == "rounds") return {"rounds=" + value};
  if (sweep == "mc-samples") return {"mc_samples=" + value};
  if (sweep == "generation") return {"generation=" + value};
  if (sweep == "walking") return {"walk_mode=" + value};
  if (sweep == "alpha") {
    const auto colon = value.find(':');
    if (colon == std::string::npos) throw InvalidArgument("alpha values are LOW:HIGH, got " + value);
    return {"alpha_low=" + value.substr(0, colon), "alpha_high=" + value.substr(colon + 1)};
  }
  throw InvalidArgument("unknown sweep '" + sweep + "'");
}

int cmd_ablate(const AblateArgs& a) {
  const auto dataset = load_dataset(a.manifest);
  const auto factory = make_factory(a.oracle, dataset);
  const auto sources = pick_sources(dataset, a.limit);
  const auto grid = a.values.empty() ? default_grid(a.sweep) : a.values;
  std::ofstream csv(a.out);
  if (!csv) throw DataError("cannot write " + a.out);
  csv << "sweep,value,runs,successes,asr,mean_D_h,mean_D_c,mean_D_norm,median_D,mean_queries\n";
  std::printf("%-12s %-22s %6s %8s %12s %10s\n", "sweep", "value", "runs", "ASR", "median_D", "queries");
  int code = 0;
  for (const auto& value : grid) {
    auto overrides = a.set;
    const auto extra = overrides_for(a.sweep, value);
    overrides.insert(overrides.end(), extra.begin(), extra.end());
    const auto cfg = load_attack_config(a.config, overrides);
    const auto items = run_attack_batch(dataset, sources, factory, cfg, a.workers);
    for (const auto& item : items) code = std::max(code, item_exit_code(item));
    const auto s = summarize(items);
    char line[512];
    std::snprintf(line, sizeof line, "%s,%s,%zu,%zu,%.3f,%.9g,%.9g,%.9g,%.9g,%.3f\n", a.sweep.c_str(), value.c_str(),
                  s.runs, s.successes, s.asr, s.mean_hausdorff, s.mean_chamfer, s.mean_l2, s.median_combined,
                  s.mean_queries);
    csv << line << std::flush;
    std::printf("%-12s %-22s %6zu %7.1f%% %12.6f %10.1f\n", a.sweep.c_str(), value.c_str(), s.runs, s.asr,
                s.median_combined, s.mean_queries);
  }
  return code;
}

struct ServeArgs {
  std::string manifest;
  std::uint16_t port = 0;
  std::string bind = "127.0.0.1";
  std::string name = "centroid";
};

OracleServer* g_server = nullptr;

extern "C" void on_stop_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const ServeArgs& a) {
  const auto dataset = load_dataset(a.manifest);
  auto oracle = std::make_shared<NearestCentroidOracle>(class_prototypes(dataset));
  OracleServer server(oracle, a.name, a.port, a.bind);
  g_server = &server;
  std::signal(SIGINT, on_stop_signal);
  std::signal(SIGTERM, on_stop_signal);
  std::cout << "listening on " << a.bind << ":" << server.port() << std::endl;
  server.wait();
  g_server = nullptr;
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Hard-label point-cloud attack toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen-synthetic", "generate a synthetic shape dataset");
  c_gen->add_option("--classes", gen.classes)->capture_default_str();
  c_gen->add_option("--per-class", gen.per_class)->capture_default_str();
  c_gen->add_option("--points", gen.points)->capture_default_str();
  c_gen->add_option("--seed", gen.seed)->capture_default_str();
  c_gen->add_option("--out", gen.out)->required();

  AttackArgs atk;
  auto* c_atk = app.add_subcommand("attack", "attack one source cloud");
  c_atk->add_option("--manifest", atk.manifest)->required();
  c_atk->add_option("--source-id", atk.source_id)->required();
  c_atk->add_option("--config", atk.config, "key = value config file");
  c_atk->add_option("--set", atk.set, "config override key=value");
  c_atk->add_option("--out", atk.out)->capture_default_str();
  add_oracle_options(c_atk, atk.oracle);

  BatchArgs bat;
  auto* c_bat = app.add_subcommand("attack-batch", "attack every source in a manifest");
  c_bat->add_option("--manifest", bat.manifest)->required();
  c_bat->add_option("--config", bat.config);
  c_bat->add_option("--set", bat.set);
  c_bat->add_option("--out", bat.out)->capture_default_str();
  c_bat->add_option("--workers", bat.workers)->capture_default_str();
  c_bat->add_option("--limit", bat.limit, "attack a class-balanced subset of this size")->capture_default_str();
  add_oracle_options(c_bat, bat.oracle);

  DefendArgs def;
  auto* c_def = app.add_subcommand("defend-eval", "classify stored adversarial clouds through a defense");
  c_def->add_option("--manifest", def.manifest)->required();
  c_def->add_option("--adv-dir", def.adv_dir)->required();
  c_def->add_option("--defense", def.defense)->check(CLI::IsMember({"sor", "srs"}))->capture_default_str();
  c_def->add_option("--params", def.params, "k=2,alpha=1.1 or ratio=0.3");
  c_def->add_option("--seed", def.seed)->capture_default_str();
  c_def->add_option("--out", def.out)->capture_default_str();
  add_oracle_options(c_def, def.oracle);

  AblateArgs abl;
  auto* c_abl = app.add_subcommand("ablate", "rerun a batch over a parameter grid");
  c_abl->add_option("--manifest", abl.manifest)->required();
  c_abl->add_option("--config", abl.config);
  c_abl->add_option("--set", abl.set);
  c_abl->add_option("--sweep", abl.sweep)
      ->check(CLI::IsMember({"rounds", "mc-samples", "alpha", "generation", "walking"}))
      ->capture_default_str();
  c_abl->add_option("--values", abl.values, "grid values; alpha takes LOW:HIGH");
  c_abl->add_option("--out", abl.out)->capture_default_str();
  c_abl->add_option("--workers", abl.workers)->capture_default_str();
  c_abl->add_option("--limit", abl.limit)->capture_default_str();
  add_oracle_options(c_abl, abl.oracle);

  ServeArgs srv;
  auto* c_srv = app.add_subcommand("serve-centroid", "serve the nearest-centroid oracle over TCP");
  c_srv->add_option("--manifest", srv.manifest)->required();
  c_srv->add_option("--port", srv.port)->capture_default_str();
  c_srv->add_option("--bind", srv.bind)->capture_default_str();
  c_srv->add_option("--name", srv.name)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*c_gen) return cmd_gen(gen);
    if (*c_atk) return cmd_attack(atk);
    if (*c_bat) return cmd_batch(bat);
    if (*c_def) return cmd_defend(def);
    if (*c_abl) return cmd_ablate(abl);
    if (*c_srv) return cmd_serve(srv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return error_code_of(e);
  }
  return 1;
}

}  // namespace specwalk
