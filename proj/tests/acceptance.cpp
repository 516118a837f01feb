// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include "specwalk/attack.hpp"
#include "specwalk/dataset.hpp"
#include "specwalk/defense.hpp"
#include "specwalk/geometry.hpp"
#include "specwalk/spectral.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

using namespace specwalk;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Verdict()>& check) {
  Verdict v{false, ""};
  const auto t0 = Clock::now();
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  std::printf("%s criterion %2d: %s | %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str(),
              secs);
  std::fflush(stdout);
  failures += !v.pass;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// The GFT corpus of criteria 1 and 2: 100 clouds cycling through three sizes.
std::vector<PointCloud> gft_corpus() {
  std::vector<PointCloud> out;
  const std::size_t sizes[] = {16, 64, 256};
  for (std::uint64_t i = 0; i < 100; ++i) out.push_back(testing_support::random_cloud(sizes[i % 3], 1000 + i));
  return out;
}

FlatVector unit_vector(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FlatVector v(static_cast<Eigen::Index>(dim));
  for (auto& x : v) x = g(rng);
  return v.normalized();
}

struct Run {
  std::size_t source;
  AttackResult result;
  std::uint64_t ledger_queries;
  double seconds;
  Label fresh_label;
};

struct Batch {
  std::vector<Run> runs;
  double median_combined() const {
    std::vector<double> d;
    for (const auto& r : runs) d.push_back(r.result.metrics.combined);
    return median(d);
  }
};

Batch run_batch(const Dataset& data, const AttackConfig& cfg) {
  const auto prototypes = class_prototypes(data);
  Batch batch;
  for (std::size_t i = 0; i < data.size(); ++i) {
    NearestCentroidOracle oracle(prototypes);
    AttackConfig run_cfg = cfg;
    run_cfg.rng_seed = cfg.rng_seed + i;
    const auto targets = select_targets(data, i, cfg.target_count, cfg.rng_seed);
    const auto t0 = Clock::now();
    auto result = run_attack(data.clouds[i], data.label(i), targets, oracle, run_cfg);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    NearestCentroidOracle fresh(prototypes);
    const Label fresh_label = fresh.classify(result.adversarial_cloud);
    batch.runs.push_back({i, std::move(result), oracle.ledger().total_queries(), secs, fresh_label});
  }
  return batch;
}

}  // namespace

int main() {
  const auto corpus = gft_corpus();

  report(1, "GFT/IGFT round trip on 100 clouds (n in {16,64,256}, K=10)", [&]() -> Verdict {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto& c : corpus) {
      const auto basis = cloud_basis(c, 10);
      worst = std::max(worst, (igft(gft(c, basis), basis).points() - c.points()).cwiseAbs().maxCoeff());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    return {worst < 1e-8 && secs < 30.0, "max error " + fmt("%.3g", worst) + ", runtime " + fmt("%.2fs", secs)};
  });

  report(2, "Parseval on the same corpus", [&]() -> Verdict {
    double worst = 0.0;
    for (const auto& c : corpus) {
      const auto basis = cloud_basis(c, 10);
      const double signal = c.points().norm();
      worst = std::max(worst, std::abs(gft(c, basis).coeffs.norm() - signal) / signal);
    }
    return {worst < 1e-8, "max relative gap " + fmt("%.3g", worst)};
  });

  report(3, "fusion with unit weights reproduces the source (20 pairs)", [&]() -> Verdict {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
      const auto src = testing_support::random_cloud(64, 2000 + i);
      const auto tar = testing_support::random_cloud(64, 3000 + i);
      const auto out = spectrum_fuse(src, tar, cloud_basis(src, 10), cloud_basis(tar, 10), 1.0, 1.0, 32);
      worst = std::max(worst, (out.points() - src.points()).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-9, "max error " + fmt("%.3g", worst)};
  });

  report(4, "low-band energy of a smooth sphere (n=1024, K=10, cutoff=32)", [&]() -> Verdict {
    const auto c = testing_support::sphere_cloud(1024, 7);
    const double frac = band_energy_fraction(gft(c, cloud_basis(c, 10)), 32);
    return {frac >= 0.80, "fraction " + fmt("%.4f", frac)};
  });

  report(5, "boundary projection against an analytic hyperplane (50 instances)", [&]() -> Verdict {
    double worst = 0.0;
    std::uint64_t max_queries = 0;
    bool sides = true;
    for (std::uint64_t i = 0; i < 50; ++i) {
      const auto normal = unit_vector(48, 4000 + i);
      const auto src = testing_support::random_cloud(16, 5000 + i);
      const double f_src = -0.1 - 0.9 * static_cast<double>(i % 10) / 10.0;
      LinearOracle oracle(normal, f_src - normal.dot(src.flat()));
      const auto adv = src.offset(normal * (0.5 + 0.05 * static_cast<double>(i)) +
                                  0.3 * unit_vector(48, 6000 + i));
      const double f_adv = oracle.decision_value(adv);
      if (!(f_adv > 0.0)) return {false, "instance " + std::to_string(i) + " has a benign endpoint"};
      const double beta_star = f_adv / (f_adv - f_src);
      QueryContext ctx(oracle, 0);
      const auto proj = binary_search_projection(src, adv, ctx, 1e-3);
      worst = std::max(worst, std::abs(proj.beta - beta_star));
      sides = sides && oracle.classify(proj.cloud) == 1;
      max_queries = std::max(max_queries, ctx.queries());
    }
    return {worst < 1e-3 && sides && max_queries <= 12,
            "max |beta-beta*| " + fmt("%.3g", worst) + ", adversarial side " + (sides ? "yes" : "no") +
                ", max queries " + std::to_string(max_queries)};
  });

  report(6, "gradient fidelity on a linear oracle (48 dims, B=50, 20 seeds)", [&]() -> Verdict {
    double coord = 0.0, spec = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto normal = unit_vector(48, 7000 + seed);
      const auto x0 = testing_support::random_cloud(16, 8000 + seed);
      LinearOracle oracle(normal, -normal.dot(x0.flat()));
      QueryContext ctx(oracle, 0);
      Rng rng(seed);
      const auto g = estimate_gradient_coordinate(x0, ctx, 50, 0.01, rng);
      coord += g.dot(normal) / (g.norm() * normal.norm()) / 20.0;

      const auto basis = cloud_basis(x0, 5);
      const auto gs = estimate_gradient_spectrum(x0, basis, ctx, 50, 0.01, rng);
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>> n3(normal.data(), 16, 3);
      const SpectrumCoeffs mapped = basis.eigenvectors().transpose() * n3;
      spec += gs.cwiseProduct(mapped).sum() / (gs.norm() * mapped.norm()) / 20.0;
    }
    return {coord >= 0.3 && spec >= 0.3,
            "mean cosine coordinate " + fmt("%.3f", coord) + ", spectrum " + fmt("%.3f", spec)};
  });

  // Shared synthetic setup for criteria 7-11.
  const auto dir = fs::temp_directory_path() / "specwalk_acceptance";
  fs::remove_all(dir);
  gen_synthetic_dataset(5, 5, 256, 2024, dir.string());
  const auto data = load_dataset((dir / "manifest.json").string());
  const AttackConfig defaults;
  std::printf("running %zu default-config attacks (n=256, 5 classes)...\n", data.size());
  std::fflush(stdout);
  const auto t_batch = Clock::now();
  const auto batch = run_batch(data, defaults);
  std::printf("batch finished in %.1fs\n",
              std::chrono::duration<double>(Clock::now() - t_batch).count());

  report(7, "end-to-end ASR, synthetic 5-class set, nearest-centroid oracle", [&]() -> Verdict {
    std::size_t ok = 0, within_time = 0, norm_ok = 0;
    double slowest = 0.0;
    std::string bad;
    for (const auto& r : batch.runs) {
      ok += r.result.success;
      within_time += r.seconds < 120.0;
      slowest = std::max(slowest, r.seconds);
      const bool shrunk = r.result.metrics.l2_norm <= r.result.initial_metrics.l2_norm;
      norm_ok += shrunk;
      if (!shrunk) bad += " " + data.manifest.entries[r.source].id;
    }
    const auto n = batch.runs.size();
    return {ok == n && within_time == n && norm_ok == n,
            "success " + std::to_string(ok) + "/" + std::to_string(n) + ", slowest run " + fmt("%.1fs", slowest) +
                ", D_norm(final) <= D_norm(initial) on " + std::to_string(norm_ok) + "/" + std::to_string(n) +
                (bad.empty() ? "" : " (violations:" + bad + ")")};
  });

  report(8, "best-so-far distance non-increasing, returned cloud re-verifies", [&]() -> Verdict {
    std::size_t monotone = 0, verified = 0;
    for (const auto& r : batch.runs) {
      double best = std::numeric_limits<double>::infinity();
      bool mono = true;
      for (double d : r.result.best_list) {
        const double next = std::min(best, d);
        mono = mono && next <= best;
        best = next;
      }
      mono = mono && r.result.metrics.combined == best;
      monotone += mono;
      verified += r.fresh_label != data.label(r.source);
    }
    const auto n = batch.runs.size();
    return {monotone == n && verified == n, "monotone " + std::to_string(monotone) + "/" + std::to_string(n) +
                                                ", fresh re-verification " + std::to_string(verified) + "/" +
                                                std::to_string(n)};
  });

  report(9, "ablation trends: median combined distance vs rounds and MC samples", [&]() -> Verdict {
    std::map<std::size_t, double> by_rounds{{200, batch.median_combined()}};
    std::map<std::size_t, double> by_samples{{50, batch.median_combined()}};
    for (std::size_t r : {50, 100}) {
      AttackConfig cfg;
      cfg.rounds = r;
      by_rounds[r] = run_batch(data, cfg).median_combined();
    }
    for (std::size_t b : {10, 30}) {
      AttackConfig cfg;
      cfg.mc_samples = b;
      by_samples[b] = run_batch(data, cfg).median_combined();
    }
    std::ostringstream detail;
    bool ok = true;
    double prev = std::numeric_limits<double>::infinity();
    detail << "R";
    for (const auto& [r, d] : by_rounds) {
      detail << " " << r << ":" << fmt("%.5f", d);
      ok = ok && d <= prev;
      prev = d;
    }
    prev = std::numeric_limits<double>::infinity();
    detail << "; B";
    for (const auto& [b, d] : by_samples) {
      detail << " " << b << ":" << fmt("%.5f", d);
      ok = ok && d <= prev;
      prev = d;
    }
    return {ok, detail.str()};
  });

  report(10, "defenses: SOR outlier removal, SRS counts, ASR under SRS", [&]() -> Verdict {
    // Grid with one point displaced by ten spacings.
    const double spacing = 0.05;
    Points grid(6 * 6 * 6, 3);
    int row = 0;
    for (int z = 0; z < 6; ++z)
      for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) grid.row(row++) << x * spacing, y * spacing, z * spacing;
    Points injected = grid;
    injected(100, 2) += 10.0 * spacing;
    const auto kept = sor_filter(PointCloud(injected), 2, 1.1);
    bool sor_ok = kept.size() == grid.rows() - 1 && sor_filter(PointCloud(grid), 2, 1.1).size() == 216;
    for (std::size_t i = 0; sor_ok && i < kept.size(); ++i) sor_ok = kept.point(i) == injected.row(i < 100 ? i : i + 1).transpose();

    const auto c = testing_support::random_cloud(1000, 1);
    const bool srs_ok = srs_filter(c, 0.3, 5).size() == 700 && srs_filter(c, 0.5, 5).size() == 500 &&
                        srs_filter(c, 0.3, 5) == srs_filter(c, 0.3, 5) && srs_filter(c, 0.5, 5) == srs_filter(c, 0.5, 5);

    auto centroid = std::make_shared<NearestCentroidOracle>(class_prototypes(data));
    std::size_t undefended = 0;
    std::map<double, std::size_t> defended;
    for (const auto& r : batch.runs) {
      undefended += centroid->classify(r.result.adversarial_cloud) != data.label(r.source);
      for (double ratio : {0.3, 0.5}) {
        DefendedOracle srs(centroid, DefenseConfig{DefenseKind::kSrs, 2, 1.1, ratio, 99});
        defended[ratio] += srs.classify(r.result.adversarial_cloud) != data.label(r.source);
      }
    }
    const bool asr_ok = defended[0.3] <= undefended && defended[0.5] <= undefended;
    const auto n = std::to_string(batch.runs.size());
    return {sor_ok && srs_ok && asr_ok,
            std::string("SOR ") + (sor_ok ? "ok" : "wrong") + ", SRS counts " + (srs_ok ? "ok" : "wrong") +
                ", ASR undefended " + std::to_string(undefended) + "/" + n + ", SRS 0.3 " +
                std::to_string(defended[0.3]) + "/" + n + ", SRS 0.5 " + std::to_string(defended[0.5]) + "/" + n};
  });

  report(11, "query accounting cross-checked against the oracle ledger", [&]() -> Verdict {
    std::size_t ok = 0;
    for (const auto& r : batch.runs) {
      const auto& a = r.result.account;
      std::uint64_t walks = 0;
      for (const auto& t : r.result.trace) walks += t.queries.gradient + t.queries.projection + t.queries.step;
      const auto expected = 1 + a.fusion + a.initial_projection + walks + 1;
      ok += a.source_check == 1 && a.final_verify == 1 && expected == r.result.queries_used &&
            expected == r.ledger_queries;
    }
    const auto n = batch.runs.size();
    return {ok == n, "consistent on " + std::to_string(ok) + "/" + std::to_string(n) + " runs"};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
