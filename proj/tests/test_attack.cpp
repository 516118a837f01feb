#include <gtest/gtest.h>

#include "specwalk/attack.hpp"
#include "specwalk/errors.hpp"
#include "support.hpp"

using namespace specwalk;
using testing_support::make_cloud;
using testing_support::random_cloud;
using testing_support::sphere_cloud;

namespace {

// Oracle whose label is fixed at +1 relative to y_true = 0.
class AlwaysOne final : public HardLabelOracle {
 public:
  int class_count() const override { return 2; }

 protected:
  Label do_classify(const PointCloud&) override { return 1; }
};

// Labels 1 exactly when the input is not bit-identical to `benign`.
class OnlySourceIsBenign final : public HardLabelOracle {
 public:
  explicit OnlySourceIsBenign(PointCloud benign) : benign_(std::move(benign)) {}
  int class_count() const override { return 2; }

 protected:
  Label do_classify(const PointCloud& c) override { return c == benign_ ? 0 : 1; }

 private:
  PointCloud benign_;
};

FlatVector unit_normal(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FlatVector v(static_cast<Eigen::Index>(dim));
  for (auto& x : v) x = g(rng);
  return v.normalized();
}

double cosine(const FlatVector& a, const FlatVector& b) { return a.dot(b) / (a.norm() * b.norm()); }

std::vector<Prototype> shape_prototypes(std::size_t n) {
  std::vector<Prototype> out;
  for (int k = 0; k < 3; ++k) {
    Points p = sphere_cloud(n, 90 + k).points();
    p.col(k).array() *= 0.3;
    out.push_back({k, PointCloud(p)});
  }
  return out;
}

}  // namespace

TEST(Fusion, UnitWeightsReproduceSource) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto src = random_cloud(64, s), tar = random_cloud(64, s + 50);
    const auto bs = cloud_basis(src, 10), bt = cloud_basis(tar, 10);
    const auto out = spectrum_fuse(src, tar, bs, bt, 1.0, 1.0, 16);
    EXPECT_LT((out.points() - src.points()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Fusion, ZeroWeightsWithSharedBasisGiveTarget) {
  const auto src = random_cloud(64, 1), tar = random_cloud(64, 2);
  const auto bs = cloud_basis(src, 10);
  const auto out = spectrum_fuse(src, tar, bs, bs, 0.0, 0.0, 16);
  EXPECT_LT((out.points() - tar.points()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Candidates, DefaultWeightsWhenTargetFoolsAtOnce) {
  AlwaysOne oracle;
  QueryContext ctx(oracle, 0);
  AttackConfig cfg;
  cfg.band_cutoff = 8;
  Rng rng(1);
  const auto src = random_cloud(32, 1);
  const auto set = generate_candidates(src, {{random_cloud(32, 2), 1}}, ctx, cfg, rng);
  ASSERT_EQ(set.candidates.size(), 1u);
  EXPECT_EQ(set.candidates[0].weights.low, 0.85);
  EXPECT_EQ(set.candidates[0].weights.high, 0.2);
  EXPECT_EQ(set.candidates[0].attempts, 1u);
  EXPECT_EQ(set.queries, 1u);
  EXPECT_EQ(ctx.queries(), 1u);
}

TEST(Candidates, ScheduleExhaustionSkipsTarget) {
  ConstantOracle oracle(0, 2);
  QueryContext ctx(oracle, 0);
  AttackConfig cfg;
  cfg.band_cutoff = 8;
  Rng rng(1);
  // alpha_low walks 0.85 -> 0 in 0.05 steps: 18 fusions, the last at the floor.
  EXPECT_THROW(generate_candidates(random_cloud(32, 1), {{random_cloud(32, 2), 1}}, ctx, cfg, rng),
               AttackInfeasible);
  EXPECT_EQ(ctx.queries(), 18u);
}

TEST(Candidates, LowWeightsFlipNearestCentroid) {
  const auto protos = shape_prototypes(128);
  NearestCentroidOracle oracle(protos);
  QueryContext ctx(oracle, 0);
  AttackConfig cfg;
  Rng rng(3);
  const auto set = generate_candidates(protos[0].cloud, {{protos[1].cloud, 1}, {protos[2].cloud, 2}}, ctx, cfg, rng);
  EXPECT_EQ(set.candidates.size(), 2u);
  EXPECT_EQ(set.targets_skipped, 0u);
  for (const auto& c : set.candidates) {
    EXPECT_NE(c.label, 0);
    const auto d = oracle.distances(c.cloud);
    EXPECT_LE(d[static_cast<std::size_t>(c.label)], d[0]);
  }
}

TEST(Selection, ArgminAndEpsilon) {
  const auto src = make_cloud({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  AttackConfig cfg;
  auto shifted = [&](double dz, double big) {
    Points p = src.points();
    p.col(2).array() += dz;
    p(0, 0) += big;
    return PointCloud(p);
  };
  std::vector<Candidate> one{{shifted(0.05, 0), {0.85, 0.2}, 1, 0, 1}};
  EXPECT_EQ(select_best_candidate(one, src, cfg).index, 0u);

  std::vector<Candidate> two{{shifted(0.1, 0), {0.85, 0.2}, 1, 0, 1}, {shifted(0.05, 0), {0.85, 0.2}, 1, 1, 1}};
  EXPECT_EQ(select_best_candidate(two, src, cfg).index, 1u);

  // Candidate 1 permutes two points: zero set distance, index-wise deviation 1 > epsilon.
  Points swapped = src.points();
  swapped.row(0).swap(swapped.row(1));
  std::vector<Candidate> eps{{shifted(0.12, 0), {0.85, 0.2}, 1, 0, 1}, {PointCloud(swapped), {0.85, 0.2}, 1, 1, 1}};
  ASSERT_LT(combined_distance(eps[1].cloud, src, 2.0, 0.5), combined_distance(eps[0].cloud, src, 2.0, 0.5));
  const auto sel = select_best_candidate(eps, src, cfg);
  EXPECT_EQ(sel.index, 0u);
  EXPECT_FALSE(sel.constraint_violated);

  std::vector<Candidate> all_bad{{shifted(0.0, 0.5), {0.85, 0.2}, 1, 0, 1}, {shifted(0.0, 0.3), {0.85, 0.2}, 1, 1, 1}};
  const auto fallback = select_best_candidate(all_bad, src, cfg);
  EXPECT_EQ(fallback.index, 1u);
  EXPECT_TRUE(fallback.constraint_violated);
}

TEST(Projection, LinearCrossing) {
  // Source at x=-1, adversarial at x=+1 on a single point: boundary x=0 at beta*=0.5.
  FlatVector normal = FlatVector::Zero(3);
  normal[0] = 1.0;
  LinearOracle oracle(normal, 0.0);
  QueryContext ctx(oracle, 0);
  const auto src = make_cloud({{-1, 0, 0}});
  const auto adv = make_cloud({{1, 0, 0}});
  const auto proj = binary_search_projection(src, adv, ctx, 1e-3);
  EXPECT_NEAR(proj.beta, 0.5, 1e-3);
  EXPECT_EQ(oracle.classify(proj.cloud), 1);
  EXPECT_EQ(proj.queries, 10u);
  EXPECT_EQ(ctx.queries(), 10u);
}

TEST(Projection, TinyIntervalReturnsAdversarialEnd) {
  const auto src = make_cloud({{0, 0, 0}});
  const auto adv = make_cloud({{1e-6, 0, 0}});
  OnlySourceIsBenign oracle(src);
  QueryContext ctx(oracle, 0);
  const auto proj = binary_search_projection(src, adv, ctx, 1e-3);
  EXPECT_LT(proj.beta, 1.0);
  EXPECT_EQ(oracle.classify(proj.cloud), 1);
  EXPECT_LE(proj.queries, 10u);
}

TEST(Gradient, ConstantIndicatorGivesMeanProbe) {
  AlwaysOne oracle;
  QueryContext ctx(oracle, 0);
  const auto b = random_cloud(16, 1);
  Rng rng(9), replay(9);
  const auto g = estimate_gradient_coordinate(b, ctx, 50, 0.1, rng);
  std::normal_distribution<double> normal(0.0, 0.1);
  FlatVector mean = FlatVector::Zero(48);
  for (int i = 0; i < 50; ++i) {
    FlatVector v(48);
    for (auto& x : v) x = normal(replay);
    mean += v / 50.0;
  }
  EXPECT_LT((g - mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(ctx.queries(), 50u);
}

TEST(Gradient, CoordinateCosineOnLinearOracle) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto normal = unit_normal(48, seed);
    const auto x0 = random_cloud(16, seed + 100);
    LinearOracle oracle(normal, -normal.dot(x0.flat()));  // x0 on the hyperplane
    QueryContext ctx(oracle, 0);
    Rng rng(seed);
    total += cosine(estimate_gradient_coordinate(x0, ctx, 50, 0.01, rng), normal);
  }
  EXPECT_GE(total / 20.0, 0.3);
}

TEST(Gradient, SpectrumCosineOnLinearOracle) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto normal = unit_normal(48, seed);
    const auto x0 = random_cloud(16, seed + 100);
    const auto basis = cloud_basis(x0, 5);
    LinearOracle oracle(normal, -normal.dot(x0.flat()));
    QueryContext ctx(oracle, 0);
    Rng rng(seed);
    const auto g = estimate_gradient_spectrum(x0, basis, ctx, 50, 0.01, rng);
    // The decision value changes along U * u, so the spectrum-space normal is U^T N.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>> n3(normal.data(), 16, 3);
    const SpectrumCoeffs mapped = basis.eigenvectors().transpose() * n3;
    total += g.cwiseProduct(mapped).sum() / (g.norm() * mapped.norm());
  }
  EXPECT_GE(total / 20.0, 0.3);
}

TEST(Gradient, SpectrumConstantIndicatorAndBand) {
  AlwaysOne oracle;
  QueryContext ctx(oracle, 0);
  const auto b = random_cloud(20, 2);
  const auto basis = cloud_basis(b, 5);
  Rng r1(4), r2(4);
  const auto g1 = estimate_gradient_spectrum(b, basis, ctx, 30, 0.1, r1, {8, 20});
  const auto g2 = estimate_gradient_spectrum(b, basis, ctx, 30, 0.1, r2, {8, 20});
  EXPECT_EQ(g1, g2);
  EXPECT_EQ(g1.topRows(8).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(g1.bottomRows(12).cwiseAbs().maxCoeff(), 0.0);
  // Probes keep the low band: stepping along a high-band gradient leaves it intact.
  const auto stepped = spectrum_step(b, g1, basis, 0.5);
  ASSERT_TRUE(stepped);
  const auto before = gft(b, basis), after = gft(*stepped, basis);
  EXPECT_LT((after.coeffs.topRows(8) - before.coeffs.topRows(8)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Steps, CoordinateStepLength) {
  Points s = Points::Zero(2, 3);
  Points b = Points::Zero(2, 3);
  b(0, 0) = 0.8;
  const PointCloud src(s), bnd(b);
  FlatVector g = FlatVector::Zero(6);
  g[4] = 3.0;
  const auto p = coordinate_step(bnd, g, src, 4);
  ASSERT_TRUE(p);
  EXPECT_NEAR(l2_norm_distance(*p, bnd), 0.4, 1e-15);
  EXPECT_EQ(*coordinate_step(bnd, 7.0 * g, src, 4), *p);
  EXPECT_LT(l2_norm_distance(*coordinate_step(bnd, g, src, 1000000), bnd), 1e-3);
  EXPECT_FALSE(coordinate_step(bnd, FlatVector::Zero(6), src, 1));
}

TEST(Steps, SpectrumStepLinearityAndGuard) {
  const auto b = random_cloud(24, 3);
  const auto basis = cloud_basis(b, 5);
  SpectrumCoeffs g = SpectrumCoeffs::Random(24, 3);
  const auto fwd = spectrum_step(b, g, basis, 5.0);
  ASSERT_TRUE(fwd);
  const auto back = spectrum_step(*fwd, g, basis, -5.0);
  EXPECT_LT((back->points() - b.points()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(l2_norm_distance(*fwd, b), 5.0, 1e-9);
  EXPECT_FALSE(spectrum_step(b, SpectrumCoeffs::Zero(24, 3), basis, 5.0));
}

TEST(Walk, LinearOracleAcceptsOnlyImprovements) {
  const auto normal = unit_normal(48, 1);
  const auto src = random_cloud(16, 2);
  LinearOracle oracle(normal, 1.0 - normal.dot(src.flat()));  // source at decision value 1 -> label 1
  QueryContext ctx(oracle, 1);
  AttackConfig cfg;
  cfg.band_cutoff = 4;
  cfg.k_neighbors = 5;
  const auto adv = src.offset(-3.0 * normal + 0.5 * unit_normal(48, 7));
  ASSERT_EQ(oracle.classify(adv), 0);
  auto start = binary_search_projection(src, adv, ctx, cfg.binary_search_tol).cloud;
  WalkState state(src, start, cfg);
  double last = state.distance;
  std::size_t accepted = 0;
  for (std::size_t t = 1; t <= 30; ++t) {
    const auto before = state.boundary;
    const auto o = walk_iteration(state, WalkKind::kCoordinate, t, ctx, cfg);
    if (o.accepted) {
      EXPECT_LT(state.distance, last);
      ++accepted;
    } else {
      EXPECT_EQ(state.boundary, before);
    }
    last = state.distance;
  }
  EXPECT_GT(accepted, 0u);
}

TEST(Walk, ZeroRetriesAndFailedStepStalls) {
  const auto src = random_cloud(16, 4);
  // The adversarial region is a single cloud, so every step fails.
  class OnlyBoundary final : public HardLabelOracle {
   public:
    explicit OnlyBoundary(PointCloud adv) : adv_(std::move(adv)) {}
    int class_count() const override { return 2; }

   protected:
    Label do_classify(const PointCloud& c) override { return c == adv_ ? 1 : 0; }

   private:
    PointCloud adv_;
  };
  const auto start = src.offset(FlatVector::Constant(48, 0.1));
  OnlyBoundary oracle(start);
  QueryContext ctx(oracle, 0);
  AttackConfig cfg;
  cfg.walk_retry_limit = 0;
  cfg.mc_samples = 5;
  cfg.band_cutoff = 4;
  cfg.k_neighbors = 5;
  WalkState state(src, start, cfg);
  const auto o = walk_iteration(state, WalkKind::kCoordinate, 1, ctx, cfg);
  EXPECT_FALSE(o.accepted);
  EXPECT_FALSE(o.projected);
  EXPECT_EQ(state.boundary, start);
  EXPECT_EQ(o.queries.gradient, 5u);
  EXPECT_LE(o.queries.step, 1u);

  cfg.rounds = 5;
  QueryContext ctx2(oracle, 0);
  const auto walk = joint_walk(start, src, ctx2, cfg);
  EXPECT_EQ(walk.best, start);
  EXPECT_EQ(walk.best_list.size(), 1u);
  EXPECT_EQ(walk.rounds_executed, 5u);
}

TEST(Walk, BudgetTruncatesJointWalk) {
  const auto protos = shape_prototypes(64);
  auto inner = std::make_shared<NearestCentroidOracle>(protos);
  AttackConfig cfg;
  cfg.band_cutoff = 8;
  cfg.rounds = 50;
  auto budgeted = with_budget(inner, 400);
  const auto r = run_attack(protos[0].cloud, 0, {{protos[1].cloud, 1}, {protos[2].cloud, 2}}, *budgeted, cfg);
  EXPECT_TRUE(r.truncated);
  EXPECT_LT(r.rounds_executed, 50u);
  EXPECT_LE(r.queries_used, 400u);
  EXPECT_EQ(r.queries_used, budgeted->ledger().total_queries());
}

TEST(RunAttack, SourceMisclassifiedCostsOneQuery) {
  ConstantOracle oracle(1, 3);
  AttackConfig cfg;
  cfg.band_cutoff = 8;
  EXPECT_THROW(run_attack(random_cloud(32, 1), 0, {{random_cloud(32, 2), 2}}, oracle, cfg), SourceMisclassified);
  EXPECT_EQ(oracle.ledger().total_queries(), 1u);
}

TEST(RunAttack, SmallEndToEnd) {
  const auto protos = shape_prototypes(64);
  NearestCentroidOracle oracle(protos);
  AttackConfig cfg;
  cfg.band_cutoff = 8;
  cfg.rounds = 20;
  cfg.rng_seed = 5;
  const auto r = run_attack(protos[0].cloud, 0, {{protos[1].cloud, 1}, {protos[2].cloud, 2}}, oracle, cfg);
  EXPECT_TRUE(r.success);
  EXPECT_TRUE(r.final_verified);
  EXPECT_EQ(r.queries_used, oracle.ledger().total_queries());
  EXPECT_NE(oracle.classify(r.adversarial_cloud), 0);
  EXPECT_LE(r.metrics.combined, r.initial_metrics.combined);
  EXPECT_EQ(r.metrics.combined, *std::min_element(r.best_list.begin(), r.best_list.end()));
  for (std::size_t i = 1; i < r.best_list.size(); ++i) EXPECT_LT(r.best_list[i], r.best_list[i - 1]);
  for (const auto& t : r.trace) EXPECT_EQ(t.moved, t.accepted);
  EXPECT_EQ(r.queries_used, r.account.total());
  std::uint64_t walk = 0;
  for (const auto& t : r.trace) walk += t.queries.total();
  EXPECT_EQ(walk, r.account.walks);

  NearestCentroidOracle again(protos);
  const auto r2 = run_attack(protos[0].cloud, 0, {{protos[1].cloud, 1}, {protos[2].cloud, 2}}, again, cfg);
  EXPECT_EQ(r2.adversarial_cloud, r.adversarial_cloud);
}

TEST(RunAttack, ParallelProbesMatchSerial) {
  const auto protos = shape_prototypes(64);
  AttackConfig cfg;
  cfg.band_cutoff = 8;
  cfg.rounds = 5;
  NearestCentroidOracle a(protos), b(protos);
  const auto serial = run_attack(protos[0].cloud, 0, {{protos[1].cloud, 1}}, a, cfg);
  cfg.probe_threads = 4;
  const auto parallel = run_attack(protos[0].cloud, 0, {{protos[1].cloud, 1}}, b, cfg);
  EXPECT_EQ(serial.adversarial_cloud, parallel.adversarial_cloud);
  EXPECT_EQ(serial.queries_used, parallel.queries_used);
}
