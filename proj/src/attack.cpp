#include "specwalk/attack.hpp"

#include "specwalk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

namespace specwalk {

// ---- QueryContext -----------------------------------------------------------------

Label QueryContext::classify(const PointCloud& cloud) {
  const Label label = oracle_.classify(cloud);
  queries_.fetch_add(1);
  return label;
}

std::vector<int> QueryContext::indicators(const std::vector<PointCloud>& clouds, std::size_t threads) {
  std::vector<int> phi(clouds.size(), 0);
  const auto workers = std::min(threads, clouds.size());
  if (workers <= 1 || oracle_.concurrency() == Concurrency::kSerial) {
    for (std::size_t i = 0; i < clouds.size(); ++i) phi[i] = indicator(clouds[i]);
    return phi;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < clouds.size(); i += workers) phi[i] = indicator(clouds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return phi;
}

// ---- generation -------------------------------------------------------------------

PointCloud spectrum_fuse(const PointCloud& source, const PointCloud& target, const SpectralBasis& basis_src,
                         const SpectralBasis& basis_tar, double alpha_low, double alpha_high, std::size_t cutoff) {
  if (source.size() != target.size()) throw InvalidArgument("spectrum_fuse: source and target differ in point count");
  const auto [src_low, src_high] = split_bands(gft(source, basis_src), cutoff);
  const auto [tar_low, tar_high] = split_bands(gft(target, basis_tar), cutoff);
  const Spectrum low{alpha_low * src_low.coeffs + (1.0 - alpha_low) * tar_low.coeffs, basis_src.id()};
  const Spectrum high{alpha_high * src_high.coeffs + (1.0 - alpha_high) * tar_high.coeffs, basis_src.id()};
  return igft(concat_bands(low, high), basis_src);
}

namespace {

double scheduled_weight(double start, double step, std::size_t s, double floor) {
  const double w = start - static_cast<double>(s) * step;
  return w <= floor + 1e-12 ? floor : w;
}

}  // namespace

CandidateSet generate_candidates(const PointCloud& source, const std::vector<LabeledCloud>& targets,
                                 QueryContext& ctx, const AttackConfig& config, Rng& rng) {
  if (targets.empty()) throw InvalidArgument("generate_candidates: no target clouds");
  std::optional<SpectralBasis> basis_src;
  if (config.generation == GenerationStrategy::kSpectrumFusion)
    basis_src = cloud_basis(source, config.k_neighbors, config.laplacian_weighting);

  CandidateSet out;
  const auto count = std::min(config.target_count, targets.size());
  for (std::size_t ti = 0; ti < count; ++ti) {
    const auto& target = targets[ti];
    if (target.cloud.size() != source.size())
      throw InvalidArgument("generate_candidates: target " + std::to_string(ti) + " differs in point count");
    if (target.label == ctx.y_true())
      throw InvalidArgument("generate_candidates: target " + std::to_string(ti) + " carries the true label");

    std::optional<SpectralBasis> basis_tar;
    if (config.generation == GenerationStrategy::kSpectrumFusion)
      basis_tar = cloud_basis(target.cloud, config.k_neighbors, config.laplacian_weighting);

    for (std::size_t s = 0;; ++s) {
      const FusionWeights w{scheduled_weight(config.alpha_low, config.alpha_step, s, config.alpha_floor),
                            scheduled_weight(config.alpha_high, config.alpha_step, s, config.alpha_floor)};
      PointCloud cloud = [&] {
        switch (config.generation) {
          case GenerationStrategy::kCoordinateFusion:
            return interpolate(source, target.cloud, w.low);
          case GenerationStrategy::kRandomPerturbation: {
            std::normal_distribution<double> noise(0.0, 0.5 * (1.0 - w.low));
            FlatVector delta(source.flat().size());
            for (auto& x : delta) x = noise(rng);
            return source.offset(delta);
          }
          default:
            return spectrum_fuse(source, target.cloud, *basis_src, *basis_tar, w.low, w.high, config.band_cutoff);
        }
      }();
      ++out.queries;
      const Label label = ctx.classify(cloud);
      if (label != ctx.y_true()) {
        out.candidates.push_back({std::move(cloud), w, label, ti, s + 1});
        break;
      }
      if (w.low <= config.alpha_floor && w.high <= config.alpha_floor) {
        ++out.targets_skipped;
        break;
      }
    }
  }
  if (out.candidates.empty())
    throw AttackInfeasible("no target produced an adversarial candidate down to the fusion-weight floor");
  return out;
}

Selection select_best_candidate(const std::vector<Candidate>& candidates, const PointCloud& source,
                                const AttackConfig& config) {
  if (candidates.empty()) throw InvalidArgument("select_best_candidate: empty candidate list");
  const ReferenceCloud ref(source);
  const auto mode = config.symmetric_chamfer ? ChamferMode::kSymmetric : ChamferMode::kOneDirectional;
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  std::size_t best_ok = kNone;
  std::size_t best_any = 0;
  double d_ok = std::numeric_limits<double>::infinity();
  double d_any = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double d = ref.breakdown(candidates[i].cloud, mode).combined(config.gamma1, config.gamma2);
    if (d < d_any) {
      d_any = d;
      best_any = i;
    }
    if (max_pointwise_deviation(candidates[i].cloud, source) <= config.epsilon && d < d_ok) {
      d_ok = d;
      best_ok = i;
    }
  }
  if (best_ok != kNone) return {best_ok, d_ok, false};
  return {best_any, d_any, true};
}

Projection binary_search_projection(const PointCloud& source, const PointCloud& adv, QueryContext& ctx, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("binary_search_projection: tol must lie in (0, 1)");
  if (source.size() != adv.size()) throw InvalidArgument("binary_search_projection: point counts differ");
  double adversarial = 0.0;  // beta known to be adversarial
  double benign = 1.0;       // beta known to be classified as y_true
  std::uint64_t queries = 0;
  while (benign - adversarial >= tol) {
    const double mid = 0.5 * (adversarial + benign);
    ++queries;
    if (ctx.indicator(interpolate(source, adv, mid)) == 1) {
      adversarial = mid;
    } else {
      benign = mid;
    }
  }
  return {interpolate(source, adv, adversarial), adversarial, queries};
}

// ---- optimization -------------------------------------------------------------------

double probe_sigma(const PointCloud& boundary, const PointCloud& source, double scale) {
  return scale * l2_norm_distance(boundary, source) / static_cast<double>(3 * boundary.size());
}

FlatVector estimate_gradient_coordinate(const PointCloud& boundary, QueryContext& ctx, std::size_t samples,
                                        double sigma, Rng& rng, std::size_t threads) {
  if (samples < 1) throw InvalidArgument("estimate_gradient_coordinate: need at least one sample");
  if (!(sigma > 0.0)) throw InvalidArgument("estimate_gradient_coordinate: sigma must be positive");
  const auto dim = boundary.flat().size();
  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<FlatVector> moves(samples, FlatVector(dim));
  std::vector<PointCloud> probes;
  probes.reserve(samples);
  for (auto& v : moves) {
    for (auto& x : v) x = normal(rng);
    probes.push_back(boundary.offset(v));
  }
  const auto phi = ctx.indicators(probes, threads);
  FlatVector grad = FlatVector::Zero(dim);
  for (std::size_t i = 0; i < samples; ++i) grad += static_cast<double>(phi[i]) * moves[i];
  return grad / static_cast<double>(samples);
}

std::optional<PointCloud> coordinate_step(const PointCloud& boundary, const FlatVector& grad, const PointCloud& source,
                                          std::size_t t, double shrink) {
  if (t < 1) throw InvalidArgument("coordinate_step: iteration index starts at 1");
  const double norm = grad.norm();
  if (!(norm > 0.0)) return std::nullopt;
  const double xi = shrink * l2_norm_distance(boundary, source) / std::sqrt(static_cast<double>(t));
  return boundary.offset((xi / norm) * grad);
}

SpectrumCoeffs estimate_gradient_spectrum(const PointCloud& boundary, const SpectralBasis& basis, QueryContext& ctx,
                                          std::size_t samples, double sigma, Rng& rng, SpectrumBand band,
                                          std::size_t threads) {
  if (samples < 1) throw InvalidArgument("estimate_gradient_spectrum: need at least one sample");
  if (!(sigma > 0.0)) throw InvalidArgument("estimate_gradient_spectrum: sigma must be positive");
  const auto spectrum = gft(boundary, basis);
  const auto n = static_cast<Eigen::Index>(spectrum.size());
  const auto begin = static_cast<Eigen::Index>(std::min(band.begin, spectrum.size()));
  const auto end = static_cast<Eigen::Index>(std::min(band.end, spectrum.size()));
  if (begin >= end) throw InvalidArgument("estimate_gradient_spectrum: empty probe band");

  std::normal_distribution<double> normal(0.0, sigma);
  std::vector<SpectrumCoeffs> moves(samples, SpectrumCoeffs::Zero(n, 3));
  std::vector<PointCloud> probes;
  probes.reserve(samples);
  for (auto& u : moves) {
    for (Eigen::Index r = begin; r < end; ++r) {
      for (int c = 0; c < 3; ++c) u(r, c) = normal(rng);
    }
    probes.push_back(igft(Spectrum{spectrum.coeffs + u, basis.id()}, basis));
  }
  const auto phi = ctx.indicators(probes, threads);
  SpectrumCoeffs grad = SpectrumCoeffs::Zero(n, 3);
  for (std::size_t i = 0; i < samples; ++i) grad += static_cast<double>(phi[i]) * moves[i];
  return grad / static_cast<double>(samples);
}

std::optional<PointCloud> spectrum_step(const PointCloud& boundary, const SpectrumCoeffs& grad,
                                        const SpectralBasis& basis, double xi) {
  const double norm = grad.norm();
  if (!(norm > 0.0)) return std::nullopt;
  auto spectrum = gft(boundary, basis);
  if (static_cast<std::size_t>(grad.rows()) != spectrum.size())
    throw InvalidArgument("spectrum_step: gradient size does not match basis");
  spectrum.coeffs += (xi / norm) * grad;
  return igft(spectrum, basis);
}

WalkState::WalkState(PointCloud src, PointCloud initial, const AttackConfig& config)
    : source(std::move(src)),
      source_ref(source),
      boundary(std::move(initial)),
      distance(0.0),
      rng(config.rng_seed),
      gamma1(config.gamma1),
      gamma2(config.gamma2),
      chamfer_mode(config.symmetric_chamfer ? ChamferMode::kSymmetric : ChamferMode::kOneDirectional) {
  if (boundary.size() != source.size()) throw InvalidArgument("WalkState: boundary and source differ in point count");
  distance = distance_of(boundary);
}

double WalkState::distance_of(const PointCloud& cloud) const {
  return source_ref.breakdown(cloud, chamfer_mode).combined(gamma1, gamma2);
}

WalkOutcome walk_iteration(WalkState& state, WalkKind kind, std::size_t t, QueryContext& ctx,
                           const AttackConfig& config) {
  WalkOutcome out;
  const double sigma = probe_sigma(state.boundary, state.source, config.mc_sigma_scale);
  if (!(sigma > 0.0)) return out;  // boundary coincides with the source: nothing to walk

  FlatVector coord_grad;
  SpectrumCoeffs spec_grad;
  std::optional<SpectralBasis> basis;
  if (kind == WalkKind::kCoordinate) {
    coord_grad = estimate_gradient_coordinate(state.boundary, ctx, config.mc_samples, sigma, state.rng,
                                              config.probe_threads);
  } else {
    // Points moved since the last spectrum walk, so the graph is rebuilt.
    basis = cloud_basis(state.boundary, config.k_neighbors, config.laplacian_weighting);
    spec_grad = estimate_gradient_spectrum(state.boundary, *basis, ctx, config.mc_samples, sigma, state.rng, {},
                                           config.probe_threads);
  }
  out.queries.gradient = config.mc_samples;

  std::optional<PointCloud> stepped;
  double shrink = 1.0;
  for (std::size_t attempt = 0; attempt <= config.walk_retry_limit; ++attempt, shrink *= 0.5) {
    auto candidate = kind == WalkKind::kCoordinate
                         ? coordinate_step(state.boundary, coord_grad, state.source, t, shrink)
                         : spectrum_step(state.boundary, spec_grad, *basis, config.xi_spe * shrink);
    if (!candidate) break;  // zero gradient
    ++out.queries.step;
    if (ctx.indicator(*candidate) == 1) {
      stepped = std::move(candidate);
      break;
    }
  }
  if (!stepped) return out;

  auto projection = binary_search_projection(state.source, *stepped, ctx, config.binary_search_tol);
  out.queries.projection = projection.queries;
  out.projected_distance = state.distance_of(projection.cloud);
  if (out.projected_distance < state.distance * (1.0 - config.stall_rel_tol)) {
    state.boundary = projection.cloud;
    state.distance = out.projected_distance;
    out.accepted = true;
  }
  out.projected = std::move(projection.cloud);
  return out;
}

JointWalkResult joint_walk(const PointCloud& initial, const PointCloud& source, QueryContext& ctx,
                           const AttackConfig& config) {
  WalkState state(source, initial, config);
  JointWalkResult result;
  result.best = initial;
  result.best_distance = state.distance;
  result.best_list.push_back(state.distance);

  auto append_best = [&] {
    result.best_list.push_back(state.distance);
    if (state.distance < result.best_distance) {
      result.best_distance = state.distance;
      result.best = state.boundary;
    }
  };
  auto record = [&](std::size_t i, WalkKind kind, const WalkOutcome& o, bool moved) {
    result.trace.push_back({i, kind, state.distance, o.accepted, moved, o.queries});
  };

  for (std::size_t i = 1; i <= config.rounds; ++i) {
    try {
      if (config.walk_mode == WalkMode::kSpectrumOnly) {
        const auto o = walk_iteration(state, WalkKind::kSpectrum, i, ctx, config);
        record(i, WalkKind::kSpectrum, o, o.accepted);
        if (o.accepted) append_best();
      } else {
        const auto o = walk_iteration(state, WalkKind::kCoordinate, i, ctx, config);
        record(i, WalkKind::kCoordinate, o, o.accepted);
        if (o.accepted) {
          append_best();
        } else if (config.walk_mode == WalkMode::kJoint) {
          // Moves the boundary in place when it improves; Best is left alone.
          const auto spectral = walk_iteration(state, WalkKind::kSpectrum, i, ctx, config);
          record(i, WalkKind::kSpectrum, spectral, spectral.accepted);
        }
      }
    } catch (const BudgetExhausted&) {
      result.truncated = true;
      break;
    }
    result.rounds_executed = i;
  }
  return result;
}

// ---- pipeline ---------------------------------------------------------------------------

AttackMetrics measure(const PointCloud& adv, const PointCloud& source, const AttackConfig& config) {
  const auto mode = config.symmetric_chamfer ? ChamferMode::kSymmetric : ChamferMode::kOneDirectional;
  const auto parts = ReferenceCloud(source).breakdown(adv, mode);
  AttackMetrics m;
  m.hausdorff = parts.hausdorff;
  m.chamfer = parts.chamfer;
  m.combined = parts.combined(config.gamma1, config.gamma2);
  m.l2_norm = l2_norm_distance(adv, source);
  m.max_deviation = max_pointwise_deviation(adv, source);
  return m;
}

AttackResult run_attack(const PointCloud& source, Label y_true, const std::vector<LabeledCloud>& targets,
                        HardLabelOracle& oracle, const AttackConfig& config) {
  if (targets.empty()) throw InvalidArgument("run_attack: no target clouds");
  if (y_true < 0 || y_true >= oracle.class_count()) throw InvalidArgument("run_attack: y_true outside [0, C)");
  const PointCloud src = normalize_unit_ball(source);
  config.validate_for(src.size());

  std::vector<LabeledCloud> normalized;
  normalized.reserve(targets.size());
  for (const auto& t : targets) {
    if (t.label == y_true) throw InvalidArgument("run_attack: target label equals the true label");
    if (t.cloud.size() != src.size()) throw InvalidArgument("run_attack: target point count differs from source");
    normalized.push_back({normalize_unit_ball(t.cloud), t.label});
  }

  QueryContext ctx(oracle, y_true);
  AttackResult result;
  result.source = src;

  const Label source_label = ctx.classify(src);
  result.account.source_check = 1;
  if (source_label != y_true) throw SourceMisclassified(y_true, source_label);

  // Separate stream from the walk so the walk's draws do not depend on generation.
  Rng generation_rng(config.rng_seed ^ 0x9e3779b97f4a7c15ULL);
  const auto candidates = generate_candidates(src, normalized, ctx, config, generation_rng);
  result.account.fusion = candidates.queries;
  result.candidate_count = candidates.candidates.size();

  const auto selection = select_best_candidate(candidates.candidates, src, config);
  const auto& chosen = candidates.candidates[selection.index];
  result.selected_weights = chosen.weights;
  result.constraint_violated = selection.constraint_violated;

  auto projection = binary_search_projection(src, chosen.cloud, ctx, config.binary_search_tol);
  result.account.initial_projection = projection.queries;
  result.initial_boundary = projection.cloud;
  result.initial_metrics = measure(projection.cloud, src, config);

  const auto before_walk = ctx.queries();
  auto walk = joint_walk(projection.cloud, src, ctx, config);
  result.account.walks = ctx.queries() - before_walk;
  result.trace = std::move(walk.trace);
  result.best_list = std::move(walk.best_list);
  result.rounds_executed = walk.rounds_executed;
  result.truncated = walk.truncated;
  result.adversarial_cloud = std::move(walk.best);

  try {
    const Label label = ctx.classify(result.adversarial_cloud);
    result.account.final_verify = 1;
    result.final_verified = true;
    result.adv_label = label;
    result.success = label != y_true;
  } catch (const BudgetExhausted&) {
    result.truncated = true;
  }
  result.metrics = measure(result.adversarial_cloud, src, config);
  result.queries_used = ctx.queries();
  return result;
}

}  // namespace specwalk
