#pragma once

#include "specwalk/config.hpp"
#include "specwalk/geometry.hpp"
#include "specwalk/oracle.hpp"
#include "specwalk/spectral.hpp"

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace specwalk {

using Rng = std::mt19937_64;

// The oracle as seen by one attack run: a true label plus a query counter.
class QueryContext {
 public:
  QueryContext(HardLabelOracle& oracle, Label y_true) : oracle_(oracle), y_true_(y_true) {}

  Label classify(const PointCloud& cloud);
  // +1 adversarial, -1 still classified as y_true.
  int indicator(const PointCloud& cloud) { return classify(cloud) != y_true_ ? 1 : -1; }
  // Indicators of many clouds, in order; evaluated on `threads` workers when the
  // oracle declares itself concurrent-safe.
  std::vector<int> indicators(const std::vector<PointCloud>& clouds, std::size_t threads);

  Label y_true() const { return y_true_; }
  std::uint64_t queries() const { return queries_.load(); }
  HardLabelOracle& oracle() { return oracle_; }

 private:
  HardLabelOracle& oracle_;
  Label y_true_;
  std::atomic<std::uint64_t> queries_{0};
};

struct LabeledCloud {
  PointCloud cloud;
  Label label;
};

// ---- boundary-cloud generation ----------------------------------------------

// Blend the low bands (rows [0, cutoff)) of the two GFT spectra with weight
// alpha_low on the source and the high bands with alpha_high, then transform
// back with the source basis. Rows are aligned by frequency rank.
PointCloud spectrum_fuse(const PointCloud& source, const PointCloud& target, const SpectralBasis& basis_src,
                         const SpectralBasis& basis_tar, double alpha_low, double alpha_high, std::size_t cutoff);

struct FusionWeights {
  double low;
  double high;
};

struct Candidate {
  PointCloud cloud;
  FusionWeights weights;
  Label label;               // oracle label of the candidate (!= y_true)
  std::size_t target_index;  // position in the target list
  std::size_t attempts;      // fusions tried for this target
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  std::uint64_t queries = 0;
  std::size_t targets_skipped = 0;
};

// One adversarial candidate per target at most, lowering both fusion weights by
// alpha_step (clamped at alpha_floor) until the oracle is fooled or the floor
// has been tried. Throws AttackInfeasible when no target yields a candidate.
CandidateSet generate_candidates(const PointCloud& source, const std::vector<LabeledCloud>& targets,
                                 QueryContext& ctx, const AttackConfig& config, Rng& rng);

struct Selection {
  std::size_t index;
  double distance;
  // Every candidate exceeded epsilon; `index` is the overall minimum.
  bool constraint_violated;
};

// argmin of the combined distance among candidates within epsilon max
// point deviation of the source.
Selection select_best_candidate(const std::vector<Candidate>& candidates, const PointCloud& source,
                                const AttackConfig& config);

struct Projection {
  PointCloud cloud;
  double beta;  // weight on the source, returned cloud = beta*source + (1-beta)*adv
  std::uint64_t queries;
};

// Bisection on beta in [0, 1] keeping the adversarial endpoint; stops once the
// bracket is narrower than tol. Assumes adv is adversarial and source is not.
Projection binary_search_projection(const PointCloud& source, const PointCloud& adv, QueryContext& ctx, double tol);

// ---- boundary-cloud optimization ----------------------------------------------

// Probe std-dev: scale * ||boundary - source|| / (3n).
double probe_sigma(const PointCloud& boundary, const PointCloud& source, double scale);

// (1/B) sum_i phi(boundary + v_i) v_i with v_i ~ N(0, sigma^2 I). B queries.
FlatVector estimate_gradient_coordinate(const PointCloud& boundary, QueryContext& ctx, std::size_t samples,
                                        double sigma, Rng& rng, std::size_t threads = 1);

// boundary + xi * grad/||grad||, xi = shrink * ||boundary - source|| / sqrt(t).
// nullopt when the gradient is zero.
std::optional<PointCloud> coordinate_step(const PointCloud& boundary, const FlatVector& grad,
                                          const PointCloud& source, std::size_t t, double shrink = 1.0);

// Frequency rows that receive probe noise; rows outside stay untouched.
struct SpectrumBand {
  std::size_t begin = 0;
  std::size_t end = static_cast<std::size_t>(-1);
};

// (1/B) sum_i phi(IGFT(GFT(boundary) + u_i)) u_i, u_i Gaussian in spectrum space.
SpectrumCoeffs estimate_gradient_spectrum(const PointCloud& boundary, const SpectralBasis& basis, QueryContext& ctx,
                                          std::size_t samples, double sigma, Rng& rng, SpectrumBand band = {},
                                          std::size_t threads = 1);

// IGFT(GFT(boundary) + xi * grad/||grad||). nullopt when the gradient is zero.
std::optional<PointCloud> spectrum_step(const PointCloud& boundary, const SpectrumCoeffs& grad,
                                        const SpectralBasis& basis, double xi);

enum class WalkKind { kCoordinate, kSpectrum };

struct WalkQueries {
  std::uint64_t gradient = 0;
  std::uint64_t step = 0;  // adversariality checks of stepped clouds, retries included
  std::uint64_t projection = 0;
  std::uint64_t total() const { return gradient + step + projection; }
};

// Mutable state of one walk: the current boundary cloud and its distance.
struct WalkState {
  WalkState(PointCloud source, PointCloud boundary, const AttackConfig& config);

  PointCloud source;
  ReferenceCloud source_ref;
  PointCloud boundary;
  double distance;
  Rng rng;
  double gamma1;
  double gamma2;
  ChamferMode chamfer_mode;

  double distance_of(const PointCloud& cloud) const;
};

struct WalkOutcome {
  bool accepted = false;
  // The cloud re-projected onto the boundary after the step, when the step
  // regained adversariality; set even when not accepted.
  std::optional<PointCloud> projected;
  double projected_distance = 0.0;
  WalkQueries queries;
};

// Gradient estimate, step (halving up to walk_retry_limit times until the
// stepped cloud is adversarial), projection back toward the source. The state
// boundary is replaced only when the combined distance improves by more than
// stall_rel_tol; otherwise it is left bit-identical. `t` is the 1-based round.
WalkOutcome walk_iteration(WalkState& state, WalkKind kind, std::size_t t, QueryContext& ctx,
                           const AttackConfig& config);

struct TraceRecord {
  std::size_t iteration;
  WalkKind kind;
  double distance;  // combined distance of the current boundary after this walk
  bool accepted;
  bool moved;       // boundary changed
  WalkQueries queries;
};

struct JointWalkResult {
  PointCloud best;
  double best_distance = 0.0;
  std::vector<double> best_list;  // combined distance of each Best entry, in append order
  std::vector<TraceRecord> trace;
  std::size_t rounds_executed = 0;
  bool truncated = false;  // query budget ran out
};

// Coordinate walk each round; when it stalls, a spectrum walk that improves
// moves the boundary in place without extending Best. Returns the Best entry of
// least combined distance.
JointWalkResult joint_walk(const PointCloud& initial, const PointCloud& source, QueryContext& ctx,
                           const AttackConfig& config);

// ---- pipeline -------------------------------------------------------------------

struct AttackMetrics {
  double hausdorff = 0.0;
  double chamfer = 0.0;
  double l2_norm = 0.0;
  double max_deviation = 0.0;
  double combined = 0.0;
};

AttackMetrics measure(const PointCloud& adv, const PointCloud& source, const AttackConfig& config);

struct QueryAccount {
  std::uint64_t source_check = 0;
  std::uint64_t fusion = 0;
  std::uint64_t initial_projection = 0;
  std::uint64_t walks = 0;
  std::uint64_t final_verify = 0;
  std::uint64_t total() const { return source_check + fusion + initial_projection + walks + final_verify; }
};

struct AttackResult {
  PointCloud source;  // normalized source the metrics refer to
  PointCloud adversarial_cloud;
  bool success = false;
  Label adv_label = -1;
  bool final_verified = false;
  AttackMetrics metrics;
  PointCloud initial_boundary;
  AttackMetrics initial_metrics;
  std::uint64_t queries_used = 0;
  QueryAccount account;
  std::vector<TraceRecord> trace;
  std::vector<double> best_list;
  std::size_t rounds_executed = 0;
  std::size_t candidate_count = 0;
  FusionWeights selected_weights{0.0, 0.0};
  bool constraint_violated = false;
  bool truncated = false;
};

// normalize -> verify source -> candidates -> selection -> projection -> joint
// walk -> final verification. Throws SourceMisclassified, AttackInfeasible,
// BudgetExhausted (before the walk; inside it the result is truncated).
AttackResult run_attack(const PointCloud& source, Label y_true, const std::vector<LabeledCloud>& targets,
                        HardLabelOracle& oracle, const AttackConfig& config);

}  // namespace specwalk
