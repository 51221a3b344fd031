#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcies/common.hpp"

namespace mcies::scenario {

enum class Source { WT, PV };

std::string to_string(Source s);
Source source_from_string(const std::string& tag);

/// One renewable output path in per-unit of installed capacity.
struct SamplePath {
  Source source = Source::WT;
  HourlySeries values{};
};

/// Throws DomainError unless every value is finite and within [0, 1].
void validate(const SamplePath& path);

// ---------------------------------------------------------------------------
// Adversarial-network objectives, evaluated as batch statistics over
// discriminator outputs. No network lives here.

struct LossBatch {
  std::vector<double> d_real;
  std::vector<double> d_fake;
  std::vector<double> grad_norms;
  double lambda = 0.0;
};

struct GanLosses {
  double generator = 0.0;
  double discriminator = 0.0;
};

/// L_G = mean log(1 - D(G(z))), L_D = mean log D(x) + mean log(1 - D(G(z))).
/// Every discriminator output must lie strictly inside (0, 1).
GanLosses gan_losses(const LossBatch& batch);

/// Critic gap plus gradient penalty:
/// mean(d_real) - mean(d_fake) + lambda * mean((|grad| - 1)^2).
double wgan_gp_objective(const LossBatch& batch);

// ---------------------------------------------------------------------------
// Scenario reduction.

struct ClusterResult {
  Source source = Source::WT;
  std::vector<HourlySeries> centroids;
  std::vector<std::size_t> assignment;  // per sample
  std::vector<std::size_t> counts;      // N_k
  std::size_t total = 0;                // N
  std::vector<double> probabilities;    // N_k / N
  std::size_t iterations = 0;
  double inertia = 0.0;  // sum of squared distances to own centroid

  std::size_t k() const { return centroids.size(); }
};

struct KMeansOptions {
  std::size_t max_iter = 300;
  // independent seedings; the lowest-inertia run is kept
  std::size_t restarts = 1;
};

/// Kmeans++ (D^2) seeding followed by Lloyd iterations until the assignment
/// stops changing. Empty clusters are re-seeded at the sample farthest from
/// its centroid.
ClusterResult kmeans_pp(std::span<const SamplePath> samples, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options = {});

/// Davies-Bouldin index with mean Euclidean scatter around each centroid.
double davies_bouldin(std::span<const SamplePath> samples, const ClusterResult& result);

struct ClusterSweep {
  std::size_t k_best = 0;
  ClusterResult best;
  std::vector<std::size_t> ks;
  std::vector<double> db_values;
};

/// Clusters for every k in [k_min, k_max] and keeps the DB minimiser; ties go
/// to the smaller k.
ClusterSweep select_cluster_count(std::span<const SamplePath> samples, std::size_t k_min,
                                  std::size_t k_max, std::uint64_t seed,
                                  const KMeansOptions& options = {});

struct JointScenario {
  std::size_t wt_cluster = 0;
  std::size_t pv_cluster = 0;
  HourlySeries wt{};
  HourlySeries pv{};
  double probability = 0.0;
  // exact rational form: (wt_count * pv_count) / (wt_total * pv_total)
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;
};

struct JointScenarioSet {
  std::size_t s_wt = 0;
  std::size_t s_pv = 0;
  std::vector<JointScenario> scenarios;

  std::size_t s_max() const { return s_wt * s_pv; }
};

JointScenarioSet joint_scenarios(const ClusterResult& wt, const ClusterResult& pv);

/// Single deterministic scenario with probability one.
JointScenarioSet single_scenario(const HourlySeries& wt, const HourlySeries& pv);

struct FidelityMetrics {
  std::vector<double> autocorrelation;   // lag 0 .. T-1
  std::vector<double> normalized_error;  // |generated - reference| / max(reference)
};

FidelityMetrics scenario_fidelity_metrics(const SamplePath& generated,
                                          const SamplePath& reference_centroid);

// ---------------------------------------------------------------------------
// I/O. Sample CSV layout:
//   # source: WT
//   h1,h2,...,h24
//   0.12,0.10,...          (one path per row)

std::vector<SamplePath> read_samples_csv(const std::string& path);
void write_samples_csv(const std::string& path, std::span<const SamplePath> samples);

}  // namespace mcies::scenario
