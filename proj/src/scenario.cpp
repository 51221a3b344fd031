#include "mcies/scenario.hpp"

#include <algorithm>
#include <optional>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace mcies::scenario {

std::string to_string(Source s) { return s == Source::WT ? "WT" : "PV"; }

Source source_from_string(const std::string& tag) {
  if (tag == "WT" || tag == "wt") return Source::WT;
  if (tag == "PV" || tag == "pv") return Source::PV;
  throw InputError("unknown renewable source tag '" + tag + "' (expected WT or PV)");
}

void validate(const SamplePath& path) {
  for (std::size_t t = 0; t < kHours; ++t) {
    const double v = path.values[t];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw DomainError("sample value at hour " + std::to_string(t + 1) +
                        " outside [0,1] per-unit: " + std::to_string(v));
    }
  }
}

namespace {

double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

void require_probabilities(const std::vector<double>& xs, const char* name) {
  if (xs.empty()) throw DomainError(std::string(name) + " must be non-empty");
  for (double x : xs) {
    if (!(x > 0.0 && x < 1.0)) {
      throw DomainError(std::string(name) + " contains a value outside (0,1): " + std::to_string(x));
    }
  }
}

}  // namespace

GanLosses gan_losses(const LossBatch& batch) {
  require_probabilities(batch.d_real, "d_real");
  require_probabilities(batch.d_fake, "d_fake");
  double fake_term = 0.0;
  for (double d : batch.d_fake) fake_term += std::log1p(-d);
  fake_term /= static_cast<double>(batch.d_fake.size());
  double real_term = 0.0;
  for (double d : batch.d_real) real_term += std::log(d);
  real_term /= static_cast<double>(batch.d_real.size());
  return {fake_term, real_term + fake_term};
}

double wgan_gp_objective(const LossBatch& batch) {
  if (batch.d_real.empty() || batch.d_fake.empty() || batch.grad_norms.empty()) {
    throw DomainError("WGAN-GP batch sequences must be non-empty");
  }
  if (!(batch.lambda >= 0.0)) throw DomainError("penalty weight lambda must be >= 0");
  double penalty = 0.0;
  for (double g : batch.grad_norms) {
    if (!(g >= 0.0)) throw DomainError("gradient norms must be >= 0");
    penalty += (g - 1.0) * (g - 1.0);
  }
  penalty /= static_cast<double>(batch.grad_norms.size());
  return mean_of(batch.d_real) - mean_of(batch.d_fake) + batch.lambda * penalty;
}

// ---------------------------------------------------------------------------

namespace {

double squared_distance(const HourlySeries& a, const HourlySeries& b) {
  double acc = 0.0;
  for (std::size_t t = 0; t < kHours; ++t) {
    const double d = a[t] - b[t];
    acc += d * d;
  }
  return acc;
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t nearest(const HourlySeries& x, const std::vector<HourlySeries>& centroids) {
  std::size_t best = 0;
  double best_d = squared_distance(x, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = squared_distance(x, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<HourlySeries> seed_plus_plus(std::span<const SamplePath> samples, std::size_t k,
                                         std::mt19937_64& rng) {
  const std::size_t n = samples.size();
  std::vector<HourlySeries> centroids;
  centroids.reserve(k);
  std::vector<bool> chosen(n, false);
  const auto first = static_cast<std::size_t>(rng() % n);
  centroids.push_back(samples[first].values);
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(samples[i].values, centroids[0]);

  while (centroids.size() < k) {
    double mass = 0.0;
    for (double d : d2) mass += d;
    std::size_t pick = n;
    if (mass > 0.0) {
      const double target = unit_uniform(rng) * mass;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        // rounding at the top end of the cumulative sum
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // all remaining samples duplicate a centroid
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    centroids.push_back(samples[pick].values);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(samples[i].values, centroids.back()));
    }
  }
  return centroids;
}

ClusterResult lloyd(std::span<const SamplePath> samples, std::vector<HourlySeries> centroids,
                    std::size_t max_iter) {
  const std::size_t n = samples.size();
  const std::size_t k = centroids.size();
  std::vector<std::size_t> assignment(n);
  for (std::size_t i = 0; i < n; ++i) assignment[i] = nearest(samples[i].values, centroids);

  std::size_t iter = 0;
  for (iter = 1; iter <= max_iter; ++iter) {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a : assignment) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // re-seed the empty cluster at the worst-served sample of a cluster that can spare it
      std::size_t worst = n;
      double worst_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assignment[i]] < 2) continue;
        const double d = squared_distance(samples[i].values, centroids[assignment[i]]);
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      if (worst == n) break;
      --counts[assignment[worst]];
      assignment[worst] = c;
      counts[c] = 1;
    }

    std::vector<HourlySeries> sums(k, HourlySeries{});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < kHours; ++t) sums[assignment[i]][t] += samples[i].values[t];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t t = 0; t < kHours; ++t) {
        centroids[c][t] = sums[c][t] / static_cast<double>(counts[c]);
      }
    }

    std::vector<std::size_t> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = nearest(samples[i].values, centroids);
    if (next == assignment) break;
    assignment = std::move(next);
  }

  ClusterResult result;
  result.source = samples[0].source;
  result.centroids = std::move(centroids);
  result.assignment = std::move(assignment);
  result.counts.assign(k, 0);
  for (std::size_t a : result.assignment) ++result.counts[a];
  result.total = n;
  result.probabilities.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    result.probabilities[c] = static_cast<double>(result.counts[c]) / static_cast<double>(n);
  }
  result.iterations = std::min(iter, max_iter);
  for (std::size_t i = 0; i < n; ++i) {
    result.inertia += squared_distance(samples[i].values, result.centroids[result.assignment[i]]);
  }
  return result;
}

}  // namespace

ClusterResult kmeans_pp(std::span<const SamplePath> samples, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options) {
  if (k == 0) throw DomainError("cluster count must be >= 1");
  if (k > samples.size()) {
    throw DomainError("cluster count " + std::to_string(k) + " exceeds sample count " +
                      std::to_string(samples.size()));
  }
  for (const auto& s : samples) {
    if (s.source != samples[0].source) throw DomainError("samples mix WT and PV sources");
  }
  std::mt19937_64 rng(seed);
  ClusterResult best;
  bool have = false;
  const std::size_t runs = std::max<std::size_t>(1, options.restarts);
  for (std::size_t r = 0; r < runs; ++r) {
    ClusterResult run = lloyd(samples, seed_plus_plus(samples, k, rng), options.max_iter);
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

double davies_bouldin(std::span<const SamplePath> samples, const ClusterResult& result) {
  const std::size_t k = result.k();
  if (result.assignment.size() != samples.size()) {
    throw DomainError("assignment length does not match sample count");
  }
  std::vector<double> scatter(k, 0.0);
  std::vector<std::size_t> members(k, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t c = result.assignment[i];
    scatter[c] += std::sqrt(squared_distance(samples[i].values, result.centroids[c]));
    ++members[c];
  }
  std::vector<std::size_t> live;
  for (std::size_t c = 0; c < k; ++c) {
    if (members[c] > 0) {
      scatter[c] /= static_cast<double>(members[c]);
      live.push_back(c);
    }
  }
  if (live.size() < 2) throw DomainError("Davies-Bouldin index needs at least two non-empty clusters");

  double acc = 0.0;
  for (std::size_t a : live) {
    double worst = 0.0;
    for (std::size_t b : live) {
      if (a == b) continue;
      const double d = std::sqrt(squared_distance(result.centroids[a], result.centroids[b]));
      if (!(d > 0.0)) {
        throw DomainError("coincident centroids " + std::to_string(a) + " and " + std::to_string(b));
      }
      worst = std::max(worst, (scatter[a] + scatter[b]) / d);
    }
    acc += worst;
  }
  return acc / static_cast<double>(live.size());
}

ClusterSweep select_cluster_count(std::span<const SamplePath> samples, std::size_t k_min,
                                  std::size_t k_max, std::uint64_t seed,
                                  const KMeansOptions& options) {
  if (k_min > k_max) throw DomainError("empty cluster-count range");
  if (k_min < 2 || k_max > samples.size()) {
    throw DomainError("cluster-count range must lie within [2, number of samples]");
  }
  ClusterSweep sweep;
  double best_db = std::numeric_limits<double>::infinity();
  for (std::size_t k = k_min; k <= k_max; ++k) {
    ClusterResult r = kmeans_pp(samples, k, seed + k, options);
    const double db = davies_bouldin(samples, r);
    sweep.ks.push_back(k);
    sweep.db_values.push_back(db);
    if (db < best_db) {
      best_db = db;
      sweep.k_best = k;
      sweep.best = std::move(r);
    }
  }
  return sweep;
}

JointScenarioSet joint_scenarios(const ClusterResult& wt, const ClusterResult& pv) {
  if (wt.source == pv.source) throw DomainError("joint scenarios need one WT and one PV clustering");
  if (wt.source != Source::WT) throw DomainError("first clustering must be the WT one");
  if (wt.k() == 0 || pv.k() == 0) throw DomainError("empty clustering");
  JointScenarioSet set;
  set.s_wt = wt.k();
  set.s_pv = pv.k();
  for (std::size_t w = 0; w < wt.k(); ++w) {
    for (std::size_t p = 0; p < pv.k(); ++p) {
      JointScenario s;
      s.wt_cluster = w;
      s.pv_cluster = p;
      s.wt = wt.centroids[w];
      s.pv = pv.centroids[p];
      s.probability = wt.probabilities[w] * pv.probabilities[p];
      s.numerator = static_cast<std::uint64_t>(wt.counts[w]) * pv.counts[p];
      s.denominator = static_cast<std::uint64_t>(wt.total) * pv.total;
      set.scenarios.push_back(s);
    }
  }
  return set;
}

JointScenarioSet single_scenario(const HourlySeries& wt, const HourlySeries& pv) {
  JointScenarioSet set;
  set.s_wt = 1;
  set.s_pv = 1;
  JointScenario s;
  s.wt = wt;
  s.pv = pv;
  s.probability = 1.0;
  s.numerator = 1;
  s.denominator = 1;
  set.scenarios.push_back(s);
  return set;
}

namespace {

double autocorrelation(const HourlySeries& x, std::size_t lag) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(kHours);
  double var = 0.0;
  for (double v : x) var += (v - m) * (v - m);
  if (!(var > 0.0)) {
    if (lag == 0) return 1.0;
    throw DomainError("autocorrelation undefined beyond lag 0 for a constant series");
  }
  double cov = 0.0;
  for (std::size_t t = 0; t + lag < kHours; ++t) cov += (x[t] - m) * (x[t + lag] - m);
  return cov / var;
}

}  // namespace

FidelityMetrics scenario_fidelity_metrics(const SamplePath& generated,
                                          const SamplePath& reference_centroid) {
  FidelityMetrics out;
  out.autocorrelation.reserve(kHours);
  for (std::size_t h = 0; h < kHours; ++h) out.autocorrelation.push_back(autocorrelation(generated.values, h));
  const double ref_max = *std::max_element(reference_centroid.values.begin(), reference_centroid.values.end());
  if (!(ref_max > 0.0)) throw DomainError("reference centroid has no positive value to normalise by");
  out.normalized_error.reserve(kHours);
  for (std::size_t t = 0; t < kHours; ++t) {
    out.normalized_error.push_back(std::abs(generated.values[t] - reference_centroid.values[t]) / ref_max);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<SamplePath> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open sample file");
  std::string line;
  std::size_t line_no = 0;
  std::optional<Source> source;
  bool header_seen = false;
  std::vector<SamplePath> out;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text[0] == '#') {
      const auto pos = text.find("source:");
      if (pos != std::string::npos) source = source_from_string(trim(text.substr(pos + 7)));
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (text[0] == 'h' || text[0] == 'H') continue;
    }
    if (!source) throw InputError(path + ":" + std::to_string(line_no) + ": missing '# source: WT|PV' header");
    SamplePath sample;
    sample.source = *source;
    std::stringstream ss(text);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      const std::string c = trim(cell);
      if (col >= kHours) {
        throw InputError(path + ":" + std::to_string(line_no) + ": more than 24 columns");
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || ptr != c.data() + c.size()) {
        throw InputError(path + ":" + std::to_string(line_no) + ": column " + std::to_string(col + 1) +
                         " is not a number: '" + c + "'");
      }
      sample.values[col++] = v;
    }
    if (col != kHours) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected 24 columns, found " +
                       std::to_string(col));
    }
    try {
      validate(sample);
    } catch (const DomainError& e) {
      throw InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(sample);
  }
  if (out.empty()) throw InputError(path + ": no sample rows");
  return out;
}

void write_samples_csv(const std::string& path, std::span<const SamplePath> samples) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot write sample file");
  out << "# source: " << (samples.empty() ? "WT" : to_string(samples[0].source)) << '\n';
  for (std::size_t t = 0; t < kHours; ++t) out << (t ? "," : "") << 'h' << (t + 1);
  out << '\n';
  char buf[64];
  for (const auto& s : samples) {
    for (std::size_t t = 0; t < kHours; ++t) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), s.values[t]);
      out << (t ? "," : "") << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace mcies::scenario
