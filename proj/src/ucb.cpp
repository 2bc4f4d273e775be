#include "pacr/ucb.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "pacr/digest.hpp"
#include "pacr/rng.hpp"
#include "pacr/stats.hpp"

namespace pacr {

std::string to_string(BoundKind k) {
  return k == BoundKind::kClt ? "clt" : "hoeffding";
}

BoundKind bound_kind_from_string(const std::string& s) {
  if (s == "clt") return BoundKind::kClt;
  if (s == "hoeffding") return BoundKind::kHoeffding;
  throw ConfigError("unknown bound kind '" + s + "' (expected clt or hoeffding)");
}

SamplingPlan default_plan(std::size_t n_records, double pi, std::uint64_t seed) {
  if (n_records == 0) throw EmptyInputError("default_plan: no records");
  if (!(pi > 0.0 && pi <= 1.0)) throw RangeError("default_plan: pi must lie in (0, 1]");
  SamplingPlan plan;
  plan.weights.assign(n_records, pi);
  plan.sample_size =
      static_cast<std::size_t>(std::llround(std::ceil(static_cast<double>(n_records) / pi)));
  plan.seed = seed;
  plan.with_replacement = true;
  return plan;
}

namespace {

void validate_plan(std::span<const CalibrationRecord> records, const SamplingPlan& plan) {
  if (records.empty()) throw EmptyInputError("draw_samples: no calibration records");
  if (plan.weights.size() != records.size())
    throw ShapeError("draw_samples: plan has " + std::to_string(plan.weights.size()) +
                     " weights for " + std::to_string(records.size()) + " records");
  for (double w : plan.weights)
    if (!(w > 0.0 && w <= 1.0))
      throw RangeError("draw_samples: query weights must lie in (0, 1]");
  if (plan.sample_size == 0) throw RangeError("draw_samples: sample_size must be positive");
  if (!plan.with_replacement && plan.sample_size > records.size())
    throw RangeError("draw_samples: without replacement needs sample_size <= record count");
}

}  // namespace

std::vector<WeightedLossSample> draw_samples(std::span<const CalibrationRecord> records,
                                             const SamplingPlan& plan,
                                             const LossOracle& loss_oracle,
                                             std::optional<double> loss_cap) {
  validate_plan(records, plan);
  if (!loss_oracle) throw ConfigError("draw_samples: loss oracle not set");
  if (loss_cap && !(*loss_cap > 0.0))
    throw RangeError("draw_samples: loss_cap must be positive");

  Rng rng = make_rng(plan.seed);
  const std::size_t n = records.size();

  // Without replacement: a partial Fisher-Yates pass picks the first
  // sample_size entries of a random permutation.
  std::vector<std::size_t> order;
  if (!plan.with_replacement) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t j = 0; j < plan.sample_size; ++j) {
      const std::size_t k = j + uniform_index(rng, n - j);
      std::swap(order[j], order[k]);
    }
  }

  std::vector<WeightedLossSample> samples;
  samples.reserve(plan.sample_size);
  for (std::size_t j = 0; j < plan.sample_size; ++j) {
    const std::size_t idx =
        plan.with_replacement ? uniform_index(rng, n) : order[j];
    const double pi = plan.weights[idx];
    WeightedLossSample s;
    s.index = idx;
    s.uncertainty = records[idx].uncertainty;
    s.queried = bernoulli(rng, pi);
    if (s.queried) {
      double raw;
      try {
        raw = loss_oracle(records[idx]);
      } catch (const std::exception& e) {
        throw SampleDrawError(j, e.what());
      }
      if (!(raw >= 0.0))
        throw SampleDrawError(j, "loss oracle returned negative or NaN loss");
      if (loss_cap) raw = std::min(raw, *loss_cap);
      s.weighted_loss = raw / pi;
    }
    samples.push_back(s);
  }
  return samples;
}

namespace {

// mean and sample stddev of z_j * 1{U_j <= u} over all m draws; two passes.
void thresholded_moments(std::span<const WeightedLossSample> samples, double u, double* mean_out,
                         double* stddev_out) {
  const std::size_t m = samples.size();
  long double acc = 0.0L;
  for (const auto& s : samples)
    if (s.uncertainty <= u) acc += s.weighted_loss;
  const long double mean = acc / static_cast<long double>(m);
  *mean_out = static_cast<double>(mean);
  if (!stddev_out) return;
  long double ss = 0.0L;
  for (const auto& s : samples) {
    const long double z = s.uncertainty <= u ? s.weighted_loss : 0.0L;
    const long double d = z - mean;
    ss += d * d;
  }
  *stddev_out = static_cast<double>(
      std::sqrt(static_cast<double>(ss / static_cast<long double>(m - 1))));
}

void validate_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("bound: alpha must lie in (0, 1)");
}

double hoeffding_slack(double alpha, double loss_cap, double min_weight, std::size_t m) {
  if (!(loss_cap > 0.0)) throw RangeError("hoeffding_bound: loss_cap must be positive");
  if (!(min_weight > 0.0 && min_weight <= 1.0))
    throw RangeError("hoeffding_bound: min_weight must lie in (0, 1]");
  const double range = loss_cap / min_weight;
  return std::sqrt(range * range * std::log(2.0 / alpha) / (2.0 * static_cast<double>(m)));
}

}  // namespace

double clt_bound(std::span<const WeightedLossSample> samples, double u, double alpha) {
  validate_alpha(alpha);
  if (samples.size() < 2)
    throw InsufficientSamplesError("clt_bound: need at least 2 samples for a stddev");
  double mean, sd;
  thresholded_moments(samples, u, &mean, &sd);
  if (sd == 0.0) return mean;  // degenerate spread: no slack to add
  return mean + normal_quantile(1.0 - alpha) * sd / std::sqrt(static_cast<double>(samples.size()));
}

double hoeffding_bound(std::span<const WeightedLossSample> samples, double u, double alpha,
                       double loss_cap, double min_weight) {
  validate_alpha(alpha);
  if (samples.empty()) throw InsufficientSamplesError("hoeffding_bound: no samples");
  double mean;
  thresholded_moments(samples, u, &mean, nullptr);
  return mean + hoeffding_slack(alpha, loss_cap, min_weight, samples.size());
}

BoundSpec make_bound_spec(BoundKind kind, const RiskBudget& budget, const SamplingPlan& plan) {
  budget.validate();
  if (plan.weights.empty()) throw EmptyInputError("make_bound_spec: plan has no weights");
  BoundSpec spec;
  spec.kind = kind;
  spec.alpha = budget.alpha;
  spec.loss_cap = budget.loss_upper;
  spec.min_weight = *std::min_element(plan.weights.begin(), plan.weights.end());
  return spec;
}

UcbCurve build_curve(std::span<const WeightedLossSample> samples, std::span<const double> grid,
                     const BoundSpec& spec) {
  validate_alpha(spec.alpha);
  if (grid.empty()) throw EmptyInputError("build_curve: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0))
      throw RangeError("build_curve: grid values must lie in [0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw RangeError("build_curve: grid must be strictly increasing");
  }
  const std::size_t m = samples.size();
  if (spec.kind == BoundKind::kClt && m < 2)
    throw InsufficientSamplesError("build_curve: clt needs at least 2 samples");
  if (m == 0) throw InsufficientSamplesError("build_curve: no samples");

  // Sort sample order by uncertainty once; each grid threshold then owns a
  // prefix, and long-double prefix sums of z and z^2 give the moments.
  std::vector<std::size_t> by_u(m);
  std::iota(by_u.begin(), by_u.end(), std::size_t{0});
  std::sort(by_u.begin(), by_u.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].uncertainty < samples[b].uncertainty;
  });

  std::vector<long double> sum1(m + 1, 0.0L), sum2(m + 1, 0.0L);
  std::vector<double> sorted_u(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& s = samples[by_u[k]];
    sorted_u[k] = s.uncertainty;
    const long double z = s.weighted_loss;
    sum1[k + 1] = sum1[k] + z;
    sum2[k + 1] = sum2[k] + z * z;
  }

  const double z_alpha =
      spec.kind == BoundKind::kClt ? normal_quantile(1.0 - spec.alpha) : 0.0;
  const double hslack = spec.kind == BoundKind::kHoeffding
                            ? hoeffding_slack(spec.alpha, spec.loss_cap, spec.min_weight, m)
                            : 0.0;

  UcbCurve curve;
  curve.kind = spec.kind;
  curve.alpha = spec.alpha;
  curve.sample_count = m;
  curve.grid.assign(grid.begin(), grid.end());
  curve.means.reserve(grid.size());
  curve.bounds.reserve(grid.size());

  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double u = grid[g];
    const std::size_t k =
        static_cast<std::size_t>(std::upper_bound(sorted_u.begin(), sorted_u.end(), u) -
                                 sorted_u.begin());
    const long double mean_l = sum1[k] / static_cast<long double>(m);
    const double mean = static_cast<double>(mean_l);
    double bound;
    if (spec.kind == BoundKind::kHoeffding) {
      bound = mean + hslack;
    } else {
      long double var_l = (sum2[k] - static_cast<long double>(m) * mean_l * mean_l) /
                          static_cast<long double>(m - 1);
      // Cancellation in the prefix-sum route can leave a residual of a few
      // long-double ulps where the spread is really zero; flatten it so the
      // degenerate case is detected the same way the scalar bound does.
      if (var_l < 1e-18L * (sum2[k] / static_cast<long double>(m))) var_l = 0.0L;
      if (var_l < 0.0L) var_l = 0.0L;
      const double sd = std::sqrt(static_cast<double>(var_l));
      if (sd == 0.0) {
        curve.degenerate_sigma.push_back(g);
        bound = mean;
      } else {
        bound = mean + z_alpha * sd / std::sqrt(static_cast<double>(m));
      }
    }
    curve.means.push_back(mean);
    curve.bounds.push_back(bound);
  }
  return curve;
}

std::string UcbCurve::digest() const {
  std::string bytes;
  bytes.reserve(16 + 16 * grid.size());
  bytes.push_back(kind == BoundKind::kClt ? 'c' : 'h');
  auto put_double = [&bytes](double v) {
    char raw[sizeof(double)];
    std::memcpy(raw, &v, sizeof(double));
    bytes.append(raw, sizeof(double));
  };
  put_double(alpha);
  for (double g : grid) put_double(g);
  for (double b : bounds) put_double(b);
  return sha256_hex(bytes);
}

}  // namespace pacr
