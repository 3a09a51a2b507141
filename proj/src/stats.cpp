#include "traitlex/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace traitlex {

namespace special {

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double incbeta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error("incbeta: continued fraction did not converge");
}

}  // namespace

double incbeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("incbeta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * incbeta_cf(a, b, x) / a;
  return 1.0 - front * incbeta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw Error("student_t_two_sided: df must be positive");
  if (std::isinf(t)) return 0.0;
  return incbeta(0.5 * df, 0.5, df / (df + t * t));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace special

double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw Error("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stddev_of(std::span<const double> xs, StdDivisor divisor) {
  if (xs.empty()) throw Error("stddev of empty sample");
  if (xs.size() == 1) return 0.0;
  const double mu = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  const double den = divisor == StdDivisor::SampleN1
                         ? static_cast<double>(xs.size() - 1)
                         : static_cast<double>(xs.size());
  return std::sqrt(ss / den);
}

TraitReport likert_aggregate(std::span<const LikertRecord> records,
                             StdDivisor divisor) {
  if (records.empty()) throw Error("likert_aggregate: no records");
  std::array<std::vector<double>, kNumTraits> buckets;
  for (const auto& r : records) {
    if (r.score < 1 || r.score > 5)
      throw Error("likert_aggregate: score " + std::to_string(r.score) +
                  " outside 1..5 (question " + r.question_id + ")");
    buckets[static_cast<std::size_t>(r.trait)].push_back(
        static_cast<double>(r.score));
  }
  TraitReport report;
  for (int t = 0; t < kNumTraits; ++t) {
    const auto& xs = buckets[static_cast<std::size_t>(t)];
    if (xs.empty()) continue;
    report.per_trait[static_cast<std::size_t>(t)] =
        TraitCell{mean_of(xs), stddev_of(xs, divisor),
                  static_cast<std::int64_t>(xs.size())};
  }
  return report;
}

Correlation pearson(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y) {
  const Eigen::Index n = x.size();
  if (y.size() != n) throw Error("pearson: length mismatch");
  if (n < 3) throw Error("pearson: need at least 3 samples");
  const Vec xc = x.array() - x.mean();
  const Vec yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) throw Error("pearson: zero variance input");
  double r = xc.dot(yc) / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  Correlation out;
  out.r = r;
  out.n = n;
  const double df = static_cast<double>(n - 2);
  const double denom = 1.0 - r * r;
  if (denom <= 0.0) {
    out.p = 0.0;
  } else {
    const double t = r * std::sqrt(df / denom);
    out.p = special::student_t_two_sided(t, df);
  }
  return out;
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  return pearson(Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size())),
                 Eigen::Map<const Vec>(y.data(), static_cast<Eigen::Index>(y.size())));
}

std::vector<double> fractional_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg_rank;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("spearman: length mismatch");
  const std::vector<double> rx = fractional_ranks(x);
  const std::vector<double> ry = fractional_ranks(y);
  return pearson(rx, ry);
}

Correlation spearman(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y) {
  return spearman(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                  std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

double two_proportion_p(std::int64_t hits1, std::int64_t n1, std::int64_t hits2,
                        std::int64_t n2) {
  if (n1 <= 0 || n2 <= 0) throw Error("two_proportion_p: empty sample");
  const double p1 = static_cast<double>(hits1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(hits2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(hits1 + hits2) /
                        static_cast<double>(n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) *
                              (1.0 / static_cast<double>(n1) +
                               1.0 / static_cast<double>(n2)));
  if (se == 0.0) return 1.0;
  const double z = (p1 - p2) / se;
  return 2.0 * (1.0 - special::normal_cdf(std::abs(z)));
}

}  // namespace traitlex
