#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "traitlex/types.hpp"

namespace traitlex {

enum class StdDivisor { SampleN1, PopulationN };

struct LikertRecord {
  std::string question_id;
  Trait trait = Trait::Openness;
  int score = 0;  // 1..5
  std::string rater = "auto";
};

struct TraitCell {
  double mean = 0.0;
  double stddev = 0.0;
  std::int64_t count = 0;
};

struct TraitReport {
  std::array<std::optional<TraitCell>, kNumTraits> per_trait{};
};

// Per-trait mean and standard deviation (sample divisor n-1 by default).
// Throws on an empty record set or an out-of-range score.
TraitReport likert_aggregate(std::span<const LikertRecord> records,
                             StdDivisor divisor = StdDivisor::SampleN1);

double mean_of(std::span<const double> xs);
double stddev_of(std::span<const double> xs,
                 StdDivisor divisor = StdDivisor::SampleN1);

struct Correlation {
  double r = 0.0;  // correlation coefficient
  double p = 1.0;  // two-sided p-value, Student's t with n-2 df
  std::int64_t n = 0;
};

// Sample Pearson correlation; p-value from t = r*sqrt((n-2)/(1-r^2)) via the
// regularized incomplete beta function. Throws for n < 3 or constant input.
Correlation pearson(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y);
Correlation pearson(std::span<const double> x, std::span<const double> y);

// Pearson over fractional ranks (ties get the average rank).
Correlation spearman(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y);
Correlation spearman(std::span<const double> x, std::span<const double> y);

std::vector<double> fractional_ranks(std::span<const double> xs);

// Two-proportion z-test (pooled); returns the two-sided p-value.
double two_proportion_p(std::int64_t hits1, std::int64_t n1, std::int64_t hits2,
                        std::int64_t n2);

namespace special {
// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incbeta(double a, double b, double x);
// Two-sided tail of Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);
// Standard normal cdf.
double normal_cdf(double z);
}  // namespace special

}  // namespace traitlex
