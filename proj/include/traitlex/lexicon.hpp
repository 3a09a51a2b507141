#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "traitlex/corpus.hpp"
#include "traitlex/tokenizer.hpp"
#include "traitlex/types.hpp"

namespace traitlex {

// Raised for algorithmic failures (no signal, non-convergence) as opposed to
// I/O or validation problems.
struct SolverError : Error {
  using Error::Error;
};

// Whether zero-valued tokens are counted into the positive subset when the
// polarity averages are formed. Excluding them keeps the averages independent
// of vocabulary size, which is the default; the other convention is kept for
// auditing.
enum class ZeroConvention { Exclude, Include };

struct PolarityAverages {
  double avg_pos = 0.0;      // mean of strictly positive values
  double avg_neg_mag = 0.0;  // mean magnitude of strictly negative values
  std::int64_t m = 0;        // positive-subset size
  std::int64_t n = 0;        // negative-subset size
};

PolarityAverages polarity_averages(
    const Eigen::Ref<const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>>& column,
    ZeroConvention zeros = ZeroConvention::Exclude);
PolarityAverages polarity_averages(const Eigen::Ref<const Vec>& column,
                                   ZeroConvention zeros = ZeroConvention::Exclude);

struct ScaleParams {
  double n_divisor = 0.0;   // sharpness divisor N in S*tanh(v/N)
  double s_amplitude = 0.0; // saturation amplitude S
  int iterations = 0;       // residual evaluations spent by the solver
  bool converged = false;
};

struct SolveOutcome {
  ScaleParams params;
  double residual_pos = 0.0;  // |Avg+ - M| after the transform
  double residual_neg = 0.0;  // ||Avg-| - M| after the transform
  double max_residual() const {
    return residual_pos > residual_neg ? residual_pos : residual_neg;
  }
};

struct SolveOptions {
  ZeroConvention zeros = ZeroConvention::Exclude;
  int max_iterations = 400;
};

// Finds (N, S) such that after v -> S*tanh(v/N) the positive and negative
// polarity averages of the column both land within eps of target_m. When one
// polarity is empty, S is fixed at 2*target_m and only the other constraint
// binds. Throws Error when the column carries no signal or the target is
// invalid; non-convergence is reported through the converged flag with the
// best parameters found.
SolveOutcome solve_ns(
    const Eigen::Ref<const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>>& column,
    double target_m, double eps, const SolveOptions& options = {});

struct LexiconMeta {
  TraitVec m_targets = TraitVec::Zero();
  double epsilon = 0.0;
  std::array<ScaleParams, kNumTraits> scale{};
  std::string vocab_fingerprint;
  std::string corpus_digest;
};

// Sparse token-id -> per-trait value map. All-zero rows are omitted; a
// missing key reads as the zero vector, so unlisted tokens are never steered.
class Lexicon {
 public:
  Lexicon() = default;
  Lexicon(std::map<TokenId, TraitVec> values, LexiconMeta meta)
      : values_(std::move(values)), meta_(std::move(meta)) {}

  const TraitVec* find(TokenId id) const {
    auto it = values_.find(id);
    return it == values_.end() ? nullptr : &it->second;
  }
  TraitVec value_or_zero(TokenId id) const {
    const TraitVec* v = find(id);
    return v ? *v : TraitVec::Zero();
  }
  const std::map<TokenId, TraitVec>& entries() const { return values_; }
  const LexiconMeta& meta() const { return meta_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::map<TokenId, TraitVec> values_;
  LexiconMeta meta_;
};

// Per-token net occurrence counting over the corpus: +1 per occurrence in a
// High answer of a trait, -1 per occurrence in a Low answer.
RawCounts iterate_assignment(const AnswerCorpus& corpus, const Vocab& vocab);

struct TraitScaleReport {
  ScaleParams params;
  double residual_pos = 0.0;
  double residual_neg = 0.0;
  PolarityAverages raw;      // averages of the raw column
  std::int64_t nonzero = 0;  // tokens carrying signal for this trait
  std::string error;         // set when the trait could not be solved at all
};

struct BuildReport {
  std::array<TraitScaleReport, kNumTraits> traits{};
  bool all_converged = false;
};

struct BuildOptions {
  TraitVec m_targets = TraitVec::Constant(0.3);
  double epsilon = 1e-3;
  ZeroConvention zeros = ZeroConvention::Exclude;
  int max_iterations = 400;
  // When false, unconverged traits only clear the converged flags instead of
  // throwing, so callers can still write a diagnostic report.
  bool require_convergence = true;
};

struct BuildOutput {
  Lexicon lexicon;
  BuildReport report;
};

// Per-trait solve_ns followed by the tanh transform. The vocab binds the
// fingerprint; the corpus digest records what the counts were built from.
BuildOutput normalization_scaling(const RawCounts& raw, const Vocab& vocab,
                                  const AnswerCorpus& corpus,
                                  const BuildOptions& options = {});

inline BuildOutput build_lexicon(const AnswerCorpus& corpus, const Vocab& vocab,
                                 const BuildOptions& options = {}) {
  return normalization_scaling(iterate_assignment(corpus, vocab), vocab, corpus,
                               options);
}

std::string serialize_lexicon(const Lexicon& lexicon);
Lexicon parse_lexicon(std::string_view json, std::string_view origin);
Lexicon load_lexicon(const std::string& path);
void save_lexicon(const Lexicon& lexicon, const std::string& path);

std::string serialize_build_report(const BuildReport& report);

}  // namespace traitlex
