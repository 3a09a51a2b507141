#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "traitlex/corpus.hpp"
#include "traitlex/decoding.hpp"
#include "traitlex/lexicon.hpp"
#include "traitlex/ngram.hpp"
#include "traitlex/stats.hpp"
#include "traitlex/types.hpp"

namespace traitlex {

// Text-in/text-out judge channel (normally the external bridge).
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual std::string judge(const std::string& prompt) = 0;
};

// Desk-scale stand-in for judge scoring: the share of generated tokens whose
// lexicon value for the trait is strictly positive.
double trait_token_rate(std::span<const TokenId> tokens, const Lexicon& lexicon,
                        Trait trait);

struct BetaCell {
  double beta = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::int64_t count = 0;
};

struct TraitSweepRow {
  Trait trait = Trait::Openness;
  std::vector<BetaCell> cells;
  // Between beta and the per-beta mean scores; absent when degenerate
  // (constant means, fewer than 3 grid points).
  std::optional<Correlation> correlation;
};

struct EvalOptions {
  std::vector<double> beta_grid = {-1.0, -0.5, 0.0, 0.5, 1.0};
  double alpha = 1.0;
  double top_p = 0.95;
  double temperature = 0.85;
  std::size_t max_tokens = 32;
  int runs_per_question = 1;
  std::uint64_t seed = 0;
  // Judge responses that fail to parse are counted; above this fraction the
  // run aborts.
  double max_parse_failure_rate = 0.10;
};

struct EvalCounters {
  std::int64_t judged = 0;
  std::int64_t parse_failures = 0;
};

// One Table-style row: generate steered answers per beta over the question
// set and score them with the judge (or the frequency proxy when judge is
// null); correlates beta against the per-beta mean scores.
TraitSweepRow eval_trait_sweep(DistributionSource& source, const Lexicon& lexicon,
                               const Vocab& vocab, const QuestionSet& questions,
                               Trait trait, const EvalOptions& options,
                               JudgeClient* judge, EvalCounters* counters = nullptr);

struct PplCell {
  double beta = 0.0;
  double mean_ppl = 0.0;
  double std_ppl = 0.0;
  std::int64_t runs = 0;
};

// Mean perplexity of steered generations at each beta, common seeds across
// the grid. The scorer model also serves as the source unless one is given.
std::vector<PplCell> ppl_stability(DistributionSource& source,
                                   const NGramModel& scorer, const Lexicon& lexicon,
                                   const Vocab& vocab, Trait trait,
                                   std::span<const double> beta_grid,
                                   std::span<const TokenSeq> prompts, int runs,
                                   const EvalOptions& options);

struct MSweepRow {
  double m_value = 0.0;
  bool built = false;
  std::string error;
  double metric = 0.0;  // frequency-proxy trait score of the steering fixture
};

struct MSweepFixture {
  Trait trait = Trait::Extraversion;
  double beta = -1.0;
  double alpha = 1.0;
  double top_p = 0.95;
  double temperature = 0.85;
  std::size_t max_tokens = 32;
  int runs = 100;
  std::uint64_t seed = 0;
  double epsilon = 1e-3;
};

// Rebuilds the lexicon at each target M and measures the steering fixture;
// per-M build failures are recorded and the sweep continues.
std::vector<MSweepRow> sweep_m(const AnswerCorpus& corpus, const Vocab& vocab,
                               std::span<const double> m_grid,
                               DistributionSource& source,
                               std::span<const TokenSeq> prompts,
                               const MSweepFixture& fixture);

// Report rendering: aligned plain-text table plus line-delimited JSON.
std::string render_trait_sweep_table(std::span<const TraitSweepRow> rows,
                                     std::span<const double> beta_grid);
std::string trait_sweep_jsonl(std::span<const TraitSweepRow> rows);
std::string render_ppl_table(std::span<const PplCell> cells);
std::string ppl_jsonl(std::span<const PplCell> cells);
std::string render_m_sweep_table(std::span<const MSweepRow> rows);
std::string m_sweep_jsonl(std::span<const MSweepRow> rows);

}  // namespace traitlex
