#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "traitlex/lexicon.hpp"
#include "traitlex/rng.hpp"
#include "traitlex/types.hpp"

namespace traitlex {

struct SteeringConfig {
  double alpha = 1.0;               // global injection strength
  TraitVec beta = TraitVec::Zero(); // per-trait direction and weight
  double top_p = 0.95;
  double temperature = 0.85;

  void validate() const;
};

// Temperature softmax with max-subtraction. Throws on non-finite input.
Vec softmax_temp(const Eigen::Ref<const Vec>& logits, double temperature);

// Nucleus filter output: kept token ids in descending-probability order
// (ties by ascending id) with their original, unrenormalized probabilities.
struct Filtered {
  std::vector<TokenId> ids;
  Vec probs;
};

// Keeps the minimal descending-probability prefix whose cumulative mass
// reaches top_p: a token is kept iff the mass of strictly prior kept tokens
// is below top_p. At least one token is always kept.
Filtered top_p_filter(const Eigen::Ref<const Vec>& probs, double top_p);

inline double personality_gain(const TraitVec& lex_row, const SteeringConfig& cfg) {
  return cfg.alpha * cfg.beta.dot(lex_row);
}

// p_z * (1 + G) over the kept tokens, clamped at zero and renormalized.
// lexicon may be null (no steering); with alpha = 0 or a null lexicon the
// result is bit-identical to the renormalized filtered input. If every
// weight clamps to zero, falls back to the unweighted filtered distribution.
Vec reweight(const Filtered& filtered, const Lexicon* lexicon,
             const SteeringConfig& cfg);

// Draws one index from a normalized probability vector, consuming exactly
// one value from the stream.
Eigen::Index sample(const Eigen::Ref<const Vec>& probs, RandomStream& rng);

class DistributionSource {
 public:
  virtual ~DistributionSource() = default;
  virtual Eigen::Index vocab_size() const = 0;
  virtual const std::string& vocab_fingerprint() const = 0;
  // Raw next-token scores (logits) for the given context; length vocab_size.
  virtual Vec next_logits(std::span<const TokenId> context) = 0;
};

struct GenerateResult {
  TokenSeq tokens;  // continuation only, EOS not included
  bool hit_eos = false;
  bool source_failed = false;
  std::string error;
};

// Autoregressive loop: next_logits -> softmax_temp -> top_p_filter ->
// reweight -> sample, until EOS or max_tokens. Throws on a fingerprint
// mismatch before any generation; a source failure mid-stream returns the
// partial continuation with source_failed set.
GenerateResult generate(DistributionSource& source, const Lexicon* lexicon,
                        const SteeringConfig& cfg, std::span<const TokenId> prompt,
                        std::size_t max_tokens, TokenId eos_id, RandomStream& rng);

}  // namespace traitlex
