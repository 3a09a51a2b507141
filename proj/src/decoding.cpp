#include "traitlex/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace traitlex {

void SteeringConfig::validate() const {
  if (!(alpha >= 0.0)) throw Error("alpha must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error("top_p must be in (0, 1]");
  if (!(temperature > 0.0)) throw Error("temperature must be > 0");
  for (int t = 0; t < kNumTraits; ++t)
    if (!std::isfinite(beta[t])) throw Error("beta must be finite");
}

Vec softmax_temp(const Eigen::Ref<const Vec>& logits, double temperature) {
  if (logits.size() == 0) throw Error("softmax_temp: empty logits");
  if (!(temperature > 0.0)) throw Error("softmax_temp: temperature must be > 0");
  if (!logits.allFinite()) throw Error("softmax_temp: non-finite logit");
  const double peak = logits.maxCoeff();
  Vec probs = ((logits.array() - peak) / temperature).exp();
  probs /= probs.sum();
  return probs;
}

Filtered top_p_filter(const Eigen::Ref<const Vec>& probs, double top_p) {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error("top_p must be in (0, 1]");
  const Eigen::Index n = probs.size();
  if (n == 0) throw Error("top_p_filter: empty distribution");
  std::vector<TokenId> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;  // deterministic tie-break
  });
  Filtered out;
  double kept_mass = 0.0;
  for (TokenId id : order) {
    if (kept_mass >= top_p && !out.ids.empty()) break;
    out.ids.push_back(id);
    kept_mass += probs[id];
  }
  out.probs.resize(static_cast<Eigen::Index>(out.ids.size()));
  for (std::size_t i = 0; i < out.ids.size(); ++i)
    out.probs[static_cast<Eigen::Index>(i)] = probs[out.ids[i]];
  return out;
}

Vec reweight(const Filtered& filtered, const Lexicon* lexicon,
             const SteeringConfig& cfg) {
  if (filtered.ids.empty()) throw Error("reweight: empty filtered set");
  Vec weights = filtered.probs;
  if (lexicon != nullptr && cfg.alpha != 0.0) {
    for (std::size_t i = 0; i < filtered.ids.size(); ++i) {
      const TraitVec* row = lexicon->find(filtered.ids[i]);
      if (row == nullptr) continue;  // absent token: gain 0, weight unchanged
      const double w = filtered.probs[static_cast<Eigen::Index>(i)] *
                       (1.0 + personality_gain(*row, cfg));
      weights[static_cast<Eigen::Index>(i)] = w < 0.0 ? 0.0 : w;
    }
  }
  double total = weights.sum();
  if (total <= 0.0) {
    // every weight clamped: degrade to the unweighted filtered distribution
    weights = filtered.probs;
    total = weights.sum();
  }
  weights /= total;
  return weights;
}

Eigen::Index sample(const Eigen::Ref<const Vec>& probs, RandomStream& rng) {
  if (probs.size() == 0) throw Error("sample: empty support");
  const double u = rng.next_double();
  double cum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;  // guard against cumulative rounding below 1
}

GenerateResult generate(DistributionSource& source, const Lexicon* lexicon,
                        const SteeringConfig& cfg, std::span<const TokenId> prompt,
                        std::size_t max_tokens, TokenId eos_id, RandomStream& rng) {
  cfg.validate();
  if (lexicon != nullptr &&
      lexicon->meta().vocab_fingerprint != source.vocab_fingerprint())
    throw Error("lexicon was built for a different vocabulary (fingerprint " +
                lexicon->meta().vocab_fingerprint + " vs " +
                source.vocab_fingerprint() + ")");

  GenerateResult result;
  TokenSeq context(prompt.begin(), prompt.end());
  for (std::size_t step = 0; step < max_tokens; ++step) {
    Vec logits;
    try {
      logits = source.next_logits(context);
    } catch (const std::exception& e) {
      result.source_failed = true;
      result.error = e.what();
      return result;
    }
    if (logits.size() != source.vocab_size()) {
      result.source_failed = true;
      result.error = "source returned " + std::to_string(logits.size()) +
                     " logits, expected " + std::to_string(source.vocab_size());
      return result;
    }
    const Vec r1 = softmax_temp(logits, cfg.temperature);
    const Filtered kept = top_p_filter(r1, cfg.top_p);
    const Vec r2 = reweight(kept, lexicon, cfg);
    const TokenId next = kept.ids[static_cast<std::size_t>(sample(r2, rng))];
    if (next == eos_id) {
      result.hit_eos = true;
      return result;
    }
    result.tokens.push_back(next);
    context.push_back(next);
  }
  return result;
}

}  // namespace traitlex
