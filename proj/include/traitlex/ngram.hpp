#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "traitlex/decoding.hpp"
#include "traitlex/tokenizer.hpp"
#include "traitlex/types.hpp"

namespace traitlex {

// Deterministic add-delta n-gram model with simple backoff: an unseen
// context falls back to the next shorter order, ending at the unigram.
// Stands in for a real model so the decode pipeline can be tested end to
// end; linguistic quality is a non-goal.
class NGramModel final : public DistributionSource {
 public:
  int order() const { return order_; }
  double delta() const { return delta_; }

  Eigen::Index vocab_size() const override { return vocab_size_; }
  const std::string& vocab_fingerprint() const override { return fingerprint_; }

  // Log of the smoothed conditional distribution; softmax_temp(logits, 1)
  // recovers the probabilities.
  Vec next_logits(std::span<const TokenId> context) override;
  Vec next_probs(std::span<const TokenId> context) const;

  std::string serialize() const;

 private:
  friend NGramModel train_ngram(const std::vector<std::string>&, const Vocab&,
                                int, double);
  friend NGramModel parse_ngram_model(std::string_view, std::string_view);

  struct ContextCounts {
    std::map<TokenId, std::int64_t> counts;
    std::int64_t total = 0;
  };

  NGramModel() = default;
  const ContextCounts* lookup(std::span<const TokenId> context) const;

  int order_ = 0;
  double delta_ = 0.0;
  Eigen::Index vocab_size_ = 0;
  std::string fingerprint_;
  // tables_[j]: counts for contexts of length j (j = 0 is the unigram).
  std::vector<std::map<TokenSeq, ContextCounts>> tables_;
};

// Counts every window of length 1..k over the tokenized texts. Throws when
// no length-k window exists.
NGramModel train_ngram(const std::vector<std::string>& texts, const Vocab& vocab,
                       int order, double delta);

// exp of the mean negative log-likelihood (natural log), teacher-forced.
double perplexity_tokens(const NGramModel& model, std::span<const TokenId> tokens);
double perplexity(const NGramModel& model, const std::string& text,
                  const Vocab& vocab);

NGramModel parse_ngram_model(std::string_view json, std::string_view origin);
NGramModel load_ngram_model(const std::string& path);
void save_ngram_model(const NGramModel& model, const std::string& path);

}  // namespace traitlex
