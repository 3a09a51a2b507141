#pragma once

// Synthetic desk-scale fixture shared by the unit and acceptance tests.
//
// The corpus is built from paired sentences whose scaffold words are
// identical between the High and Low polarity of each trait, so every
// non-trait token cancels to a zero net count and the lexicon carries
// exactly the trait words: five positive and three negative per trait, with
// per-word counts {+2,+2,+1,+1,+1} and {-3,-2,-2}.

#include <array>
#include <string>
#include <vector>

#include "traitlex/corpus.hpp"
#include "traitlex/json_util.hpp"
#include "traitlex/lexicon.hpp"
#include "traitlex/ngram.hpp"
#include "traitlex/tokenizer.hpp"

namespace fixtures {

struct TraitWords {
  std::array<const char*, 5> high;
  std::array<const char*, 3> low;
};

inline const std::array<TraitWords, 5>& trait_words() {
  static const std::array<TraitWords, 5> words = {{
      {{"explore", "novel", "imagine", "curious", "art"},
       {"routine", "familiar", "usual"}},
      {{"organize", "schedule", "tidy", "plan", "careful"},
       {"messy", "late", "forget"}},
      {{"party", "friends", "chat", "outgoing", "lively"},
       {"alone", "quiet", "solitude"}},
      {{"kind", "help", "share", "gentle", "warm"},
       {"argue", "rude", "selfish"}},
      {{"worry", "anxious", "panic", "stress", "tense"},
       {"calm", "relaxed", "steady"}},
  }};
  return words;
}

inline const std::vector<std::string>& scaffold_words() {
  static const std::vector<std::string> words = {
      "i", "like", "to", "and", "we", "really", "things",
      "they", "feel", "when", "my", "day", "what", "do"};
  return words;
}

inline std::vector<std::string> vocab_tokens() {
  std::vector<std::string> tokens = scaffold_words();
  for (const auto& tw : trait_words()) {
    for (const char* w : tw.high) tokens.emplace_back(w);
    for (const char* w : tw.low) tokens.emplace_back(w);
  }
  tokens.emplace_back(" ");
  tokens.emplace_back("<eos>");
  return tokens;
}

inline traitlex::Vocab vocab() {
  return traitlex::Vocab::from_tokens(vocab_tokens());
}

inline std::string vocab_file_text() {
  std::string out;
  for (const auto& tok : vocab_tokens()) {
    out += tok;
    out += '\n';
  }
  return out;
}

// Four sentence pairs per trait; %1..%3 are the trait-word slots.
inline std::vector<std::pair<std::string, std::vector<int>>> sentence_shapes() {
  // shape, slots (index into the 7-occurrence fill order)
  return {
      {"i like to %1 and %2", {0, 1}},
      {"we really %1 things", {2}},
      {"they feel %1 when %2 and %3", {3, 4, 5}},
      {"my %1 day", {6}},
  };
}

// Fill orders producing counts {h1:2,h2:2,h3:1,h4:1,h5:1} and {l1:3,l2:2,l3:2}.
inline const std::array<int, 7>& high_fill() {
  static const std::array<int, 7> f = {0, 1, 2, 3, 4, 0, 1};
  return f;
}
inline const std::array<int, 7>& low_fill() {
  static const std::array<int, 7> f = {0, 1, 2, 0, 1, 2, 0};
  return f;
}

inline traitlex::AnswerCorpus corpus() {
  traitlex::AnswerCorpus c;
  for (int t = 0; t < traitlex::kNumTraits; ++t) {
    const TraitWords& tw = trait_words()[static_cast<std::size_t>(t)];
    for (int polarity = 0; polarity < 2; ++polarity) {
      int occurrence = 0;
      for (const auto& [shape, slots] : sentence_shapes()) {
        std::string text = shape;
        for (std::size_t s = 0; s < slots.size(); ++s) {
          const std::string slot = "%" + std::to_string(s + 1);
          const char* word =
              polarity == 0
                  ? tw.high[static_cast<std::size_t>(
                        high_fill()[static_cast<std::size_t>(occurrence)])]
                  : tw.low[static_cast<std::size_t>(
                        low_fill()[static_cast<std::size_t>(occurrence)])];
          text.replace(text.find(slot), slot.size(), word);
          ++occurrence;
        }
        c.entries.push_back({static_cast<traitlex::Trait>(t),
                             polarity == 0 ? traitlex::Polarity::High
                                           : traitlex::Polarity::Low,
                             text});
      }
    }
  }
  return c;
}

inline std::string corpus_file_text() {
  return traitlex::serialize_corpus(corpus());
}

// The bigram model must keep the trait words inside the 0.95 nucleus after
// a space, or steering has nothing to act on: intent lines give the shared
// scaffold, pair lines put enough mass on every trait word.
inline std::vector<std::string> train_texts() {
  std::vector<std::string> all_words;
  for (const auto& tw : trait_words()) {
    for (const char* w : tw.high) all_words.emplace_back(w);
    for (const char* w : tw.low) all_words.emplace_back(w);
  }
  std::vector<std::string> texts;
  for (const auto& w : all_words) texts.push_back("i like to " + w + " <eos>");
  const std::size_t n = all_words.size();
  for (std::size_t stride = 1; stride <= 4; ++stride)
    for (std::size_t i = 0; i < n; ++i)
      texts.push_back(all_words[i] + " " + all_words[(i + stride) % n]);
  texts.push_back("we really like things <eos>");
  texts.push_back("they feel what they feel <eos>");
  texts.push_back("i like to do things <eos>");
  texts.push_back("what do we do <eos>");
  texts.push_back("my day <eos>");
  return texts;
}

inline std::string train_file_text() {
  std::string out;
  for (const auto& t : train_texts()) {
    out += t;
    out += '\n';
  }
  return out;
}

inline traitlex::NGramModel bigram(const traitlex::Vocab& v) {
  return traitlex::train_ngram(train_texts(), v, 2, 0.05);
}

inline std::string questions_file_text() {
  std::string out;
  const std::array<const char*, 5> themes = {
      "we have a day and i like to do things what do we do",
      "my day needs a plan what do i do",
      "they ask us to a party what do we do",
      "we see them argue what do we do",
      "things feel like too much what do we do"};
  for (int t = 0; t < traitlex::kNumTraits; ++t) {
    for (int k = 1; k <= 2; ++k) {
      traitlex::JsonWriter w;
      w.begin_object()
          .key("trait").value(traitlex::kTraitLabels[static_cast<std::size_t>(t)])
          .key("id").value(std::string(traitlex::kTraitLabels[static_cast<std::size_t>(t)]) +
                           "-00" + std::to_string(k))
          .key("text").value(themes[static_cast<std::size_t>(t)])
          .end_object();
      out += w.take();
      out += '\n';
    }
  }
  return out;
}

inline const char* prompt_text() { return "i like to"; }

}  // namespace fixtures
