#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "traitlex/types.hpp"

namespace traitlex {

struct AnswerEntry {
  Trait trait;
  Polarity polarity;
  std::string text;
};

// Answer texts grouped by (trait, polarity). Entry order is preserved from
// the source file.
struct AnswerCorpus {
  std::vector<AnswerEntry> entries;

  // counts(t, p): number of entries for trait t with polarity p.
  Eigen::Matrix<std::int64_t, kNumTraits, 2> counts() const;
};

struct CorpusValidation {
  Eigen::Matrix<std::int64_t, kNumTraits, 2> counts;
  std::vector<std::string> warnings;
  std::int64_t duplicate_texts = 0;
  // True when every (trait, polarity) cell is non-empty.
  bool complete = false;
};

// One JSON object per line: {"trait":"OPE","polarity":"High","text":"..."}.
AnswerCorpus parse_corpus(std::string_view text, std::string_view origin);
AnswerCorpus load_corpus(const std::string& path);
std::string serialize_corpus(const AnswerCorpus& corpus);

CorpusValidation validate_corpus(const AnswerCorpus& corpus);

// Content digest of the canonical serialization; stored in lexicon metadata.
std::string corpus_digest(const AnswerCorpus& corpus);

struct Question {
  Trait trait;
  std::string id;
  std::string text;
};

struct QuestionSet {
  std::vector<Question> questions;
};

// One JSON object per line: {"trait":"OPE","id":"OPE-001","text":"..."}.
QuestionSet parse_questions(std::string_view text, std::string_view origin);
QuestionSet load_questions(const std::string& path);

}  // namespace traitlex
