#include "traitlex/prompts.hpp"

#include <cctype>

namespace traitlex {

std::string_view trait_name(Trait t) {
  switch (t) {
    case Trait::Openness: return "Openness";
    case Trait::Conscientiousness: return "Conscientiousness";
    case Trait::Extraversion: return "Extraversion";
    case Trait::Agreeableness: return "Agreeableness";
    case Trait::Neuroticism: return "Neuroticism";
  }
  throw Error("bad trait");
}

std::string_view trait_description(Trait t) {
  switch (t) {
    case Trait::Openness:
      return "curiosity, imagination, and willingness to try new ideas and "
             "experiences";
    case Trait::Conscientiousness:
      return "organization, self-discipline, planning, and reliability";
    case Trait::Extraversion:
      return "sociability, talkativeness, energy, and enthusiasm around others";
    case Trait::Agreeableness:
      return "warmth, cooperation, trust, and consideration for others";
    case Trait::Neuroticism:
      return "anxiety, moodiness, emotional instability, and sensitivity to "
             "stress";
  }
  throw Error("bad trait");
}

std::string render_answer_prompt(std::string_view question) {
  if (question.empty()) throw Error("render_answer_prompt: empty question");
  std::string out;
  out += "You are taking part in a situational judgment exercise. Read the\n";
  out += "scenario below and answer in the first person, in two to four\n";
  out += "sentences, describing what you would do and why.\n";
  out += "\n";
  out += "Scenario: ";
  out += question;
  out += "\n";
  out += "\n";
  out += "Answer:";
  return out;
}

std::string render_judge_prompt(std::string_view question, std::string_view answer,
                                Trait trait) {
  if (question.empty()) throw Error("render_judge_prompt: empty question");
  if (answer.empty()) throw Error("render_judge_prompt: empty answer");
  std::string out;
  out += "You are a careful personality assessor. Below is a situational\n";
  out += "judgment scenario and one answer to it. Rate how strongly the answer\n";
  out += "expresses the trait \"";
  out += trait_name(trait);
  out += "\" (";
  out += trait_description(trait);
  out += ")\n";
  out += "on a scale from 1 (very low) to 5 (very high). Reply with the single\n";
  out += "number only.\n";
  out += "\n";
  out += "Scenario: ";
  out += question;
  out += "\n";
  out += "Answer: ";
  out += answer;
  out += "\n";
  out += "Trait: ";
  out += trait_name(trait);
  out += "\n";
  out += "Score:";
  return out;
}

int parse_likert(std::string_view judge_response) {
  const auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  std::size_t i = 0;
  const std::size_t n = judge_response.size();
  while (i < n) {
    if (!is_digit(judge_response[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_digit(judge_response[j])) ++j;
    // standalone single digit in 1..5 (no adjacent digits by construction)
    if (j - i == 1) {
      const int value = judge_response[i] - '0';
      if (value >= 1 && value <= 5) return value;
    }
    i = j;
  }
  std::string preview(judge_response.substr(0, 120));
  throw Error("parse_likert: no standalone 1..5 score in response: \"" + preview +
              "\"");
}

}  // namespace traitlex
