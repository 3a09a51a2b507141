#pragma once

#include <string>
#include <string_view>

#include "traitlex/types.hpp"

namespace traitlex {

std::string_view trait_name(Trait t);
std::string_view trait_description(Trait t);

// Deterministic, byte-stable prompt asking a model to answer a situational
// judgment scenario in the first person.
std::string render_answer_prompt(std::string_view question);

// Deterministic rating prompt for one (scenario, answer, trait) triple. The
// judge is asked for a single 1..5 score.
std::string render_judge_prompt(std::string_view question, std::string_view answer,
                                Trait trait);

// Extracts the first standalone integer in 1..5 from a judge response.
// Throws Error (carrying the raw text) when none is present.
int parse_likert(std::string_view judge_response);

}  // namespace traitlex
