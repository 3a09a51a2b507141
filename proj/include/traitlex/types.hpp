#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace traitlex {

inline constexpr int kNumTraits = 5;

// Canonical trait order; the enum value is the storage column everywhere.
enum class Trait : int {
  Openness = 0,
  Conscientiousness = 1,
  Extraversion = 2,
  Agreeableness = 3,
  Neuroticism = 4,
};

enum class Polarity : int { High = 0, Low = 1 };

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

using Vec = Eigen::VectorXd;
using TraitVec = Eigen::Matrix<double, kNumTraits, 1>;
// Per-token, per-trait net occurrence counts (signed).
using RawCounts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, kNumTraits>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<std::string_view, kNumTraits> kTraitLabels = {
    "OPE", "CON", "EXT", "AGR", "NEU"};

inline std::string_view trait_label(Trait t) {
  return kTraitLabels[static_cast<int>(t)];
}

inline std::string_view polarity_label(Polarity p) {
  return p == Polarity::High ? "High" : "Low";
}

std::optional<Trait> parse_trait(std::string_view label);
std::optional<Polarity> parse_polarity(std::string_view label);

}  // namespace traitlex
