#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "traitlex/types.hpp"

namespace traitlex {

// Immutable token table. Ids are dense 0..size-1 in file order; the
// fingerprint binds lexicons and models to one exact table.
class Vocab {
 public:
  static Vocab from_tokens(std::vector<std::string> tokens,
                           std::optional<TokenId> eos = std::nullopt);

  Eigen::Index size() const { return static_cast<Eigen::Index>(tokens_.size()); }
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<TokenId> find(std::string_view token) const;
  TokenId eos_id() const { return eos_id_; }
  const std::string& fingerprint() const { return fingerprint_; }

  std::string detokenize(std::span<const TokenId> ids) const;

 private:
  friend struct TokenizerImpl;
  Vocab() = default;

  struct TrieNode {
    std::map<unsigned char, std::int32_t> next;
    TokenId terminal = -1;
  };

  std::vector<std::string> tokens_;
  std::map<std::string, TokenId, std::less<>> index_;
  std::vector<TrieNode> trie_;
  TokenId eos_id_ = -1;
  std::string fingerprint_;
};

// One token per line, line number = token id. An optional first line
// "#eos <id>" designates the end-of-sequence token (default: last token).
Vocab parse_vocab(std::string_view text, std::string_view origin);
Vocab load_vocab(const std::string& path);
std::string serialize_vocab(const Vocab& vocab);

struct TokenizeResult {
  TokenSeq ids;
  // Characters (code points) not covered by any vocabulary token.
  std::size_t skipped_chars = 0;
};

// Deterministic greedy longest-match segmentation, left to right. Uncovered
// characters are skipped and counted.
TokenizeResult tokenize(const Vocab& vocab, std::string_view text);

}  // namespace traitlex
