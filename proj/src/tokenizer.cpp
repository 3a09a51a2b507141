#include "traitlex/tokenizer.hpp"

#include <charconv>

#include "traitlex/json_util.hpp"

namespace traitlex {

namespace {

// Byte length of the UTF-8 sequence starting at src[0]; malformed leading
// bytes advance by one so tokenization always makes progress.
std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;
}

}  // namespace

struct TokenizerImpl {
  static Vocab build(std::vector<std::string> tokens, std::optional<TokenId> eos,
                     std::string_view origin) {
    if (tokens.empty()) throw Error(std::string(origin) + ": empty vocab");
    Vocab v;
    v.tokens_ = std::move(tokens);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t id = 0; id < v.tokens_.size(); ++id) {
      const std::string& tok = v.tokens_[id];
      if (tok.empty())
        throw Error(std::string(origin) + ": empty token at id " + std::to_string(id));
      auto [it, inserted] = v.index_.emplace(tok, static_cast<TokenId>(id));
      if (!inserted)
        throw Error(std::string(origin) + ": duplicate token '" + tok + "'");
      h = fnv1a64(tok, h);
      h = fnv1a64(std::string_view("\x1f", 1), h);  // separator keeps ordering significant
    }
    v.fingerprint_ = "fnv1a64:" + hex64(h);
    if (eos) {
      if (*eos < 0 || *eos >= v.size())
        throw Error(std::string(origin) + ": eos id out of range");
      v.eos_id_ = *eos;
    } else {
      v.eos_id_ = static_cast<TokenId>(v.size() - 1);
    }
    // byte trie for greedy longest-match
    v.trie_.emplace_back();
    for (std::size_t id = 0; id < v.tokens_.size(); ++id) {
      std::int32_t node = 0;
      for (unsigned char c : v.tokens_[id]) {
        auto it = v.trie_[node].next.find(c);
        if (it == v.trie_[node].next.end()) {
          v.trie_.emplace_back();
          it = v.trie_[node].next.emplace(c, static_cast<std::int32_t>(v.trie_.size() - 1)).first;
        }
        node = it->second;
      }
      v.trie_[node].terminal = static_cast<TokenId>(id);
    }
    return v;
  }

  static const std::vector<Vocab::TrieNode>& trie(const Vocab& v) { return v.trie_; }
};

Vocab Vocab::from_tokens(std::vector<std::string> tokens, std::optional<TokenId> eos) {
  return TokenizerImpl::build(std::move(tokens), eos, "<memory>");
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || id >= size()) throw Error("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocab::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) out += token(id);
  return out;
}

Vocab parse_vocab(std::string_view text, std::string_view origin) {
  std::vector<std::string> tokens;
  std::optional<TokenId> eos;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const bool at_eof = nl == std::string_view::npos || nl + 1 >= text.size();
    if (line_no == 1 && line.starts_with("#eos ")) {
      std::string_view num = line.substr(5);
      TokenId id = -1;
      auto res = std::from_chars(num.data(), num.data() + num.size(), id);
      if (res.ec != std::errc() || res.ptr != num.data() + num.size())
        throw Error(std::string(origin) + ": bad #eos header '" + std::string(line) + "'");
      eos = id;
    } else if (!line.empty()) {
      tokens.emplace_back(line);
    } else if (!at_eof) {
      throw Error(std::string(origin) + ": empty vocab line " + std::to_string(line_no));
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return TokenizerImpl::build(std::move(tokens), eos, origin);
}

Vocab load_vocab(const std::string& path) {
  return parse_vocab(read_text_file(path), path);
}

std::string serialize_vocab(const Vocab& vocab) {
  std::string out = "#eos " + std::to_string(vocab.eos_id()) + "\n";
  for (const auto& tok : vocab.tokens()) {
    out += tok;
    out += '\n';
  }
  return out;
}

TokenizeResult tokenize(const Vocab& vocab, std::string_view text) {
  TokenizeResult result;
  const auto& trie = TokenizerImpl::trie(vocab);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::int32_t node = 0;
    TokenId best = -1;
    std::size_t best_len = 0;
    for (std::size_t i = pos; i < text.size(); ++i) {
      auto it = trie[static_cast<std::size_t>(node)].next.find(
          static_cast<unsigned char>(text[i]));
      if (it == trie[static_cast<std::size_t>(node)].next.end()) break;
      node = it->second;
      if (trie[static_cast<std::size_t>(node)].terminal >= 0) {
        best = trie[static_cast<std::size_t>(node)].terminal;
        best_len = i - pos + 1;
      }
    }
    if (best >= 0) {
      result.ids.push_back(best);
      pos += best_len;
    } else {
      pos += utf8_len(static_cast<unsigned char>(text[pos]));
      ++result.skipped_chars;
    }
  }
  return result;
}

}  // namespace traitlex
