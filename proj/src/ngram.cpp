#include "traitlex/ngram.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "traitlex/json_util.hpp"

namespace traitlex {

// Longest trained suffix of the context, backing off toward the unigram
// (which is always present after training).
const NGramModel::ContextCounts* NGramModel::lookup(
    std::span<const TokenId> context) const {
  int use = std::min(order_ - 1, static_cast<int>(context.size()));
  for (; use >= 0; --use) {
    TokenSeq key(context.end() - use, context.end());
    auto it = tables_[static_cast<std::size_t>(use)].find(key);
    if (it != tables_[static_cast<std::size_t>(use)].end() && it->second.total > 0)
      return &it->second;
  }
  return nullptr;
}

NGramModel train_ngram(const std::vector<std::string>& texts, const Vocab& vocab,
                       int order, double delta) {
  if (order < 1) throw Error("train_ngram: order must be >= 1");
  if (!(delta > 0.0)) throw Error("train_ngram: delta must be > 0");
  if (texts.empty()) throw Error("train_ngram: no training texts");

  NGramModel model;
  model.order_ = order;
  model.delta_ = delta;
  model.vocab_size_ = vocab.size();
  model.fingerprint_ = vocab.fingerprint();
  model.tables_.resize(static_cast<std::size_t>(order));

  std::int64_t full_windows = 0;
  for (const auto& text : texts) {
    const TokenSeq toks = tokenize(vocab, text).ids;
    const auto len = static_cast<std::int64_t>(toks.size());
    for (std::int64_t i = 0; i < len; ++i) {
      // every window of length 1..order ending at position i
      for (int ctx = 0; ctx < order && ctx <= i; ++ctx) {
        TokenSeq key(toks.begin() + (i - ctx), toks.begin() + i);
        auto& cell = model.tables_[static_cast<std::size_t>(ctx)][std::move(key)];
        ++cell.counts[toks[static_cast<std::size_t>(i)]];
        ++cell.total;
        if (ctx == order - 1) ++full_windows;
      }
    }
  }
  if (full_windows == 0)
    throw Error("train_ngram: no window of length " + std::to_string(order) +
                "; all texts are shorter than the model order");
  return model;
}

Vec NGramModel::next_probs(std::span<const TokenId> context) const {
  const auto n = static_cast<double>(vocab_size_);
  Vec probs(vocab_size_);
  const ContextCounts* cell = lookup(context);
  const double total = cell ? static_cast<double>(cell->total) : 0.0;
  const double denom = total + delta_ * n;
  probs.setConstant(delta_ / denom);
  if (cell)
    for (const auto& [id, count] : cell->counts)
      probs[id] = (static_cast<double>(count) + delta_) / denom;
  return probs;
}

Vec NGramModel::next_logits(std::span<const TokenId> context) {
  return next_probs(context).array().log();
}

double perplexity_tokens(const NGramModel& model, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw Error("perplexity: empty token sequence");
  double nll = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Vec probs = model.next_probs(tokens.subspan(0, i));
    nll -= std::log(probs[tokens[i]]);
  }
  return std::exp(nll / static_cast<double>(tokens.size()));
}

double perplexity(const NGramModel& model, const std::string& text,
                  const Vocab& vocab) {
  const TokenSeq toks = tokenize(vocab, text).ids;
  if (toks.empty()) throw Error("perplexity: text tokenizes to nothing");
  return perplexity_tokens(model, toks);
}

std::string NGramModel::serialize() const {
  JsonWriter w;
  w.begin_object();
  w.key("version").value(std::int64_t{1});
  w.key("order").value(std::int64_t{order_});
  w.key("delta").value(delta_);
  w.key("vocab_size").value(static_cast<std::int64_t>(vocab_size_));
  w.key("vocab_fingerprint").value(fingerprint_);
  w.key("tables").begin_array();
  for (const auto& table : tables_) {
    w.begin_array();
    for (const auto& [context, cell] : table) {
      w.begin_object();
      w.key("context").begin_array();
      for (TokenId id : context) w.value(std::int64_t{id});
      w.end_array();
      w.key("counts").begin_object();
      for (const auto& [id, count] : cell.counts)
        w.key(std::to_string(id)).value(count);
      w.end_object();
      w.end_object();
    }
    w.end_array();
  }
  w.end_array();
  w.end_object();
  std::string out = w.take();
  out += '\n';
  return out;
}

NGramModel parse_ngram_model(std::string_view json_text, std::string_view origin) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(std::string(origin) + ": not a JSON model");
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw Error(std::string(origin) + ": unsupported model version");
  NGramModel model;
  model.order_ = j.at("order").get<int>();
  model.delta_ = j.at("delta").get<double>();
  model.vocab_size_ = j.at("vocab_size").get<Eigen::Index>();
  model.fingerprint_ = j.at("vocab_fingerprint").get<std::string>();
  if (model.order_ < 1 || model.vocab_size_ < 1 || !(model.delta_ > 0.0))
    throw Error(std::string(origin) + ": invalid model parameters");
  const auto& tables = j.at("tables");
  if (static_cast<int>(tables.size()) != model.order_)
    throw Error(std::string(origin) + ": table count does not match order");
  model.tables_.resize(tables.size());
  for (std::size_t ctx = 0; ctx < tables.size(); ++ctx) {
    for (const auto& entry : tables[ctx]) {
      TokenSeq context;
      for (const auto& id : entry.at("context"))
        context.push_back(id.get<TokenId>());
      if (context.size() != ctx)
        throw Error(std::string(origin) + ": context length mismatch");
      NGramModel::ContextCounts cell;
      for (const auto& [key, count] : entry.at("counts").items()) {
        const TokenId id = static_cast<TokenId>(std::stol(key));
        if (id < 0 || id >= model.vocab_size_)
          throw Error(std::string(origin) + ": token id out of range");
        const auto c = count.get<std::int64_t>();
        cell.counts[id] = c;
        cell.total += c;
      }
      model.tables_[ctx].emplace(std::move(context), std::move(cell));
    }
  }
  return model;
}

NGramModel load_ngram_model(const std::string& path) {
  return parse_ngram_model(read_text_file(path), path);
}

void save_ngram_model(const NGramModel& model, const std::string& path) {
  write_text_file(path, model.serialize());
}

}  // namespace traitlex
