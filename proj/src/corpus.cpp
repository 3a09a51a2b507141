#include "traitlex/corpus.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <unordered_map>

#include "traitlex/json_util.hpp"

namespace traitlex {

namespace {

using nlohmann::json;

std::string line_error(std::string_view origin, std::size_t line_no,
                       const std::string& what) {
  return std::string(origin) + ":" + std::to_string(line_no) + ": " + what;
}

// Splits into lines, tolerating \r\n and a missing final newline. Skips
// blank lines but reports their positions to the caller via line numbers.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line_no, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

}  // namespace

std::optional<Trait> parse_trait(std::string_view label) {
  for (int t = 0; t < kNumTraits; ++t)
    if (label == kTraitLabels[t]) return static_cast<Trait>(t);
  return std::nullopt;
}

std::optional<Polarity> parse_polarity(std::string_view label) {
  if (label == "High") return Polarity::High;
  if (label == "Low") return Polarity::Low;
  return std::nullopt;
}

Eigen::Matrix<std::int64_t, kNumTraits, 2> AnswerCorpus::counts() const {
  Eigen::Matrix<std::int64_t, kNumTraits, 2> c;
  c.setZero();
  for (const auto& e : entries)
    ++c(static_cast<int>(e.trait), static_cast<int>(e.polarity));
  return c;
}

AnswerCorpus parse_corpus(std::string_view text, std::string_view origin) {
  AnswerCorpus corpus;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
      throw Error(line_error(origin, line_no, "malformed record"));
    if (!obj.contains("trait") || !obj.contains("polarity") || !obj.contains("text"))
      throw Error(line_error(origin, line_no,
                             "record needs trait, polarity and text fields"));
    const auto trait_str = obj["trait"].get<std::string>();
    auto trait = parse_trait(trait_str);
    if (!trait)
      throw Error(line_error(origin, line_no, "unknown trait '" + trait_str + "'"));
    const auto pol_str = obj["polarity"].get<std::string>();
    auto polarity = parse_polarity(pol_str);
    if (!polarity)
      throw Error(
          line_error(origin, line_no, "unknown polarity '" + pol_str + "'"));
    auto body = obj["text"].get<std::string>();
    if (body.empty())
      throw Error(line_error(origin, line_no, "empty answer text"));
    corpus.entries.push_back({*trait, *polarity, std::move(body)});
  });
  if (corpus.entries.empty())
    throw Error(std::string(origin) + ": empty corpus");
  return corpus;
}

AnswerCorpus load_corpus(const std::string& path) {
  return parse_corpus(read_text_file(path), path);
}

std::string serialize_corpus(const AnswerCorpus& corpus) {
  std::string out;
  for (const auto& e : corpus.entries) {
    JsonWriter w;
    w.begin_object()
        .key("trait").value(trait_label(e.trait))
        .key("polarity").value(polarity_label(e.polarity))
        .key("text").value(e.text)
        .end_object();
    out += w.take();
    out += '\n';
  }
  return out;
}

CorpusValidation validate_corpus(const AnswerCorpus& corpus) {
  CorpusValidation v;
  v.counts = corpus.counts();
  // duplicate_texts counts extra occurrences, not distinct texts
  std::unordered_map<std::string, int> seen;
  for (const auto& e : corpus.entries)
    if (++seen[e.text] > 1) ++v.duplicate_texts;

  v.complete = true;
  for (int t = 0; t < kNumTraits; ++t) {
    for (int p = 0; p < 2; ++p) {
      if (v.counts(t, p) == 0) {
        v.complete = false;
        v.warnings.push_back("trait " + std::string(kTraitLabels[t]) +
                             " has empty " +
                             std::string(polarity_label(static_cast<Polarity>(p))) +
                             " polarity");
      }
    }
  }
  if (v.duplicate_texts > 0)
    v.warnings.push_back(std::to_string(v.duplicate_texts) +
                         " duplicated answer text(s)");
  return v;
}

std::string corpus_digest(const AnswerCorpus& corpus) {
  return hex64(fnv1a64(serialize_corpus(corpus)));
}

QuestionSet parse_questions(std::string_view text, std::string_view origin) {
  QuestionSet qs;
  std::set<std::string> ids;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
      throw Error(line_error(origin, line_no, "malformed record"));
    if (!obj.contains("trait") || !obj.contains("id") || !obj.contains("text"))
      throw Error(
          line_error(origin, line_no, "record needs trait, id and text fields"));
    const auto trait_str = obj["trait"].get<std::string>();
    auto trait = parse_trait(trait_str);
    if (!trait)
      throw Error(line_error(origin, line_no, "unknown trait '" + trait_str + "'"));
    auto id = obj["id"].get<std::string>();
    if (!ids.insert(id).second)
      throw Error(line_error(origin, line_no, "duplicate question id '" + id + "'"));
    auto body = obj["text"].get<std::string>();
    if (body.empty()) throw Error(line_error(origin, line_no, "empty question"));
    qs.questions.push_back({*trait, std::move(id), std::move(body)});
  });
  if (qs.questions.empty()) throw Error(std::string(origin) + ": empty question set");
  return qs;
}

QuestionSet load_questions(const std::string& path) {
  return parse_questions(read_text_file(path), path);
}

}  // namespace traitlex
