#include "traitlex/eval.hpp"

#include <cstdio>
#include <cstring>

#include "traitlex/json_util.hpp"
#include "traitlex/prompts.hpp"
#include "traitlex/rng.hpp"

namespace traitlex {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

std::uint64_t question_stream(std::string_view question_id, std::uint64_t run) {
  return mix64(fnv1a64(question_id) ^ mix64(run));
}

}  // namespace

double trait_token_rate(std::span<const TokenId> tokens, const Lexicon& lexicon,
                        Trait trait) {
  if (tokens.empty()) return 0.0;
  std::int64_t hits = 0;
  for (TokenId id : tokens) {
    const TraitVec* row = lexicon.find(id);
    if (row != nullptr && (*row)[static_cast<int>(trait)] > 0.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(tokens.size());
}

TraitSweepRow eval_trait_sweep(DistributionSource& source, const Lexicon& lexicon,
                               const Vocab& vocab, const QuestionSet& questions,
                               Trait trait, const EvalOptions& options,
                               JudgeClient* judge, EvalCounters* counters) {
  std::vector<const Question*> pool;
  for (const auto& q : questions.questions)
    if (q.trait == trait) pool.push_back(&q);
  if (pool.empty())
    throw Error("no questions for trait " + std::string(trait_label(trait)));

  EvalCounters local;
  EvalCounters& ctr = counters ? *counters : local;

  TraitSweepRow row;
  row.trait = trait;
  std::vector<double> means;
  for (double beta : options.beta_grid) {
    SteeringConfig cfg;
    cfg.alpha = options.alpha;
    cfg.beta = TraitVec::Zero();
    cfg.beta[static_cast<int>(trait)] = beta;
    cfg.top_p = options.top_p;
    cfg.temperature = options.temperature;

    std::vector<double> scores;
    for (const Question* q : pool) {
      const TokenSeq prompt = tokenize(vocab, render_answer_prompt(q->text)).ids;
      for (int run = 0; run < options.runs_per_question; ++run) {
        // streams keyed by question id and run, not file order or beta, so
        // the grid shares random numbers and reordering questions is neutral
        RandomStream rng = RandomStream::substream(
            options.seed, question_stream(q->id, static_cast<std::uint64_t>(run)));
        GenerateResult gen = generate(source, &lexicon, cfg, prompt,
                                      options.max_tokens, vocab.eos_id(), rng);
        if (gen.source_failed)
          throw Error("distribution source failed: " + gen.error);
        if (judge == nullptr) {
          scores.push_back(trait_token_rate(gen.tokens, lexicon, trait));
          continue;
        }
        ++ctr.judged;
        if (gen.tokens.empty()) {
          ++ctr.parse_failures;
          continue;
        }
        const std::string answer = vocab.detokenize(gen.tokens);
        const std::string prompt_text = render_judge_prompt(q->text, answer, trait);
        try {
          scores.push_back(static_cast<double>(parse_likert(judge->judge(prompt_text))));
        } catch (const Error&) {
          ++ctr.parse_failures;
        }
      }
    }
    if (judge != nullptr && ctr.judged > 0) {
      const double fail_rate = static_cast<double>(ctr.parse_failures) /
                               static_cast<double>(ctr.judged);
      if (fail_rate > options.max_parse_failure_rate)
        throw Error("judge parse failure rate " + format_double(fail_rate) +
                    " exceeds " + format_double(options.max_parse_failure_rate));
    }
    BetaCell cell;
    cell.beta = beta;
    if (!scores.empty()) {
      cell.mean = mean_of(scores);
      cell.stddev = stddev_of(scores);
      cell.count = static_cast<std::int64_t>(scores.size());
    }
    means.push_back(cell.mean);
    row.cells.push_back(cell);
  }
  if (options.beta_grid.size() >= 3) {
    try {
      row.correlation = pearson(options.beta_grid, means);
    } catch (const Error&) {
      // constant means: leave the correlation absent
    }
  }
  return row;
}

std::vector<PplCell> ppl_stability(DistributionSource& source,
                                   const NGramModel& scorer, const Lexicon& lexicon,
                                   const Vocab& vocab, Trait trait,
                                   std::span<const double> beta_grid,
                                   std::span<const TokenSeq> prompts, int runs,
                                   const EvalOptions& options) {
  if (prompts.empty()) throw Error("ppl_stability: no prompts");
  if (runs < 1) throw Error("ppl_stability: runs must be >= 1");
  std::vector<PplCell> cells;
  for (double beta : beta_grid) {
    SteeringConfig cfg;
    cfg.alpha = options.alpha;
    cfg.beta = TraitVec::Zero();
    cfg.beta[static_cast<int>(trait)] = beta;
    cfg.top_p = options.top_p;
    cfg.temperature = options.temperature;

    std::vector<double> ppls;
    for (int run = 0; run < runs; ++run) {
      const TokenSeq& prompt = prompts[static_cast<std::size_t>(run) % prompts.size()];
      // same stream per run across the whole grid
      RandomStream rng =
          RandomStream::substream(options.seed, static_cast<std::uint64_t>(run));
      GenerateResult gen = generate(source, &lexicon, cfg, prompt,
                                    options.max_tokens, vocab.eos_id(), rng);
      if (gen.source_failed)
        throw Error("distribution source failed: " + gen.error);
      if (gen.tokens.empty()) continue;
      ppls.push_back(perplexity_tokens(scorer, gen.tokens));
    }
    PplCell cell;
    cell.beta = beta;
    if (!ppls.empty()) {
      cell.mean_ppl = mean_of(ppls);
      cell.std_ppl = stddev_of(ppls);
      cell.runs = static_cast<std::int64_t>(ppls.size());
    }
    cells.push_back(cell);
  }
  return cells;
}

std::vector<MSweepRow> sweep_m(const AnswerCorpus& corpus, const Vocab& vocab,
                               std::span<const double> m_grid,
                               DistributionSource& source,
                               std::span<const TokenSeq> prompts,
                               const MSweepFixture& fixture) {
  if (prompts.empty()) throw Error("sweep_m: no prompts");
  std::vector<MSweepRow> rows;
  const RawCounts raw = iterate_assignment(corpus, vocab);
  for (double m : m_grid) {
    MSweepRow row;
    row.m_value = m;
    BuildOptions opts;
    opts.m_targets = TraitVec::Constant(m);
    opts.epsilon = fixture.epsilon;
    try {
      BuildOutput built = normalization_scaling(raw, vocab, corpus, opts);
      SteeringConfig cfg;
      cfg.alpha = fixture.alpha;
      cfg.beta = TraitVec::Zero();
      cfg.beta[static_cast<int>(fixture.trait)] = fixture.beta;
      cfg.top_p = fixture.top_p;
      cfg.temperature = fixture.temperature;
      std::vector<double> scores;
      for (int run = 0; run < fixture.runs; ++run) {
        const TokenSeq& prompt =
            prompts[static_cast<std::size_t>(run) % prompts.size()];
        RandomStream rng =
            RandomStream::substream(fixture.seed, static_cast<std::uint64_t>(run));
        GenerateResult gen = generate(source, &built.lexicon, cfg, prompt,
                                      fixture.max_tokens, vocab.eos_id(), rng);
        if (gen.source_failed)
          throw Error("distribution source failed: " + gen.error);
        scores.push_back(trait_token_rate(gen.tokens, built.lexicon, fixture.trait));
      }
      row.built = true;
      row.metric = scores.empty() ? 0.0 : mean_of(scores);
    } catch (const Error& e) {
      row.built = false;
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

std::string render_trait_sweep_table(std::span<const TraitSweepRow> rows,
                                     std::span<const double> beta_grid) {
  std::string out;
  out += pad("trait", 7);
  for (double b : beta_grid) out += pad("beta=" + fixed(b, 2), 16);
  out += pad("R", 10);
  out += "P\n";
  for (const auto& row : rows) {
    out += pad(std::string(trait_label(row.trait)), 7);
    for (const auto& cell : row.cells) {
      if (cell.count == 0) {
        out += pad("n/a", 16);
      } else {
        out += pad(fixed(cell.mean, 3) + "(" + fixed(cell.stddev, 3) + ")", 16);
      }
    }
    if (row.correlation) {
      out += pad(fixed(row.correlation->r, 4), 10);
      out += sci(row.correlation->p);
    } else {
      out += pad("n/a", 10);
      out += "n/a";
    }
    out += '\n';
  }
  return out;
}

std::string trait_sweep_jsonl(std::span<const TraitSweepRow> rows) {
  std::string out;
  for (const auto& row : rows) {
    JsonWriter w;
    w.begin_object();
    w.key("trait").value(trait_label(row.trait));
    w.key("cells").begin_array();
    for (const auto& cell : row.cells) {
      w.begin_object()
          .key("beta").value(cell.beta)
          .key("mean").value(cell.mean)
          .key("std").value(cell.stddev)
          .key("n").value(cell.count)
          .end_object();
    }
    w.end_array();
    if (row.correlation) {
      w.key("R").value(row.correlation->r);
      w.key("P").value(row.correlation->p);
    } else {
      w.key("R").raw("null");
      w.key("P").raw("null");
    }
    w.end_object();
    out += w.take();
    out += '\n';
  }
  return out;
}

std::string render_ppl_table(std::span<const PplCell> cells) {
  std::string out;
  out += pad("beta", 8);
  out += pad("mean_ppl", 12);
  out += pad("std", 10);
  out += "runs\n";
  for (const auto& c : cells) {
    out += pad(fixed(c.beta, 2), 8);
    out += pad(fixed(c.mean_ppl, 4), 12);
    out += pad(fixed(c.std_ppl, 4), 10);
    out += std::to_string(c.runs);
    out += '\n';
  }
  return out;
}

std::string ppl_jsonl(std::span<const PplCell> cells) {
  std::string out;
  for (const auto& c : cells) {
    JsonWriter w;
    w.begin_object()
        .key("beta").value(c.beta)
        .key("mean_ppl").value(c.mean_ppl)
        .key("std_ppl").value(c.std_ppl)
        .key("runs").value(c.runs)
        .end_object();
    out += w.take();
    out += '\n';
  }
  return out;
}

std::string render_m_sweep_table(std::span<const MSweepRow> rows) {
  std::string out;
  out += pad("M", 10);
  out += pad("metric", 10);
  out += "status\n";
  for (const auto& r : rows) {
    out += pad(fixed(r.m_value, 4), 10);
    out += pad(r.built ? fixed(r.metric, 4) : std::string("n/a"), 10);
    out += r.built ? "ok" : ("failed: " + r.error);
    out += '\n';
  }
  return out;
}

std::string m_sweep_jsonl(std::span<const MSweepRow> rows) {
  std::string out;
  for (const auto& r : rows) {
    JsonWriter w;
    w.begin_object();
    w.key("M").value(r.m_value);
    w.key("built").value(r.built);
    if (r.built)
      w.key("metric").value(r.metric);
    else
      w.key("error").value(r.error);
    w.end_object();
    out += w.take();
    out += '\n';
  }
  return out;
}

}  // namespace traitlex
