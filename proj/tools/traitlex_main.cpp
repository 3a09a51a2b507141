#include <CLI11.hpp>

#include <cctype>
#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "traitlex/bridge.hpp"
#include "traitlex/corpus.hpp"
#include "traitlex/decoding.hpp"
#include "traitlex/eval.hpp"
#include "traitlex/json_util.hpp"
#include "traitlex/lexicon.hpp"
#include "traitlex/manifest.hpp"
#include "traitlex/ngram.hpp"
#include "traitlex/prompts.hpp"
#include "traitlex/rng.hpp"
#include "traitlex/stats.hpp"
#include "traitlex/tokenizer.hpp"

namespace {

using namespace traitlex;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;

double pdouble(const RunManifest& m, const std::string& key) {
  const std::string* v = m.param(key);
  if (!v) throw Error("missing parameter: " + key);
  return parse_double_list(*v).at(0);
}

std::int64_t pint(const RunManifest& m, const std::string& key) {
  return static_cast<std::int64_t>(pdouble(m, key));
}

std::string pstr(const RunManifest& m, const std::string& key) {
  const std::string* v = m.param(key);
  if (!v) throw Error("missing parameter: " + key);
  return *v;
}

std::optional<std::string> pstr_opt(const RunManifest& m, const std::string& key) {
  const std::string* v = m.param(key);
  if (!v || v->empty()) return std::nullopt;
  return *v;
}

TraitVec pbeta(const RunManifest& m) {
  TraitVec beta;
  for (int t = 0; t < kNumTraits; ++t) {
    std::string key = "beta_";
    for (char c : kTraitLabels[t]) key += static_cast<char>(std::tolower(c));
    beta[t] = pdouble(m, key);
  }
  return beta;
}

SteeringConfig steering_from(const RunManifest& m) {
  SteeringConfig cfg;
  cfg.alpha = pdouble(m, "alpha");
  cfg.beta = pbeta(m);
  cfg.top_p = pdouble(m, "top_p");
  cfg.temperature = pdouble(m, "temperature");
  cfg.validate();
  return cfg;
}

Trait trait_from(const std::string& label) {
  auto t = parse_trait(label);
  if (!t) throw Error("unknown trait '" + label + "' (expected OPE/CON/EXT/AGR/NEU)");
  return *t;
}

// Source selection shared by generate/eval/sweep: a saved toy model or an
// external bridge command. The model, when present, doubles as the
// perplexity scorer.
struct SourceBundle {
  std::unique_ptr<NGramModel> model;
  std::unique_ptr<BridgeSource> bridge;
  DistributionSource& source() {
    if (bridge) return *bridge;
    return *model;
  }
};

SourceBundle open_source(const RunManifest& m) {
  SourceBundle b;
  auto model_path = pstr_opt(m, "model");
  auto bridge_cmd = pstr_opt(m, "bridge");
  if (!model_path && !bridge_cmd)
    throw Error("need --model or --bridge as the distribution source");
  if (model_path)
    b.model = std::make_unique<NGramModel>(load_ngram_model(*model_path));
  if (bridge_cmd) b.bridge = std::make_unique<BridgeSource>(*bridge_cmd);
  return b;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  std::string text = read_text_file(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(
        pos, nl == std::string::npos ? text.size() - pos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return lines;
}

int run_build(RunManifest& m) {
  const std::string corpus_path = pstr(m, "corpus");
  const std::string vocab_path = pstr(m, "vocab");
  const std::string out_path = pstr(m, "out");
  m.add_input("corpus", corpus_path);
  m.add_input("vocab", vocab_path);

  const AnswerCorpus corpus = load_corpus(corpus_path);
  const Vocab vocab = load_vocab(vocab_path);

  const CorpusValidation validation = validate_corpus(corpus);
  for (const auto& warning : validation.warnings)
    std::cerr << "warning: " << warning << "\n";

  BuildOptions opts;
  const std::vector<double> mvals = parse_double_list(pstr(m, "m"));
  if (mvals.size() == 1)
    opts.m_targets = TraitVec::Constant(mvals[0]);
  else if (mvals.size() == kNumTraits)
    for (int t = 0; t < kNumTraits; ++t) opts.m_targets[t] = mvals[static_cast<std::size_t>(t)];
  else
    throw Error("--m takes one value or five comma-separated values");
  opts.epsilon = pdouble(m, "epsilon");
  opts.zeros = pint(m, "include_zero_averages") != 0 ? ZeroConvention::Include
                                                     : ZeroConvention::Exclude;
  opts.require_convergence = false;

  const BuildOutput built = build_lexicon(corpus, vocab, opts);

  const std::string report_path = out_path + ".report.json";
  write_text_file(report_path, serialize_build_report(built.report));

  for (int t = 0; t < kNumTraits; ++t) {
    const auto& tr = built.report.traits[static_cast<std::size_t>(t)];
    std::printf("%s  N=%-12g S=%-12g residuals=(%.3g, %.3g) nonzero=%lld %s\n",
                std::string(kTraitLabels[t]).c_str(), tr.params.n_divisor,
                tr.params.s_amplitude, tr.residual_pos, tr.residual_neg,
                static_cast<long long>(tr.nonzero),
                tr.error.empty() ? (tr.params.converged ? "ok" : "UNCONVERGED")
                                 : tr.error.c_str());
  }

  if (!built.report.all_converged) {
    m.add_output("report", report_path);
    m.save(manifest_path_for(out_path));
    for (int t = 0; t < kNumTraits; ++t) {
      const auto& tr = built.report.traits[static_cast<std::size_t>(t)];
      if (!tr.params.converged || !tr.error.empty())
        std::cerr << "error: trait " << kTraitLabels[t] << ": "
                  << (tr.error.empty() ? "solver did not converge" : tr.error)
                  << "\n";
    }
    return kExitSolver;
  }

  save_lexicon(built.lexicon, out_path);
  std::printf("lexicon: %zu entries -> %s\n", built.lexicon.size(),
              out_path.c_str());
  m.add_output("lexicon", out_path);
  m.add_output("report", report_path);
  m.save(manifest_path_for(out_path));
  return kExitOk;
}

int run_train(RunManifest& m) {
  const std::string train_path = pstr(m, "train");
  const std::string vocab_path = pstr(m, "vocab");
  const std::string out_path = pstr(m, "out");
  m.add_input("train", train_path);
  m.add_input("vocab", vocab_path);

  const Vocab vocab = load_vocab(vocab_path);
  const std::vector<std::string> texts = read_lines(train_path);
  const NGramModel model =
      train_ngram(texts, vocab, static_cast<int>(pint(m, "order")),
                  pdouble(m, "delta"));
  save_ngram_model(model, out_path);
  std::printf("model: order=%d vocab=%lld -> %s\n", model.order(),
              static_cast<long long>(model.vocab_size()), out_path.c_str());
  m.add_output("model", out_path);
  m.save(manifest_path_for(out_path));
  return kExitOk;
}

int run_generate(RunManifest& m) {
  const std::string vocab_path = pstr(m, "vocab");
  m.add_input("vocab", vocab_path);
  const Vocab vocab = load_vocab(vocab_path);

  SourceBundle src = open_source(m);
  if (auto model_path = pstr_opt(m, "model")) m.add_input("model", *model_path);

  std::unique_ptr<Lexicon> lexicon;
  if (auto lex_path = pstr_opt(m, "lexicon")) {
    m.add_input("lexicon", *lex_path);
    lexicon = std::make_unique<Lexicon>(load_lexicon(*lex_path));
  }

  const SteeringConfig cfg = steering_from(m);
  const auto seed = static_cast<std::uint64_t>(pint(m, "seed"));
  const auto max_tokens = static_cast<std::size_t>(pint(m, "max_tokens"));

  std::vector<std::string> prompts;
  if (auto prompts_path = pstr_opt(m, "prompts")) {
    m.add_input("prompts", *prompts_path);
    prompts = read_lines(*prompts_path);
  } else {
    for (int i = 0;; ++i) {
      auto p = pstr_opt(m, "prompt." + std::to_string(i));
      if (!p) break;
      prompts.push_back(*p);
    }
  }
  if (prompts.empty()) throw Error("no prompts (use --prompt or --prompts)");

  if (vocab.fingerprint() != src.source().vocab_fingerprint())
    throw Error("vocab does not match the distribution source (fingerprint " +
                vocab.fingerprint() + " vs " + src.source().vocab_fingerprint() +
                ")");

  std::string out_text;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const TokenSeq prompt = tokenize(vocab, prompts[i]).ids;
    RandomStream rng = RandomStream::substream(seed, i);
    GenerateResult gen = generate(src.source(), lexicon.get(), cfg, prompt,
                                  max_tokens, vocab.eos_id(), rng);
    if (gen.source_failed)
      throw Error("source failed after " + std::to_string(gen.tokens.size()) +
                  " tokens: " + gen.error);
    out_text += vocab.detokenize(gen.tokens);
    out_text += '\n';
  }

  if (auto out_path = pstr_opt(m, "out")) {
    write_text_file(*out_path, out_text);
    m.add_output("text", *out_path);
    m.save(manifest_path_for(*out_path));
  } else {
    std::fwrite(out_text.data(), 1, out_text.size(), stdout);
  }
  return kExitOk;
}

std::vector<Trait> traits_from(const std::string& label) {
  if (label == "all")
    return {Trait::Openness, Trait::Conscientiousness, Trait::Extraversion,
            Trait::Agreeableness, Trait::Neuroticism};
  return {trait_from(label)};
}

int run_eval(RunManifest& m) {
  const std::string vocab_path = pstr(m, "vocab");
  const std::string lexicon_path = pstr(m, "lexicon");
  const std::string questions_path = pstr(m, "questions");
  const std::string out_prefix = pstr(m, "out");
  m.add_input("vocab", vocab_path);
  m.add_input("lexicon", lexicon_path);
  m.add_input("questions", questions_path);

  const Vocab vocab = load_vocab(vocab_path);
  const Lexicon lexicon = load_lexicon(lexicon_path);
  const QuestionSet questions = load_questions(questions_path);

  SourceBundle src = open_source(m);
  if (auto model_path = pstr_opt(m, "model")) m.add_input("model", *model_path);

  std::unique_ptr<BridgeJudge> judge;
  if (auto judge_cmd = pstr_opt(m, "judge")) judge = std::make_unique<BridgeJudge>(*judge_cmd);

  EvalOptions opts;
  opts.beta_grid = parse_double_list(pstr(m, "beta_grid"));
  opts.alpha = pdouble(m, "alpha");
  opts.top_p = pdouble(m, "top_p");
  opts.temperature = pdouble(m, "temperature");
  opts.max_tokens = static_cast<std::size_t>(pint(m, "max_tokens"));
  opts.runs_per_question = static_cast<int>(pint(m, "runs"));
  opts.seed = static_cast<std::uint64_t>(pint(m, "seed"));

  EvalCounters counters;
  std::vector<TraitSweepRow> rows;
  for (Trait t : traits_from(pstr(m, "trait")))
    rows.push_back(eval_trait_sweep(src.source(), lexicon, vocab, questions, t,
                                    opts, judge.get(), &counters));

  const std::string scores_txt = render_trait_sweep_table(rows, opts.beta_grid);
  std::fputs(scores_txt.c_str(), stdout);
  if (counters.judged > 0)
    std::printf("judge: %lld scored, %lld parse failures\n",
                static_cast<long long>(counters.judged - counters.parse_failures),
                static_cast<long long>(counters.parse_failures));

  write_text_file(out_prefix + ".scores.txt", scores_txt);
  write_text_file(out_prefix + ".scores.jsonl", trait_sweep_jsonl(rows));
  m.add_output("scores_table", out_prefix + ".scores.txt");
  m.add_output("scores_jsonl", out_prefix + ".scores.jsonl");

  // Perplexity stability needs a scoring model; skipped for bridge-only runs.
  if (src.model) {
    const auto ppl_runs = static_cast<int>(pint(m, "ppl_runs"));
    std::vector<TokenSeq> prompts;
    for (const auto& q : questions.questions)
      prompts.push_back(tokenize(vocab, render_answer_prompt(q.text)).ids);
    const Trait ppl_trait = traits_from(pstr(m, "trait")).front();
    const std::vector<PplCell> cells =
        ppl_stability(src.source(), *src.model, lexicon, vocab, ppl_trait,
                      opts.beta_grid, prompts, ppl_runs, opts);
    const std::string ppl_txt = render_ppl_table(cells);
    std::fputs(ppl_txt.c_str(), stdout);
    write_text_file(out_prefix + ".ppl.txt", ppl_txt);
    write_text_file(out_prefix + ".ppl.jsonl", ppl_jsonl(cells));
    m.add_output("ppl_table", out_prefix + ".ppl.txt");
    m.add_output("ppl_jsonl", out_prefix + ".ppl.jsonl");
  }

  m.save(manifest_path_for(out_prefix));
  return kExitOk;
}

int run_sweep_m(RunManifest& m) {
  const std::string corpus_path = pstr(m, "corpus");
  const std::string vocab_path = pstr(m, "vocab");
  const std::string questions_path = pstr(m, "questions");
  const std::string out_prefix = pstr(m, "out");
  m.add_input("corpus", corpus_path);
  m.add_input("vocab", vocab_path);
  m.add_input("questions", questions_path);

  const AnswerCorpus corpus = load_corpus(corpus_path);
  const Vocab vocab = load_vocab(vocab_path);
  const QuestionSet questions = load_questions(questions_path);

  SourceBundle src = open_source(m);
  if (auto model_path = pstr_opt(m, "model")) m.add_input("model", *model_path);

  MSweepFixture fixture;
  fixture.trait = trait_from(pstr(m, "trait"));
  fixture.beta = pdouble(m, "beta");
  fixture.alpha = pdouble(m, "alpha");
  fixture.top_p = pdouble(m, "top_p");
  fixture.temperature = pdouble(m, "temperature");
  fixture.max_tokens = static_cast<std::size_t>(pint(m, "max_tokens"));
  fixture.runs = static_cast<int>(pint(m, "runs"));
  fixture.seed = static_cast<std::uint64_t>(pint(m, "seed"));
  fixture.epsilon = pdouble(m, "epsilon");

  const std::vector<double> grid = parse_double_list(pstr(m, "m_grid"));
  std::vector<TokenSeq> prompts;
  for (const auto& q : questions.questions)
    if (q.trait == fixture.trait)
      prompts.push_back(tokenize(vocab, render_answer_prompt(q.text)).ids);
  if (prompts.empty())
    throw Error("no questions for trait " +
                std::string(trait_label(fixture.trait)));

  const std::vector<MSweepRow> rows =
      sweep_m(corpus, vocab, grid, src.source(), prompts, fixture);

  const std::string table = render_m_sweep_table(rows);
  std::fputs(table.c_str(), stdout);
  write_text_file(out_prefix + ".msweep.txt", table);
  write_text_file(out_prefix + ".msweep.jsonl", m_sweep_jsonl(rows));
  m.add_output("msweep_table", out_prefix + ".msweep.txt");
  m.add_output("msweep_jsonl", out_prefix + ".msweep.jsonl");
  m.save(manifest_path_for(out_prefix));
  return kExitOk;
}

int run_serve(const RunManifest& m) {
  NGramModel model = load_ngram_model(pstr(m, "model"));
  serve_logits(model, std::cin, std::cout);
  return kExitOk;
}

int dispatch(RunManifest& m) {
  if (m.command == "build-lexicon") return run_build(m);
  if (m.command == "train-lm") return run_train(m);
  if (m.command == "generate") return run_generate(m);
  if (m.command == "eval") return run_eval(m);
  if (m.command == "sweep-m") return run_sweep_m(m);
  if (m.command == "serve") return run_serve(m);
  throw Error("unknown command in manifest: " + m.command);
}

int run_rerun(const std::string& manifest_path, const std::string& out_override) {
  RunManifest old = RunManifest::load(manifest_path);
  for (const auto& input : old.inputs) {
    const std::string current = file_digest(input.path);
    if (current != input.digest)
      throw Error("input " + input.path + " changed since the manifest was written (" +
                  input.digest + " -> " + current + ")");
  }
  RunManifest fresh;
  fresh.command = old.command;
  fresh.params = old.params;
  if (!out_override.empty()) fresh.set_param("out", out_override);
  return dispatch(fresh);
}

void add_steering_flags(CLI::App* cmd, std::map<std::string, std::string>& p) {
  p["alpha"] = "1";
  p["top_p"] = "0.95";
  p["temperature"] = "0.85";
  cmd->add_option("--alpha", p["alpha"], "steering strength alpha");
  cmd->add_option("--top-p", p["top_p"], "nucleus threshold P0");
  cmd->add_option("--temperature", p["temperature"], "softmax temperature T0");
  for (int t = 0; t < kNumTraits; ++t) {
    std::string lower;
    for (char c : kTraitLabels[t]) lower += static_cast<char>(std::tolower(c));
    p["beta_" + lower] = "0";
    cmd->add_option("--beta-" + lower, p["beta_" + lower],
                    "beta for " + std::string(kTraitLabels[t]));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Builds per-trait personalized lexicons from labeled answer corpora and "
      "steers token-distribution sources with them at decode time."};
  app.require_subcommand(1);

  std::map<std::string, std::string> p;  // raw string params per subcommand

  auto* build = app.add_subcommand(
      "build-lexicon", "Build a lexicon from an answer corpus and a vocab");
  p["m"] = "0.3";
  p["epsilon"] = "0.001";
  p["include_zero_averages"] = "0";
  build->add_option("--corpus", p["corpus"], "answer corpus (JSON lines)")->required();
  build->add_option("--vocab", p["vocab"], "vocabulary file")->required();
  build->add_option("--out", p["build_out"], "output lexicon path")->required();
  build->add_option("--m", p["m"], "target M (scalar or five comma-separated)");
  build->add_option("--epsilon", p["epsilon"], "residual tolerance");
  build->add_flag_callback("--include-zero-averages",
                           [&p] { p["include_zero_averages"] = "1"; },
                           "count zero entries into the positive subset average");

  auto* train = app.add_subcommand("train-lm",
                                   "Train the bundled n-gram model on a text file");
  p["order"] = "2";
  p["delta"] = "0.05";
  train->add_option("--train", p["train"], "training texts, one per line")->required();
  train->add_option("--vocab", p["train_vocab"], "vocabulary file")->required();
  train->add_option("--out", p["train_out"], "output model path")->required();
  train->add_option("--order", p["order"], "n-gram order k");
  train->add_option("--delta", p["delta"], "add-delta smoothing constant");

  auto* gen = app.add_subcommand("generate", "Generate steered continuations");
  p["seed"] = "0";
  p["max_tokens"] = "64";
  gen->add_option("--vocab", p["gen_vocab"], "vocabulary file")->required();
  gen->add_option("--model", p["gen_model"], "saved n-gram model");
  gen->add_option("--bridge", p["gen_bridge"], "external source command");
  gen->add_option("--lexicon", p["gen_lexicon"], "lexicon file");
  gen->add_flag("--no-lexicon", "generate without any lexicon");
  gen->add_option("--prompt", p["gen_prompt"], "inline prompt");
  gen->add_option("--prompts", p["gen_prompts"], "prompt file, one per line");
  gen->add_option("--seed", p["seed"], "random seed")->envname("TRAITLEX_SEED");
  gen->add_option("--max-tokens", p["max_tokens"], "continuation length cap");
  gen->add_option("--out", p["gen_out"], "output file (default: stdout)");
  add_steering_flags(gen, p);

  auto* eval_cmd = app.add_subcommand("eval", "Score steered generations over a beta grid");
  p["beta_grid"] = "-1,-0.5,0,0.5,1";
  p["runs"] = "3";
  p["ppl_runs"] = "50";
  p["eval_seed"] = "0";
  p["eval_max_tokens"] = "32";
  p["eval_alpha"] = "1";
  p["eval_top_p"] = "0.95";
  p["eval_temperature"] = "0.85";
  eval_cmd->add_option("--vocab", p["eval_vocab"], "vocabulary file")->required();
  eval_cmd->add_option("--model", p["eval_model"], "saved n-gram model");
  eval_cmd->add_option("--bridge", p["eval_bridge"], "external source command");
  eval_cmd->add_option("--lexicon", p["eval_lexicon"], "lexicon file")->required();
  eval_cmd->add_option("--questions", p["eval_questions"], "question file")->required();
  eval_cmd->add_option("--trait", p["eval_trait"], "OPE/CON/EXT/AGR/NEU or all")->required();
  eval_cmd->add_option("--beta-grid", p["beta_grid"], "comma-separated beta values");
  eval_cmd->add_option("--runs", p["runs"], "generations per question per beta");
  eval_cmd->add_option("--ppl-runs", p["ppl_runs"], "generations per beta for the PPL table");
  eval_cmd->add_option("--judge", p["eval_judge"], "judge bridge command (default: frequency proxy)");
  eval_cmd->add_option("--seed", p["eval_seed"], "random seed")->envname("TRAITLEX_SEED");
  eval_cmd->add_option("--max-tokens", p["eval_max_tokens"], "continuation length cap");
  eval_cmd->add_option("--alpha", p["eval_alpha"], "steering strength alpha");
  eval_cmd->add_option("--top-p", p["eval_top_p"], "nucleus threshold P0");
  eval_cmd->add_option("--temperature", p["eval_temperature"], "softmax temperature T0");
  eval_cmd->add_option("--out", p["eval_out"], "output path prefix")->required();

  auto* sweep = app.add_subcommand("sweep-m", "Rebuild the lexicon across an M grid and measure steering");
  p["m_grid"] = "0.05,0.1,0.3,1,3";
  p["sweep_beta"] = "-1";
  p["sweep_trait"] = "EXT";
  p["sweep_runs"] = "100";
  p["sweep_seed"] = "0";
  p["sweep_max_tokens"] = "32";
  p["sweep_alpha"] = "1";
  p["sweep_top_p"] = "0.95";
  p["sweep_temperature"] = "0.85";
  p["sweep_epsilon"] = "0.001";
  sweep->add_option("--corpus", p["sweep_corpus"], "answer corpus")->required();
  sweep->add_option("--vocab", p["sweep_vocab"], "vocabulary file")->required();
  sweep->add_option("--questions", p["sweep_questions"], "question file")->required();
  sweep->add_option("--model", p["sweep_model"], "saved n-gram model");
  sweep->add_option("--bridge", p["sweep_bridge"], "external source command");
  sweep->add_option("--m-grid", p["m_grid"], "comma-separated M values");
  sweep->add_option("--trait", p["sweep_trait"], "steered trait");
  sweep->add_option("--beta", p["sweep_beta"], "beta applied to the steered trait");
  sweep->add_option("--runs", p["sweep_runs"], "generations per grid point");
  sweep->add_option("--seed", p["sweep_seed"], "random seed")->envname("TRAITLEX_SEED");
  sweep->add_option("--max-tokens", p["sweep_max_tokens"], "continuation length cap");
  sweep->add_option("--alpha", p["sweep_alpha"], "steering strength alpha");
  sweep->add_option("--top-p", p["sweep_top_p"], "nucleus threshold P0");
  sweep->add_option("--temperature", p["sweep_temperature"], "softmax temperature T0");
  sweep->add_option("--epsilon", p["sweep_epsilon"], "residual tolerance");
  sweep->add_option("--out", p["sweep_out"], "output path prefix")->required();

  auto* serve = app.add_subcommand("serve",
                                   "Serve the n-gram model over stdio (bridge peer)");
  serve->add_option("--model", p["serve_model"], "saved n-gram model")->required();

  auto* rerun = app.add_subcommand("rerun", "Replay a run manifest byte-exactly");
  std::string rerun_manifest, rerun_out;
  rerun->add_option("manifest", rerun_manifest, "manifest file")->required();
  rerun->add_option("--out", rerun_out, "override the output path/prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunManifest m;
    if (build->parsed()) {
      m.command = "build-lexicon";
      m.set_param("corpus", p["corpus"]);
      m.set_param("vocab", p["vocab"]);
      m.set_param("out", p["build_out"]);
      m.set_param("m", p["m"]);
      m.set_param("epsilon", p["epsilon"]);
      m.set_param("include_zero_averages", p["include_zero_averages"]);
      return run_build(m);
    }
    if (train->parsed()) {
      m.command = "train-lm";
      m.set_param("train", p["train"]);
      m.set_param("vocab", p["train_vocab"]);
      m.set_param("out", p["train_out"]);
      m.set_param("order", p["order"]);
      m.set_param("delta", p["delta"]);
      return run_train(m);
    }
    if (gen->parsed()) {
      m.command = "generate";
      m.set_param("vocab", p["gen_vocab"]);
      if (!p["gen_model"].empty()) m.set_param("model", p["gen_model"]);
      if (!p["gen_bridge"].empty()) m.set_param("bridge", p["gen_bridge"]);
      const bool no_lexicon = gen->count("--no-lexicon") > 0;
      if (!no_lexicon && p["gen_lexicon"].empty())
        throw Error("need --lexicon or --no-lexicon");
      if (!no_lexicon) m.set_param("lexicon", p["gen_lexicon"]);
      if (!p["gen_prompts"].empty()) m.set_param("prompts", p["gen_prompts"]);
      if (!p["gen_prompt"].empty()) m.set_param("prompt.0", p["gen_prompt"]);
      m.set_param("seed", p["seed"]);
      m.set_param("max_tokens", p["max_tokens"]);
      m.set_param("alpha", p["alpha"]);
      m.set_param("top_p", p["top_p"]);
      m.set_param("temperature", p["temperature"]);
      for (int t = 0; t < kNumTraits; ++t) {
        std::string lower;
        for (char c : kTraitLabels[t]) lower += static_cast<char>(std::tolower(c));
        m.set_param("beta_" + lower, p["beta_" + lower]);
      }
      if (!p["gen_out"].empty()) m.set_param("out", p["gen_out"]);
      return run_generate(m);
    }
    if (eval_cmd->parsed()) {
      m.command = "eval";
      m.set_param("vocab", p["eval_vocab"]);
      if (!p["eval_model"].empty()) m.set_param("model", p["eval_model"]);
      if (!p["eval_bridge"].empty()) m.set_param("bridge", p["eval_bridge"]);
      m.set_param("lexicon", p["eval_lexicon"]);
      m.set_param("questions", p["eval_questions"]);
      m.set_param("trait", p["eval_trait"]);
      m.set_param("beta_grid", p["beta_grid"]);
      m.set_param("runs", p["runs"]);
      m.set_param("ppl_runs", p["ppl_runs"]);
      if (!p["eval_judge"].empty()) m.set_param("judge", p["eval_judge"]);
      m.set_param("seed", p["eval_seed"]);
      m.set_param("max_tokens", p["eval_max_tokens"]);
      m.set_param("alpha", p["eval_alpha"]);
      m.set_param("top_p", p["eval_top_p"]);
      m.set_param("temperature", p["eval_temperature"]);
      m.set_param("out", p["eval_out"]);
      return run_eval(m);
    }
    if (sweep->parsed()) {
      m.command = "sweep-m";
      m.set_param("corpus", p["sweep_corpus"]);
      m.set_param("vocab", p["sweep_vocab"]);
      m.set_param("questions", p["sweep_questions"]);
      if (!p["sweep_model"].empty()) m.set_param("model", p["sweep_model"]);
      if (!p["sweep_bridge"].empty()) m.set_param("bridge", p["sweep_bridge"]);
      m.set_param("m_grid", p["m_grid"]);
      m.set_param("trait", p["sweep_trait"]);
      m.set_param("beta", p["sweep_beta"]);
      m.set_param("runs", p["sweep_runs"]);
      m.set_param("seed", p["sweep_seed"]);
      m.set_param("max_tokens", p["sweep_max_tokens"]);
      m.set_param("alpha", p["sweep_alpha"]);
      m.set_param("top_p", p["sweep_top_p"]);
      m.set_param("temperature", p["sweep_temperature"]);
      m.set_param("epsilon", p["sweep_epsilon"]);
      m.set_param("out", p["sweep_out"]);
      return run_sweep_m(m);
    }
    if (serve->parsed()) {
      m.command = "serve";
      m.set_param("model", p["serve_model"]);
      return run_serve(m);
    }
    if (rerun->parsed()) return run_rerun(rerun_manifest, rerun_out);
    throw Error("no subcommand");
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
