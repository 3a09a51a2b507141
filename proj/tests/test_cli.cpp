#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "fixtures.hpp"
#include "traitlex/json_util.hpp"

using namespace traitlex;
namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* bin = std::getenv("TRAITLEX_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "TRAITLEX_BIN must point at the CLI binary");
  return std::string("'") + bin + "'";
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args, const fs::path& dir) {
  const std::string log = (dir / "cmd.log").string();
  const std::string cmd = cli() + " " + args + " >'" + log + "' 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = read_text_file(log);
  return r;
}

struct Workspace {
  fs::path dir;
  std::string corpus, vocab, questions, train, model;

  Workspace() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("traitlex_cli_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
    fs::create_directories(dir);
    corpus = file("corpus.jsonl", fixtures::corpus_file_text());
    vocab = file("vocab.txt", fixtures::vocab_file_text());
    questions = file("questions.jsonl", fixtures::questions_file_text());
    train = file("train.txt", fixtures::train_file_text());
    model = (dir / "model.json").string();
    save_ngram_model(fixtures::bigram(fixtures::vocab()), model);
  }
  ~Workspace() { fs::remove_all(dir); }

  std::string file(const std::string& name, const std::string& contents) {
    const std::string path = (dir / name).string();
    write_text_file(path, contents);
    return path;
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("build-lexicon writes the lexicon, report and manifest") {
  Workspace ws;
  RunResult r = run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" +
                        ws.vocab + "' --out '" + ws.path("lex.json") + "'",
                    ws.dir);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("OPE") != std::string::npos);
  CHECK(fs::exists(ws.path("lex.json")));
  CHECK(fs::exists(ws.path("lex.json.report.json")));
  CHECK(fs::exists(ws.path("lex.json.manifest.json")));
  const std::string lex = read_text_file(ws.path("lex.json"));
  CHECK(lex.find("\"M\":[0.3,0.3,0.3,0.3,0.3]") != std::string::npos);
  CHECK(lex.find("\"epsilon\":0.001") != std::string::npos);
}

TEST_CASE("missing input exits 1 and names the path") {
  Workspace ws;
  RunResult r = run("build-lexicon --corpus '" + ws.path("nope.jsonl") +
                        "' --vocab '" + ws.vocab + "' --out '" +
                        ws.path("lex.json") + "'",
                    ws.dir);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("nope.jsonl") != std::string::npos);
}

TEST_CASE("a degenerate trait exits 2 and still writes the report") {
  Workspace ws;
  AnswerCorpus partial;
  for (const auto& e : fixtures::corpus().entries)
    if (e.trait != Trait::Neuroticism) partial.entries.push_back(e);
  const std::string corpus_path =
      ws.file("partial.jsonl", serialize_corpus(partial));
  RunResult r = run("build-lexicon --corpus '" + corpus_path + "' --vocab '" +
                        ws.vocab + "' --out '" + ws.path("lex2.json") + "'",
                    ws.dir);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("NEU") != std::string::npos);
  CHECK_FALSE(fs::exists(ws.path("lex2.json")));
  const std::string report = read_text_file(ws.path("lex2.json.report.json"));
  CHECK(report.find("\"all_converged\":false") != std::string::npos);
  CHECK(report.find("no signal") != std::string::npos);
}

TEST_CASE("generate is seed-deterministic and alpha=0 equals --no-lexicon") {
  Workspace ws;
  REQUIRE(run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" + ws.vocab +
                  "' --out '" + ws.path("lex.json") + "'",
              ws.dir)
              .exit_code == 0);
  const std::string base = "generate --vocab '" + ws.vocab + "' --model '" +
                           ws.model + "' --prompt 'i like to' --seed 7 "
                           "--max-tokens 24 ";
  REQUIRE(run(base + "--lexicon '" + ws.path("lex.json") + "' --alpha 0 --out '" +
                  ws.path("a.txt") + "'",
              ws.dir)
              .exit_code == 0);
  REQUIRE(run(base + "--lexicon '" + ws.path("lex.json") + "' --alpha 0 --out '" +
                  ws.path("b.txt") + "'",
              ws.dir)
              .exit_code == 0);
  REQUIRE(run(base + "--no-lexicon --out '" + ws.path("c.txt") + "'", ws.dir)
              .exit_code == 0);
  const std::string a = read_text_file(ws.path("a.txt"));
  CHECK(a == read_text_file(ws.path("b.txt")));
  CHECK(a == read_text_file(ws.path("c.txt")));
  CHECK_FALSE(a.empty());
}

TEST_CASE("generate echoes beta flags into the manifest") {
  Workspace ws;
  REQUIRE(run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" + ws.vocab +
                  "' --out '" + ws.path("lex.json") + "'",
              ws.dir)
              .exit_code == 0);
  RunResult r = run("generate --vocab '" + ws.vocab + "' --model '" + ws.model +
                        "' --lexicon '" + ws.path("lex.json") +
                        "' --prompt 'i like to' --beta-ope 1 --beta-neu -1 "
                        "--seed 3 --out '" + ws.path("g.txt") + "'",
                    ws.dir);
  CHECK(r.exit_code == 0);
  const std::string manifest = read_text_file(ws.path("g.txt.manifest.json"));
  CHECK(manifest.find("\"beta_ope\":\"1\"") != std::string::npos);
  CHECK(manifest.find("\"beta_neu\":\"-1\"") != std::string::npos);
  CHECK(manifest.find("\"command\":\"generate\"") != std::string::npos);
}

TEST_CASE("generate refuses a lexicon built for another vocabulary") {
  Workspace ws;
  const std::string other_vocab = ws.file("other.txt", "alpha\nbeta\n<eos>\n");
  RunResult build = run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" +
                            ws.vocab + "' --out '" + ws.path("lex.json") + "'",
                        ws.dir);
  REQUIRE(build.exit_code == 0);
  RunResult r = run("generate --vocab '" + other_vocab + "' --model '" + ws.model +
                        "' --lexicon '" + ws.path("lex.json") +
                        "' --prompt 'alpha' --out '" + ws.path("x.txt") + "'",
                    ws.dir);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("fingerprint") != std::string::npos);
}

TEST_CASE("rerun replays manifests byte-exactly") {
  Workspace ws;
  REQUIRE(run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" + ws.vocab +
                  "' --out '" + ws.path("lex.json") + "'",
              ws.dir)
              .exit_code == 0);
  RunResult replay = run("rerun '" + ws.path("lex.json.manifest.json") +
                             "' --out '" + ws.path("lex_replay.json") + "'",
                         ws.dir);
  CHECK(replay.exit_code == 0);
  CHECK(read_text_file(ws.path("lex_replay.json")) ==
        read_text_file(ws.path("lex.json")));

  // tampering with an input is caught
  write_text_file(ws.corpus, fixtures::corpus_file_text() + "\n");
  RunResult tampered =
      run("rerun '" + ws.path("lex.json.manifest.json") + "'", ws.dir);
  CHECK(tampered.exit_code == 1);
  CHECK(tampered.output.find("changed") != std::string::npos);
}

TEST_CASE("train-lm then generate through a saved model") {
  Workspace ws;
  RunResult train = run("train-lm --train '" + ws.train + "' --vocab '" + ws.vocab +
                            "' --order 2 --delta 0.05 --out '" +
                            ws.path("m2.json") + "'",
                        ws.dir);
  CHECK(train.exit_code == 0);
  CHECK(read_text_file(ws.path("m2.json")) == read_text_file(ws.model));
}

TEST_CASE("eval writes score and ppl tables plus jsonl") {
  Workspace ws;
  REQUIRE(run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" + ws.vocab +
                  "' --out '" + ws.path("lex.json") + "'",
              ws.dir)
              .exit_code == 0);
  RunResult r = run("eval --vocab '" + ws.vocab + "' --model '" + ws.model +
                        "' --lexicon '" + ws.path("lex.json") + "' --questions '" +
                        ws.questions + "' --trait EXT --runs 2 --ppl-runs 10 "
                        "--max-tokens 16 --seed 5 --out '" + ws.path("ev") + "'",
                    ws.dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(ws.path("ev.scores.txt")));
  CHECK(fs::exists(ws.path("ev.scores.jsonl")));
  CHECK(fs::exists(ws.path("ev.ppl.txt")));
  CHECK(fs::exists(ws.path("ev.ppl.jsonl")));
  CHECK(fs::exists(ws.path("ev.manifest.json")));
  const std::string jsonl = read_text_file(ws.path("ev.scores.jsonl"));
  CHECK(jsonl.find("\"trait\":\"EXT\"") != std::string::npos);

  // replay reproduces all outputs
  RunResult replay = run("rerun '" + ws.path("ev.manifest.json") + "' --out '" +
                             ws.path("ev2") + "'",
                         ws.dir);
  CHECK(replay.exit_code == 0);
  CHECK(read_text_file(ws.path("ev2.scores.jsonl")) == jsonl);
  CHECK(read_text_file(ws.path("ev2.ppl.jsonl")) ==
        read_text_file(ws.path("ev.ppl.jsonl")));
}

TEST_CASE("eval with an empty question file exits 1") {
  Workspace ws;
  const std::string empty = ws.file("empty.jsonl", "");
  REQUIRE(run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" + ws.vocab +
                  "' --out '" + ws.path("lex.json") + "'",
              ws.dir)
              .exit_code == 0);
  RunResult r = run("eval --vocab '" + ws.vocab + "' --model '" + ws.model +
                        "' --lexicon '" + ws.path("lex.json") + "' --questions '" +
                        empty + "' --trait EXT --out '" + ws.path("ev") + "'",
                    ws.dir);
  CHECK(r.exit_code == 1);
}

TEST_CASE("sweep-m emits one row per grid point deterministically") {
  Workspace ws;
  const std::string args = "sweep-m --corpus '" + ws.corpus + "' --vocab '" +
                           ws.vocab + "' --questions '" + ws.questions +
                           "' --model '" + ws.model +
                           "' --m-grid 0.05,0.1,0.3,1.0,3.0 --trait EXT --beta -1 "
                           "--runs 10 --max-tokens 16 --seed 2 --out '";
  RunResult r = run(args + ws.path("sw") + "'", ws.dir);
  CHECK(r.exit_code == 0);
  const std::string jsonl = read_text_file(ws.path("sw.msweep.jsonl"));
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 5);
  RunResult again = run(args + ws.path("sw2") + "'", ws.dir);
  CHECK(again.exit_code == 0);
  CHECK(read_text_file(ws.path("sw2.msweep.jsonl")) == jsonl);
}

TEST_CASE("an invalid grid token exits 1") {
  Workspace ws;
  RunResult r = run("sweep-m --corpus '" + ws.corpus + "' --vocab '" + ws.vocab +
                        "' --questions '" + ws.questions + "' --model '" +
                        ws.model + "' --m-grid 0.1,zap --out '" + ws.path("sw") +
                        "'",
                    ws.dir);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("zap") != std::string::npos);
}

TEST_CASE("per-trait M vectors are accepted and recorded") {
  Workspace ws;
  RunResult r = run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" +
                        ws.vocab + "' --m 0.2,0.3,0.4,0.3,0.2 --out '" +
                        ws.path("lexm.json") + "'",
                    ws.dir);
  CHECK(r.exit_code == 0);
  const std::string lex = read_text_file(ws.path("lexm.json"));
  CHECK(lex.find("\"M\":[0.2,0.3,0.4,0.3,0.2]") != std::string::npos);

  RunResult bad = run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" +
                          ws.vocab + "' --m 0.2,0.3 --out '" +
                          ws.path("lexbad.json") + "'",
                      ws.dir);
  CHECK(bad.exit_code == 1);
}

TEST_CASE("include-zero-averages reports honest non-convergence") {
  Workspace ws;
  RunResult r = run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" +
                        ws.vocab + "' --include-zero-averages --out '" +
                        ws.path("lexz.json") + "'",
                    ws.dir);
  CHECK(r.exit_code == 2);
  CHECK_FALSE(fs::exists(ws.path("lexz.json")));
  const std::string report = read_text_file(ws.path("lexz.json.report.json"));
  CHECK(report.find("\"all_converged\":false") != std::string::npos);
  CHECK(report.find("\"converged\":false") != std::string::npos);
}

TEST_CASE("eval over the bridge skips the ppl tables") {
  Workspace ws;
  REQUIRE(run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" + ws.vocab +
                  "' --out '" + ws.path("lex.json") + "'",
              ws.dir)
              .exit_code == 0);
  const std::string serve_cmd = cli() + " serve --model '" + ws.model + "'";
  RunResult r = run("eval --vocab '" + ws.vocab + "' --bridge \"" + serve_cmd +
                        "\" --lexicon '" + ws.path("lex.json") + "' --questions '" +
                        ws.questions + "' --trait AGR --runs 1 --max-tokens 12 "
                        "--seed 8 --out '" + ws.path("bv") + "'",
                    ws.dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(ws.path("bv.scores.jsonl")));
  CHECK_FALSE(fs::exists(ws.path("bv.ppl.jsonl")));
}

TEST_CASE("eval in judge mode consumes the judge bridge") {
  const char* judge_bin = std::getenv("FAKE_JUDGE_BIN");
  REQUIRE(judge_bin != nullptr);
  Workspace ws;
  REQUIRE(run("build-lexicon --corpus '" + ws.corpus + "' --vocab '" + ws.vocab +
                  "' --out '" + ws.path("lex.json") + "'",
              ws.dir)
              .exit_code == 0);
  RunResult r = run("eval --vocab '" + ws.vocab + "' --model '" + ws.model +
                        "' --lexicon '" + ws.path("lex.json") + "' --questions '" +
                        ws.questions + "' --trait OPE --runs 1 --ppl-runs 5 "
                        "--max-tokens 12 --judge '" + std::string(judge_bin) +
                        "' --out '" + ws.path("jv") + "'",
                    ws.dir);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("judge:") != std::string::npos);
  const std::string jsonl = read_text_file(ws.path("jv.scores.jsonl"));
  CHECK(jsonl.find("\"mean\":") != std::string::npos);
}

}  // TEST_SUITE
